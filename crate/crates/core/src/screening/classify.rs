use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::screening::DealRecord;

/// World Bank income group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum IncomeClass {
    L,
    LM,
    UM,
    H,
}

impl fmt::Display for IncomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IncomeClass::L => "L",
            IncomeClass::LM => "LM",
            IncomeClass::UM => "UM",
            IncomeClass::H => "H",
        })
    }
}

impl FromStr for IncomeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L" => Ok(IncomeClass::L),
            "LM" => Ok(IncomeClass::LM),
            "UM" => Ok(IncomeClass::UM),
            "H" => Ok(IncomeClass::H),
            other => Err(Error::InvalidConfig(format!("unknown income class `{other}`"))),
        }
    }
}

/// Upper bounds (inclusive) of the three lower income groups, GNI per
/// capita in USD, Atlas method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IncomeThresholds {
    pub year: i32,
    pub low_max: u32,
    pub lower_middle_max: u32,
    pub upper_middle_max: u32,
}

impl IncomeThresholds {
    pub fn new(year: i32, low_max: u32, lower_middle_max: u32, upper_middle_max: u32) -> Result<Self> {
        if !(low_max < lower_middle_max && lower_middle_max < upper_middle_max) {
            return Err(Error::InvalidConfig(format!(
                "thresholds for {year} are not increasing: {low_max}, {lower_middle_max}, {upper_middle_max}"
            )));
        }
        Ok(Self {
            year,
            low_max,
            lower_middle_max,
            upper_middle_max,
        })
    }

    pub fn classify(&self, gni: f64) -> IncomeClass {
        if gni <= self.low_max as f64 {
            IncomeClass::L
        } else if gni <= self.lower_middle_max as f64 {
            IncomeClass::LM
        } else if gni <= self.upper_middle_max as f64 {
            IncomeClass::UM
        } else {
            IncomeClass::H
        }
    }
}

// (year, low_max, lower_middle_max, upper_middle_max)
const BUNDLED_THRESHOLDS: [(i32, u32, u32, u32); 21] = [
    (1995, 765, 3035, 9385),
    (1996, 785, 3115, 9645),
    (1997, 785, 3125, 9655),
    (1998, 760, 3030, 9360),
    (1999, 755, 2995, 9265),
    (2000, 755, 2995, 9265),
    (2001, 745, 2975, 9205),
    (2002, 735, 2935, 9075),
    (2003, 765, 3035, 9385),
    (2004, 825, 3255, 10065),
    (2005, 875, 3465, 10725),
    (2006, 905, 3595, 11115),
    (2007, 935, 3705, 11455),
    (2008, 975, 3855, 11905),
    (2009, 995, 3945, 12195),
    (2010, 1005, 3975, 12275),
    (2011, 1025, 4035, 12475),
    (2012, 1035, 4085, 12615),
    (2013, 1045, 4125, 12745),
    (2014, 1045, 4125, 12735),
    (2015, 1025, 4035, 12475),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThresholdTable {
    by_year: BTreeMap<i32, IncomeThresholds>,
}

impl ThresholdTable {
    /// World Bank thresholds for 1995–2015.
    pub fn bundled() -> Self {
        let mut table = Self::default();
        for (y, l, lm, um) in BUNDLED_THRESHOLDS {
            table.insert(IncomeThresholds::new(y, l, lm, um).expect("bundled thresholds are ordered"));
        }
        table
    }

    pub fn insert(&mut self, t: IncomeThresholds) {
        self.by_year.insert(t.year, t);
    }

    pub fn get(&self, year: i32) -> Option<&IncomeThresholds> {
        self.by_year.get(&year)
    }

    pub fn iter(&self) -> impl Iterator<Item = &IncomeThresholds> {
        self.by_year.values()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountryClass {
    pub nation: String,
    pub year: i32,
    pub class: IncomeClass,
}

pub fn classify_country(
    nation: &str,
    year: i32,
    gni_per_capita: f64,
    thresholds: &ThresholdTable,
) -> Result<CountryClass> {
    let t = thresholds.get(year).ok_or(Error::MissingThresholds { year })?;
    Ok(CountryClass {
        nation: canonical_nation(nation),
        year,
        class: t.classify(gni_per_capita),
    })
}

const NATION_ALIASES: &[(&str, &[&str])] = &[
    ("Australia", &[]),
    ("Canada", &[]),
    ("Denmark", &[]),
    ("France", &[]),
    ("Germany", &[]),
    ("Hong Kong SAR, China", &["hong kong", "hong kong sar", "hk"]),
    ("Japan", &[]),
    ("Korea, Rep.", &["korea", "south korea", "republic of korea", "korea rep", "rok"]),
    ("Netherlands", &["holland", "the netherlands"]),
    ("Singapore", &[]),
    ("Sweden", &[]),
    ("Switzerland", &[]),
    ("Taiwan, China", &["taiwan", "chinese taipei"]),
    ("United Kingdom", &["uk", "u.k.", "great britain", "britain"]),
    ("United States", &["us", "u.s.", "usa", "united states of america"]),
    ("India", &[]),
    ("Indonesia", &[]),
    ("Malaysia", &[]),
    ("Myanmar", &["burma"]),
    ("Philippines", &[]),
    ("Russian Federation", &["russia", "rusia"]),
    ("Thailand", &[]),
    ("Vietnam", &["viet nam"]),
];

fn nation_key(s: &str) -> String {
    let lowered = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    lowered
        .strip_prefix("the ")
        .map(str::to_string)
        .unwrap_or(lowered)
}

/// Resolves spelling variants to one canonical nation name; unknown names
/// are returned trimmed.
pub fn canonical_nation(s: &str) -> String {
    let key = nation_key(s);
    NATION_ALIASES
        .iter()
        .find(|(canon, aliases)| nation_key(canon) == key || aliases.contains(&key.as_str()))
        .map(|(canon, _)| canon.to_string())
        .unwrap_or_else(|| s.trim().to_string())
}

pub fn is_vietnam(nation: &str) -> bool {
    canonical_nation(nation) == "Vietnam"
}

// Income class per year 1995..=2015.
const BUNDLED_CLASSES: &[(&str, &str)] = &[
    ("Australia", "H H H H H H H H H H H H H H H H H H H H H"),
    ("Canada", "H H H H H H H H H H H H H H H H H H H H H"),
    ("Denmark", "H H H H H H H H H H H H H H H H H H H H H"),
    ("France", "H H H H H H H H H H H H H H H H H H H H H"),
    ("Germany", "H H H H H H H H H H H H H H H H H H H H H"),
    ("Hong Kong SAR, China", "H H H H H H H H H H H H H H H H H H H H H"),
    ("Japan", "H H H H H H H H H H H H H H H H H H H H H"),
    ("Korea, Rep.", "H H H UM H H H H H H H H H H H H H H H H H"),
    ("Singapore", "H H H H H H H H H H H H H H H H H H H H H"),
    ("Sweden", "H H H H H H H H H H H H H H H H H H H H H"),
    ("Switzerland", "H H H H H H H H H H H H H H H H H H H H H"),
    ("Taiwan, China", "H H H H H H H H H H H H H H H H H H H H H"),
    ("United Kingdom", "H H H H H H H H H H H H H H H H H H H H H"),
    ("United States", "H H H H H H H H H H H H H H H H H H H H H"),
    ("India", "L L L L L L L L L L L L L L L L L L L L L"),
    ("Indonesia", "LM LM LM L L L L L LM LM LM LM LM LM LM LM LM LM LM LM LM"),
    ("Malaysia", "UM UM UM UM UM UM UM UM UM UM UM UM UM UM UM UM UM UM UM UM UM"),
    ("Myanmar", "L L L L L L L L L L L L L L L L L L L L L"),
    ("Philippines", "LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM"),
    ("Russian Federation", "LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM"),
    ("Thailand", "LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM LM"),
    ("Vietnam", "L L L L L L L L L L L L L L L L L L L L L"),
    // Listed among the developed-market acquirer nations but missing from
    // the classification grid; high income throughout.
    ("Netherlands", "H H H H H H H H H H H H H H H H H H H H H"),
];

/// Income class per nation and calendar year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassificationTable {
    by_nation_year: BTreeMap<(String, i32), IncomeClass>,
}

impl ClassificationTable {
    /// World Bank classes for 1995–2015.
    pub fn bundled() -> Self {
        let mut table = Self::default();
        for (nation, row) in BUNDLED_CLASSES {
            for (year, class) in (1995..).zip(row.split_whitespace()) {
                table.insert(nation, year, class.parse().expect("bundled class"));
            }
        }
        table
    }

    pub fn insert(&mut self, nation: &str, year: i32, class: IncomeClass) {
        self.by_nation_year.insert((canonical_nation(nation), year), class);
    }

    pub fn get(&self, nation: &str, year: i32) -> Option<IncomeClass> {
        self.by_nation_year
            .get(&(canonical_nation(nation), year))
            .copied()
    }

    pub fn class_of(&self, nation: &str, year: i32) -> Result<CountryClass> {
        let class = self.get(nation, year).ok_or_else(|| Error::MissingClassification {
            nation: nation.to_string(),
            year,
        })?;
        Ok(CountryClass {
            nation: canonical_nation(nation),
            year,
            class,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = CountryClass> + '_ {
        self.by_nation_year.iter().map(|((n, y), c)| CountryClass {
            nation: n.clone(),
            year: *y,
            class: *c,
        })
    }

    pub fn len(&self) -> usize {
        self.by_nation_year.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_nation_year.is_empty()
    }
}

/// Developed market means high income in that year.
pub fn developed_market(table: &ClassificationTable, nation: &str, year: i32) -> Result<bool> {
    Ok(table.class_of(nation, year)?.class == IncomeClass::H)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SampleLabel {
    DmVn,
    EmVn,
    VnVn,
    Excluded(String),
}

impl SampleLabel {
    pub const SAMPLES: [SampleLabel; 3] = [SampleLabel::DmVn, SampleLabel::EmVn, SampleLabel::VnVn];

    pub fn name(&self) -> &str {
        match self {
            SampleLabel::DmVn => "DM-VN",
            SampleLabel::EmVn => "EM-VN",
            SampleLabel::VnVn => "VN-VN",
            SampleLabel::Excluded(_) => "excluded",
        }
    }

    pub fn description(&self) -> &str {
        match self {
            SampleLabel::DmVn => "Developed-market acquirers and Vietnamese targets",
            SampleLabel::EmVn => "Emerging-market acquirers and Vietnamese targets",
            SampleLabel::VnVn => "Vietnamese acquirers and Vietnamese targets",
            SampleLabel::Excluded(reason) => reason,
        }
    }

    pub fn is_cross_border(&self) -> bool {
        matches!(self, SampleLabel::DmVn | SampleLabel::EmVn)
    }
}

impl fmt::Display for SampleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleLabel::Excluded(reason) => write!(f, "excluded({reason})"),
            other => f.write_str(other.name()),
        }
    }
}

pub fn assign_sample(deal: &DealRecord, acquirer_class: IncomeClass) -> SampleLabel {
    if !is_vietnam(&deal.target_nation) {
        SampleLabel::Excluded("target not Vietnamese".into())
    } else if is_vietnam(&deal.acquirer_nation) {
        SampleLabel::VnVn
    } else if acquirer_class == IncomeClass::H {
        SampleLabel::DmVn
    } else {
        SampleLabel::EmVn
    }
}

impl ClassificationTable {
    /// Sample label for a deal from its acquirer's class in the
    /// announcement year.
    pub fn label(&self, deal: &DealRecord) -> SampleLabel {
        use chrono::Datelike;
        if is_vietnam(&deal.acquirer_nation) {
            return assign_sample(deal, IncomeClass::L);
        }
        match self.get(&deal.acquirer_nation, deal.announcement_date.year()) {
            Some(class) => assign_sample(deal, class),
            None => SampleLabel::Excluded(format!(
                "no income class for `{}`",
                deal.acquirer_nation
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screening::deal::fixtures::deal;
    use proptest::prelude::*;

    #[test]
    fn threshold_examples() {
        let t = ThresholdTable::bundled();
        let c = |y, g| classify_country("X", y, g, &t).unwrap().class;
        assert_eq!(c(2015, 12475.0), IncomeClass::UM);
        assert_eq!(c(2015, 12476.0), IncomeClass::H);
        assert_eq!(c(1998, 760.0), IncomeClass::L);
        assert_eq!(c(2005, 0.0), IncomeClass::L);
        assert_eq!(
            classify_country("X", 1990, 1.0, &t),
            Err(Error::MissingThresholds { year: 1990 })
        );
        assert!(IncomeThresholds::new(2000, 10, 5, 20).is_err());
    }

    #[test]
    fn bundled_classes() {
        let t = ClassificationTable::bundled();
        assert_eq!(t.len(), 23 * 21);
        for year in 1995..=2015 {
            assert!(developed_market(&t, "Japan", year).unwrap());
            assert!(!developed_market(&t, "Vietnam", year).unwrap());
        }
        assert!(!developed_market(&t, "Korea", 1998).unwrap());
        assert_eq!(t.get("korea, rep.", 1998), Some(IncomeClass::UM));
        assert!(developed_market(&t, "Korea", 1999).unwrap());
        assert_eq!(t.get("Indonesia", 1998), Some(IncomeClass::L));
        assert!(matches!(
            developed_market(&t, "Atlantis", 2000),
            Err(Error::MissingClassification { .. })
        ));
    }

    #[test]
    fn aliases() {
        assert_eq!(canonical_nation("Rusia"), "Russian Federation");
        assert_eq!(canonical_nation("  the  US "), "United States");
        assert_eq!(canonical_nation("The UK"), "United Kingdom");
        assert_eq!(canonical_nation("HONG KONG"), "Hong Kong SAR, China");
        assert_eq!(canonical_nation("Viet Nam"), "Vietnam");
        assert_eq!(canonical_nation("Narnia"), "Narnia");
    }

    #[test]
    fn sample_assignment() {
        let t = ClassificationTable::bundled();
        let mut d = deal("1");
        assert_eq!(t.label(&d), SampleLabel::DmVn);
        d.acquirer_nation = "Vietnam".into();
        assert_eq!(t.label(&d), SampleLabel::VnVn);
        d.acquirer_nation = "Thailand".into();
        assert_eq!(t.label(&d), SampleLabel::EmVn);
        assert_eq!(assign_sample(&d, IncomeClass::H), SampleLabel::DmVn);
        d.target_nation = "Laos".into();
        assert!(matches!(t.label(&d), SampleLabel::Excluded(_)));
    }

    proptest! {
        #[test]
        fn classification_monotone(year in 1995i32..=2015, a in 0.0f64..30000.0, b in 0.0f64..30000.0) {
            let t = ThresholdTable::bundled();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let cl = classify_country("X", year, lo, &t).unwrap().class;
            let ch = classify_country("X", year, hi, &t).unwrap().class;
            prop_assert!(cl <= ch);
        }
    }
}
