//! Boundary contribution summaries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::intersect::model::CountReport;

/// Total number of gluing configurations in the count.
pub const TOTAL_COUNT: i64 = 64;

/// An unreduced fraction such as `6/64`, serialized as that string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ratio {
    pub numerator: i64,
    pub denominator: i64,
}

impl Ratio {
    pub fn new(numerator: i64, denominator: i64) -> Self {
        Ratio { numerator, denominator }
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for Ratio {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let (a, b) = s
            .split_once('/')
            .ok_or_else(|| Error::invalid(format!("ratio {s:?} has no '/'")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|e| Error::invalid(format!("ratio {s:?}: {e}")))
        };
        let (n, d) = (parse(a)?, parse(b)?);
        if d == 0 {
            return Err(Error::invalid(format!("ratio {s:?} has zero denominator")));
        }
        Ok(Ratio::new(n, d))
    }
}

impl TryFrom<String> for Ratio {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Ratio> for String {
    fn from(r: Ratio) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySummary {
    pub runs: usize,
    pub boundary_ratio: Option<Ratio>,
    pub mean_signed_count: Option<f64>,
    /// What the interior must contribute for the total to reach 64.
    pub interior_requirement: Option<i64>,
    pub all_match_prediction: bool,
}

/// Aggregates signed counts across runs; an empty slice gives an empty summary.
pub fn boundary_report(reports: &[CountReport]) -> BoundarySummary {
    if reports.is_empty() {
        return BoundarySummary {
            runs: 0,
            boundary_ratio: None,
            mean_signed_count: None,
            interior_requirement: None,
            all_match_prediction: false,
        };
    }
    let mean = reports.iter().map(|r| r.total_signed_count as f64).sum::<f64>() / reports.len() as f64;
    let typical = mean.round() as i64;
    BoundarySummary {
        runs: reports.len(),
        boundary_ratio: Some(Ratio::new(typical, TOTAL_COUNT)),
        mean_signed_count: Some(mean),
        interior_requirement: Some(TOTAL_COUNT - typical),
        all_match_prediction: reports.iter().all(CountReport::matches_prediction),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_roundtrip_unreduced() {
        let r = Ratio::new(6, 64);
        assert_eq!(r.to_string(), "6/64");
        assert_eq!(serde_json::to_string(&r).unwrap(), "\"6/64\"");
        let back: Ratio = serde_json::from_str("\"6/64\"").unwrap();
        assert_eq!(back, r);
        assert!("6/0".parse::<Ratio>().is_err());
        assert!("six".parse::<Ratio>().is_err());
    }

    #[test]
    fn empty_summary() {
        let s = boundary_report(&[]);
        assert_eq!(s.runs, 0);
        assert!(s.boundary_ratio.is_none());
    }
}
