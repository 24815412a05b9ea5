//! Result records shared by every check.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::geom::Tolerances;

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`,
/// which plain JSON cannot carry.
pub(crate) fn float<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&format_float(*x))
    }
}

fn option_float<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => float(v, s),
        None => s.serialize_none(),
    }
}

fn float_list<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&Float(*x))?;
    }
    seq.end()
}

struct Float(f64);

impl Serialize for Float {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        float(&self.0, s)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.to_string()
    }
}

/// JSON value for a float parameter, keeping non-finite values readable.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(format_float(x)), Value::Number)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lhs,
    Rhs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The computed value does not exceed the exact one.
    Lower,
    /// The computed value is at least the exact one.
    Upper,
}

/// A side of an inequality that was evaluated through a one-sided bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConservativeFlag {
    pub side: Side,
    pub quantity: String,
    pub direction: Direction,
}

impl ConservativeFlag {
    pub fn new(side: Side, quantity: &str, direction: Direction) -> Self {
        ConservativeFlag {
            side,
            quantity: quantity.into(),
            direction,
        }
    }

    /// A lower bound on the right or an upper bound on the left can only
    /// make a check fail spuriously, never pass spuriously.
    pub fn errs_toward_fail(&self) -> bool {
        matches!(
            (self.side, self.direction),
            (Side::Rhs, Direction::Lower) | (Side::Lhs, Direction::Upper)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub name: String,
    pub theorem: String,
    #[serde(serialize_with = "float")]
    pub lhs: f64,
    #[serde(serialize_with = "float")]
    pub rhs: f64,
    #[serde(serialize_with = "float")]
    pub ratio: f64,
    pub pass: bool,
    pub params: BTreeMap<String, Value>,
    pub conservative: Vec<ConservativeFlag>,
    #[serde(rename = "impliedGammaLowerBound", serialize_with = "option_float")]
    pub implied_gamma: Option<f64>,
}

/// `lhs / rhs` with `0/0 = 0` and `x/0 = ∞` for `x > 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

impl VerificationReport {
    pub fn new(name: &str, theorem: &str, lhs: f64, rhs: f64, tol: &Tolerances) -> Self {
        let r = ratio(lhs, rhs);
        VerificationReport {
            name: name.into(),
            theorem: theorem.into(),
            lhs,
            rhs,
            ratio: r,
            pass: r <= 1.0 + tol.report,
            params: BTreeMap::new(),
            conservative: Vec::new(),
            implied_gamma: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn num(self, key: &str, value: f64) -> Self {
        self.param(key, num(value))
    }

    pub fn flag(mut self, flag: ConservativeFlag) -> Self {
        self.conservative.push(flag);
        self
    }

    /// One line for logs.
    pub fn summary(&self) -> String {
        let mut line = format!(
            "{} {}: lhs = {:.6e}, rhs = {:.6e}, ratio = {:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.lhs,
            self.rhs,
            self.ratio
        );
        if let Some(g) = self.implied_gamma {
            line.push_str(&format!(", impliedGammaLowerBound = {g:.7}"));
        }
        line
    }
}

/// A blow-up series: the measured norm under a saturated derivative budget
/// along a parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BlowupSeries {
    pub name: String,
    pub kind: String,
    #[serde(serialize_with = "float")]
    pub p: f64,
    #[serde(serialize_with = "float_list")]
    pub parameters: Vec<f64>,
    #[serde(serialize_with = "float_list")]
    pub norms: Vec<f64>,
    #[serde(serialize_with = "float_list")]
    pub budgets: Vec<f64>,
    /// `norms[i] / norms[i - 1]`; the first entry has no predecessor.
    pub growth: Vec<Option<f64>>,
    /// The same norms of the median function, when compared.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_norms: Option<Vec<f64>>,
    pub params: BTreeMap<String, Value>,
    pub checks: Vec<String>,
    pub pass: bool,
}

impl BlowupSeries {
    pub fn summary(&self) -> String {
        let growth: Vec<String> = self.growth.iter().flatten().map(|g| format!("{g:.4}")).collect();
        format!(
            "{} {}: growth [{}]{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            growth.join(", "),
            if self.checks.is_empty() {
                String::new()
            } else {
                format!(" ({})", self.checks.join("; "))
            }
        )
    }
}

/// Outcome of a randomized lemma suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LemmaSuiteReport {
    pub name: String,
    pub instances: usize,
    pub rejected: usize,
    pub violations: usize,
    pub params: BTreeMap<String, Value>,
    pub pass: bool,
}

impl LemmaSuiteReport {
    pub fn summary(&self) -> String {
        format!(
            "{} {}: {} instances, {} violations, {} rejected",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.instances,
            self.violations,
            self.rejected
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_conventions() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(ratio(0.0, 3.0), 0.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(1.0, 4.0), 0.25);
    }

    #[test]
    fn pass_threshold() {
        let tol = Tolerances::default();
        assert!(VerificationReport::new("a", "t", 1.0 + 5e-10, 1.0, &tol).pass);
        assert!(!VerificationReport::new("a", "t", 1.0 + 2e-9, 1.0, &tol).pass);
        assert!(!VerificationReport::new("a", "t", 1.0, 0.0, &tol).pass);
    }

    #[test]
    fn non_finite_values_serialize() {
        let tol = Tolerances::default();
        let r = VerificationReport::new("a", "t", 1.0, 0.0, &tol).num("d", f64::INFINITY);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"ratio\":\"inf\""));
        assert!(json.contains("\"d\":\"inf\""));
    }

    #[test]
    fn flag_direction() {
        assert!(ConservativeFlag::new(Side::Rhs, "delta", Direction::Lower).errs_toward_fail());
        assert!(!ConservativeFlag::new(Side::Lhs, "M", Direction::Lower).errs_toward_fail());
    }
}
