//! Lower bounds for the best isoperimetric constant from verified instances.

use std::collections::BTreeMap;

use serde::Serialize;

use super::report::{float, VerificationReport};
use crate::geom::{gamma_disc_lower, gamma_upper};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GammaBound {
    pub m: usize,
    /// Largest implied lower bound.
    #[serde(serialize_with = "float")]
    pub lower: f64,
    /// Report that attained it.
    pub source: String,
    pub instances: usize,
    /// `α(m)^{-1/m} / m`, the value implied by a flat unit disc.
    #[serde(serialize_with = "float")]
    pub disc_value: f64,
    #[serde(serialize_with = "float")]
    pub upper: f64,
    /// The lower bound does not exceed the known upper bound (`1/2` when
    /// `m = 1`, where it is sharp).
    pub consistent: bool,
}

const SLACK: f64 = 1e-12;

/// Groups the implied bounds of `reports` by dimension `m`.
pub fn gamma_lower_bound(reports: &[VerificationReport]) -> Vec<GammaBound> {
    let mut best: BTreeMap<usize, (f64, String, usize)> = BTreeMap::new();
    for r in reports {
        let (Some(g), Some(m)) = (r.implied_gamma, r.params.get("m").and_then(|v| v.as_u64())) else {
            continue;
        };
        let entry = best.entry(m as usize).or_insert((0.0, String::new(), 0));
        entry.2 += 1;
        if g > entry.0 || entry.1.is_empty() {
            entry.0 = g;
            entry.1 = r.name.clone();
        }
    }
    best.into_iter()
        .map(|(m, (lower, source, instances))| {
            let upper = gamma_upper(m);
            GammaBound {
                m,
                lower,
                source,
                instances,
                disc_value: gamma_disc_lower(m),
                upper,
                consistent: lower <= upper * (1.0 + SLACK),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Tolerances;

    fn report(name: &str, m: usize, g: Option<f64>) -> VerificationReport {
        let mut r = VerificationReport::new(name, "t", 1.0, 2.0, &Tolerances::default()).param("m", m);
        r.implied_gamma = g;
        r
    }

    #[test]
    fn takes_the_largest_per_dimension() {
        let bounds = gamma_lower_bound(&[
            report("a", 2, Some(0.1)),
            report("b", 2, Some(0.28)),
            report("c", 1, Some(0.5)),
            report("d", 2, None),
        ]);
        assert_eq!(bounds.len(), 2);
        assert_eq!(bounds[0].m, 1);
        assert!(bounds[0].consistent);
        assert_eq!(bounds[1].source, "b");
        assert_eq!(bounds[1].instances, 2);
        assert!((bounds[1].disc_value - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn flags_bounds_above_one_half() {
        let bounds = gamma_lower_bound(&[report("c", 1, Some(0.5 + 1e-9))]);
        assert!(!bounds[0].consistent);
    }
}
