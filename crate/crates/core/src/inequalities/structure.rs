//! Numerical evidence that a non-rectifiable product varifold admits no
//! decomposition along superlevel sets of a function constant along its
//! planes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Point, Tolerances};
use crate::variation::{distributional_boundary_eval, first_variation, first_variation_scale, standard_dictionary};
use crate::variation::{ScalarTestFunction, TestVectorField};
use crate::varifold::AnalyticFamily;

use super::report::VerificationReport;

pub const DECOMPOSITION: &str = "decomposition";

/// Largest admissible scale-normalized `|δV(θ)|` or `|V∂E(y)(θ)|`.
pub const DECOMPOSITION_TOL: f64 = 1e-3;

/// Bumps and radial shells at the window center and the centers of its
/// `2^n` half-windows, at radii `w/4` and `w/2` (`w` the shortest side),
/// kept when their support lies inside the window.
pub fn window_dictionary(lower: &Point, upper: &Point) -> Vec<TestVectorField> {
    let n = lower.len();
    let w = (0..n).map(|k| upper[k] - lower[k]).fold(f64::INFINITY, f64::min);
    let mid = (lower + upper) / 2.0;
    let mut centers = vec![mid.clone()];
    for corner in 0..(1usize << n) {
        centers.push(Point::from_fn(n, |k, _| {
            let quarter = (upper[k] - lower[k]) / 4.0;
            if corner >> k & 1 == 1 {
                mid[k] + quarter
            } else {
                mid[k] - quarter
            }
        }));
    }
    standard_dictionary(n, &centers, &[w / 4.0, w / 2.0])
        .into_iter()
        .filter(|theta| {
            let (c, r) = theta.support();
            (0..n).all(|k| c[k] - r >= lower[k] && c[k] + r <= upper[k])
        })
        .collect()
}

/// Samples a complete product slab `L^n × δ_T` and checks that `δV` and the
/// distributional boundaries `V∂{f > y}` vanish against every dictionary
/// field for `levels` values of `y` between the extremes of `f`, provided
/// `Df` vanishes along `T`.
pub fn decomposition_check(
    name: &str,
    family: &AnalyticFamily,
    f: &ScalarTestFunction,
    h: f64,
    levels: usize,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let AnalyticFamily::Slab(slab) = family else {
        return Err(Error::Argument("the decomposition check runs on product slabs".into()));
    };
    if !slab.complete {
        return Err(Error::precondition(
            "the decomposition example",
            "the slab must stand for the complete product measure",
        ));
    }
    if levels == 0 {
        return Err(Error::Argument("need at least one level".into()));
    }
    let v = family.sample(h)?;
    let atoms = v.atoms();
    let mut tangential: f64 = 0.0;
    let mut full: f64 = 0.0;
    for a in atoms {
        let g = f.gradient(&a.position);
        tangential = tangential.max(slab.plane.apply(&g).norm());
        full = full.max(g.norm());
    }
    if tangential > 1e-12 * full.max(1.0) {
        return Err(Error::precondition(
            "the decomposition example",
            format!("f is not constant along the planes: |P Df| reaches {tangential}"),
        ));
    }
    let values: Vec<f64> = atoms.iter().map(|a| f.value(&a.position)).collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ys: Vec<f64> = (0..levels)
        .map(|j| lo + (hi - lo) * (j as f64 + 0.5) / levels as f64)
        .collect();
    let dictionary = window_dictionary(&slab.lower, &slab.upper);
    if dictionary.is_empty() {
        return Err(Error::Argument(
            "the sampling window is too small for the dictionary".into(),
        ));
    }
    let per_field: Vec<(f64, f64)> = dictionary
        .par_iter()
        .map(|theta| {
            let scale = first_variation_scale(&v, theta);
            let normalize = |x: f64| {
                if scale > 0.0 {
                    x.abs() / scale
                } else if x == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            };
            let delta = normalize(first_variation(&v, theta));
            let mut boundary: f64 = 0.0;
            for &y in &ys {
                let b = distributional_boundary_eval(&v, |x: &Point| f.value(x) > y, theta)?;
                boundary = boundary.max(normalize(b));
            }
            Ok((delta, boundary))
        })
        .collect::<Result<_>>()?;
    let worst_delta = per_field.iter().map(|x| x.0).fold(0.0, f64::max);
    let worst_boundary = per_field.iter().map(|x| x.1).fold(0.0, f64::max);
    let lhs = worst_delta.max(worst_boundary);
    Ok(
        VerificationReport::new(name, DECOMPOSITION, lhs, DECOMPOSITION_TOL, tol)
            .param("m", v.m())
            .param("n", v.n())
            .param("atoms", v.len())
            .param("family", family.name())
            .num("h", h)
            .param("dictionarySize", dictionary.len())
            .param("levels", levels)
            .num("maxFirstVariation", worst_delta)
            .num("maxBoundary", worst_boundary),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Subspace;
    use crate::varifold::ProductSlab;
    use nalgebra::DVector;

    fn slab(n: usize, complete: bool) -> AnalyticFamily {
        AnalyticFamily::Slab(
            ProductSlab::new(
                Subspace::coordinate(n, &[0]).unwrap(),
                DVector::from_element(n, -1.0),
                DVector::from_element(n, 1.0),
                1.0,
                complete,
            )
            .unwrap(),
        )
    }

    fn ridge(n: usize, width: Option<f64>) -> ScalarTestFunction {
        let mut normal = DVector::zeros(n);
        normal[1] = 1.0;
        ScalarTestFunction::Ridge {
            normal,
            center: DVector::zeros(n),
            width,
        }
    }

    #[test]
    fn dictionary_stays_in_window() {
        let d = window_dictionary(&DVector::from_element(2, -1.0), &DVector::from_element(2, 1.0));
        // center: 4 bumps and 2 shells at w/4, 4 bumps at w/2; quarter
        // centers: 4 bumps at w/4
        assert_eq!(d.len(), 6 + 4 + 4 * 4);
    }

    #[test]
    fn slab_admits_no_decomposition() {
        let r = decomposition_check(
            "slab",
            &slab(2, true),
            &ridge(2, Some(0.8)),
            0.02,
            16,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(r.pass, "{} {:?}", r.summary(), r.params);
        let linear = decomposition_check(
            "slab",
            &slab(2, true),
            &ridge(2, None),
            0.02,
            16,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(linear.pass, "{}", linear.summary());
    }

    #[test]
    fn slab_in_three_dimensions() {
        let r = decomposition_check(
            "slab",
            &slab(3, true),
            &ridge(3, None),
            0.025,
            2,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(r.pass, "{} {:?}", r.summary(), r.params);
    }

    #[test]
    fn rejects_tangential_dependence() {
        let f = ScalarTestFunction::Linear {
            gradient: DVector::from_column_slice(&[1.0, 0.0]),
            offset: 0.0,
        };
        let e = decomposition_check("slab", &slab(2, true), &f, 0.05, 4, &Tolerances::default()).unwrap_err();
        assert!(matches!(e, Error::Precondition { .. }));
        let e = decomposition_check(
            "slab",
            &slab(2, false),
            &ridge(2, None),
            0.05,
            4,
            &Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(e, Error::Precondition { .. }));
    }

    #[test]
    fn restriction_to_a_box_is_not_stationary() {
        // sanity: the same dictionary sees cancellation fail for a field
        // whose support crosses the level set of a function varying along T
        let v = slab(2, true).sample(0.02).unwrap();
        let theta = TestVectorField::bump(DVector::zeros(2), 0.5, DVector::from_column_slice(&[1.0, 0.0]));
        let e = first_variation_on_half(&v, &theta);
        assert!(e.abs() > 0.1 * first_variation_scale(&v, &theta));
    }

    fn first_variation_on_half(v: &crate::varifold::DiscreteVarifold, theta: &TestVectorField) -> f64 {
        crate::variation::first_variation_on(v, theta, |x: &Point| x[0] > 0.0)
    }
}
