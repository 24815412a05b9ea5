//! First variation, its total mass, weak derivatives of class-1 maps and
//! distributional boundaries.

pub mod fields;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use fields::{standard_dictionary, AffineMap, C1Map, ScalarTestFunction, TestVectorField};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::varifold::{AnalyticFamily, DiscreteVarifold};

/// `δV(θ) = Σ w P • Dθ(x)` over the atoms.
pub fn first_variation(v: &DiscreteVarifold, theta: &TestVectorField) -> f64 {
    first_variation_on(v, theta, |_| true)
}

/// The same sum restricted to atoms whose position lies in `E`, that is
/// `δ(V ⌞ E × G(n, m))(θ)`.
pub fn first_variation_on<E>(v: &DiscreteVarifold, theta: &TestVectorField, in_set: E) -> f64
where
    E: Fn(&Point) -> bool,
{
    let (center, radius) = theta.support();
    let atoms = v.atoms();
    v.ball_atoms(&center, radius)
        .into_iter()
        .filter(|&i| in_set(&atoms[i].position))
        .map(|i| {
            let a = &atoms[i];
            a.weight * a.plane.pair(&theta.jacobian(&a.position))
        })
        .sum()
}

/// `Σ w |P • Dθ(x)|`, the natural magnitude against which cancellation in
/// [`first_variation`] is judged.
pub fn first_variation_scale(v: &DiscreteVarifold, theta: &TestVectorField) -> f64 {
    let (center, radius) = theta.support();
    let atoms = v.atoms();
    v.ball_atoms(&center, radius)
        .into_iter()
        .map(|i| {
            let a = &atoms[i];
            a.weight * a.plane.pair(&theta.jacobian(&a.position)).abs()
        })
        .sum()
}

/// `max |δV(θ)|` over a dictionary of fields with `sup |θ| <= 1`: a lower
/// bound for `‖δV‖(R^n)`.
pub fn total_variation_lower_bound(v: &DiscreteVarifold, dictionary: &[TestVectorField]) -> Result<f64> {
    if dictionary.is_empty() {
        return Err(Error::Argument("empty test-field dictionary".into()));
    }
    if let Some(f) = dictionary.iter().find(|f| f.sup_norm() > 1.0 + 1e-12) {
        return Err(Error::Argument(format!(
            "dictionary field with sup norm {} > 1",
            f.sup_norm()
        )));
    }
    let values: Vec<f64> = dictionary
        .par_iter()
        .map(|theta| first_variation(v, theta).abs())
        .collect();
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// `V Df(x) = Df(x) ∘ q(x)` where `q(x)` is the fiber-averaged projection.
pub fn weak_derivative_c1<F: C1Map + ?Sized>(v: &DiscreteVarifold, f: &F, x: &Point) -> Result<DMatrix<f64>> {
    let q = v.mean_projection(x)?;
    Ok(f.jacobian(x) * q)
}

/// `∫ |V Df| d‖V‖` for a scalar function, one term per fiber.
pub fn weak_gradient_integral(v: &DiscreteVarifold, f: &ScalarTestFunction) -> f64 {
    weak_gradient_integral_weighted(v, f, |_| 1.0)
}

pub(crate) fn weak_gradient_integral_weighted<W>(v: &DiscreteVarifold, f: &ScalarTestFunction, weight: W) -> f64
where
    W: Fn(&Point) -> f64 + Sync,
{
    let atoms = v.atoms();
    let terms: Vec<f64> = v
        .fibers()
        .par_iter()
        .map(|members| {
            let x = &atoms[members[0]].position;
            let g = f.gradient(x);
            if g.iter().all(|&c| c == 0.0) {
                return 0.0;
            }
            let mass: f64 = members.iter().map(|&i| atoms[i].weight).sum();
            let q = v.fiber_mean_projection(members);
            mass * weight(x) * (q * g).norm()
        })
        .collect();
    terms.into_iter().sum()
}

/// `δV(θ)` from the closed-form first-variation data of a family,
/// discretized at resolution `h`.
pub fn analytic_first_variation(family: &AnalyticFamily, theta: &TestVectorField, h: f64) -> Result<f64> {
    Ok(family.delta_measure(h)?.pair(|y| theta.value(y)))
}

/// `V∂E(θ) = (δV ⌞ E)(θ) - δ(V ⌞ E × G(n, m))(θ)` for a sampled family:
/// the first term from the family's first-variation data, the second by
/// quadrature over the atoms in `E`.
pub fn distributional_boundary_eval<E>(v: &DiscreteVarifold, in_set: E, theta: &TestVectorField) -> Result<f64>
where
    E: Fn(&Point) -> bool,
{
    let source = v
        .source()
        .ok_or_else(|| Error::Unsupported("distributional boundary needs a sampled analytic family".into()))?;
    let delta = source.family.delta_measure(source.h)?;
    let analytic = delta.pair_on(|y| theta.value(y), &in_set);
    Ok(analytic - first_variation_on(v, theta, &in_set))
}
