//! Dimensional constants and Grassmann elements.
//!
//! An element of the Grassmannian `G(n, m)` is carried as the orthogonal
//! projection onto the subspace, the symmetric idempotent `n x n` matrix whose
//! image is the subspace. Every integrand in the toolkit consumes the
//! projection directly (for instance the Frobenius pairing with a Jacobian in
//! the first variation), so bases are only a construction convenience.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = DVector<f64>;

/// Volume of the closed unit ball in `R^m`, `pi^(m/2) / Gamma(m/2 + 1)`.
///
/// Evaluated through the two-step recursion `alpha(m) = 2 pi / m * alpha(m - 2)`
/// seeded with `alpha(0) = 1` and `alpha(1) = 2`, which reproduces `2`, `pi`
/// and `4 pi / 3` bit-for-bit.
pub fn unit_ball_volume(m: i64) -> Result<f64> {
    if m < 1 {
        return Err(Error::Domain(format!(
            "unit ball volume needs a positive dimension, got {m}"
        )));
    }
    Ok(alpha(m as usize))
}

pub(crate) fn alpha(m: usize) -> f64 {
    let mut value = if m.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if m.is_multiple_of(2) { 2 } else { 3 };
    while k <= m {
        value *= 2.0 * PI / k as f64;
        k += 2;
    }
    value
}

/// Surface measure of the unit `m`-sphere in `R^(m + 1)`.
pub(crate) fn unit_sphere_area(m: usize) -> f64 {
    (m as f64 + 1.0) * alpha(m + 1)
}

/// Upper bound for the best isoperimetric constant `gamma(m)`: exactly `1/2`
/// for curves and `5^m 3^(1/(m-1)) alpha(m)^(-1/m)` otherwise.
pub fn gamma_upper(m: usize) -> f64 {
    assert!(m >= 1, "gamma_upper needs m >= 1");
    if m == 1 {
        0.5
    } else {
        let m_f = m as f64;
        5f64.powi(m as i32) * 3f64.powf(1.0 / (m_f - 1.0)) * alpha(m).powf(-1.0 / m_f)
    }
}

/// Lower bound for `gamma(m)` obtained from the flat unit disc,
/// `alpha(m)^(-1/m) / m`.
pub fn gamma_disc_lower(m: usize) -> f64 {
    let m_f = m as f64;
    alpha(m).powf(-1.0 / m_f) / m_f
}

/// The dimensional constants used by the inequality checks.
///
/// The Besicovitch number `beta(n)` has no built-in value; it must be supplied
/// wherever the averaged Sobolev inequality is checked.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Constants {
    pub besicovitch: Option<f64>,
}

impl Constants {
    pub fn alpha(&self, m: usize) -> f64 {
        alpha(m)
    }

    pub fn gamma_upper(&self, m: usize) -> f64 {
        gamma_upper(m)
    }
}

/// Numerical tolerances shared by the checks. All of them can be overridden
/// from an experiment configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "camelCase")]
pub struct Tolerances {
    /// Absolute tolerance for exact linear algebra.
    pub linear_algebra: f64,
    /// Relative tolerance for quadrature comparisons.
    pub quadrature: f64,
    /// A report passes iff `lhs / rhs <= 1 + report`.
    pub report: f64,
    /// Relative slack applied to density-ratio thresholds (`ratio >= d`), so
    /// that a ball whose ratio equals the threshold up to rounding is counted.
    pub threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            linear_algebra: 1e-10,
            quadrature: 1e-6,
            report: 1e-9,
            threshold: 1e-12,
        }
    }
}

impl Tolerances {
    /// `value >= threshold` up to the relative threshold slack.
    pub fn reaches(&self, value: f64, threshold: f64) -> bool {
        value >= threshold * (1.0 - self.threshold)
    }
}

/// An `m`-dimensional linear subspace of `R^n`, stored as its orthogonal
/// projection.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    n: usize,
    m: usize,
    proj: DMatrix<f64>,
}

impl Subspace {
    /// Orthogonal projection onto the span of `vectors`.
    pub fn from_basis(vectors: &[Point]) -> Result<Self> {
        let m = vectors.len();
        if m == 0 {
            return Err(Error::Argument("empty basis".into()));
        }
        let n = vectors[0].len();
        if vectors.iter().any(|v| v.len() != n) {
            return Err(Error::Argument("basis vectors of unequal length".into()));
        }
        if m > n {
            return Err(Error::Argument(format!("{m} vectors cannot be independent in R^{n}")));
        }
        let a = DMatrix::from_columns(vectors);
        let svd = a.svd(true, false);
        let largest = svd.singular_values.max();
        let smallest = svd.singular_values.min();
        if !(smallest >= 1e-10 * largest) || largest == 0.0 {
            return Err(Error::DegenerateBasis { smallest, largest });
        }
        let u = svd.u.expect("requested U");
        let proj = &u * u.transpose();
        Ok(Subspace { n, m, proj })
    }

    /// The coordinate subspace spanned by the listed axes.
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        if let Some(axis) = axes.iter().find(|&&a| a >= n) {
            return Err(Error::Argument(format!("axis {axis} out of range for R^{n}")));
        }
        let mut proj = DMatrix::zeros(n, n);
        for &axis in axes {
            proj[(axis, axis)] = 1.0;
        }
        let s = Subspace { n, m: axes.len(), proj };
        if s.trace_defect() > 0.5 {
            return Err(Error::Argument("repeated axis".into()));
        }
        Ok(s)
    }

    /// The whole space `R^n`.
    pub fn full(n: usize) -> Self {
        Subspace {
            n,
            m: n,
            proj: DMatrix::identity(n, n),
        }
    }

    /// Wraps an explicit projection matrix after checking the invariants
    /// (symmetry to 1e-12, idempotence and trace to `tol`).
    pub fn from_projection(proj: DMatrix<f64>, m: usize, tol: f64) -> Result<Self> {
        if proj.nrows() != proj.ncols() {
            return Err(Error::Argument("projection must be square".into()));
        }
        let s = Subspace {
            n: proj.nrows(),
            m,
            proj,
        };
        let asym = (&s.proj - s.proj.transpose()).amax();
        let idem = (&s.proj * &s.proj - &s.proj).amax();
        if asym > 1e-12 || idem > tol || s.trace_defect() > tol {
            return Err(Error::Argument(format!(
                "not an orthogonal projection of rank {m}: asymmetry {asym:e}, idempotence defect {idem:e}, trace defect {:e}",
                s.trace_defect()
            )));
        }
        Ok(s)
    }

    /// Trusted constructor for projections built in closed form.
    pub(crate) fn from_parts(n: usize, m: usize, proj: DMatrix<f64>) -> Self {
        Subspace { n, m, proj }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn proj(&self) -> &DMatrix<f64> {
        &self.proj
    }

    pub fn apply(&self, v: &Point) -> Point {
        &self.proj * v
    }

    /// Frobenius pairing `P . A = sum_ij P_ij A_ij`.
    pub fn pair(&self, a: &DMatrix<f64>) -> f64 {
        self.proj.dot(a)
    }

    fn trace_defect(&self) -> f64 {
        (self.proj.trace() - self.m as f64).abs()
    }

    /// Orthonormal basis of the subspace, as the columns of an `n x m` matrix.
    pub fn basis(&self) -> DMatrix<f64> {
        orthonormal_columns(&self.proj, self.m)
    }

    /// Orthonormal basis of the orthogonal complement (`n x (n - m)`).
    pub fn complement_basis(&self) -> DMatrix<f64> {
        let q = DMatrix::identity(self.n, self.n) - &self.proj;
        orthonormal_columns(&q, self.n - self.m)
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        (&self.proj - self.proj.transpose()).amax()
    }

    pub fn idempotence_defect(&self) -> f64 {
        (&self.proj * &self.proj - &self.proj).amax()
    }
}

/// Pivoted Gram-Schmidt over the columns of a projection matrix: picks the
/// `rank` columns with the largest residual norms. Columns of a coordinate
/// projection come out as exact unit vectors.
fn orthonormal_columns(mat: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let n = mat.nrows();
    let mut residual: Vec<DVector<f64>> = (0..mat.ncols()).map(|j| mat.column(j).into_owned()).collect();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(rank);
    for _ in 0..rank {
        let (best, _) = residual
            .iter()
            .enumerate()
            .map(|(j, c)| (j, c.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let q = residual[best].normalize();
        for c in residual.iter_mut() {
            let coef = c.dot(&q);
            c.axpy(-coef, &q, 1.0);
        }
        out.push(q);
    }
    if out.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1).unwrap(), 2.0);
        assert_eq!(unit_ball_volume(2).unwrap(), PI);
        assert_abs_diff_eq!(unit_ball_volume(3).unwrap(), 4.0 * PI / 3.0, epsilon = 1e-15);
        assert!(matches!(unit_ball_volume(0), Err(Error::Domain(_))));
        assert!(matches!(unit_ball_volume(-3), Err(Error::Domain(_))));
    }

    #[test]
    fn ball_volume_recursion_matches_euler_gamma() {
        use statrs::function::gamma::gamma;
        for m in 2..=12usize {
            let mf = m as f64;
            let via_gamma = alpha(m - 1) * PI.sqrt() * gamma((mf + 1.0) / 2.0) / gamma(mf / 2.0 + 1.0);
            assert!((alpha(m) - via_gamma).abs() <= 1e-10 * alpha(m), "m = {m}");
            let closed = PI.powf(mf / 2.0) / gamma(mf / 2.0 + 1.0);
            assert!((alpha(m) - closed).abs() <= 1e-10 * alpha(m), "m = {m}");
        }
    }

    #[test]
    fn isoperimetric_constants() {
        assert_eq!(gamma_upper(1), 0.5);
        assert_abs_diff_eq!(gamma_upper(2), 25.0 * 3.0 * PI.powf(-0.5), epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_disc_lower(2), PI.powf(-0.5) / 2.0, epsilon = 1e-15);
        assert_eq!(gamma_disc_lower(1), 0.5);
    }

    #[test]
    fn subspace_examples() {
        let e = |n: usize, i: usize| {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            v
        };
        let p = Subspace::from_basis(&[e(2, 0)]).unwrap();
        assert_abs_diff_eq!(
            p.proj(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            epsilon = 1e-12
        );

        let diag = Subspace::from_basis(&[e(2, 0) + e(2, 1)]).unwrap();
        assert_abs_diff_eq!(diag.proj(), &DMatrix::from_element(2, 2, 0.5), epsilon = 1e-12);

        let plane = Subspace::from_basis(&[e(3, 0), e(3, 1)]).unwrap();
        assert_abs_diff_eq!(
            plane.proj(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0])),
            epsilon = 1e-12
        );
        assert_eq!(plane.dim(), 2);
        assert_eq!(plane.ambient_dim(), 3);
    }

    #[test]
    fn degenerate_basis_is_rejected() {
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let err = Subspace::from_basis(&[v.clone(), v * 2.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateBasis { .. }));
    }

    #[test]
    fn coordinate_basis_is_exact() {
        let t = Subspace::coordinate(3, &[0, 2]).unwrap();
        let b = t.basis();
        assert_eq!(b.ncols(), 2);
        assert_eq!(b.column(0).as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(b.column(1).as_slice(), &[0.0, 0.0, 1.0]);
        let c = t.complement_basis();
        assert_eq!(c.column(0).as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn from_projection_validates() {
        let good = DMatrix::from_element(2, 2, 0.5);
        assert!(Subspace::from_projection(good.clone(), 1, 1e-10).is_ok());
        assert!(Subspace::from_projection(good, 2, 1e-10).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 0.0]);
        assert!(Subspace::from_projection(bad, 1, 1e-10).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn basis_strategy() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
            (1usize..=4).prop_flat_map(|n| {
                (1usize..=n).prop_flat_map(move |m| {
                    (
                        Just(n),
                        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), m),
                    )
                })
            })
        }

        proptest! {
            #[test]
            fn projection_invariants((n, vecs) in basis_strategy(), v in prop::collection::vec(-5.0f64..5.0, 4)) {
                let vectors: Vec<Point> = vecs.into_iter().map(DVector::from_vec).collect();
                let Ok(p) = Subspace::from_basis(&vectors) else { return Ok(()); };
                prop_assert!(p.max_abs_asymmetry() <= 1e-12);
                prop_assert!(p.idempotence_defect() <= 1e-10);
                prop_assert!((p.proj().trace() - p.dim() as f64).abs() <= 1e-10);
                let v = DVector::from_column_slice(&v[..n]);
                let once = p.apply(&v);
                let twice = p.apply(&once);
                prop_assert!((twice - &once).norm() <= 1e-10 * v.norm().max(1e-300));
                let b = p.basis();
                prop_assert!((b.transpose() * &b - DMatrix::identity(p.dim(), p.dim())).amax() <= 1e-10);
            }
        }
    }
}
