//! Checks of the isoperimetric, Sobolev and Poincaré inequalities on sampled
//! varifolds.

use serde::{Deserialize, Serialize};

use super::report::{ConservativeFlag, Direction, Side, VerificationReport};
use crate::error::{Error, Result};
use crate::geom::{alpha, gamma_upper, Point, Tolerances};
use crate::maximal::{lower_density_region, superlevel_mass, weighted_median, MaximalParams, MedianParams, RegionMode};
use crate::variation::{standard_dictionary, total_variation_lower_bound, ScalarTestFunction, TestVectorField};
use crate::varifold::{AnalyticFamily, Ball, DiscreteVarifold};

pub const ISOPERIMETRIC: &str = "isoperimetric";
pub const BALL_ISOPERIMETRIC: &str = "ball-isoperimetric";
pub const SIZE_ISOPERIMETRIC: &str = "size-isoperimetric";
pub const SIZE_MASS: &str = "size-mass";
pub const SOBOLEV_AVERAGED: &str = "sobolev-averaged";
pub const SOBOLEV_RECTIFIABLE: &str = "sobolev-rectifiable";
pub const POINCARE: &str = "poincare";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaSource {
    /// Closed form from the sampled family.
    Analytic,
    /// `max |δV(θ)|` over a test-field dictionary.
    DictionaryLowerBound,
}

/// `‖δV‖(R^n)` together with where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaValue {
    pub value: f64,
    pub source: DeltaSource,
    pub dictionary_size: Option<usize>,
}

/// Bumps and radial shells centered on a `5^n` grid over the bounding box
/// (and at its midpoint), at four scales relative to its diameter.
pub fn default_dictionary(v: &DiscreteVarifold) -> Vec<TestVectorField> {
    let n = v.n();
    let Some((lo, hi)) = v.index().bounding_box() else {
        return Vec::new();
    };
    let diameter = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
        .max(1e-9);
    let per_axis = if n <= 3 { 5 } else { 3 };
    let mut centers = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let c = Point::from_iterator(
            n,
            (0..n).map(|k| lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (per_axis - 1) as f64),
        );
        centers.push(c);
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    let scales: Vec<f64> = [1.0, 0.5, 0.25, 0.125].iter().map(|s| s * diameter).collect();
    standard_dictionary(n, &centers, &scales)
}

/// `‖δV‖(R^n)` from the family when requested and available, otherwise the
/// dictionary lower bound.
pub fn delta_total(v: &DiscreteVarifold, source: DeltaSource, dictionary: &[TestVectorField]) -> Result<DeltaValue> {
    if source == DeltaSource::Analytic {
        if let Some(family) = v.family() {
            return Ok(DeltaValue {
                value: family.delta_total_mass(),
                source,
                dictionary_size: None,
            });
        }
    }
    let built;
    let dictionary = if dictionary.is_empty() {
        built = default_dictionary(v);
        &built[..]
    } else {
        dictionary
    };
    Ok(DeltaValue {
        value: total_variation_lower_bound(v, dictionary)?,
        source: DeltaSource::DictionaryLowerBound,
        dictionary_size: Some(dictionary.len()),
    })
}

fn base(name: &str, theorem: &str, v: &DiscreteVarifold, lhs: f64, rhs: f64, tol: &Tolerances) -> VerificationReport {
    let mut r = VerificationReport::new(name, theorem, lhs, rhs, tol)
        .param("m", v.m())
        .param("n", v.n())
        .param("atoms", v.len());
    if let Some(src) = v.source() {
        r = r.param("family", src.family.name()).num("h", src.h);
    }
    r
}

fn with_delta(r: VerificationReport, delta: &DeltaValue) -> VerificationReport {
    let r = r.num("deltaTotal", delta.value);
    match delta.source {
        DeltaSource::Analytic => r.param("deltaSource", "analytic"),
        DeltaSource::DictionaryLowerBound => r
            .param("deltaSource", "dictionary-lower-bound")
            .param("dictionarySize", delta.dictionary_size.unwrap_or(0))
            .flag(ConservativeFlag::new(
                Side::Rhs,
                "total variation of the first variation",
                Direction::Lower,
            )),
    }
}

fn validate_threshold(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "density threshold must be positive and finite, got {d}"
        )))
    }
}

/// `‖V‖{M >= d}^{1 - 1/m} <= Γ d^{-1/m} ‖δV‖(R^n)` with `0⁰ = 0`.
pub fn verify_isoperimetric(
    name: &str,
    v: &DiscreteVarifold,
    d: f64,
    params: &MaximalParams,
    delta: &DeltaValue,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    validate_threshold(d)?;
    let m = v.m();
    let mass = superlevel_mass(v, d, params, tol)?;
    let lhs = superlevel_power(mass, m);
    let constant = gamma_upper(m);
    let rhs = constant * d.powf(-1.0 / m as f64) * delta.value;
    let mut r = with_delta(base(name, ISOPERIMETRIC, v, lhs, rhs, tol), delta)
        .num("d", d)
        .num("superlevelMass", mass)
        .num("gamma", constant)
        .num("sMin", params.s_min)
        .num("sMax", params.s_max)
        .param("radiiPerCenter", params.radii_per_center)
        .flag(ConservativeFlag::new(
            Side::Lhs,
            "maximal function over finitely many balls",
            Direction::Lower,
        ));
    if delta.source == DeltaSource::Analytic && delta.value > 0.0 {
        r.implied_gamma = Some(lhs * d.powf(1.0 / m as f64) / delta.value);
    }
    Ok(r)
}

fn superlevel_power(mass: f64, m: usize) -> f64 {
    if m == 1 {
        if mass > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        mass.powf(1.0 - 1.0 / m as f64)
    }
}

/// `α(m)^{-1/m} r^{-1} ‖V‖(R^n) <= Γ ‖δV‖(R^n)` for `spt ‖V‖ ⊂ B(a, r)`.
pub fn verify_ball_iso(
    name: &str,
    v: &DiscreteVarifold,
    a: &Point,
    radius: f64,
    delta: &DeltaValue,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
    }
    check_dim(v, a)?;
    let reach = support_reach(v, a);
    if reach > radius * (1.0 + 1e-12) {
        return Err(Error::precondition(
            "the isoperimetric inequality in a ball",
            format!("support reaches distance {reach} from the center, beyond r = {radius}"),
        ));
    }
    let m = v.m();
    let (mass, analytic_mass) = match v.family() {
        Some(f) if f.total_mass().is_finite() => (f.total_mass(), true),
        _ => (v.total_mass(), false),
    };
    let lhs = alpha(m).powf(-1.0 / m as f64) / radius * mass;
    let constant = gamma_upper(m);
    let rhs = constant * delta.value;
    let mut r = with_delta(base(name, BALL_ISOPERIMETRIC, v, lhs, rhs, tol), delta)
        .num("r", radius)
        .num("mass", mass)
        .param("massSource", if analytic_mass { "analytic" } else { "atoms" })
        .num("gamma", constant);
    if delta.source == DeltaSource::Analytic && delta.value > 0.0 {
        r.implied_gamma = Some(lhs / delta.value);
    }
    Ok(r)
}

fn check_dim(v: &DiscreteVarifold, a: &Point) -> Result<()> {
    if a.len() != v.n() {
        return Err(Error::Argument(format!(
            "point of dimension {} in R^{}",
            a.len(),
            v.n()
        )));
    }
    Ok(())
}

fn support_reach(v: &DiscreteVarifold, a: &Point) -> f64 {
    let atoms = v.support_radius_about(a);
    match v.family() {
        Some(f) => atoms.max(f.support_max_distance(a)),
        None => atoms,
    }
}

/// For rectifiable families with `m >= 2`: `d H^m{Θ >= d}^{1 - 1/m} <= Γ ‖δV‖`
/// and `‖V‖(R^n) <= m Γ H^m{Θ > 0}^{1/m} ‖δV‖`. Exact in the family data.
pub fn verify_size_iso(
    name: &str,
    family: &AnalyticFamily,
    d: f64,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    validate_threshold(d)?;
    let m = family.m();
    if let AnalyticFamily::Slab(_) = family {
        return Err(Error::Unsupported("size estimate for product slabs".into()));
    }
    if m < 2 {
        return Err(Error::Domain("the size estimate needs m >= 2".into()));
    }
    let mass = family.total_mass();
    let delta = family.delta_total_mass();
    if !(mass.is_finite() && delta.is_finite()) {
        return Err(Error::precondition(
            "the size estimate",
            "weight and first variation must have finite total mass",
        ));
    }
    let constant = gamma_upper(m);
    let level = family.density_superlevel_measure(d)?;
    let carrier = family.density_superlevel_measure(f64::MIN_POSITIVE)?;
    let me = m as f64;
    let lhs = d * level.powf(1.0 - 1.0 / me);
    let mut principal =
        VerificationReport::new(&format!("{name}/level"), SIZE_ISOPERIMETRIC, lhs, constant * delta, tol)
            .param("family", family.name())
            .param("m", m)
            .param("n", family.n())
            .num("d", d)
            .num("levelMeasure", level)
            .num("deltaTotal", delta)
            .num("gamma", constant);
    let mut total = VerificationReport::new(
        &format!("{name}/mass"),
        SIZE_MASS,
        mass,
        me * constant * carrier.powf(1.0 / me) * delta,
        tol,
    )
    .param("family", family.name())
    .param("m", m)
    .param("n", family.n())
    .num("mass", mass)
    .num("carrierMeasure", carrier)
    .num("deltaTotal", delta)
    .num("gamma", constant);
    if delta > 0.0 {
        principal.implied_gamma = Some(lhs / delta);
        if carrier > 0.0 {
            total.implied_gamma = Some(mass / (me * carrier.powf(1.0 / me) * delta));
        }
    }
    Ok(vec![principal, total])
}

fn require_nonnegative(theorem: &str, f: &ScalarTestFunction) -> Result<()> {
    if f.is_nonnegative() {
        Ok(())
    } else {
        Err(Error::precondition(theorem, "the test function must be nonnegative"))
    }
}

fn beta(m: usize) -> f64 {
    if m == 1 {
        f64::INFINITY
    } else {
        m as f64 / (m as f64 - 1.0)
    }
}

/// `(Σ w f^β)^{1/β}`, or the largest value for `β = ∞`.
fn beta_norm<I: Iterator<Item = (f64, f64)>>(pairs: I, b: f64) -> f64 {
    if b.is_infinite() {
        pairs.filter(|p| p.1 > 0.0).map(|p| p.0).fold(0.0, f64::max)
    } else {
        pairs.map(|(f, w)| w * f.powf(b)).sum::<f64>().powf(1.0 / b)
    }
}

/// `∫ f d‖δV‖ + ∫ |V Df| d‖V‖` over the points accepted by `in_domain`.
///
/// The first term uses the family's first variation when the varifold was
/// sampled from one; otherwise `max |δV(f θ)|` over the dictionary, a lower
/// bound.
fn derivative_budget<U>(
    v: &DiscreteVarifold,
    f: &ScalarTestFunction,
    in_domain: U,
) -> Result<(f64, f64, Option<ConservativeFlag>)>
where
    U: Fn(&Point) -> bool + Sync,
{
    let gradient = crate::variation::weak_gradient_integral_weighted(v, f, |x| if in_domain(x) { 1.0 } else { 0.0 });
    let boundary = match v.source() {
        Some(src) => {
            let delta = src.family.delta_measure(src.h)?;
            delta
                .points
                .iter()
                .zip(&delta.vectors)
                .filter(|(y, _)| in_domain(y))
                .map(|(y, w)| f.value(y) * w.norm())
                .sum::<f64>()
        }
        None => {
            let dictionary = default_dictionary(v);
            if dictionary.is_empty() {
                0.0
            } else {
                let restricted = v.restrict(&in_domain);
                return Ok((
                    product_lower_bound(&restricted, f, &dictionary),
                    gradient,
                    Some(ConservativeFlag::new(
                        Side::Rhs,
                        "integral of f against the first variation",
                        Direction::Lower,
                    )),
                ));
            }
        }
    };
    Ok((boundary, gradient, None))
}

/// `max_θ |δV(f θ)|`, using `D(fθ) = θ ⊗ ∇f + f Dθ`.
fn product_lower_bound(v: &DiscreteVarifold, f: &ScalarTestFunction, dictionary: &[TestVectorField]) -> f64 {
    dictionary
        .iter()
        .map(|theta| {
            let value: f64 = v
                .atoms()
                .iter()
                .map(|a| {
                    let x = &a.position;
                    let jac = theta.jacobian(x) * f.value(x) + theta.value(x) * f.gradient(x).transpose();
                    a.weight * a.plane.pair(&jac)
                })
                .sum();
            value.abs()
        })
        .fold(0.0, f64::max)
}

/// Parameters of the averaged Sobolev inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct SobolevAveraged {
    pub d: f64,
    pub median: MedianParams,
    /// The radius function `r(a)`, taken constant.
    pub radius: f64,
    /// The Besicovitch constant `β(n)`; omitted, the right side uses 1,
    /// which is not larger.
    pub besicovitch: Option<f64>,
    /// The open set `U`, an open ball; `None` is `R^n`.
    pub domain: Option<Ball>,
}

fn domain_test(domain: &Option<Ball>) -> impl Fn(&Point) -> bool + Sync + '_ {
    move |x: &Point| match domain {
        Some(b) => (x - &b.center).norm() < b.radius,
        None => true,
    }
}

/// `(‖V‖ ⌞ A)_(β)(g) <= Γ (∫ f d‖δV‖ + ∫ |V Df| d‖V‖)` with `g` the
/// `λ`-median of `f` over `U ∩ B(a, r(a))` and
/// `A = {a : ‖V‖(U ∩ B(a, r(a))) >= d α(m) r(a)^m}`.
pub fn verify_sobolev_avg(
    name: &str,
    v: &DiscreteVarifold,
    f: &ScalarTestFunction,
    p: &SobolevAveraged,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    validate_threshold(p.d)?;
    require_nonnegative("the averaged Sobolev inequality", f)?;
    if !(p.radius > 0.0 && p.radius.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive, got {}", p.radius)));
    }
    if let Some(b) = p.besicovitch {
        if !(b >= 1.0 && b.is_finite()) {
            return Err(Error::Domain(format!(
                "the Besicovitch constant is at least 1, got {b}"
            )));
        }
    }
    let m = v.m();
    let in_domain = domain_test(&p.domain);
    let region = lower_density_region(v, p.d, |_| p.radius, RegionMode::BallRatio, &in_domain, tol)?;
    let atoms = v.atoms();
    let medians: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        region
            .par_iter()
            .filter_map(|&i| {
                let a = &atoms[i].position;
                let mut values: Vec<(f64, f64)> = v
                    .ball_atoms(a, p.radius)
                    .into_iter()
                    .filter(|&j| in_domain(&atoms[j].position))
                    .map(|j| (f.value(&atoms[j].position), atoms[j].weight))
                    .collect();
                weighted_median(&mut values, p.median.lambda).map(|g| (g, atoms[i].weight))
            })
            .collect()
    };
    let b = beta(m);
    let lhs = beta_norm(medians.into_iter(), b);
    let (boundary, gradient, flag) = derivative_budget(v, f, &in_domain)?;
    let me = m as f64;
    let beta_free = gamma_upper(m) * p.d.powf(-1.0 / me) / (1.0 - p.median.lambda);
    let besicovitch = p.besicovitch.unwrap_or(1.0);
    let constant = beta_free * besicovitch.powf(1.0 - 1.0 / me);
    let budget = boundary + gradient;
    let mut r = base(name, SOBOLEV_AVERAGED, v, lhs, constant * budget, tol)
        .num("d", p.d)
        .num("lambda", p.median.lambda)
        .num("radius", p.radius)
        .num("beta", b)
        .num("boundaryTerm", boundary)
        .num("gradientTerm", gradient)
        .num("constant", constant)
        .param("regionAtoms", region.len())
        .num("betaFreeRatio", super::report::ratio(lhs, beta_free * budget));
    r = match p.besicovitch {
        Some(b) => r.num("besicovitch", b),
        None => r.param("besicovitch", "omitted").flag(ConservativeFlag::new(
            Side::Rhs,
            "Besicovitch constant replaced by 1",
            Direction::Lower,
        )),
    };
    if let Some(b) = &p.domain {
        r = r.num("domainRadius", b.radius);
    }
    if let Some(flag) = flag {
        r = r.flag(flag);
    }
    Ok(r)
}

/// `(‖V‖ ⌞ {Θ^m >= d})_(β)(f) <= Γ d^{-1/m} (∫ f d‖δV‖ + ∫ |V Df| d‖V‖)`,
/// with densities from the sampled family.
pub fn verify_sobolev_rect(
    name: &str,
    v: &DiscreteVarifold,
    f: &ScalarTestFunction,
    d: f64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    validate_threshold(d)?;
    require_nonnegative("the Sobolev inequality", f)?;
    let m = v.m();
    let region = lower_density_region(v, d, |_| 1.0, RegionMode::Density, |_| true, tol)?;
    let atoms = v.atoms();
    let b = beta(m);
    let lhs = beta_norm(
        region.iter().map(|&i| (f.value(&atoms[i].position), atoms[i].weight)),
        b,
    );
    let (boundary, gradient, flag) = derivative_budget(v, f, |_| true)?;
    let constant = gamma_upper(m) * d.powf(-1.0 / m as f64);
    let mut r = base(name, SOBOLEV_RECTIFIABLE, v, lhs, constant * (boundary + gradient), tol)
        .num("d", d)
        .num("beta", b)
        .num("boundaryTerm", boundary)
        .num("gradientTerm", gradient)
        .num("constant", constant)
        .param("regionAtoms", region.len());
    if let Some(flag) = flag {
        r = r.flag(flag);
    }
    Ok(r)
}

/// `α(m)^{-1/m} r^{-1} ∫ f d‖V‖ <= Γ (∫ f d‖δV‖ + ∫ |V Df| d‖V‖)` for `V`
/// supported in `U(a, r)`.
pub fn verify_poincare(
    name: &str,
    v: &DiscreteVarifold,
    f: &ScalarTestFunction,
    a: &Point,
    radius: f64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    require_nonnegative("the Poincaré inequality", f)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
    }
    check_dim(v, a)?;
    let reach = support_reach(v, a);
    if reach >= radius {
        return Err(Error::precondition(
            "the Poincaré inequality",
            format!("support reaches distance {reach} from the center, not inside U(a, {radius})"),
        ));
    }
    let m = v.m();
    let integral: f64 = v.atoms().iter().map(|x| x.weight * f.value(&x.position)).sum();
    let lhs = alpha(m).powf(-1.0 / m as f64) / radius * integral;
    let (boundary, gradient, flag) = derivative_budget(v, f, |_| true)?;
    let constant = gamma_upper(m);
    let mut r = base(name, POINCARE, v, lhs, constant * (boundary + gradient), tol)
        .num("r", radius)
        .num("integral", integral)
        .num("boundaryTerm", boundary)
        .num("gradientTerm", gradient)
        .num("gamma", constant);
    if let Some(flag) = flag {
        r = r.flag(flag);
    }
    Ok(r)
}
