//! Families with bounded derivative budget whose `L^p` norms diverge: the
//! limits of how far the Sobolev inequalities can be strengthened.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::report::{num, BlowupSeries};
use crate::error::{Error, Result};
use crate::geom::{alpha, Point, Subspace, Tolerances};
use crate::maximal::{lower_density_region, weighted_median, MedianParams, RegionMode};
use crate::variation::{weak_gradient_integral, ScalarTestFunction};
use crate::varifold::{AnalyticFamily, DiscreteVarifold, FlatDisc, PlaneBundle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BlowupKind {
    /// `f_ε(x) = ε^{1-n} g(x/ε)` against Lebesgue measure.
    LebesgueScaling,
    /// A bump on one plane of a bundle of `k^{n-m}` parallel planes.
    PlaneBundle,
    /// The plane bundle with the left side restricted to `{M >= α(n)/α(m)}`
    /// and `p = m/(m-1)`.
    SobolevVsIso,
}

impl BlowupKind {
    pub fn name(self) -> &'static str {
        match self {
            BlowupKind::LebesgueScaling => "lebesgueScaling",
            BlowupKind::PlaneBundle => "planeBundle",
            BlowupKind::SobolevVsIso => "sobolevVsIso",
        }
    }
}

/// `n / (n - 1)`, infinite for `n = 1`.
pub fn critical_exponent(n: usize) -> f64 {
    if n <= 1 {
        f64::INFINITY
    } else {
        n as f64 / (n as f64 - 1.0)
    }
}

fn lp_norm<I: Iterator<Item = (f64, f64)>>(pairs: I, p: f64) -> f64 {
    if p.is_infinite() {
        pairs.filter(|x| x.1 > 0.0).map(|x| x.0.abs()).fold(0.0, f64::max)
    } else {
        pairs.map(|(f, w)| w * f.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn growth(norms: &[f64]) -> Vec<Option<f64>> {
    std::iter::once(None)
        .chain(norms.windows(2).map(|w| Some(super::report::ratio(w[1], w[0]))))
        .collect()
}

const BUDGET_SLACK: f64 = 1e-3;
const CONTROL_FACTOR: f64 = 1.1;

fn check_exponent(p: f64, n: usize, expect_divergence: bool) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("need p >= 1, got {p}")));
    }
    let critical = critical_exponent(n);
    if expect_divergence && p <= critical {
        return Err(Error::Domain(format!(
            "divergence needs p > n/(n - 1) = {critical}, got p = {p}"
        )));
    }
    Ok(())
}

/// Shared checks: budgets saturated, and either growth at every step
/// (divergent exponents) or norms bounded by the first one.
#[allow(clippy::too_many_arguments)]
fn finish(
    name: &str,
    kind: BlowupKind,
    p: f64,
    n: usize,
    parameters: Vec<f64>,
    norms: Vec<f64>,
    budgets: Vec<f64>,
    mut params: BTreeMap<String, Value>,
) -> BlowupSeries {
    let growth = growth(&norms);
    let mut checks = Vec::new();
    let mut pass = true;
    if budgets.iter().any(|b| *b > 1.0 + BUDGET_SLACK) {
        pass = false;
        checks.push("derivative budget exceeds 1".into());
    }
    let critical = critical_exponent(n);
    params.insert("criticalExponent".into(), num(critical));
    if p > critical {
        if growth.iter().flatten().any(|g| !(*g > 1.0)) {
            pass = false;
            checks.push("norms not strictly increasing".into());
        }
    } else {
        let worst = norms
            .iter()
            .map(|x| super::report::ratio(*x, norms[0]))
            .fold(0.0, f64::max);
        params.insert("maxRelativeNorm".into(), num(worst));
        if worst > CONTROL_FACTOR {
            pass = false;
            checks.push(format!("norm grew by {worst:.3} over the sweep"));
        }
    }
    BlowupSeries {
        name: name.into(),
        kind: kind.name().into(),
        p,
        parameters,
        norms,
        budgets,
        growth,
        median_norms: None,
        params,
        checks,
        pass,
    }
}

/// `f_ε` for `ε = 2^{-j}`, `j < steps`, with `g` a bump in `U(0, 1)`
/// normalized to `∫ |Dg| = 1` on a grid twice as fine as the measuring one.
/// `cells` is the (odd) number of cells per axis over `[-ε, ε]^n`.
pub fn lebesgue_scaling(
    name: &str,
    n: usize,
    p: f64,
    steps: usize,
    cells: usize,
    expect_divergence: bool,
) -> Result<BlowupSeries> {
    if n < 2 || steps < 2 || cells < 3 || cells.is_multiple_of(2) {
        return Err(Error::Argument(
            "need n >= 2, at least two steps and an odd cell count >= 3".into(),
        ));
    }
    check_exponent(p, n, expect_divergence)?;
    let g = ScalarTestFunction::Bump {
        center: Point::zeros(n),
        radius: 0.9,
        height: 1.0,
    };
    let normalization = grid_sums(&g, n, 1.0, 2 * cells, p).1;
    let mut parameters = Vec::new();
    let mut norms = Vec::new();
    let mut budgets = Vec::new();
    for j in 0..steps {
        let eps = 0.5f64.powi(j as i32);
        let f = g.clone().dilated(eps).scaled(eps.powi(1 - n as i32) / normalization);
        let (norm, budget) = grid_sums(&f, n, eps, cells, p);
        parameters.push(eps);
        norms.push(norm);
        budgets.push(budget);
    }
    let mut params = BTreeMap::new();
    params.insert("n".into(), Value::from(n));
    params.insert("cells".into(), Value::from(cells));
    let expected = 2f64.powf(n as f64 - 1.0 - if p.is_infinite() { 0.0 } else { n as f64 / p });
    params.insert("expectedGrowth".into(), num(expected));
    let mut series = finish(
        name,
        BlowupKind::LebesgueScaling,
        p,
        n,
        parameters,
        norms,
        budgets,
        params,
    );
    if series
        .growth
        .iter()
        .flatten()
        .any(|g| (g / expected - 1.0).abs() > 0.05)
    {
        series.pass = false;
        series
            .checks
            .push("growth differs from the exact scaling by more than 5%".into());
    }
    Ok(series)
}

/// `(‖f‖_p, ∫ |Df|)` by the midpoint rule on `cells^n` cells over `[-ε, ε]^n`.
fn grid_sums(f: &ScalarTestFunction, n: usize, eps: f64, cells: usize, p: f64) -> (f64, f64) {
    let step = 2.0 * eps / cells as f64;
    let volume = step.powi(n as i32);
    let mut idx = vec![0usize; n];
    let mut values = Vec::new();
    let mut budget = 0.0;
    loop {
        let x = Point::from_iterator(n, idx.iter().map(|&i| -eps + (i as f64 + 0.5) * step));
        let v = f.value(&x);
        if v != 0.0 {
            values.push(v);
            budget += f.gradient(&x).norm() * volume;
        }
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < cells {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    (lp_norm(values.into_iter().map(|v| (v, volume)), p), budget)
}

/// The plane of the bundle nearest the origin, its weight, and the bump of
/// radius `0.9/k` centered on it, normalized so that `∫ |V Df| d‖V‖ = 1` on
/// a sample twice as fine as `h`.
struct BundleBump {
    bundle: PlaneBundle,
    center: Point,
    radius: f64,
    f: ScalarTestFunction,
}

const SAMPLES_PER_RADIUS: f64 = 64.0;

fn bundle_bump(m: usize, n: usize, k: usize, clipped: bool) -> Result<BundleBump> {
    let axes: Vec<usize> = (0..m).collect();
    let plane = Subspace::coordinate(n, &axes)?;
    let bundle = PlaneBundle::unit_ball_normalized(plane.clone(), k, clipped)?;
    let center = bundle
        .offsets
        .iter()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .cloned()
        .ok_or_else(|| Error::Argument("empty plane bundle".into()))?;
    let radius = 0.9 / k as f64;
    let piece = piece(&bundle, &center, radius)?;
    let bump = ScalarTestFunction::Bump {
        center: center.clone(),
        radius,
        height: 1.0,
    };
    let fine = piece.sample(radius / (2.0 * SAMPLES_PER_RADIUS))?;
    let scale = weak_gradient_integral(&fine, &bump);
    Ok(BundleBump {
        bundle,
        center,
        radius,
        f: bump.scaled(1.0 / scale),
    })
}

/// The part of the carrying plane under the bump.
fn piece(bundle: &PlaneBundle, center: &Point, radius: f64) -> Result<AnalyticFamily> {
    Ok(AnalyticFamily::Disc(FlatDisc::new(
        center.clone(),
        bundle.plane.clone(),
        radius,
        bundle.weight,
    )?))
}

fn check_dims(m: usize, n: usize, ks: &[usize]) -> Result<()> {
    if !(m >= 1 && m < n) {
        return Err(Error::Argument(format!("need 1 <= m < n, got m = {m}, n = {n}")));
    }
    if ks.len() < 2 || ks.iter().any(|&k| k < 2) || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument(
            "need an increasing sweep of at least two k >= 2".into(),
        ));
    }
    Ok(())
}

/// Complete planes parallel to `span(e_1, …, e_m)` with
/// `‖V‖ U(0, 1) = α(n)` and `δV = 0`; the bump lives on the plane nearest the
/// origin. Only the part of `V` where `f` or `Df` is nonzero enters.
pub fn plane_bundle(
    name: &str,
    m: usize,
    n: usize,
    p: f64,
    ks: &[usize],
    expect_divergence: bool,
) -> Result<BlowupSeries> {
    check_dims(m, n, ks)?;
    check_exponent(p, n, expect_divergence)?;
    let mut norms = Vec::new();
    let mut budgets = Vec::new();
    let mut weights = Vec::new();
    for &k in ks {
        let b = bundle_bump(m, n, k, false)?;
        let v = piece(&b.bundle, &b.center, b.radius)?.sample(b.radius / SAMPLES_PER_RADIUS)?;
        budgets.push(weak_gradient_integral(&v, &b.f));
        norms.push(lp_norm(v.atoms().iter().map(|a| (b.f.value(&a.position), a.weight)), p));
        weights.push(b.bundle.weight);
    }
    let mut params = dims(m, n);
    params.insert("planeWeights".into(), Value::from(weights));
    let parameters = ks.iter().map(|&k| k as f64).collect();
    Ok(finish(
        name,
        BlowupKind::PlaneBundle,
        p,
        n,
        parameters,
        norms,
        budgets,
        params,
    ))
}

fn dims(m: usize, n: usize) -> BTreeMap<String, Value> {
    let mut params = BTreeMap::new();
    params.insert("m".into(), Value::from(m));
    params.insert("n".into(), Value::from(n));
    params
}

/// The plane bundle with `p = β = m/(m-1)` and the left side taken over
/// `{M >= α(n)/α(m)}`. `M` is bounded below through the exact masses of
/// balls centered at the origin.
pub fn sobolev_vs_iso(name: &str, m: usize, n: usize, ks: &[usize], tol: &Tolerances) -> Result<BlowupSeries> {
    check_dims(m, n, ks)?;
    let p = if m == 1 {
        f64::INFINITY
    } else {
        m as f64 / (m as f64 - 1.0)
    };
    let d = alpha(n) / alpha(m);
    let mut norms = Vec::new();
    let mut budgets = Vec::new();
    let mut kept = Vec::new();
    for &k in ks {
        let b = bundle_bump(m, n, k, false)?;
        let family = AnalyticFamily::Bundle(b.bundle.clone());
        let v = piece(&b.bundle, &b.center, b.radius)?.sample(b.radius / SAMPLES_PER_RADIUS)?;
        budgets.push(weak_gradient_integral(&v, &b.f));
        let atoms = v.atoms();
        let inside: Vec<usize> = (0..atoms.len())
            .filter(|&i| tol.reaches(origin_ratio(&family, &atoms[i].position, m), d))
            .collect();
        kept.push(inside.len() as f64 / atoms.len() as f64);
        norms.push(lp_norm(
            inside.iter().map(|&i| (b.f.value(&atoms[i].position), atoms[i].weight)),
            p,
        ));
    }
    let mut params = dims(m, n);
    params.insert("d".into(), num(d));
    params.insert("superlevelFraction".into(), Value::from(kept));
    let parameters = ks.iter().map(|&k| k as f64).collect();
    Ok(finish(
        name,
        BlowupKind::SobolevVsIso,
        p,
        n,
        parameters,
        norms,
        budgets,
        params,
    ))
}

/// `max ‖V‖ B(0, s) / (α(m) s^m)` over radii `s ∈ [|x|, 2]` on a grid
/// including 1.
fn origin_ratio(family: &AnalyticFamily, x: &Point, m: usize) -> f64 {
    let start = x.norm().max(1e-9);
    let origin = Point::zeros(x.len());
    (0..=64)
        .map(|i| start * (2.0 / start).powf(i as f64 / 64.0))
        .chain(std::iter::once(1.0).filter(|&s| s >= start))
        .map(|s| family.ball_mass(&origin, s).unwrap_or(0.0) / (alpha(m) * s.powi(m as i32)))
        .fold(0.0, f64::max)
}

/// The averaged Sobolev setting on the bundle clipped to `U = U(0, 1)`,
/// `r(a) = 2`, `d = 2^{-m} α(n)/α(m)`, `p = β`. Compares the left side with
/// the median `g` (bounded) and with `f` itself (growing by at least 1.5 per
/// step).
pub fn median_contrast(
    name: &str,
    m: usize,
    n: usize,
    ks: &[usize],
    median: &MedianParams,
    tol: &Tolerances,
) -> Result<BlowupSeries> {
    check_dims(m, n, ks)?;
    let p = if m == 1 {
        f64::INFINITY
    } else {
        m as f64 / (m as f64 - 1.0)
    };
    let d = 0.5f64.powi(m as i32) * alpha(n) / alpha(m);
    let radius = 2.0;
    let in_domain = |x: &Point| x.norm() < 1.0;
    let mut f_norms = Vec::new();
    let mut g_norms = Vec::new();
    let mut budgets = Vec::new();
    let mut coverage = Vec::new();
    for &k in ks {
        let b = bundle_bump(m, n, k, true)?;
        let v = AnalyticFamily::Bundle(b.bundle.clone()).sample(b.radius / 8.0)?;
        let region = lower_density_region(&v, d, |_| radius, RegionMode::BallRatio, in_domain, tol)?;
        let in_u = v.atoms().iter().filter(|a| in_domain(&a.position)).count();
        coverage.push(region.len() as f64 / in_u.max(1) as f64);
        g_norms.push(median_norm(&v, &b.f, &region, radius, median, p, in_domain));
        // f and Df are resolved on a finer sample of the carrying plane;
        // membership in A is decided against the whole sampled bundle
        let fine = piece(&b.bundle, &b.center, b.radius)?.sample(b.radius / SAMPLES_PER_RADIUS)?;
        budgets.push(weak_gradient_integral(&fine, &b.f));
        let threshold = d * alpha(m) * radius.powi(m as i32);
        let atoms = v.atoms();
        f_norms.push(lp_norm(
            fine.atoms()
                .iter()
                .filter(|a| {
                    let mass: f64 = v
                        .ball_atoms(&a.position, radius)
                        .into_iter()
                        .filter(|&j| in_domain(&atoms[j].position))
                        .map(|j| atoms[j].weight)
                        .sum();
                    in_domain(&a.position) && tol.reaches(mass, threshold)
                })
                .map(|a| (b.f.value(&a.position), a.weight)),
            p,
        ));
    }
    let mut params = dims(m, n);
    params.insert("d".into(), num(d));
    params.insert("radius".into(), num(radius));
    params.insert("lambda".into(), num(median.lambda));
    params.insert("regionCoverage".into(), Value::from(coverage));
    let mut checks = Vec::new();
    let mut pass = true;
    if budgets.iter().any(|x| *x > 1.0 + BUDGET_SLACK) {
        pass = false;
        checks.push("derivative budget exceeds 1".into());
    }
    let g_max = g_norms.iter().cloned().fold(0.0, f64::max);
    if g_max > 1.2 * g_norms[0] {
        pass = false;
        checks.push("median side grew by more than 1.2".into());
    }
    let growth = growth(&f_norms);
    if growth.iter().flatten().any(|g| *g < 1.5) {
        pass = false;
        checks.push("f side grew by less than 1.5 in a step".into());
    }
    Ok(BlowupSeries {
        name: name.into(),
        kind: "medianContrast".into(),
        p,
        parameters: ks.iter().map(|&k| k as f64).collect(),
        norms: f_norms,
        budgets,
        growth,
        median_norms: Some(g_norms),
        params,
        checks,
        pass,
    })
}

fn median_norm<U>(
    v: &DiscreteVarifold,
    f: &ScalarTestFunction,
    region: &[usize],
    radius: f64,
    median: &MedianParams,
    p: f64,
    in_domain: U,
) -> f64
where
    U: Fn(&Point) -> bool + Sync,
{
    use rayon::prelude::*;
    let atoms = v.atoms();
    let g: Vec<(f64, f64)> = region
        .par_iter()
        .filter_map(|&i| {
            let mut values: Vec<(f64, f64)> = v
                .ball_atoms(&atoms[i].position, radius)
                .into_iter()
                .filter(|&j| in_domain(&atoms[j].position))
                .map(|j| (f.value(&atoms[j].position), atoms[j].weight))
                .collect();
            weighted_median(&mut values, median.lambda).map(|g| (g, atoms[i].weight))
        })
        .collect();
    lp_norm(g.into_iter(), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lebesgue_doubles_for_infinite_p() {
        let s = lebesgue_scaling("l", 2, f64::INFINITY, 5, 65, true).unwrap();
        assert!(s.pass, "{}", s.summary());
        for g in s.growth.iter().flatten() {
            assert!((g - 2.0).abs() < 0.1);
        }
        for b in &s.budgets {
            assert!((b - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn lebesgue_growth_matches_exponent() {
        // ε^{1 - n + n/p} with n = 3, p = 6: factor 2^{1.5}
        let s = lebesgue_scaling("l", 3, 6.0, 4, 33, true).unwrap();
        assert!(s.pass, "{}", s.summary());
        for g in s.growth.iter().flatten() {
            assert!((g / 2f64.powf(1.5) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn lebesgue_control_stays_bounded() {
        let s = lebesgue_scaling("l", 2, 1.0, 5, 65, false).unwrap();
        assert!(s.pass, "{}", s.summary());
        let critical = lebesgue_scaling("l", 2, 2.0, 5, 65, false).unwrap();
        for g in critical.growth.iter().flatten() {
            assert!((g - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn divergence_needs_supercritical_exponent() {
        assert!(matches!(
            lebesgue_scaling("l", 2, 2.0, 3, 9, true),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            plane_bundle("b", 1, 2, 1.5, &[2, 4], true),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn plane_bundle_diverges() {
        let s = plane_bundle("b", 1, 2, f64::INFINITY, &[2, 4, 8, 16], true).unwrap();
        assert!(s.pass, "{}", s.summary());
        for b in &s.budgets {
            assert!(*b <= 1.0 + 1e-3 && *b > 0.99);
        }
        for g in s.growth.iter().flatten() {
            assert!((g - 2.0).abs() < 0.25, "{g}");
        }
    }

    #[test]
    fn plane_bundle_control() {
        let s = plane_bundle("b", 1, 2, 1.0, &[2, 4, 8, 16], false).unwrap();
        assert!(s.pass, "{}", s.summary());
    }

    #[test]
    fn plane_bundle_two_dimensional() {
        let s = plane_bundle("b", 2, 3, 4.0, &[2, 4, 8], true).unwrap();
        assert!(s.pass, "{}", s.summary());
    }

    #[test]
    fn sobolev_against_isoperimetric() {
        let s = sobolev_vs_iso("s", 1, 2, &[2, 4, 8], &Tolerances::default()).unwrap();
        assert!(s.pass, "{}", s.summary());
        let kept = s.params["superlevelFraction"].as_array().unwrap();
        assert!(kept.iter().all(|x| x.as_f64().unwrap() == 1.0));
    }

    #[test]
    fn median_side_stays_bounded() {
        let s = median_contrast("c", 1, 2, &[2, 4, 8], &MedianParams::default(), &Tolerances::default()).unwrap();
        assert!(s.pass, "{}", s.summary());
        let coverage = s.params["regionCoverage"].as_array().unwrap();
        assert!(coverage.iter().all(|x| x.as_f64().unwrap() == 1.0));
        assert!(s.median_norms.unwrap().iter().all(|g| *g == 0.0));
    }
}
