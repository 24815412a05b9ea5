//! Scalar lemmas: the iteration and calculus lemmas, the weak-`L^p`
//! estimate and the superlevel-set integration bound, with randomized suites.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::report::{num, LemmaSuiteReport};
use crate::error::{Error, Result};

const GRID_REL: f64 = 1e-9;

/// `κ d^{-μ} (1/λ)^{μ²/(1-μ)}`, the bound on `a(d)^{1-μ}`.
pub fn iteration_bound(kappa: f64, lambda: f64, mu: f64, d: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!("need 0 < mu < 1, got {mu}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("need 0 < lambda < 1, got {lambda}")));
    }
    if !(kappa >= 0.0 && d > 0.0) {
        return Err(Error::Domain(format!("need kappa >= 0 and d > 0, got {kappa}, {d}")));
    }
    Ok(kappa * d.powf(-mu) * (1.0 / lambda).powf(mu * mu / (1.0 - mu)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationOutcome {
    pub hypothesis_holds: bool,
    /// Grid points where the conclusion fails; only counted when the
    /// hypothesis holds.
    pub violations: Vec<usize>,
    /// `λ = q^{-shift}` for the grid ratio `q`.
    pub shift: usize,
}

/// Checks the iteration lemma for a nonnegative function sampled on the
/// increasing geometric grid `d` and extended by `a(d_0)` below it.
///
/// `λ` must be a negative integer power of the grid ratio, so that `λ d`
/// stays on the grid or falls below it.
pub fn check_iteration(d: &[f64], a: &[f64], kappa: f64, lambda: f64, mu: f64) -> Result<IterationOutcome> {
    if d.len() < 2 || d.len() != a.len() {
        return Err(Error::Argument(
            "need at least two grid points and one value per point".into(),
        ));
    }
    if a.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Domain("values must be finite and nonnegative".into()));
    }
    if !(d[0] > 0.0) {
        return Err(Error::Argument("grid must be positive".into()));
    }
    let q = d[1] / d[0];
    if !(q > 1.0) || d.windows(2).any(|w| ((w[1] / w[0]) / q - 1.0).abs() > GRID_REL) {
        return Err(Error::Argument("grid must be increasing and geometric".into()));
    }
    iteration_bound(kappa, lambda, mu, d[0])?;
    let k = (-lambda.ln() / q.ln()).round();
    if k < 1.0 || (q.powf(-k) / lambda - 1.0).abs() > GRID_REL {
        return Err(Error::Argument(format!(
            "lambda = {lambda} is not a negative power of the grid ratio {q}"
        )));
    }
    let shift = k as usize;
    let below = |i: usize| if i >= shift { a[i - shift] } else { a[0] };
    let mut holds = a[0].powf(1.0 - mu) <= kappa * d[0].powf(-mu) || a[0] == 0.0;
    for i in 0..d.len() {
        holds &= a[i] <= kappa * d[i].powf(-mu) * below(i).powf(mu);
    }
    let mut violations = Vec::new();
    if holds {
        for i in 0..d.len() {
            let bound = iteration_bound(kappa, lambda, mu, d[i])?;
            if a[i].powf(1.0 - mu) > bound * (1.0 + 1e-12) {
                violations.push(i);
            }
        }
    }
    Ok(IterationOutcome {
        hypothesis_holds: holds,
        violations,
        shift,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalculusOutcome {
    pub t: f64,
    pub r: f64,
    pub refinements: usize,
}

const CALCULUS: &str = "the calculus lemma";

/// Finds `t ∈ [s, r]` with `f(5t) <= 5^m r g(t)` for nondecreasing `f`,
/// nonnegative `g`, after checking the hypotheses on a grid of
/// `grid_points` points.
///
/// `r = sup {t : t^{-m} f(t) >= 1/3}` is located on `[s, t_max]`.
pub fn calculus_witness<F, G>(f: F, g: G, s: f64, m: usize, t_max: f64, grid_points: usize) -> Result<CalculusOutcome>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(s > 0.0 && t_max > s && grid_points >= 2 && m >= 1) {
        return Err(Error::Argument(
            "need 0 < s < tMax, m >= 1 and at least two grid points".into(),
        ));
    }
    let mf = m as i32;
    let h = |t: f64| f(t) / t.powi(mf);
    if !(h(s) >= 0.75) {
        return Err(Error::precondition(CALCULUS, format!("s^-m f(s) = {} < 3/4", h(s))));
    }
    let r = locate_r(&h, s, t_max)?;
    check_integral_hypothesis(&h, &g, s, r, m, 8 * grid_points)?;
    let mut points = grid_points;
    for refinements in 0..=2 {
        for i in 0..points {
            let t = s + (r - s) * i as f64 / (points - 1) as f64;
            if f(5.0 * t) <= 5f64.powi(mf) * r * g(t) {
                return Ok(CalculusOutcome { t, r, refinements });
            }
        }
        points = 2 * points - 1;
    }
    Err(Error::resolution(
        format!("no witness t on a {points}-point grid of [{s}, {r}]"),
        "increase gridPoints",
    ))
}

fn locate_r<H: Fn(f64) -> f64>(h: &H, s: f64, t_max: f64) -> Result<f64> {
    const STEPS: usize = 4096;
    if h(t_max) >= 1.0 / 3.0 {
        return Err(Error::precondition(
            CALCULUS,
            format!("t^-m f(t) >= 1/3 up to tMax = {t_max}; r is not finite on the search range"),
        ));
    }
    let q = (t_max / s).powf(1.0 / STEPS as f64);
    let mut last = s;
    let mut t = s;
    for _ in 0..STEPS {
        t *= q;
        if h(t) >= 1.0 / 3.0 {
            last = t;
        }
    }
    let (mut lo, mut hi) = (last, last * q);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if h(mid) >= 1.0 / 3.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `t^{-m} f(t) <= r^{-m} f(r) + ∫_t^r u^{-m} g(u) du` on a uniform grid,
/// with the integral by the trapezoid rule.
fn check_integral_hypothesis<H, G>(h: &H, g: &G, s: f64, r: f64, m: usize, points: usize) -> Result<()>
where
    H: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let step = (r - s) / (points - 1) as f64;
    let ts: Vec<f64> = (0..points)
        .map(|i| if i + 1 == points { r } else { s + step * i as f64 })
        .collect();
    let integrand: Vec<f64> = ts.iter().map(|&u| g(u) / u.powi(m as i32)).collect();
    if integrand.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Domain("g must be finite and nonnegative on [s, r]".into()));
    }
    let hr = h(r);
    let mut tail = 0.0;
    for i in (0..points).rev() {
        if i + 1 < points {
            tail += 0.5 * (integrand[i] + integrand[i + 1]) * (ts[i + 1] - ts[i]);
        }
        let lhs = h(ts[i]);
        let rhs = hr + tail;
        if lhs > rhs * (1.0 + 1e-6) + 1e-12 {
            return Err(Error::precondition(
                CALCULUS,
                format!("integral hypothesis fails at t = {}: {lhs} > {rhs}", ts[i]),
            ));
        }
    }
    Ok(())
}

/// `(1 - q/p)^{-1/q} φ{f > 0}^{1/q - 1/p} κ`.
pub fn weak_lp_bound(support_mass: f64, kappa: f64, p: f64, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q < p) {
        return Err(Error::Domain(format!("need 1 <= q < p, got q = {q}, p = {p}")));
    }
    let ratio = if p.is_infinite() { 0.0 } else { q / p };
    let exponent = 1.0 / q - if p.is_infinite() { 0.0 } else { 1.0 / p };
    Ok((1.0 - ratio).powf(-1.0 / q) * support_mass.powf(exponent) * kappa)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakLpOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub kappa: f64,
    pub support_mass: f64,
}

/// The weak-`L^p` estimate for `f` given by atom values and weights.
///
/// `κ = sup_d d φ{f >= d}^{1/p}` is attained at a value of `f`.
pub fn weak_lp_check(weights: &[f64], values: &[f64], p: f64, q: f64) -> Result<WeakLpOutcome> {
    validate_atomic(weights, values)?;
    let levels = level_masses(weights, values);
    let kappa = levels
        .iter()
        .map(|&(u, mass)| u * if p.is_infinite() { 1.0 } else { mass.powf(1.0 / p) })
        .fold(0.0, f64::max);
    let support_mass = levels.first().map_or(0.0, |l| l.1);
    let lhs = weights
        .iter()
        .zip(values)
        .map(|(w, f)| w * f.powf(q))
        .sum::<f64>()
        .powf(1.0 / q);
    Ok(WeakLpOutcome {
        lhs,
        rhs: weak_lp_bound(support_mass, kappa, p, q)?,
        kappa,
        support_mass,
    })
}

/// The equality case `f(x) = x^{-1/2}` on `(0, 1]` with `p = 2`, `q = 1`:
/// returns `(∫ f, bound)`, both equal to 2.
pub fn weak_lp_power_equality() -> Result<(f64, f64)> {
    let lhs = quadrature::double_exponential::integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12).integral;
    // φ{f >= d} = min(1, d^-2)
    let kappa = (0..=600)
        .map(|i| 10f64.powf(-3.0 + i as f64 / 100.0))
        .map(|d| d * (1f64.min(d.powi(-2))).sqrt())
        .fold(0.0, f64::max);
    Ok((lhs, weak_lp_bound(1.0, kappa, 2.0, 1.0)?))
}

/// `φ_(p)(f)` and `∫_0^∞ φ{f > y}^{1/p} dy` for nonnegative atomic `f`,
/// `1 <= p <= ∞`.
pub fn superlevel_integral(weights: &[f64], values: &[f64], p: f64) -> Result<(f64, f64)> {
    validate_atomic(weights, values)?;
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("need p >= 1, got {p}")));
    }
    let levels = level_masses(weights, values);
    let power = |mass: f64| {
        if p.is_infinite() {
            if mass > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            mass.powf(1.0 / p)
        }
    };
    let mut rhs = 0.0;
    let mut previous = 0.0;
    for &(u, mass) in &levels {
        rhs += (u - previous) * power(mass);
        previous = u;
    }
    let lhs = if p.is_infinite() {
        weights
            .iter()
            .zip(values)
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, f)| *f)
            .fold(0.0, f64::max)
    } else {
        weights
            .iter()
            .zip(values)
            .map(|(w, f)| w * f.powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    };
    Ok((lhs, rhs))
}

fn validate_atomic(weights: &[f64], values: &[f64]) -> Result<()> {
    if weights.len() != values.len() {
        return Err(Error::Argument("one weight per value required".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Domain("weights must be finite and nonnegative".into()));
    }
    if values.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::Domain("values must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Increasing distinct positive values `u` with `φ{f >= u}`.
fn level_masses(weights: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .zip(weights)
        .filter(|(f, w)| **f > 0.0 && **w > 0.0)
        .map(|(f, w)| (*f, *w))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut levels: Vec<(f64, f64)> = Vec::new();
    let mut cumulative = 0.0;
    for (f, w) in pairs {
        cumulative += w;
        match levels.last_mut() {
            Some(last) if last.0 == f => last.1 = cumulative,
            _ => levels.push((f, cumulative)),
        }
    }
    levels.reverse();
    levels
}

fn suite(
    name: &str,
    instances: usize,
    rejected: usize,
    violations: usize,
    params: BTreeMap<String, Value>,
) -> LemmaSuiteReport {
    LemmaSuiteReport {
        name: name.into(),
        instances,
        rejected,
        violations,
        params,
        pass: violations == 0 && instances > 0,
    }
}

/// Random nonincreasing step functions on a 64-point geometric grid, kept
/// when they satisfy the hypothesis.
pub fn iteration_suite(seed: u64, count: usize) -> Result<LemmaSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut accepted, mut rejected, mut violations) = (0, 0, 0);
    let mut attempts = 0;
    while accepted < count && attempts < 50 * count {
        attempts += 1;
        let q: f64 = rng.gen_range(1.05..1.5);
        let d0: f64 = rng.gen_range(0.01..1.0);
        let d: Vec<f64> = (0..64).map(|i| d0 * q.powi(i)).collect();
        let mut a = Vec::with_capacity(64);
        let mut level: f64 = rng.gen_range(0.1..10.0);
        for _ in 0..64 {
            if rng.gen_bool(0.3) {
                level *= rng.gen_range(0.2..1.0);
            }
            a.push(if rng.gen_bool(0.02) { 0.0 } else { level });
        }
        // keep the function nonincreasing after the random zeros
        for i in 1..64 {
            a[i] = a[i].min(a[i - 1]);
        }
        let mu: f64 = rng.gen_range(0.1..0.9);
        let shift = rng.gen_range(1..=4);
        let lambda = q.powi(-shift);
        let scale = a
            .iter()
            .zip(&d)
            .map(|(x, t)| x.powf(1.0 - mu) * t.powf(mu))
            .fold(0.0, f64::max);
        let kappa = scale * rng.gen_range(0.5..2.0);
        let outcome = check_iteration(&d, &a, kappa, lambda, mu)?;
        if outcome.hypothesis_holds {
            accepted += 1;
            violations += outcome.violations.len();
        } else {
            rejected += 1;
        }
    }
    let mut params = BTreeMap::new();
    params.insert("seed".into(), Value::from(seed));
    params.insert("gridPoints".into(), Value::from(64));
    Ok(suite("iteration", accepted, rejected, violations, params))
}

/// Power-law `f` with random upward jumps and `g` built from the decay of
/// both parts of `t^{-m} f(t)` plus a random nonnegative excess, until
/// `count` instances satisfy the hypotheses.
pub fn calculus_suite(seed: u64, count: usize) -> Result<LemmaSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut accepted, mut rejected, mut violations) = (0, 0, 0);
    let mut max_refinements = 0;
    let mut attempts = 0;
    while accepted < count && attempts < 50 * count {
        attempts += 1;
        let m = rng.gen_range(1..=4usize);
        let s: f64 = rng.gen_range(0.1..2.0);
        let c: f64 = rng.gen_range(0.75..2.0);
        let decay: f64 = rng.gen_range(0.2..(m as f64).min(3.0));
        let jumps: Vec<(f64, f64)> = (0..rng.gen_range(0..4))
            .map(|_| {
                (
                    s * rng.gen_range(1.0..4.0),
                    c * s.powi(m as i32) * rng.gen_range(0.0..0.2),
                )
            })
            .collect();
        let excess: f64 = rng.gen_range(0.0..0.5);
        let centre: f64 = s * rng.gen_range(1.0..3.0);
        let mi = m as i32;
        let jumped = |t: f64| jumps.iter().filter(|j| t >= j.0).map(|j| j.1).sum::<f64>();
        let f = |t: f64| c * s.powf(decay) * t.powf(m as f64 - decay) + jumped(t);
        let g = |u: f64| {
            c * decay * s.powf(decay) * u.powf(m as f64 - decay - 1.0)
                + m as f64 * jumped(u) / u
                + excess * u.powi(mi) * (-(u - centre).powi(2)).exp()
        };
        let t_max = s * 1e4;
        match calculus_witness(f, g, s, m, t_max, 64) {
            Ok(outcome) => {
                accepted += 1;
                max_refinements = max_refinements.max(outcome.refinements);
                let ok = outcome.t >= s
                    && outcome.t <= outcome.r
                    && f(5.0 * outcome.t) <= 5f64.powi(mi) * outcome.r * g(outcome.t);
                if !ok {
                    violations += 1;
                }
            }
            Err(Error::Precondition { .. }) => rejected += 1,
            Err(Error::Resolution { .. }) => {
                accepted += 1;
                violations += 1;
            }
            Err(e) => return Err(e),
        }
    }
    let mut params = BTreeMap::new();
    params.insert("seed".into(), Value::from(seed));
    params.insert("maxRefinements".into(), Value::from(max_refinements));
    Ok(suite("calculus", accepted, rejected, violations, params))
}

fn random_atomic(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let len = rng.gen_range(1..40);
    let weights = (0..len).map(|_| rng.gen_range(0.0..3.0)).collect();
    let values = (0..len)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.0..5.0f64).powi(2)
            }
        })
        .collect();
    (weights, values)
}

pub fn weak_lp_suite(seed: u64, count: usize) -> Result<LemmaSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..count {
        let (w, f) = random_atomic(&mut rng);
        let p = if rng.gen_bool(0.1) {
            f64::INFINITY
        } else {
            rng.gen_range(1.2..6.0)
        };
        let q = if p.is_infinite() {
            rng.gen_range(1.0..6.0)
        } else {
            rng.gen_range(1.0..p)
        };
        let o = weak_lp_check(&w, &f, p, q)?;
        if o.lhs > o.rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    let (lhs, rhs) = weak_lp_power_equality()?;
    if (lhs - 2.0).abs() > 1e-6 || (rhs - 2.0).abs() > 1e-6 {
        violations += 1;
    }
    let mut params = BTreeMap::new();
    params.insert("seed".into(), Value::from(seed));
    params.insert("equalityLhs".into(), num(lhs));
    params.insert("equalityRhs".into(), num(rhs));
    Ok(suite("weak-lp", count, 0, violations, params))
}

pub fn superlevel_suite(seed: u64, count: usize) -> Result<LemmaSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..count {
        let (w, f) = random_atomic(&mut rng);
        let p = match rng.gen_range(0..10) {
            0 => 1.0,
            1 => f64::INFINITY,
            _ => rng.gen_range(1.0..8.0),
        };
        let (lhs, rhs) = superlevel_integral(&w, &f, p)?;
        let equality = p == 1.0 || p.is_infinite();
        let bad = if equality {
            (lhs - rhs).abs() > 1e-12 * lhs.max(rhs).max(1.0)
        } else {
            lhs > rhs * (1.0 + 1e-12)
        };
        if bad {
            violations += 1;
        }
    }
    let mut params = BTreeMap::new();
    params.insert("seed".into(), Value::from(seed));
    Ok(suite("superlevel", count, 0, violations, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(d0: f64, q: f64, len: usize) -> Vec<f64> {
        (0..len).map(|i| d0 * q.powi(i as i32)).collect()
    }

    #[test]
    fn iteration_closed_form() {
        // 2 * 4^{-1/2} * 4^{1/2}
        let (kappa, lambda, mu) = (2.0, 0.25, 0.5);
        let b = iteration_bound(kappa, lambda, mu, 4.0).unwrap();
        assert_relative_eq!(b, 2.0 * 0.5 * 2.0, max_relative = 1e-15);
    }

    #[test]
    fn iteration_zero_function() {
        let d = grid(0.5, 2.0, 10);
        let o = check_iteration(&d, &[0.0; 10], 1.0, 0.5, 0.5).unwrap();
        assert!(o.hypothesis_holds);
        assert!(o.violations.is_empty());
        assert_eq!(o.shift, 1);
    }

    #[test]
    fn iteration_rejects_off_grid_lambda() {
        let d = grid(0.5, 2.0, 10);
        assert!(matches!(
            check_iteration(&d, &[1.0; 10], 1.0, 0.3, 0.5),
            Err(Error::Argument(_))
        ));
        let mut bad = d.clone();
        bad[3] *= 1.01;
        assert!(matches!(
            check_iteration(&bad, &[1.0; 10], 1.0, 0.5, 0.5),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn iteration_detects_failed_hypothesis() {
        let d = grid(1.0, 2.0, 8);
        let a: Vec<f64> = d.iter().map(|_| 100.0).collect();
        let o = check_iteration(&d, &a, 0.01, 0.5, 0.5).unwrap();
        assert!(!o.hypothesis_holds);
    }

    #[test]
    fn iteration_random_suite() {
        let r = iteration_suite(7, 1000).unwrap();
        assert_eq!(r.instances, 1000);
        assert_eq!(r.violations, 0);
        assert!(r.rejected > 0);
    }

    #[test]
    fn calculus_power_law() {
        // f(t) = t^m (s/t)^{1/2} c, r = s (3c)^2
        let (s, m, c) = (1.0f64, 2usize, 1.0f64);
        let f = |t: f64| c * s.powf(0.5) * t.powf(1.5);
        let g = |u: f64| 0.5 * c * s.powf(0.5) * u.powf(0.5);
        let o = calculus_witness(f, g, s, m, 1e4, 64).unwrap();
        assert_relative_eq!(o.r, 9.0, max_relative = 1e-9);
        assert!(f(5.0 * o.t) <= 25.0 * o.r * g(o.t));
        assert!(o.t >= s && o.t <= o.r);
    }

    #[test]
    fn calculus_rejects_zero_g() {
        let f = |t: f64| t.powf(1.5);
        let e = calculus_witness(f, |_| 0.0, 1.0, 2, 1e4, 64).unwrap_err();
        assert!(matches!(e, Error::Precondition { .. }));
    }

    #[test]
    fn calculus_rejects_small_start() {
        let e = calculus_witness(|t: f64| 0.5 * t * t, |_| 1.0, 1.0, 2, 1e4, 64).unwrap_err();
        assert!(matches!(e, Error::Precondition { .. }));
        let e = calculus_witness(|t: f64| t * t, |_| 1.0, 1.0, 2, 1e4, 64).unwrap_err();
        assert!(matches!(e, Error::Precondition { .. }));
    }

    #[test]
    fn calculus_random_suite() {
        let r = calculus_suite(11, 1000).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.instances > 900, "{r:?}");
        assert!(r.params["maxRefinements"].as_u64().unwrap() <= 2);
    }

    #[test]
    fn weak_lp_domain() {
        assert!(matches!(weak_lp_check(&[1.0], &[1.0], 2.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(weak_lp_check(&[1.0], &[1.0], 2.0, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn weak_lp_kappa_brute_force() {
        let w = [0.5, 1.0, 2.0, 0.25];
        let f = [3.0, 1.0, 0.5, 3.0];
        let o = weak_lp_check(&w, &f, 2.0, 1.0).unwrap();
        let mut best: f64 = 0.0;
        for i in 0..20000 {
            let d = i as f64 * 0.0002;
            let mass: f64 = w.iter().zip(&f).filter(|(_, v)| **v >= d).map(|(w, _)| *w).sum();
            best = best.max(d * mass.sqrt());
        }
        assert_relative_eq!(o.kappa, best, max_relative = 1e-3);
        assert!(o.kappa >= best);
        assert_relative_eq!(o.support_mass, 3.75);
    }

    #[test]
    fn weak_lp_equality_case() {
        let (lhs, rhs) = weak_lp_power_equality().unwrap();
        assert!((lhs - 2.0).abs() < 1e-6);
        assert!((rhs - 2.0).abs() < 1e-6);
    }

    #[test]
    fn weak_lp_random_suite() {
        let r = weak_lp_suite(3, 1000).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn superlevel_equalities() {
        let w = [0.5, 1.0, 2.0];
        let f = [3.0, 1.0, 0.0];
        let (l1, r1) = superlevel_integral(&w, &f, 1.0).unwrap();
        assert_relative_eq!(l1, 2.5, max_relative = 1e-15);
        assert_relative_eq!(r1, 2.5, max_relative = 1e-15);
        let (li, ri) = superlevel_integral(&w, &f, f64::INFINITY).unwrap();
        assert_eq!((li, ri), (3.0, 3.0));
        assert!(superlevel_integral(&w, &[1.0, -1.0, 0.0], 2.0).is_err());
    }

    #[test]
    fn superlevel_hat_function() {
        let n = 10_000;
        let h = 2.0 / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| (1.0 - x.abs()).max(0.0)).collect();
        let w = vec![h; n];
        let (lhs, rhs) = superlevel_integral(&w, &f, 2.0).unwrap();
        assert!((lhs - (2.0f64 / 3.0).sqrt()).abs() < 1e-4);
        assert!((rhs - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-4);
        assert!(lhs <= rhs);
    }

    #[test]
    fn superlevel_random_suite() {
        let r = superlevel_suite(5, 1000).unwrap();
        assert_eq!(r.violations, 0);
    }
}
