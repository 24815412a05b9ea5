//! The maximal-type function, density ratios, weighted medians and the
//! lower-density regions of the Sobolev inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{alpha, Point, Tolerances};
use crate::variation::ScalarTestFunction;
use crate::varifold::{AnalyticFamily, DiscreteVarifold};

/// Which ball centers are tried in the supremum defining `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    rename_all = "kebab-case",
    rename_all_fields = "camelCase",
    tag = "kind",
    deny_unknown_fields
)]
pub enum CenterStrategy {
    Atoms,
    AtomsAndQuery,
    /// Atoms, query points, the weight centroid, and a grid with
    /// `points_per_axis` (odd, so the midpoint is included) points per axis
    /// over the bounding box.
    Grid {
        points_per_axis: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaximalParams {
    pub s_min: f64,
    pub s_max: f64,
    pub centers: CenterStrategy,
    pub radii_per_center: usize,
}

impl MaximalParams {
    pub fn new(s_min: f64, s_max: f64, centers: CenterStrategy, radii_per_center: usize) -> Result<Self> {
        if !(s_min > 0.0 && s_min < s_max && s_max.is_finite()) {
            return Err(Error::Argument(format!(
                "need 0 < sMin < sMax < inf, got sMin = {s_min}, sMax = {s_max}"
            )));
        }
        if radii_per_center < 8 {
            return Err(Error::Argument(format!(
                "radiiPerCenter must be at least 8, got {radii_per_center}"
            )));
        }
        if let CenterStrategy::Grid { points_per_axis } = centers {
            if points_per_axis % 2 == 0 {
                return Err(Error::Argument(
                    "grid centers need an odd number of points per axis".into(),
                ));
            }
        }
        Ok(MaximalParams {
            s_min,
            s_max,
            centers,
            radii_per_center,
        })
    }

    /// `sMin = 5h`, `sMax` the bounding-box diameter, atom and query centers.
    pub fn for_resolution(v: &DiscreteVarifold, h: f64) -> Result<Self> {
        let s_min = 5.0 * h;
        let diameter = v
            .index()
            .bounding_box()
            .map(|(lo, hi)| lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt())
            .unwrap_or(0.0);
        Self::new(s_min, diameter.max(2.0 * s_min), CenterStrategy::AtomsAndQuery, 16)
    }

    fn geometric_radii(&self) -> Vec<f64> {
        let k = self.radii_per_center;
        let q = (self.s_max / self.s_min).powf(1.0 / (k - 1) as f64);
        (0..k)
            .map(|i| {
                if i + 1 == k {
                    self.s_max
                } else {
                    self.s_min * q.powi(i as i32)
                }
            })
            .collect()
    }
}

fn grid_centers(v: &DiscreteVarifold, per_axis: usize) -> Vec<Point> {
    let Some((lo, hi)) = v.index().bounding_box() else {
        return Vec::new();
    };
    let n = v.n();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        out.push(Point::from_fn(n, |k, _| {
            if per_axis == 1 {
                0.5 * (lo[k] + hi[k])
            } else {
                lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (per_axis - 1) as f64
            }
        }));
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
            return out;
        }
    }
}

/// Ratios `‖V‖ B(a, s) / (α(m) s^m)` on the candidate radii of one center.
struct CenterScan {
    /// atom index and distance, ascending by distance
    atoms: Vec<(usize, f64)>,
    radii: Vec<f64>,
    /// `suffix[k] = max_{j >= k} ratio(radii[j])`
    suffix: Vec<f64>,
}

fn scan_center(v: &DiscreteVarifold, a: &Point, p: &MaximalParams, extra: Option<f64>) -> CenterScan {
    let mut atoms = v.index().ball_query_with_distance(a.as_slice(), p.s_max);
    atoms.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    let mut radii: Vec<f64> = Vec::with_capacity(atoms.len() + p.radii_per_center + 2);
    radii.push(p.s_min);
    radii.extend(atoms.iter().map(|&(_, d)| d).filter(|&d| d > p.s_min));
    radii.extend(p.geometric_radii());
    if let Some(s) = extra {
        if s > p.s_min && s <= p.s_max {
            radii.push(s);
        }
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();

    let norm = alpha(v.m());
    let m = v.m() as i32;
    let mut ratios = Vec::with_capacity(radii.len());
    let mut mass = 0.0;
    let mut next = 0;
    for &s in &radii {
        while next < atoms.len() && atoms[next].1 <= s {
            mass += v.atoms()[atoms[next].0].weight;
            next += 1;
        }
        ratios.push(mass / (norm * s.powi(m)));
    }
    let mut suffix = ratios;
    for k in (0..suffix.len().saturating_sub(1)).rev() {
        suffix[k] = suffix[k].max(suffix[k + 1]);
    }
    CenterScan { atoms, radii, suffix }
}

impl CenterScan {
    /// Best ratio over candidate balls of this center containing a point at
    /// distance `d`.
    fn best_for(&self, d: f64, s_min: f64) -> f64 {
        let need = d.max(s_min);
        let k = self.radii.partition_point(|&s| s < need);
        self.suffix.get(k).copied().unwrap_or(0.0)
    }
}

fn centers_for(v: &DiscreteVarifold, p: &MaximalParams, queries: &[Point]) -> Vec<Point> {
    let mut centers: Vec<Point> = v.atoms().iter().map(|a| a.position.clone()).collect();
    if !matches!(p.centers, CenterStrategy::Atoms) {
        centers.extend(queries.iter().cloned());
    }
    if let CenterStrategy::Grid { points_per_axis } = p.centers {
        centers.extend(grid_centers(v, points_per_axis));
        let total = v.total_mass();
        if total > 0.0 {
            let mut c = Point::zeros(v.n());
            for a in v.atoms() {
                c += &a.position * (a.weight / total);
            }
            centers.push(c);
        }
    }
    centers
}

/// `M(x)` restricted to candidate balls with `sMin <= s <= sMax`: a lower
/// bound for the truncated supremum.
pub fn maximal_function(v: &DiscreteVarifold, x: &Point, p: &MaximalParams) -> f64 {
    let centers = centers_for(v, p, std::slice::from_ref(x));
    centers
        .par_iter()
        .map(|a| {
            let d = (x - a).norm();
            if d > p.s_max {
                return 0.0;
            }
            scan_center(v, a, p, Some(d)).best_for(d, p.s_min)
        })
        .reduce(|| 0.0, f64::max)
}

/// `M` at every atom, in atom order.
pub fn maximal_at_atoms(v: &DiscreteVarifold, p: &MaximalParams) -> Vec<f64> {
    let count = v.len();
    let centers = centers_for(v, p, &[]);
    centers
        .par_iter()
        .fold(
            || vec![0.0; count],
            |mut acc, a| {
                let scan = scan_center(v, a, p, None);
                for &(i, d) in &scan.atoms {
                    let best = scan.best_for(d, p.s_min);
                    if best > acc[i] {
                        acc[i] = best;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0.0; count],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    if y > *x {
                        *x = y;
                    }
                }
                a
            },
        )
}

/// `‖V‖ {x : M(x) >= d}` over the atoms.
pub fn superlevel_mass(v: &DiscreteVarifold, d: f64, p: &MaximalParams, tol: &Tolerances) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("superlevel threshold must be positive, got {d}")));
    }
    let m = maximal_at_atoms(v, p);
    Ok(superlevel_mass_from(v, &m, d, tol))
}

pub(crate) fn superlevel_mass_from(v: &DiscreteVarifold, m: &[f64], d: f64, tol: &Tolerances) -> f64 {
    v.atoms()
        .iter()
        .zip(m)
        .filter(|(_, &mx)| tol.reaches(mx, d))
        .map(|(a, _)| a.weight)
        .sum()
}

/// A density ratio read off a discrete varifold at finitely many radii.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Ratio at the smallest radius.
    pub value: f64,
    /// The smallest radius used: the estimate is meaningful only at this scale.
    pub resolution: f64,
}

/// `‖V‖ B(x, r) / (α(m) r^m)` along `r_j = s_min 2^(levels - 1 - j)`.
pub fn density_estimate(v: &DiscreteVarifold, x: &Point, s_min: f64, levels: usize) -> Result<DensityEstimate> {
    if !(s_min > 0.0) || levels == 0 {
        return Err(Error::Argument(
            "density estimate needs sMin > 0 and at least one radius".into(),
        ));
    }
    let radii: Vec<f64> = (0..levels).rev().map(|j| s_min * 2f64.powi(j as i32)).collect();
    let ratios: Vec<f64> = radii
        .iter()
        .map(|&r| v.weight_ball_mass(x, r) / (alpha(v.m()) * r.powi(v.m() as i32)))
        .collect();
    Ok(DensityEstimate {
        value: *ratios.last().expect("nonempty"),
        radii,
        ratios,
        resolution: s_min,
    })
}

/// Exact `Θ^m(‖V‖, x)` of an analytic family.
pub fn density(family: &AnalyticFamily, x: &Point) -> f64 {
    family.density_at(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MedianParams {
    pub lambda: f64,
}

impl MedianParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Argument(format!(
                "median lambda must lie in (0, 1), got {lambda}"
            )));
        }
        Ok(MedianParams { lambda })
    }
}

impl Default for MedianParams {
    fn default() -> Self {
        MedianParams { lambda: 0.5 }
    }
}

/// `g(a) = sup { y : ‖V‖(B(a, r) \ {f > y}) <= λ ‖V‖ B(a, r) }` over the
/// atoms accepted by `in_domain` (the open set `U`). `None` marks an empty
/// ball.
pub fn median_g<U>(
    v: &DiscreteVarifold,
    f: &ScalarTestFunction,
    a: &Point,
    r: f64,
    p: &MedianParams,
    in_domain: U,
) -> Option<f64>
where
    U: Fn(&Point) -> bool,
{
    let atoms = v.atoms();
    let mut values: Vec<(f64, f64)> = v
        .ball_atoms(a, r)
        .into_iter()
        .filter(|&i| in_domain(&atoms[i].position))
        .map(|i| (f.value(&atoms[i].position), atoms[i].weight))
        .collect();
    weighted_median(&mut values, p.lambda)
}

/// The same supremum for explicit `(value, weight)` pairs.
pub fn weighted_median(values: &mut [(f64, f64)], lambda: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = values.iter().map(|v| v.1).sum();
    let budget = lambda * total;
    // mass{f <= y} is a right-continuous step function; the supremum is the
    // first value at which it exceeds the budget
    let mut cumulative = 0.0;
    let mut i = 0;
    while i < values.len() {
        let y = values[i].0;
        let mut j = i;
        while j < values.len() && values[j].0 == y {
            cumulative += values[j].1;
            j += 1;
        }
        if cumulative > budget {
            return Some(y);
        }
        i = j;
    }
    Some(values[values.len() - 1].0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionMode {
    BallRatio,
    Density,
}

/// Atom indices of `{a : ∞ > ‖V‖(U ∩ B(a, r(a))) >= d α(m) r(a)^m}`
/// (ball-ratio mode) or `{a : Θ^m(‖V‖, a) >= d}` (density mode, from the
/// sampled family's exact density).
pub fn lower_density_region<R, U>(
    v: &DiscreteVarifold,
    d: f64,
    radius: R,
    mode: RegionMode,
    in_domain: U,
    tol: &Tolerances,
) -> Result<Vec<usize>>
where
    R: Fn(&Point) -> f64 + Sync,
    U: Fn(&Point) -> bool + Sync,
{
    if !(d > 0.0) {
        return Err(Error::Domain(format!("density threshold must be positive, got {d}")));
    }
    let atoms = v.atoms();
    match mode {
        RegionMode::BallRatio => {
            let norm = alpha(v.m());
            let m = v.m() as i32;
            Ok((0..atoms.len())
                .into_par_iter()
                .filter(|&i| {
                    let a = &atoms[i].position;
                    if !in_domain(a) {
                        return false;
                    }
                    let r = radius(a);
                    let mass: f64 = v
                        .ball_atoms(a, r)
                        .into_iter()
                        .filter(|&j| in_domain(&atoms[j].position))
                        .map(|j| atoms[j].weight)
                        .sum();
                    mass.is_finite() && tol.reaches(mass, d * norm * r.powi(m))
                })
                .collect())
        }
        RegionMode::Density => {
            let family = v.family().ok_or_else(|| {
                Error::Unsupported("density mode needs a sampled analytic family with exact densities".into())
            })?;
            Ok((0..atoms.len())
                .filter(|&i| in_domain(&atoms[i].position) && tol.reaches(family.density_at(&atoms[i].position), d))
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Subspace;
    use crate::varifold::{Atom, FlatDisc, PlaneBundle, ProductSlab, SphereShell};
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    fn circle() -> AnalyticFamily {
        AnalyticFamily::Sphere(SphereShell::hypersphere(p(&[0.0, 0.0]), 1.0, 1.0).unwrap())
    }

    fn disc() -> AnalyticFamily {
        AnalyticFamily::Disc(
            FlatDisc::new(p(&[0.0, 0.0, 0.0]), Subspace::coordinate(3, &[0, 1]).unwrap(), 1.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn params_validation() {
        assert!(MaximalParams::new(0.1, 1.0, CenterStrategy::Atoms, 8).is_ok());
        assert!(MaximalParams::new(0.0, 1.0, CenterStrategy::Atoms, 8).is_err());
        assert!(MaximalParams::new(1.0, 1.0, CenterStrategy::Atoms, 8).is_err());
        assert!(MaximalParams::new(0.1, 1.0, CenterStrategy::Atoms, 7).is_err());
        assert!(MaximalParams::new(0.1, 1.0, CenterStrategy::Grid { points_per_axis: 4 }, 8).is_err());
        assert!(MedianParams::new(0.0).is_err());
        assert!(MedianParams::new(1.0).is_err());
    }

    #[test]
    fn single_atom_ratio() {
        let s_min = 0.1;
        let x = p(&[0.3, 0.4]);
        let v = DiscreteVarifold::new(
            1,
            2,
            vec![Atom::new(
                x.clone(),
                Subspace::coordinate(2, &[0]).unwrap(),
                2.0 * s_min,
            )],
        )
        .unwrap();
        let params = MaximalParams::new(s_min, 1.0, CenterStrategy::AtomsAndQuery, 8).unwrap();
        assert!(maximal_function(&v, &x, &params) >= 1.0);
        assert_eq!(maximal_at_atoms(&v, &params), vec![1.0]);
    }

    /// Dense brute force over centers on a grid and radii on a fine geometric
    /// sequence.
    fn brute_force_sup(v: &DiscreteVarifold, s_min: f64, s_max: f64) -> f64 {
        let mut best: f64 = 0.0;
        for i in -10..=10 {
            for j in -10..=10 {
                let a = p(&[0.1 * i as f64, 0.1 * j as f64]);
                for k in 0..200 {
                    let s = s_min * (s_max / s_min).powf(k as f64 / 199.0);
                    best = best.max(v.weight_ball_mass(&a, s) / (alpha(v.m()) * s.powi(v.m() as i32)));
                }
            }
        }
        best
    }

    #[test]
    fn circle_maximal_sup_is_pi() {
        let v = circle().sample(1e-3).unwrap();
        let params = MaximalParams::new(0.01, 3.0, CenterStrategy::Grid { points_per_axis: 5 }, 16).unwrap();
        let m = maximal_at_atoms(&v, &params);
        let top = m.iter().cloned().fold(0.0, f64::max);
        assert!((top - PI).abs() <= 0.02 * PI);
        let oracle = brute_force_sup(&v, 0.01, 3.0);
        assert!((top - oracle).abs() <= 0.02 * PI, "{top} vs {oracle}");
        let tol = Tolerances::default();
        let mass = superlevel_mass_from(&v, &m, 0.99 * PI, &tol);
        assert!((mass - 2.0 * PI).abs() <= 0.01 * 2.0 * PI);
        assert_eq!(superlevel_mass_from(&v, &m, top * 1.01, &tol), 0.0);
    }

    #[test]
    fn disc_points_reach_ratio_one() {
        let family = disc();
        let v = family.sample(0.05).unwrap();
        let params = MaximalParams::new(0.25, 2.5, CenterStrategy::Grid { points_per_axis: 3 }, 16).unwrap();
        let m = maximal_at_atoms(&v, &params);
        // quadrature puts the sampled mass of B(0, 1) within rounding of π
        assert!(m.iter().all(|&x| x >= 1.0 - 1e-12));
        let mass = superlevel_mass(&v, 1.0, &params, &Tolerances::default()).unwrap();
        assert!(mass >= PI * (1.0 - 1e-2));
        assert!(maximal_function(&v, &p(&[0.5, 0.0, 0.0]), &params) >= 1.0 - 1e-12);
    }

    #[test]
    fn monotonicity_and_containment() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let tol = Tolerances::default();
        for _ in 0..20 {
            let atoms = (0..60)
                .map(|_| {
                    Atom::new(
                        p(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]),
                        Subspace::coordinate(2, &[0]).unwrap(),
                        rng.gen_range(0.01..0.2),
                    )
                })
                .collect();
            let v = DiscreteVarifold::new(1, 2, atoms).unwrap();
            let small = MaximalParams::new(0.05, 2.0, CenterStrategy::Atoms, 8).unwrap();
            let large = MaximalParams::new(0.05, 2.0, CenterStrategy::Grid { points_per_axis: 5 }, 8).unwrap();
            let a = maximal_at_atoms(&v, &small);
            let b = maximal_at_atoms(&v, &large);
            assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
            let mut last = f64::INFINITY;
            for d in [0.1, 0.3, 1.0, 3.0] {
                let mass = superlevel_mass_from(&v, &b, d, &tol);
                assert!(mass <= last);
                last = mass;
            }
            // any candidate ball with ratio >= d lies inside the superlevel set
            for _ in 0..10 {
                let i = rng.gen_range(0..v.len());
                let c = v.atoms()[i].position.clone();
                let s = rng.gen_range(0.05..2.0);
                let ratio = v.weight_ball_mass(&c, s) / (2.0 * s);
                if ratio == 0.0 {
                    continue;
                }
                for j in v.ball_atoms(&c, s) {
                    assert!(tol.reaches(a[j], ratio), "atom {j}: {} < {ratio}", a[j]);
                }
            }
        }
    }

    #[test]
    fn median_examples() {
        let mut constant = vec![(2.5, 1.0), (2.5, 3.0)];
        assert_eq!(weighted_median(&mut constant, 0.5), Some(2.5));
        // mass{f <= y} = 1/2 <= λ · 1 for every y < 1, and jumps to 1 at y = 1
        let mut two = vec![(0.0, 1.0), (1.0, 1.0)];
        assert_eq!(weighted_median(&mut two, 0.5), Some(1.0));
        assert_eq!(weighted_median(&mut two, 0.49), Some(0.0));
        let mut mostly_zero = vec![(0.0, 3.0), (1.0, 1.0), (2.0, 1.0)];
        assert_eq!(weighted_median(&mut mostly_zero, 0.5), Some(0.0));
        assert_eq!(weighted_median(&mut [], 0.5), None);
    }

    #[test]
    fn median_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..500 {
            let k = rng.gen_range(1..12);
            let values: Vec<(f64, f64)> = (0..k)
                .map(|_| ((rng.gen_range(0..5) as f64) * 0.5, rng.gen_range(0.1..2.0)))
                .collect();
            let lo = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
            let hi = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
            let l1 = rng.gen_range(0.01..0.99);
            let l2 = rng.gen_range(l1..0.99);
            let g1 = weighted_median(&mut values.clone(), l1).unwrap();
            let g2 = weighted_median(&mut values.clone(), l2).unwrap();
            assert!(lo <= g1 && g1 <= hi);
            assert!(g1 <= g2);
            // oracle: scan y over the value set and its gaps directly
            let total: f64 = values.iter().map(|v| v.1).sum();
            let mut candidates: Vec<f64> = values.iter().map(|v| v.0).collect();
            candidates.sort_by(f64::total_cmp);
            let admissible = |y: f64| values.iter().filter(|v| v.0 <= y).map(|v| v.1).sum::<f64>() <= l1 * total;
            let first_bad = candidates.iter().copied().find(|&y| !admissible(y)).unwrap_or(hi);
            assert_eq!(g1, first_bad);
        }
    }

    #[test]
    fn ball_median_on_atoms() {
        let line = Subspace::coordinate(2, &[0]).unwrap();
        let atoms = vec![
            Atom::new(p(&[0.0, 0.0]), line.clone(), 1.0),
            Atom::new(p(&[0.5, 0.0]), line, 1.0),
        ];
        let v = DiscreteVarifold::new(1, 2, atoms).unwrap();
        let f = ScalarTestFunction::Linear {
            gradient: p(&[2.0, 0.0]),
            offset: 0.0,
        };
        let params = MedianParams::default();
        assert_eq!(median_g(&v, &f, &p(&[0.0, 0.0]), 1.0, &params, |_| true), Some(1.0));
        assert_eq!(median_g(&v, &f, &p(&[0.0, 0.0]), 0.1, &params, |_| true), Some(0.0));
        assert_eq!(median_g(&v, &f, &p(&[5.0, 0.0]), 1.0, &params, |_| true), None);
    }

    #[test]
    fn densities() {
        let family = disc();
        assert_eq!(density(&family, &p(&[0.1, 0.2, 0.0])), 1.0);
        assert_eq!(density(&family, &p(&[1.1, 0.2, 0.0])), 0.0);
        let v = family.sample(0.01).unwrap();
        let est = density_estimate(&v, &p(&[0.0, 0.0, 0.0]), 0.1, 4).unwrap();
        assert_eq!(est.radii, vec![0.8, 0.4, 0.2, 0.1]);
        assert!((est.value - 1.0).abs() <= 0.05);
        assert_eq!(est.resolution, 0.1);
    }

    #[test]
    fn regions() {
        let tol = Tolerances::default();
        let family = disc();
        let v = family.sample(0.05).unwrap();
        let all = lower_density_region(&v, 1e-9, |_| 0.5, RegionMode::BallRatio, |_| true, &tol).unwrap();
        assert_eq!(all.len(), v.len());
        let interior = lower_density_region(&v, 1.0, |_| 0.5, RegionMode::Density, |_| true, &tol).unwrap();
        assert_eq!(interior.len(), v.len());
        let zero = DiscreteVarifold::new(2, 3, v.atoms().to_vec()).unwrap();
        assert!(lower_density_region(&zero, 1.0, |_| 0.5, RegionMode::Density, |_| true, &tol).is_err());

        // clipped planes with r = 2 covering U(0, 1)
        let bundle = AnalyticFamily::Bundle(
            PlaneBundle::unit_ball_normalized(Subspace::coordinate(2, &[0]).unwrap(), 8, true).unwrap(),
        );
        let w = bundle.sample(0.01).unwrap();
        let d = 2f64.powi(-1) / alpha(1) * alpha(2);
        let in_u = |x: &Point| x.norm() < 1.0;
        let region = lower_density_region(&w, d, |_| 2.0, RegionMode::BallRatio, in_u, &tol).unwrap();
        assert_eq!(region.len(), w.len());
    }

    #[test]
    fn slab_ratio_decays() {
        let slab = AnalyticFamily::Slab(
            ProductSlab::new(
                Subspace::coordinate(2, &[0]).unwrap(),
                p(&[-1.0, -1.0]),
                p(&[1.0, 1.0]),
                1.0,
                false,
            )
            .unwrap(),
        );
        let v = slab.sample(0.002).unwrap();
        let est = density_estimate(&v, &p(&[0.001, 0.001]), 0.05, 4).unwrap();
        for w in est.ratios.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() <= 0.05, "{:?}", est.ratios);
        }
        assert_eq!(density(&slab, &p(&[0.0, 0.0])), 0.0);
    }
}
