use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use statrs::function::beta::beta_reg;

use super::{Atom, DiscreteVarifold};
use crate::error::{Error, Result};
use crate::geom::{alpha, unit_sphere_area, Point, Subspace};

/// A closed Euclidean ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

/// Round `m`-sphere of radius `radius` inside the affine `(m + 1)`-plane
/// `center + span`, carried with constant multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereShell {
    pub center: Point,
    pub radius: f64,
    pub span: Subspace,
    pub multiplicity: f64,
}

/// Flat `m`-disc `center + (plane ∩ B(0, radius))` with constant multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatDisc {
    pub center: Point,
    pub plane: Subspace,
    pub radius: f64,
    pub multiplicity: f64,
}

/// Affine planes `o + T` for the listed offsets `o ⟂ T`, each with the same
/// weight. With a clip ball the planes are cut to it; without one they are
/// complete and only the part inside `B(0, extent)` is sampled.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneBundle {
    pub plane: Subspace,
    pub offsets: Vec<Point>,
    pub weight: f64,
    pub clip: Option<Ball>,
    pub extent: f64,
}

/// `density * L^n` on the box `[lower, upper]` with the constant plane `T`
/// attached at every point. A complete slab stands for `L^n × δ_T` on all of
/// `R^n`; the box is then only the sampling window.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSlab {
    pub plane: Subspace,
    pub lower: Point,
    pub upper: Point,
    pub density: f64,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticFamily {
    Sphere(SphereShell),
    Disc(FlatDisc),
    Bundle(PlaneBundle),
    Slab(ProductSlab),
}

/// A discretized vector measure: `δV(θ) ≈ Σ θ(y_i) · v_i` and
/// `‖δV‖ ≈ Σ |v_i| δ_{y_i}`.
#[derive(Clone, Debug, Default)]
pub struct DeltaMeasure {
    pub points: Vec<Point>,
    pub vectors: Vec<Point>,
}

impl DeltaMeasure {
    fn push(&mut self, y: Point, v: Point) {
        self.points.push(y);
        self.vectors.push(v);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `δV(θ)` restricted to the points accepted by `in_set`.
    pub fn pair_on<F, S>(&self, theta: F, in_set: S) -> f64
    where
        F: Fn(&Point) -> Point,
        S: Fn(&Point) -> bool,
    {
        self.points
            .iter()
            .zip(&self.vectors)
            .filter(|(y, _)| in_set(y))
            .map(|(y, v)| theta(y).dot(v))
            .sum()
    }

    pub fn pair<F: Fn(&Point) -> Point>(&self, theta: F) -> f64 {
        self.pair_on(theta, |_| true)
    }

    /// `∫ f d‖δV‖`.
    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.vectors)
            .map(|(y, v)| f(y) * v.norm())
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.vectors.iter().map(|v| v.norm()).sum()
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} must be positive and finite, got {x}")))
    }
}

fn columns(m: &DMatrix<f64>) -> Vec<Point> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

/// Volume of `{y ∈ B^m(0, rad) : y_1 >= x}`.
fn ball_cap(m: usize, rad: f64, x: f64) -> f64 {
    let full = alpha(m) * rad.powi(m as i32);
    if x >= rad {
        return 0.0;
    }
    if x <= -rad {
        return full;
    }
    let z = (1.0 - (x / rad).powi(2)).max(0.0);
    let half = 0.5 * full * beta_reg((m as f64 + 1.0) / 2.0, 0.5, z);
    if x >= 0.0 {
        half
    } else {
        full - half
    }
}

/// `L^m` of the intersection of two `m`-balls with radii `r1`, `r2` whose
/// centers are `dist` apart.
pub(crate) fn lens_volume(m: usize, r1: f64, r2: f64, dist: f64) -> f64 {
    if r1 <= 0.0 || r2 <= 0.0 || dist >= r1 + r2 {
        return 0.0;
    }
    let small = r1.min(r2);
    if dist + small <= r1.max(r2) {
        return alpha(m) * small.powi(m as i32);
    }
    let x1 = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist);
    ball_cap(m, r1, x1) + ball_cap(m, r2, dist - x1)
}

/// `H^m` of `{y ∈ S^m(0, rad) : y_1 >= t}`.
fn sphere_cap(m: usize, rad: f64, t: f64) -> f64 {
    let full = unit_sphere_area(m) * rad.powi(m as i32);
    if t > rad {
        return 0.0;
    }
    if t <= -rad {
        return full;
    }
    let z = (1.0 - (t / rad).powi(2)).max(0.0);
    let half = 0.5 * full * beta_reg(m as f64 / 2.0, 0.5, z);
    if t >= 0.0 {
        half
    } else {
        full - half
    }
}

/// Splits `x - origin` into the component in `sub` and the orthogonal rest.
fn split(sub: &Subspace, origin: &Point, x: &Point) -> (Point, Point) {
    let rel = x - origin;
    let along = sub.apply(&rel);
    let across = rel - &along;
    (along, across)
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl SphereShell {
    pub fn new(center: Point, radius: f64, span: Subspace, multiplicity: f64) -> Result<Self> {
        positive("sphere radius", radius)?;
        positive("multiplicity", multiplicity)?;
        if span.dim() < 2 || center.len() != span.ambient_dim() {
            return Err(Error::Argument(
                "sphere span must be a plane of dimension >= 2 in the ambient space".into(),
            ));
        }
        Ok(SphereShell {
            center,
            radius,
            span,
            multiplicity,
        })
    }

    /// The hypersphere `S^{n-1}(center, radius)`.
    pub fn hypersphere(center: Point, radius: f64, multiplicity: f64) -> Result<Self> {
        let n = center.len();
        Self::new(center, radius, Subspace::full(n), multiplicity)
    }

    pub fn m(&self) -> usize {
        self.span.dim() - 1
    }

    fn ball_mass(&self, a: &Point, r: f64) -> f64 {
        let (u, v) = split(&self.span, &self.center, a);
        let rest = r * r - v.norm_squared();
        if rest < 0.0 {
            return 0.0;
        }
        let du = u.norm();
        let m = self.m();
        let full = unit_sphere_area(m) * self.radius.powi(m as i32);
        // |y - a|^2 = R^2 + |u|^2 + |v|^2 - 2 y.u for y on the sphere
        let lhs = self.radius * self.radius + u.norm_squared() - rest;
        let area = if du == 0.0 {
            if lhs <= 0.0 {
                full
            } else {
                0.0
            }
        } else {
            sphere_cap(m, self.radius, lhs / (2.0 * du))
        };
        self.multiplicity * area
    }

    /// Quadrature nodes on the sphere: `(position, outward unit normal, area)`.
    fn nodes(&self, h: f64) -> Result<Vec<(Point, Point, f64)>> {
        let basis = columns(&self.span.basis());
        let rad = self.radius;
        let mut out = Vec::new();
        match self.m() {
            1 => {
                let count = (2.0 * PI * rad / h).ceil().max(3.0) as usize;
                let w = 2.0 * PI * rad / count as f64;
                for i in 0..count {
                    let t = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                    let u = &basis[0] * t.cos() + &basis[1] * t.sin();
                    out.push((&self.center + &u * rad, u, w));
                }
            }
            2 => {
                let bands = (PI * rad / h).ceil().max(2.0) as usize;
                for j in 0..bands {
                    let p0 = PI * j as f64 / bands as f64;
                    let p1 = PI * (j + 1) as f64 / bands as f64;
                    let widest = if p0 <= PI / 2.0 && PI / 2.0 <= p1 {
                        1.0
                    } else {
                        p0.sin().max(p1.sin())
                    };
                    let count = (2.0 * PI * rad * widest / h).ceil().max(3.0) as usize;
                    let area = 2.0 * PI * rad * rad * (p0.cos() - p1.cos()) / count as f64;
                    let z = 0.5 * (p0.cos() + p1.cos());
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    for i in 0..count {
                        let t = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                        let u = &basis[0] * (rho * t.cos()) + &basis[1] * (rho * t.sin()) + &basis[2] * z;
                        out.push((&self.center + &u * rad, u, area));
                    }
                }
            }
            m => return Err(Error::Unsupported(format!("sampling of {m}-spheres"))),
        }
        Ok(out)
    }
}

impl FlatDisc {
    pub fn new(center: Point, plane: Subspace, radius: f64, multiplicity: f64) -> Result<Self> {
        positive("disc radius", radius)?;
        positive("multiplicity", multiplicity)?;
        if center.len() != plane.ambient_dim() {
            return Err(Error::Argument("disc center and plane live in different spaces".into()));
        }
        Ok(FlatDisc {
            center,
            plane,
            radius,
            multiplicity,
        })
    }

    pub fn m(&self) -> usize {
        self.plane.dim()
    }

    fn mass(&self) -> f64 {
        self.multiplicity * alpha(self.m()) * self.radius.powi(self.m() as i32)
    }

    fn delta_mass(&self) -> f64 {
        let m = self.m();
        self.multiplicity * m as f64 * alpha(m) * self.radius.powi(m as i32 - 1)
    }

    fn ball_mass(&self, a: &Point, r: f64) -> f64 {
        let (u, v) = split(&self.plane, &self.center, a);
        let rest = r * r - v.norm_squared();
        if rest < 0.0 {
            return 0.0;
        }
        self.multiplicity * lens_volume(self.m(), self.radius, rest.sqrt(), u.norm())
    }

    fn density_at(&self, x: &Point) -> f64 {
        let (u, v) = split(&self.plane, &self.center, x);
        if v.norm() > 1e-12 * self.radius.max(1.0) {
            return 0.0;
        }
        let du = u.norm();
        if rel_close(du, self.radius) {
            self.multiplicity / 2.0
        } else if du < self.radius {
            self.multiplicity
        } else {
            0.0
        }
    }

    fn max_distance(&self, a: &Point) -> f64 {
        let (u, v) = split(&self.plane, &self.center, a);
        (v.norm_squared() + (u.norm() + self.radius).powi(2)).sqrt()
    }

    fn atoms(&self, h: f64, weight_scale: f64, out: &mut Vec<Atom>) {
        let basis = columns(&self.plane.basis());
        let rad = self.radius;
        let c = self.multiplicity * weight_scale;
        let mut push = |pos: Point, w: f64| out.push(Atom::new(pos, self.plane.clone(), w));
        match self.m() {
            1 => {
                let count = (2.0 * rad / h).ceil().max(1.0) as usize;
                let w = 2.0 * rad / count as f64;
                for i in 0..count {
                    let t = -rad + w * (i as f64 + 0.5);
                    push(&self.center + &basis[0] * t, c * w);
                }
            }
            2 => {
                let rings = (rad / h).ceil().max(1.0) as usize;
                for j in 0..rings {
                    let r0 = rad * j as f64 / rings as f64;
                    let r1 = rad * (j + 1) as f64 / rings as f64;
                    let count = (2.0 * PI * r1 / h).ceil().max(3.0) as usize;
                    let area = PI * (r1 * r1 - r0 * r0) / count as f64;
                    let centroid = 2.0 / 3.0 * (r1.powi(3) - r0.powi(3)) / (r1 * r1 - r0 * r0);
                    for i in 0..count {
                        let t = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                        let pos = &self.center + (&basis[0] * t.cos() + &basis[1] * t.sin()) * centroid;
                        push(pos, c * area);
                    }
                }
            }
            m => {
                // cube cells; cells cut by the boundary are weighted by the
                // fraction of 3^m subcell midpoints inside the disc
                let cells = (2.0 * rad / h).ceil().max(1.0) as usize;
                let side = 2.0 * rad / cells as f64;
                let sub = 3usize;
                let total_sub = sub.pow(m as u32);
                let mut idx = vec![0usize; m];
                loop {
                    let mut sum = DVector::zeros(m);
                    let mut inside = 0usize;
                    for s in 0..total_sub {
                        let mut q = DVector::zeros(m);
                        let mut code = s;
                        for k in 0..m {
                            let sk = code % sub;
                            code /= sub;
                            q[k] = -rad + side * (idx[k] as f64 + (sk as f64 + 0.5) / sub as f64);
                        }
                        if q.norm() <= rad {
                            sum += &q;
                            inside += 1;
                        }
                    }
                    if inside > 0 {
                        let mid = sum / inside as f64;
                        let mut pos = self.center.clone();
                        for k in 0..m {
                            pos += &basis[k] * mid[k];
                        }
                        let vol = side.powi(m as i32) * inside as f64 / total_sub as f64;
                        push(pos, c * vol);
                    }
                    let mut k = 0;
                    while k < m {
                        idx[k] += 1;
                        if idx[k] < cells {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                    if k == m {
                        break;
                    }
                }
            }
        }
    }

    fn boundary(&self, h: f64, weight_scale: f64, out: &mut DeltaMeasure) -> Result<()> {
        let basis = columns(&self.plane.basis());
        let c = self.multiplicity * weight_scale;
        let rad = self.radius;
        match self.m() {
            1 => {
                out.push(&self.center + &basis[0] * rad, &basis[0] * c);
                out.push(&self.center - &basis[0] * rad, &basis[0] * (-c));
            }
            2 => {
                let count = (2.0 * PI * rad / h).ceil().max(3.0) as usize;
                let ds = 2.0 * PI * rad / count as f64;
                for i in 0..count {
                    let t = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                    let eta = &basis[0] * t.cos() + &basis[1] * t.sin();
                    out.push(&self.center + &eta * rad, eta * (c * ds));
                }
            }
            3 => {
                let rim = SphereShell {
                    center: self.center.clone(),
                    radius: rad,
                    span: self.plane.clone(),
                    multiplicity: 1.0,
                };
                for (y, eta, area) in rim.nodes(h)? {
                    out.push(y, eta * (c * area));
                }
            }
            m => return Err(Error::Unsupported(format!("boundary measure of {m}-discs"))),
        }
        Ok(())
    }
}

impl PlaneBundle {
    /// Offsets are projected onto the orthogonal complement of `plane`.
    pub fn new(plane: Subspace, offsets: Vec<Point>, weight: f64, clip: Option<Ball>, extent: f64) -> Result<Self> {
        positive("plane weight", weight)?;
        positive("sampling extent", extent)?;
        if offsets.is_empty() {
            return Err(Error::Argument("plane bundle needs at least one offset".into()));
        }
        let n = plane.ambient_dim();
        if offsets.iter().any(|o| o.len() != n) {
            return Err(Error::Argument("offset dimension mismatch".into()));
        }
        if let Some(b) = &clip {
            positive("clip radius", b.radius)?;
            if b.center.len() != n {
                return Err(Error::Argument("clip center dimension mismatch".into()));
            }
        }
        let offsets = offsets.iter().map(|o| o - plane.apply(o)).collect();
        Ok(PlaneBundle {
            plane,
            offsets,
            weight,
            clip,
            extent,
        })
    }

    /// `k^(n-m)` parallel planes on the lattice `-1 + (2j + 1)/k` of `T^⟂`
    /// coordinates, keeping those that meet `U(0, 1)`, weighted so that
    /// `‖V‖ U(0, 1) = α(n)`. With `clipped` the planes are cut to `B(0, 1)`.
    pub fn unit_ball_normalized(plane: Subspace, k: usize, clipped: bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("need at least one plane per direction".into()));
        }
        let n = plane.ambient_dim();
        let m = plane.dim();
        let normals = columns(&plane.complement_basis());
        let codim = n - m;
        let mut offsets = Vec::new();
        let mut idx = vec![0usize; codim];
        loop {
            let mut o = DVector::zeros(n);
            for (axis, &j) in idx.iter().enumerate() {
                o += &normals[axis] * (-1.0 + (2.0 * j as f64 + 1.0) / k as f64);
            }
            if o.norm() < 1.0 {
                offsets.push(o);
            }
            let mut a = 0;
            while a < codim {
                idx[a] += 1;
                if idx[a] < k {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
            if a == codim {
                break;
            }
        }
        let slice_mass: f64 = offsets
            .iter()
            .map(|o| alpha(m) * (1.0 - o.norm_squared()).powf(m as f64 / 2.0))
            .sum();
        let weight = alpha(n) / slice_mass;
        let clip = clipped.then(|| Ball {
            center: DVector::zeros(n),
            radius: 1.0,
        });
        Self::new(plane, offsets, weight, clip, 1.0)
    }

    pub fn m(&self) -> usize {
        self.plane.dim()
    }

    /// One disc per plane: the clipped piece, or the sampling window.
    pub fn pieces(&self) -> Vec<FlatDisc> {
        let (center, radius) = match &self.clip {
            Some(b) => (b.center.clone(), b.radius),
            None => (DVector::zeros(self.plane.ambient_dim()), self.extent),
        };
        let along = self.plane.apply(&center);
        let across = &center - &along;
        self.offsets
            .iter()
            .filter_map(|o| {
                let gap2 = (&across - o).norm_squared();
                let rho2 = radius * radius - gap2;
                (rho2 > 0.0).then(|| FlatDisc {
                    center: o + &along,
                    plane: self.plane.clone(),
                    radius: rho2.sqrt(),
                    multiplicity: self.weight,
                })
            })
            .collect()
    }

    fn min_spacing(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.offsets.iter().enumerate() {
            for b in &self.offsets[i + 1..] {
                let d = (a - b).norm();
                if d > 0.0 {
                    best = best.min(d);
                }
            }
        }
        best
    }

    fn ball_mass(&self, a: &Point, r: f64) -> f64 {
        match &self.clip {
            Some(_) => self.pieces().iter().map(|p| p.ball_mass(a, r)).sum(),
            None => {
                let m = self.m();
                let across = a - self.plane.apply(a);
                self.offsets
                    .iter()
                    .map(|o| {
                        let rest = r * r - (&across - o).norm_squared();
                        if rest < 0.0 {
                            0.0
                        } else {
                            self.weight * alpha(m) * rest.powf(m as f64 / 2.0)
                        }
                    })
                    .sum()
            }
        }
    }

    fn density_at(&self, x: &Point) -> f64 {
        match &self.clip {
            Some(_) => self.pieces().iter().map(|p| p.density_at(x)).sum(),
            None => {
                let across = x - self.plane.apply(x);
                let hits = self
                    .offsets
                    .iter()
                    .filter(|o| (&across - *o).norm() <= 1e-12 * o.norm().max(1.0))
                    .count();
                hits as f64 * self.weight
            }
        }
    }
}

impl ProductSlab {
    pub fn new(plane: Subspace, lower: Point, upper: Point, density: f64, complete: bool) -> Result<Self> {
        positive("slab density", density)?;
        let n = plane.ambient_dim();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Argument("slab box dimension mismatch".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(u > l)) {
            return Err(Error::Argument("slab box must have positive side lengths".into()));
        }
        Ok(ProductSlab {
            plane,
            lower,
            upper,
            density,
            complete,
        })
    }

    pub fn m(&self) -> usize {
        self.plane.dim()
    }

    fn sides(&self) -> Vec<f64> {
        self.upper.iter().zip(self.lower.iter()).map(|(u, l)| u - l).collect()
    }

    fn volume(&self) -> f64 {
        self.sides().iter().product()
    }

    fn delta_mass(&self) -> f64 {
        if self.complete {
            return 0.0;
        }
        let sides = self.sides();
        let p = self.plane.proj();
        (0..sides.len())
            .map(|i| {
                let face: f64 = sides
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, s)| s)
                    .product();
                2.0 * p[(i, i)].max(0.0).sqrt() * face
            })
            .sum::<f64>()
            * self.density
    }

    fn ball_mass(&self, a: &Point, r: f64) -> Option<f64> {
        let n = self.plane.ambient_dim();
        let full = self.density * alpha(n) * r.powi(n as i32);
        if self.complete {
            return Some(full);
        }
        let mut inside = true;
        let mut gap2 = 0.0;
        for k in 0..n {
            if a[k] - r < self.lower[k] || a[k] + r > self.upper[k] {
                inside = false;
            }
            let g = (self.lower[k] - a[k]).max(a[k] - self.upper[k]).max(0.0);
            gap2 += g * g;
        }
        if inside {
            Some(full)
        } else if gap2 > r * r {
            Some(0.0)
        } else {
            None
        }
    }

    fn density_at(&self, x: &Point) -> f64 {
        let n = self.plane.ambient_dim();
        if self.m() < n {
            // ‖V‖ B(x, r) ≤ c α(n) r^n, so the m-density vanishes
            return 0.0;
        }
        if self.complete {
            return self.density;
        }
        let mut fraction = 1.0;
        for k in 0..n {
            if x[k] < self.lower[k] || x[k] > self.upper[k] {
                return 0.0;
            }
            if x[k] == self.lower[k] || x[k] == self.upper[k] {
                fraction *= 0.5;
            }
        }
        self.density * fraction
    }

    fn grid(&self, h: f64) -> (Vec<usize>, Vec<f64>) {
        let counts: Vec<usize> = self.sides().iter().map(|s| (s / h).ceil().max(1.0) as usize).collect();
        let cell: Vec<f64> = self.sides().iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
        (counts, cell)
    }

    fn atoms(&self, h: f64) -> Vec<Atom> {
        let n = self.plane.ambient_dim();
        let (counts, cell) = self.grid(h);
        let w = self.density * cell.iter().product::<f64>();
        let mut out = Vec::new();
        for_each_index(&counts, |idx| {
            let pos = DVector::from_fn(n, |k, _| self.lower[k] + cell[k] * (idx[k] as f64 + 0.5));
            out.push(Atom::new(pos, self.plane.clone(), w));
        });
        out
    }

    fn boundary(&self, h: f64, out: &mut DeltaMeasure) {
        if self.complete {
            return;
        }
        let n = self.plane.ambient_dim();
        let (counts, cell) = self.grid(h);
        for axis in 0..n {
            let normal = self.plane.proj().column(axis).into_owned();
            if normal.norm() == 0.0 {
                continue;
            }
            let mut face_counts = counts.clone();
            face_counts[axis] = 1;
            let area: f64 = (0..n).filter(|&k| k != axis).map(|k| cell[k]).product();
            for (side, sign) in [(self.lower[axis], -1.0), (self.upper[axis], 1.0)] {
                for_each_index(&face_counts, |idx| {
                    let y = DVector::from_fn(n, |k, _| {
                        if k == axis {
                            side
                        } else {
                            self.lower[k] + cell[k] * (idx[k] as f64 + 0.5)
                        }
                    });
                    out.push(y, &normal * (sign * self.density * area));
                });
            }
        }
    }
}

fn for_each_index<F: FnMut(&[usize])>(counts: &[usize], mut f: F) {
    if counts.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; counts.len()];
    loop {
        f(&idx);
        let mut k = 0;
        while k < counts.len() {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == counts.len() {
            return;
        }
    }
}

impl AnalyticFamily {
    pub fn name(&self) -> &'static str {
        match self {
            AnalyticFamily::Sphere(_) => "sphere",
            AnalyticFamily::Disc(_) => "disc",
            AnalyticFamily::Bundle(_) => "plane-bundle",
            AnalyticFamily::Slab(_) => "product-slab",
        }
    }

    pub fn m(&self) -> usize {
        match self {
            AnalyticFamily::Sphere(s) => s.m(),
            AnalyticFamily::Disc(d) => d.m(),
            AnalyticFamily::Bundle(b) => b.m(),
            AnalyticFamily::Slab(s) => s.m(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            AnalyticFamily::Sphere(s) => s.span.ambient_dim(),
            AnalyticFamily::Disc(d) => d.plane.ambient_dim(),
            AnalyticFamily::Bundle(b) => b.plane.ambient_dim(),
            AnalyticFamily::Slab(s) => s.plane.ambient_dim(),
        }
    }

    /// Whether the family is rectifiable (tangent planes match the carrier).
    pub fn is_rectifiable(&self) -> bool {
        !matches!(self, AnalyticFamily::Slab(s) if s.m() < s.plane.ambient_dim())
    }

    /// `‖V‖(R^n)`; infinite for complete planes and slabs.
    pub fn total_mass(&self) -> f64 {
        match self {
            AnalyticFamily::Sphere(s) => s.multiplicity * unit_sphere_area(s.m()) * s.radius.powi(s.m() as i32),
            AnalyticFamily::Disc(d) => d.mass(),
            AnalyticFamily::Bundle(b) => match b.clip {
                Some(_) => b.pieces().iter().map(FlatDisc::mass).sum(),
                None => f64::INFINITY,
            },
            AnalyticFamily::Slab(s) => {
                if s.complete {
                    f64::INFINITY
                } else {
                    s.density * s.volume()
                }
            }
        }
    }

    /// Mass of the part of the family that [`AnalyticFamily::sample`] covers.
    pub fn sampled_mass(&self) -> f64 {
        match self {
            AnalyticFamily::Bundle(b) => b.pieces().iter().map(FlatDisc::mass).sum(),
            AnalyticFamily::Slab(s) => s.density * s.volume(),
            _ => self.total_mass(),
        }
    }

    /// `‖δV‖(R^n)`.
    pub fn delta_total_mass(&self) -> f64 {
        match self {
            AnalyticFamily::Sphere(s) => s.m() as f64 / s.radius * self.total_mass(),
            AnalyticFamily::Disc(d) => d.delta_mass(),
            AnalyticFamily::Bundle(b) => match b.clip {
                Some(_) => b.pieces().iter().map(FlatDisc::delta_mass).sum(),
                None => 0.0,
            },
            AnalyticFamily::Slab(s) => s.delta_mass(),
        }
    }

    /// `Θ^m(‖V‖, x)`.
    pub fn density_at(&self, x: &Point) -> f64 {
        match self {
            AnalyticFamily::Sphere(s) => {
                let (u, v) = split(&s.span, &s.center, x);
                if v.norm() <= 1e-12 * s.radius.max(1.0) && rel_close(u.norm(), s.radius) {
                    s.multiplicity
                } else {
                    0.0
                }
            }
            AnalyticFamily::Disc(d) => d.density_at(x),
            AnalyticFamily::Bundle(b) => b.density_at(x),
            AnalyticFamily::Slab(s) => s.density_at(x),
        }
    }

    /// Exact `‖V‖ B(a, r)` when a closed form is available.
    pub fn ball_mass(&self, a: &Point, r: f64) -> Option<f64> {
        match self {
            AnalyticFamily::Sphere(s) => Some(s.ball_mass(a, r)),
            AnalyticFamily::Disc(d) => Some(d.ball_mass(a, r)),
            AnalyticFamily::Bundle(b) => Some(b.ball_mass(a, r)),
            AnalyticFamily::Slab(s) => s.ball_mass(a, r),
        }
    }

    /// `H^m({x : Θ^m(‖V‖, x) >= d})` for `d > 0`.
    pub fn density_superlevel_measure(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::Domain(format!("density threshold must be positive, got {d}")));
        }
        Ok(match self {
            AnalyticFamily::Sphere(s) => {
                if s.multiplicity >= d {
                    unit_sphere_area(s.m()) * s.radius.powi(s.m() as i32)
                } else {
                    0.0
                }
            }
            AnalyticFamily::Disc(f) => {
                if f.multiplicity >= d {
                    alpha(f.m()) * f.radius.powi(f.m() as i32)
                } else {
                    0.0
                }
            }
            AnalyticFamily::Bundle(b) => {
                if b.weight < d {
                    0.0
                } else if b.clip.is_some() {
                    b.pieces().iter().map(|p| p.mass() / p.multiplicity).sum()
                } else {
                    f64::INFINITY
                }
            }
            AnalyticFamily::Slab(_) => {
                return Err(Error::Unsupported("density superlevel sets of product slabs".into()))
            }
        })
    }

    /// Largest distance from `a` to the support; infinite for complete
    /// planes and slabs.
    pub fn support_max_distance(&self, a: &Point) -> f64 {
        match self {
            AnalyticFamily::Sphere(s) => {
                let (u, v) = split(&s.span, &s.center, a);
                (v.norm_squared() + (u.norm() + s.radius).powi(2)).sqrt()
            }
            AnalyticFamily::Disc(d) => d.max_distance(a),
            AnalyticFamily::Bundle(b) => match b.clip {
                Some(_) => b.pieces().iter().map(|p| p.max_distance(a)).fold(0.0, f64::max),
                None => f64::INFINITY,
            },
            AnalyticFamily::Slab(s) => {
                if s.complete {
                    return f64::INFINITY;
                }
                (0..a.len())
                    .map(|k| {
                        let far = (a[k] - s.lower[k]).abs().max((s.upper[k] - a[k]).abs());
                        far * far
                    })
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// Smallest geometric feature length, used to reject coarse sampling.
    pub fn feature_size(&self) -> f64 {
        match self {
            AnalyticFamily::Sphere(s) => s.radius,
            AnalyticFamily::Disc(d) => d.radius,
            AnalyticFamily::Bundle(b) => {
                let window = b.clip.as_ref().map_or(b.extent, |c| c.radius);
                window.min(b.min_spacing())
            }
            AnalyticFamily::Slab(s) => s.sides().into_iter().fold(f64::INFINITY, f64::min),
        }
    }

    /// Midpoint quadrature of the family with spacing at most `h`.
    pub fn sample(&self, h: f64) -> Result<DiscreteVarifold> {
        positive("sampling resolution", h)?;
        let feature = self.feature_size();
        if 4.0 * h > feature {
            return Err(Error::resolution(
                format!("h = {h} is coarser than a quarter of the feature size {feature}"),
                format!("use h <= {}", feature / 4.0),
            ));
        }
        let mut atoms = Vec::new();
        match self {
            AnalyticFamily::Sphere(s) => {
                let q = s.span.proj();
                for (pos, u, area) in s.nodes(h)? {
                    let proj = q - &u * u.transpose();
                    let plane = Subspace::from_parts(s.span.ambient_dim(), s.m(), proj);
                    atoms.push(Atom::new(pos, plane, s.multiplicity * area));
                }
            }
            AnalyticFamily::Disc(d) => d.atoms(h, 1.0, &mut atoms),
            AnalyticFamily::Bundle(b) => {
                for piece in b.pieces() {
                    piece.atoms(h, 1.0, &mut atoms);
                }
            }
            AnalyticFamily::Slab(s) => atoms = s.atoms(h),
        }
        Ok(DiscreteVarifold::new(self.m(), self.n(), atoms)?.with_source(self.clone(), h))
    }

    /// Discretization of the vector measure `δV` at resolution `h`: mean
    /// curvature on spheres, conormals on disc rims and clip boundaries,
    /// projected face normals on slabs.
    pub fn delta_measure(&self, h: f64) -> Result<DeltaMeasure> {
        positive("resolution", h)?;
        let mut out = DeltaMeasure::default();
        match self {
            AnalyticFamily::Sphere(s) => {
                let curvature = s.m() as f64 / s.radius;
                for (y, u, area) in s.nodes(h)? {
                    out.push(y, u * (curvature * s.multiplicity * area));
                }
            }
            AnalyticFamily::Disc(d) => d.boundary(h, 1.0, &mut out)?,
            AnalyticFamily::Bundle(b) => {
                if b.clip.is_some() {
                    for piece in b.pieces() {
                        piece.boundary(h, 1.0, &mut out)?;
                    }
                }
            }
            AnalyticFamily::Slab(s) => s.boundary(h, &mut out),
        }
        Ok(out)
    }

    /// The image under `x -> factor * x`, with masses scaling by `factor^m`.
    pub fn dilate(&self, factor: f64) -> AnalyticFamily {
        match self {
            AnalyticFamily::Sphere(s) => AnalyticFamily::Sphere(SphereShell {
                center: &s.center * factor,
                radius: s.radius * factor,
                ..s.clone()
            }),
            AnalyticFamily::Disc(d) => AnalyticFamily::Disc(FlatDisc {
                center: &d.center * factor,
                radius: d.radius * factor,
                ..d.clone()
            }),
            AnalyticFamily::Bundle(b) => AnalyticFamily::Bundle(PlaneBundle {
                offsets: b.offsets.iter().map(|o| o * factor).collect(),
                clip: b.clip.as_ref().map(|c| Ball {
                    center: &c.center * factor,
                    radius: c.radius * factor,
                }),
                extent: b.extent * factor,
                ..b.clone()
            }),
            AnalyticFamily::Slab(s) => AnalyticFamily::Slab(ProductSlab {
                lower: &s.lower * factor,
                upper: &s.upper * factor,
                density: s.density * factor.powi(s.m() as i32 - s.plane.ambient_dim() as i32),
                ..s.clone()
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    fn unit_circle() -> AnalyticFamily {
        AnalyticFamily::Sphere(SphereShell::hypersphere(p(&[0.0, 0.0]), 1.0, 1.0).unwrap())
    }

    fn unit_disc(m: usize, n: usize) -> AnalyticFamily {
        let plane = Subspace::coordinate(n, &(0..m).collect::<Vec<_>>()).unwrap();
        AnalyticFamily::Disc(FlatDisc::new(DVector::zeros(n), plane, 1.0, 1.0).unwrap())
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn closed_form_identities() {
        for r in [0.3, 1.0, 2.5] {
            for n in [2, 3] {
                let s = SphereShell::hypersphere(DVector::zeros(n), r, 1.7).unwrap();
                let f = AnalyticFamily::Sphere(s);
                let m = (n - 1) as f64;
                assert!(rel(f.delta_total_mass(), m / r * f.total_mass()) <= 1e-12);
            }
            for (m, n) in [(1, 2), (2, 3), (3, 3), (2, 4)] {
                let plane = Subspace::coordinate(n, &(0..m).collect::<Vec<_>>()).unwrap();
                let f = AnalyticFamily::Disc(FlatDisc::new(DVector::zeros(n), plane, r, 2.0).unwrap());
                assert!(rel(f.total_mass(), 2.0 * alpha(m) * r.powi(m as i32)) <= 1e-15);
                assert!(rel(f.delta_total_mass(), 2.0 * m as f64 * alpha(m) * r.powi(m as i32 - 1)) <= 1e-15);
            }
        }
        let bundle = AnalyticFamily::Bundle(
            PlaneBundle::unit_ball_normalized(Subspace::coordinate(2, &[0]).unwrap(), 4, false).unwrap(),
        );
        assert_eq!(bundle.delta_total_mass(), 0.0);
    }

    #[test]
    fn sampling_examples() {
        let disc = unit_disc(2, 3).sample(0.01).unwrap();
        assert!(rel(disc.total_mass(), PI) <= 1e-3);
        let circle = unit_circle().sample(0.01).unwrap();
        assert!(rel(circle.total_mass(), 2.0 * PI) <= 1e-3);
        let bundle = PlaneBundle::unit_ball_normalized(Subspace::coordinate(2, &[0]).unwrap(), 4, true).unwrap();
        // chord lengths 2 sqrt(1 - y^2) at y = ±1/4, ±3/4
        let chords: f64 = [-0.75f64, -0.25, 0.25, 0.75]
            .iter()
            .map(|y| 2.0 * (1.0 - y * y).sqrt())
            .sum();
        assert!(rel(bundle.weight * chords, PI) <= 1e-12);
        let sampled = AnalyticFamily::Bundle(bundle).sample(0.01).unwrap();
        assert!(rel(sampled.total_mass(), PI) <= 5e-3);
    }

    #[test]
    fn coarse_sampling_is_rejected() {
        assert!(matches!(unit_circle().sample(0.3), Err(Error::Resolution { .. })));
        assert!(unit_circle().sample(0.25).is_ok());
    }

    #[test]
    fn sampled_planes_match_tangents() {
        let sphere = AnalyticFamily::Sphere(SphereShell::hypersphere(p(&[0.5, 0.0, -1.0]), 1.0, 1.0).unwrap());
        let v = sphere.sample(0.05).unwrap();
        for a in v.atoms() {
            let normal = (&a.position - p(&[0.5, 0.0, -1.0])).normalize();
            assert!(a.plane.apply(&normal).norm() <= 1e-12);
            assert!(a.plane.idempotence_defect() <= 1e-12);
            assert!(a.plane.max_abs_asymmetry() <= 1e-12);
        }
        assert!(rel(v.total_mass(), 4.0 * PI) <= 1e-12);
    }

    #[test]
    fn circle_ball_masses() {
        let circle = unit_circle();
        let v = circle.sample(1e-3).unwrap();
        let origin = p(&[0.0, 0.0]);
        assert!(rel(v.weight_ball_mass(&origin, 1.0), 2.0 * PI) <= 5e-3);
        let arc = 4.0 * (0.1f64).asin();
        let a = p(&[1.0, 0.0]);
        assert!(rel(circle.ball_mass(&a, 0.2).unwrap(), arc) <= 1e-12);
        assert!(rel(v.weight_ball_mass(&a, 0.2), arc) <= 1e-2);
        let half = v.restrict(|x| x[0] > 0.0);
        assert!(rel(half.total_mass(), PI) <= 5e-3);
    }

    #[test]
    fn lens_volume_special_cases() {
        // two unit discs at distance 1: 2 pi / 3 - sqrt(3) / 2
        assert!(rel(lens_volume(2, 1.0, 1.0, 1.0), 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0) <= 1e-12);
        // intervals
        assert!(rel(lens_volume(1, 1.0, 0.5, 1.2), 0.3) <= 1e-12);
        // half ball cap in 3d
        assert!(rel(ball_cap(3, 2.0, 0.0), 0.5 * 4.0 / 3.0 * PI * 8.0) <= 1e-12);
        // spherical cap of S^2 above height t has area 2 pi (1 - t)
        assert!(rel(sphere_cap(2, 1.0, 0.3), 2.0 * PI * 0.7) <= 1e-12);
        assert!(rel(sphere_cap(2, 1.0, -0.3), 2.0 * PI * 1.3) <= 1e-12);
    }

    /// Largest `|error| / h` over five halvings of `h`. Atomic ball masses jump
    /// by whole atoms, so first order shows up as a bounded ratio rather than
    /// a clean slope.
    fn first_order_constant(family: &AnalyticFamily, a: &Point, r: f64, h0: f64) -> (f64, f64, f64) {
        let exact = family.ball_mass(a, r).unwrap();
        let errors: Vec<(f64, f64)> = (0..5)
            .map(|k| {
                let h = h0 / 2f64.powi(k);
                ((family.sample(h).unwrap().weight_ball_mass(a, r) - exact).abs(), h)
            })
            .collect();
        let constant = errors.iter().map(|(e, h)| e / h).fold(0.0, f64::max);
        (constant, errors[0].0, errors[4].0)
    }

    #[test]
    fn sampled_ball_masses_converge() {
        let bundle = AnalyticFamily::Bundle(
            PlaneBundle::unit_ball_normalized(Subspace::coordinate(2, &[0]).unwrap(), 4, true).unwrap(),
        );
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
        let cases: Vec<(AnalyticFamily, Vec<(Point, f64)>)> = vec![
            (
                unit_circle(),
                vec![(p(&[1.0, 0.0]), 0.2), (p(&[0.3, 0.2]), 0.9), (p(&[0.0, 0.5]), 0.77)],
            ),
            (
                unit_disc(2, 3),
                vec![
                    (p(&[0.0, 0.0, 0.0]), 0.5),
                    (p(&[1.0, 0.0, 0.1]), 0.6),
                    (p(&[0.2, -0.3, 0.0]), 0.45),
                ],
            ),
            (
                bundle,
                vec![(p(&[0.0, 0.0]), 0.6), (p(&[0.5, 0.3]), 0.4), (p(&[-0.2, 0.7]), 0.3)],
            ),
            (
                slab,
                vec![(p(&[0.0, 0.0]), 0.5), (p(&[0.3, -0.2]), 0.33), (p(&[-0.5, 0.1]), 0.42)],
            ),
        ];
        for (family, balls) in cases {
            for (a, r) in balls {
                let (constant, coarse, fine) = first_order_constant(&family, &a, r, 0.04);
                let label = format!("{} at {:?}, r = {r}", family.name(), a.as_slice());
                assert!(constant <= 10.0, "{label}: error / h reaches {constant}");
                assert!(fine <= coarse.max(1e-10), "{label}: {fine} > {coarse}");
            }
        }
    }

    #[test]
    fn densities() {
        let disc = unit_disc(2, 3);
        assert_eq!(disc.density_at(&p(&[0.2, 0.1, 0.0])), 1.0);
        assert_eq!(disc.density_at(&p(&[2.0, 0.0, 0.0])), 0.0);
        assert_eq!(disc.density_at(&p(&[0.2, 0.1, 0.3])), 0.0);
        assert_eq!(disc.density_at(&p(&[1.0, 0.0, 0.0])), 0.5);
        assert_eq!(unit_circle().density_at(&p(&[0.6, 0.8])), 1.0);
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
        assert_eq!(slab.density_at(&p(&[0.0, 0.0])), 0.0);
        // ratio decays like r^(n - m): halving r halves it
        let x = p(&[0.0, 0.0]);
        let ratio = |r: f64| slab.ball_mass(&x, r).unwrap() / (alpha(1) * r);
        for r in [0.4, 0.2, 0.1] {
            assert!(rel(ratio(r / 2.0), ratio(r) / 2.0) <= 1e-12);
        }
    }

    #[test]
    fn dilation_scales_masses() {
        for family in [unit_circle(), unit_disc(2, 3)] {
            let big = family.dilate(3.0);
            let m = family.m() as i32;
            assert!(rel(big.total_mass(), 3f64.powi(m) * family.total_mass()) <= 1e-12);
            assert!(rel(big.delta_total_mass(), 3f64.powi(m - 1) * family.delta_total_mass()) <= 1e-12);
        }
    }

    #[test]
    fn delta_measures_match_totals() {
        let bundle = AnalyticFamily::Bundle(
            PlaneBundle::unit_ball_normalized(Subspace::coordinate(3, &[0, 1]).unwrap(), 3, true).unwrap(),
        );
        let slab = AnalyticFamily::Slab(
            ProductSlab::new(
                Subspace::coordinate(3, &[0]).unwrap(),
                p(&[-1.0, -1.0, -1.0]),
                p(&[1.0, 0.5, 1.0]),
                2.0,
                false,
            )
            .unwrap(),
        );
        for family in [
            unit_circle(),
            unit_disc(1, 2),
            unit_disc(2, 3),
            unit_disc(3, 4),
            bundle,
            slab,
        ] {
            let total = family.delta_measure(0.01).unwrap().total();
            assert!(rel(total, family.delta_total_mass()) <= 1e-3, "{}", family.name());
        }
    }
}
