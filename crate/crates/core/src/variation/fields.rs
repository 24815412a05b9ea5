//! Compactly supported test vector fields and scalar test functions with
//! exact derivatives.

use nalgebra::{DMatrix, DVector};

use crate::geom::Point;

/// `ψ(s) = exp(1 - 1/(1 - s))` for `s < 1`, else 0; `ψ(0) = 1`.
fn psi(s: f64) -> f64 {
    if s < 1.0 {
        (1.0 - 1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

fn dpsi(s: f64) -> f64 {
    if s < 1.0 {
        -psi(s) / ((1.0 - s) * (1.0 - s))
    } else {
        0.0
    }
}

fn exp_inv(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`.
fn step(u: f64) -> (f64, f64) {
    let a = exp_inv(u);
    let b = exp_inv(1.0 - u);
    if a + b == 0.0 {
        return (0.0, 0.0);
    }
    let da = if u > 0.0 { a / (u * u) } else { 0.0 };
    let db = if u < 1.0 { -b / ((1.0 - u) * (1.0 - u)) } else { 0.0 };
    let value = a / (a + b);
    let deriv = (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
    (value, deriv)
}

#[derive(Clone, Debug, PartialEq)]
pub enum TestVectorField {
    /// `ψ(|x - c|² / ρ²) · v`.
    Bump {
        center: Point,
        radius: f64,
        direction: Point,
    },
    /// `φ(|x - c|) (x - c)/|x - c|` with `φ(t) = ψ(((t - r0)/w)²)`, supported
    /// in the shell `r0 - w < |x - c| < r0 + w`.
    Radial {
        center: Point,
        r0: f64,
        halfwidth: f64,
    },
    /// `(x - c) χ(|x - c|)` with `χ = 1` on `[0, inner]` and `0` beyond `outer`.
    Plateau {
        center: Point,
        inner: f64,
        outer: f64,
    },
    Scaled(Box<TestVectorField>, f64),
    /// `x -> θ(x / λ)`.
    Dilated(Box<TestVectorField>, f64),
    Sum(Vec<TestVectorField>),
}

impl TestVectorField {
    pub fn bump(center: Point, radius: f64, direction: Point) -> Self {
        TestVectorField::Bump {
            center,
            radius,
            direction,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        TestVectorField::Scaled(Box::new(self), factor)
    }

    pub fn dilated(self, factor: f64) -> Self {
        TestVectorField::Dilated(Box::new(self), factor)
    }

    pub fn value(&self, x: &Point) -> Point {
        match self {
            TestVectorField::Bump {
                center,
                radius,
                direction,
            } => direction * psi((x - center).norm_squared() / (radius * radius)),
            TestVectorField::Radial { center, r0, halfwidth } => {
                let rel = x - center;
                let t = rel.norm();
                let phi = psi(((t - r0) / halfwidth).powi(2));
                if phi == 0.0 {
                    DVector::zeros(x.len())
                } else {
                    rel * (phi / t)
                }
            }
            TestVectorField::Plateau { center, inner, outer } => {
                let rel = x - center;
                let (chi, _) = step((outer - rel.norm()) / (outer - inner));
                rel * chi
            }
            TestVectorField::Scaled(inner, c) => inner.value(x) * *c,
            TestVectorField::Dilated(inner, l) => inner.value(&(x / *l)),
            TestVectorField::Sum(parts) => {
                let mut out = DVector::zeros(x.len());
                for p in parts {
                    out += p.value(x);
                }
                out
            }
        }
    }

    /// `Dθ(x)`, entry `(i, j) = ∂_j θ_i`.
    pub fn jacobian(&self, x: &Point) -> DMatrix<f64> {
        let n = x.len();
        match self {
            TestVectorField::Bump {
                center,
                radius,
                direction,
            } => {
                let rel = x - center;
                let r2 = radius * radius;
                let g = dpsi(rel.norm_squared() / r2) * 2.0 / r2;
                direction * (rel * g).transpose()
            }
            TestVectorField::Radial { center, r0, halfwidth } => {
                let rel = x - center;
                let t = rel.norm();
                let s = ((t - r0) / halfwidth).powi(2);
                let phi = psi(s);
                if phi == 0.0 {
                    return DMatrix::zeros(n, n);
                }
                let dphi = dpsi(s) * 2.0 * (t - r0) / (halfwidth * halfwidth);
                let u = rel / t;
                let uu = &u * u.transpose();
                (DMatrix::identity(n, n) - &uu) * (phi / t) + uu * dphi
            }
            TestVectorField::Plateau { center, inner, outer } => {
                let rel = x - center;
                let t = rel.norm();
                let (chi, dchi) = step((outer - t) / (outer - inner));
                let mut jac = DMatrix::identity(n, n) * chi;
                if t > 0.0 && dchi != 0.0 {
                    let dt = -dchi / (outer - inner);
                    jac += &rel * (&rel / t).transpose() * dt;
                }
                jac
            }
            TestVectorField::Scaled(inner, c) => inner.jacobian(x) * *c,
            TestVectorField::Dilated(inner, l) => inner.jacobian(&(x / *l)) / *l,
            TestVectorField::Sum(parts) => {
                let mut out = DMatrix::zeros(n, n);
                for p in parts {
                    out += p.jacobian(x);
                }
                out
            }
        }
    }

    /// A ball `B(center, radius)` outside of which the field vanishes.
    pub fn support(&self) -> (Point, f64) {
        match self {
            TestVectorField::Bump { center, radius, .. } => (center.clone(), *radius),
            TestVectorField::Radial { center, r0, halfwidth } => (center.clone(), r0 + halfwidth),
            TestVectorField::Plateau { center, outer, .. } => (center.clone(), *outer),
            TestVectorField::Scaled(inner, _) => inner.support(),
            TestVectorField::Dilated(inner, l) => {
                let (c, r) = inner.support();
                (c * *l, r * l)
            }
            TestVectorField::Sum(parts) => enclosing(parts.iter().map(|p| p.support())),
        }
    }

    /// `sup |θ|`: exact for bumps and radial fields, an upper bound for
    /// plateaus and sums.
    pub fn sup_norm(&self) -> f64 {
        match self {
            TestVectorField::Bump { direction, .. } => direction.norm(),
            TestVectorField::Radial { .. } => 1.0,
            TestVectorField::Plateau { outer, .. } => *outer,
            TestVectorField::Scaled(inner, c) => inner.sup_norm() * c.abs(),
            TestVectorField::Dilated(inner, _) => inner.sup_norm(),
            TestVectorField::Sum(parts) => parts.iter().map(|p| p.sup_norm()).sum(),
        }
    }

    /// `θ / sup |θ|`.
    pub fn normalized(self) -> Self {
        let s = self.sup_norm();
        if s > 0.0 && s != 1.0 {
            self.scaled(1.0 / s)
        } else {
            self
        }
    }
}

fn enclosing(balls: impl Iterator<Item = (Point, f64)>) -> (Point, f64) {
    let balls: Vec<(Point, f64)> = balls.collect();
    let Some((first, _)) = balls.first() else {
        return (DVector::zeros(0), 0.0);
    };
    let center = first.clone();
    let radius = balls.iter().map(|(c, r)| (c - &center).norm() + r).fold(0.0, f64::max);
    (center, radius)
}

/// The test-field dictionary: at every center and scale, the bumps `±e_i` of
/// that radius and the inward and outward radial shells of that radius.
/// Every member has `sup |θ| = 1`.
pub fn standard_dictionary(n: usize, centers: &[Point], scales: &[f64]) -> Vec<TestVectorField> {
    let mut out = Vec::new();
    for c in centers {
        for &s in scales {
            for i in 0..n {
                for sign in [1.0, -1.0] {
                    let mut e = DVector::zeros(n);
                    e[i] = sign;
                    out.push(TestVectorField::bump(c.clone(), s, e));
                }
            }
            let radial = TestVectorField::Radial {
                center: c.clone(),
                r0: s,
                halfwidth: s / 2.0,
            };
            out.push(radial.clone());
            out.push(radial.scaled(-1.0));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarTestFunction {
    Zero,
    /// `height (1 - |x - c|²/ρ²)²` inside `B(c, ρ)`.
    RadialCap {
        center: Point,
        radius: f64,
        height: f64,
    },
    /// `height ψ(|x - c|²/ρ²)`.
    Bump {
        center: Point,
        radius: f64,
        height: f64,
    },
    /// `u · x + b`.
    Linear {
        gradient: Point,
        offset: f64,
    },
    /// `φ(u · (x - c))` with `φ(t) = t`, or `φ(t) = ψ(t²/w²)` when a width
    /// is given. Constant along `u^⟂`.
    Ridge {
        normal: Point,
        center: Point,
        width: Option<f64>,
    },
    Scaled(Box<ScalarTestFunction>, f64),
    /// `x -> f(x / λ)`.
    Dilated(Box<ScalarTestFunction>, f64),
}

impl ScalarTestFunction {
    pub fn scaled(self, factor: f64) -> Self {
        ScalarTestFunction::Scaled(Box::new(self), factor)
    }

    pub fn dilated(self, factor: f64) -> Self {
        ScalarTestFunction::Dilated(Box::new(self), factor)
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            ScalarTestFunction::Zero => 0.0,
            ScalarTestFunction::RadialCap { center, radius, height } => {
                let s = (x - center).norm_squared() / (radius * radius);
                if s < 1.0 {
                    height * (1.0 - s) * (1.0 - s)
                } else {
                    0.0
                }
            }
            ScalarTestFunction::Bump { center, radius, height } => {
                height * psi((x - center).norm_squared() / (radius * radius))
            }
            ScalarTestFunction::Linear { gradient, offset } => gradient.dot(x) + offset,
            ScalarTestFunction::Ridge { normal, center, width } => {
                let t = normal.dot(&(x - center));
                match width {
                    None => t,
                    Some(w) => psi(t * t / (w * w)),
                }
            }
            ScalarTestFunction::Scaled(inner, c) => c * inner.value(x),
            ScalarTestFunction::Dilated(inner, l) => inner.value(&(x / *l)),
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        match self {
            ScalarTestFunction::Zero => DVector::zeros(x.len()),
            ScalarTestFunction::RadialCap { center, radius, height } => {
                let rel = x - center;
                let r2 = radius * radius;
                let s = rel.norm_squared() / r2;
                if s < 1.0 {
                    rel * (-4.0 * height * (1.0 - s) / r2)
                } else {
                    DVector::zeros(x.len())
                }
            }
            ScalarTestFunction::Bump { center, radius, height } => {
                let rel = x - center;
                let r2 = radius * radius;
                let g = height * dpsi(rel.norm_squared() / r2) * 2.0 / r2;
                rel * g
            }
            ScalarTestFunction::Linear { gradient, .. } => gradient.clone(),
            ScalarTestFunction::Ridge { normal, center, width } => match width {
                None => normal.clone(),
                Some(w) => {
                    let t = normal.dot(&(x - center));
                    normal * (dpsi(t * t / (w * w)) * 2.0 * t / (w * w))
                }
            },
            ScalarTestFunction::Scaled(inner, c) => inner.gradient(x) * *c,
            ScalarTestFunction::Dilated(inner, l) => inner.gradient(&(x / *l)) / *l,
        }
    }

    /// A ball outside of which `f` vanishes, or `None` if it does not.
    pub fn support(&self) -> Option<(Point, f64)> {
        match self {
            ScalarTestFunction::Zero => Some((DVector::zeros(0), 0.0)),
            ScalarTestFunction::RadialCap { center, radius, .. } | ScalarTestFunction::Bump { center, radius, .. } => {
                Some((center.clone(), *radius))
            }
            ScalarTestFunction::Linear { gradient, offset } => {
                (gradient.norm() == 0.0 && *offset == 0.0).then(|| (DVector::zeros(0), 0.0))
            }
            ScalarTestFunction::Ridge { .. } => None,
            ScalarTestFunction::Scaled(inner, _) => inner.support(),
            ScalarTestFunction::Dilated(inner, l) => inner.support().map(|(c, r)| (c * *l, r * l)),
        }
    }

    /// Whether `f >= 0` everywhere.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            ScalarTestFunction::Zero => true,
            ScalarTestFunction::RadialCap { height, .. } | ScalarTestFunction::Bump { height, .. } => *height >= 0.0,
            ScalarTestFunction::Linear { gradient, offset } => gradient.norm() == 0.0 && *offset >= 0.0,
            ScalarTestFunction::Ridge { width, .. } => width.is_some(),
            ScalarTestFunction::Scaled(inner, c) => *c >= 0.0 && inner.is_nonnegative(),
            ScalarTestFunction::Dilated(inner, _) => inner.is_nonnegative(),
        }
    }
}

/// A map of class 1 from `R^n` to `R^k` with exact Jacobian (`k x n`).
pub trait C1Map {
    fn value(&self, x: &Point) -> DVector<f64>;
    fn jacobian(&self, x: &Point) -> DMatrix<f64>;
}

impl C1Map for ScalarTestFunction {
    fn value(&self, x: &Point) -> DVector<f64> {
        DVector::from_element(1, ScalarTestFunction::value(self, x))
    }

    fn jacobian(&self, x: &Point) -> DMatrix<f64> {
        let g = self.gradient(x);
        DMatrix::from_row_slice(1, g.len(), g.as_slice())
    }
}

/// `x -> A x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl C1Map for AffineMap {
    fn value(&self, x: &Point) -> DVector<f64> {
        &self.matrix * x + &self.offset
    }

    fn jacobian(&self, _x: &Point) -> DMatrix<f64> {
        self.matrix.clone()
    }
}
