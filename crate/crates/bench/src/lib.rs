//! Fixtures shared by the benchmarks.

use varifold_core::{AnalyticFamily, DiscreteVarifold, Point, SphereShell};

/// The unit 2-sphere in R^3 sampled at spacing `h`.
pub fn sphere(h: f64) -> DiscreteVarifold {
    let shell = SphereShell::hypersphere(Point::zeros(3), 1.0, 1.0).expect("unit sphere");
    AnalyticFamily::Sphere(shell).sample(h).expect("sample")
}

/// The unit circle in R^2 sampled at spacing `h`.
pub fn circle(h: f64) -> DiscreteVarifold {
    let shell = SphereShell::hypersphere(Point::zeros(2), 1.0, 1.0).expect("unit circle");
    AnalyticFamily::Sphere(shell).sample(h).expect("sample")
}
