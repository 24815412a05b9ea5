//! The experiment configuration: a TOML document listing jobs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point, Subspace, Tolerances};
use crate::inequalities::{BlowupKind, DeltaSource};
use crate::maximal::CenterStrategy;
use crate::variation::ScalarTestFunction;
use crate::varifold::{AnalyticFamily, Ball, FlatDisc, PlaneBundle, ProductSlab, SphereShell};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Config {
    /// Default seed for lemma suites without their own.
    #[serde(default)]
    pub seed: u64,
    /// Report directory; the command line and `VARIFOLD_OUT` can supply it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<Experiment>,
}

/// Reads `p` as a finite number, or `"inf"` / `"infinity"`.
pub fn exponent<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Integer(i64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Number(x) => Ok(x),
        Raw::Integer(x) => Ok(x as f64),
        Raw::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "+inf") => Ok(f64::INFINITY),
        Raw::Text(s) => Err(serde::de::Error::custom(format!(
            "expected a number or \"inf\", got \"{s}\""
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Round sphere; `axes` spans its `(m + 1)`-plane, all axes by default.
    Sphere {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        axes: Option<Vec<usize>>,
        #[serde(default = "one")]
        multiplicity: f64,
    },
    /// Flat disc in the plane of the listed coordinate axes.
    Disc {
        n: usize,
        axes: Vec<usize>,
        #[serde(default)]
        center: Option<Vec<f64>>,
        radius: f64,
        #[serde(default = "one")]
        multiplicity: f64,
    },
    /// Parallel planes along the first `m` axes, normalized to
    /// `‖V‖ U(0, 1) = α(n)`.
    PlaneBundle {
        n: usize,
        m: usize,
        k: usize,
        #[serde(default)]
        clipped: bool,
    },
    ProductSlab {
        axes: Vec<usize>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default = "one")]
        density: f64,
        #[serde(default)]
        complete: bool,
    },
}

fn one() -> f64 {
    1.0
}

fn point(v: &[f64]) -> Point {
    Point::from_column_slice(v)
}

impl FamilySpec {
    pub fn build(&self) -> Result<AnalyticFamily> {
        Ok(match self {
            FamilySpec::Sphere {
                center,
                radius,
                axes,
                multiplicity,
            } => {
                let n = center.len();
                let span = match axes {
                    Some(a) => Subspace::coordinate(n, a)?,
                    None => Subspace::full(n),
                };
                AnalyticFamily::Sphere(SphereShell::new(point(center), *radius, span, *multiplicity)?)
            }
            FamilySpec::Disc {
                n,
                axes,
                center,
                radius,
                multiplicity,
            } => {
                let c = center.as_deref().map_or_else(|| Point::zeros(*n), point);
                AnalyticFamily::Disc(FlatDisc::new(
                    c,
                    Subspace::coordinate(*n, axes)?,
                    *radius,
                    *multiplicity,
                )?)
            }
            FamilySpec::PlaneBundle { n, m, k, clipped } => {
                if !(*m >= 1 && m < n) {
                    return Err(Error::Argument(format!(
                        "plane bundle needs 1 <= m < n, got m = {m}, n = {n}"
                    )));
                }
                let axes: Vec<usize> = (0..*m).collect();
                AnalyticFamily::Bundle(PlaneBundle::unit_ball_normalized(
                    Subspace::coordinate(*n, &axes)?,
                    *k,
                    *clipped,
                )?)
            }
            FamilySpec::ProductSlab {
                axes,
                lower,
                upper,
                density,
                complete,
            } => AnalyticFamily::Slab(ProductSlab::new(
                Subspace::coordinate(lower.len(), axes)?,
                point(lower),
                point(upper),
                *density,
                *complete,
            )?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Zero,
    RadialCap {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        height: f64,
    },
    Bump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        height: f64,
    },
    Linear {
        gradient: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    Ridge {
        normal: Vec<f64>,
        center: Vec<f64>,
        #[serde(default)]
        width: Option<f64>,
    },
}

impl FunctionSpec {
    pub fn build(&self) -> ScalarTestFunction {
        match self {
            FunctionSpec::Zero => ScalarTestFunction::Zero,
            FunctionSpec::RadialCap { center, radius, height } => ScalarTestFunction::RadialCap {
                center: point(center),
                radius: *radius,
                height: *height,
            },
            FunctionSpec::Bump { center, radius, height } => ScalarTestFunction::Bump {
                center: point(center),
                radius: *radius,
                height: *height,
            },
            FunctionSpec::Linear { gradient, offset } => ScalarTestFunction::Linear {
                gradient: point(gradient),
                offset: *offset,
            },
            FunctionSpec::Ridge { normal, center, width } => ScalarTestFunction::Ridge {
                normal: point(normal),
                center: point(center),
                width: *width,
            },
        }
    }

    fn dims(&self) -> Vec<usize> {
        match self {
            FunctionSpec::Zero => Vec::new(),
            FunctionSpec::RadialCap { center, .. } | FunctionSpec::Bump { center, .. } => vec![center.len()],
            FunctionSpec::Linear { gradient, .. } => vec![gradient.len()],
            FunctionSpec::Ridge { normal, center, .. } => vec![normal.len(), center.len()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct MaximalSpec {
    pub s_min: f64,
    pub s_max: f64,
    #[serde(default = "default_centers")]
    pub centers: CenterStrategy,
    #[serde(default = "default_radii")]
    pub radii_per_center: usize,
}

fn default_centers() -> CenterStrategy {
    CenterStrategy::AtomsAndQuery
}

fn default_radii() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    pub fn build(&self) -> Ball {
        Ball {
            center: point(&self.center),
            radius: self.radius,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaKind {
    Iteration,
    Calculus,
    WeakLp,
    Superlevel,
}

fn analytic() -> DeltaSource {
    DeltaSource::Analytic
}

fn half() -> f64 {
    0.5
}

fn lemma_count() -> usize {
    1000
}

fn levels() -> usize {
    16
}

fn cells() -> usize {
    65
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    #[serde(rename_all = "camelCase")]
    Isoperimetric {
        name: String,
        family: FamilySpec,
        h: f64,
        d: f64,
        #[serde(default = "analytic")]
        delta_source: DeltaSource,
        #[serde(default)]
        maximal: Option<MaximalSpec>,
    },
    #[serde(rename_all = "camelCase")]
    BallIso {
        name: String,
        family: FamilySpec,
        h: f64,
        /// Defaults to the origin.
        #[serde(default)]
        center: Option<Vec<f64>>,
        /// Defaults to the largest distance from the center to the support.
        #[serde(default)]
        radius: Option<f64>,
        #[serde(default = "analytic")]
        delta_source: DeltaSource,
    },
    SizeIso {
        name: String,
        family: FamilySpec,
        d: f64,
    },
    #[serde(rename_all = "camelCase")]
    SobolevAveraged {
        name: String,
        family: FamilySpec,
        h: f64,
        function: FunctionSpec,
        d: f64,
        #[serde(default = "half")]
        lambda: f64,
        radius: f64,
        /// The Besicovitch number `beta(n)`; there is no default.
        besicovitch: f64,
        #[serde(default)]
        domain: Option<BallSpec>,
    },
    SobolevRectifiable {
        name: String,
        family: FamilySpec,
        h: f64,
        function: FunctionSpec,
        d: f64,
    },
    Poincare {
        name: String,
        family: FamilySpec,
        h: f64,
        function: FunctionSpec,
        center: Vec<f64>,
        radius: f64,
    },
    #[serde(rename_all = "camelCase")]
    Blowup {
        name: String,
        series: BlowupKind,
        #[serde(deserialize_with = "exponent")]
        p: f64,
        /// Ambient dimension; for the plane families also `m`.
        n: usize,
        #[serde(default)]
        m: Option<usize>,
        steps: usize,
        /// Cells per axis for the Lebesgue series (odd).
        #[serde(default = "cells")]
        cells: usize,
        /// Assert divergence; defaults to `p > n/(n - 1)`.
        #[serde(default)]
        expect_divergence: Option<bool>,
    },
    MedianContrast {
        name: String,
        m: usize,
        n: usize,
        steps: usize,
        #[serde(default = "half")]
        lambda: f64,
    },
    Decomposition {
        name: String,
        family: FamilySpec,
        function: FunctionSpec,
        h: f64,
        #[serde(default = "levels")]
        levels: usize,
    },
    Lemma {
        name: String,
        lemma: LemmaKind,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "lemma_count")]
        count: usize,
    },
    /// The weak-`L^p` estimate on explicit atomic data.
    WeakEmbedding {
        name: String,
        weights: Vec<f64>,
        values: Vec<f64>,
        #[serde(deserialize_with = "exponent")]
        p: f64,
        q: f64,
    },
}

impl Experiment {
    pub fn name(&self) -> &str {
        match self {
            Experiment::Isoperimetric { name, .. }
            | Experiment::BallIso { name, .. }
            | Experiment::SizeIso { name, .. }
            | Experiment::SobolevAveraged { name, .. }
            | Experiment::SobolevRectifiable { name, .. }
            | Experiment::Poincare { name, .. }
            | Experiment::Blowup { name, .. }
            | Experiment::MedianContrast { name, .. }
            | Experiment::Decomposition { name, .. }
            | Experiment::Lemma { name, .. }
            | Experiment::WeakEmbedding { name, .. } => name,
        }
    }

    fn family(&self) -> Option<&FamilySpec> {
        match self {
            Experiment::Isoperimetric { family, .. }
            | Experiment::BallIso { family, .. }
            | Experiment::SizeIso { family, .. }
            | Experiment::SobolevAveraged { family, .. }
            | Experiment::SobolevRectifiable { family, .. }
            | Experiment::Poincare { family, .. }
            | Experiment::Decomposition { family, .. } => Some(family),
            _ => None,
        }
    }

    fn function(&self) -> Option<&FunctionSpec> {
        match self {
            Experiment::SobolevAveraged { function, .. }
            | Experiment::SobolevRectifiable { function, .. }
            | Experiment::Poincare { function, .. }
            | Experiment::Decomposition { function, .. } => Some(function),
            _ => None,
        }
    }
}

fn schema(path: String, detail: impl Into<String>) -> Error {
    Error::Schema {
        path,
        detail: detail.into(),
    }
}

fn positive(path: &str, field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(schema(
            format!("{path}.{field}"),
            format!("must be positive and finite, got {x}"),
        ))
    }
}

fn family_dim(f: &FamilySpec) -> usize {
    match f {
        FamilySpec::Sphere { center, .. } => center.len(),
        FamilySpec::Disc { n, .. } | FamilySpec::PlaneBundle { n, .. } => *n,
        FamilySpec::ProductSlab { lower, .. } => lower.len(),
    }
}

fn validate_family(path: &str, f: &FamilySpec) -> Result<()> {
    let path = format!("{path}.family");
    let n = family_dim(f);
    if n == 0 {
        return Err(schema(path, "ambient dimension must be positive"));
    }
    let check_axes = |axes: &[usize]| -> Result<()> {
        if axes.is_empty() || axes.iter().any(|&a| a >= n) {
            return Err(schema(
                format!("{path}.axes"),
                format!("axes must be nonempty and below n = {n}"),
            ));
        }
        Ok(())
    };
    match f {
        FamilySpec::Sphere {
            radius,
            axes,
            multiplicity,
            ..
        } => {
            positive(&path, "radius", *radius)?;
            positive(&path, "multiplicity", *multiplicity)?;
            if let Some(a) = axes {
                check_axes(a)?;
            }
        }
        FamilySpec::Disc {
            axes,
            center,
            radius,
            multiplicity,
            ..
        } => {
            check_axes(axes)?;
            positive(&path, "radius", *radius)?;
            positive(&path, "multiplicity", *multiplicity)?;
            if center.as_ref().is_some_and(|c| c.len() != n) {
                return Err(schema(format!("{path}.center"), format!("expected {n} coordinates")));
            }
        }
        FamilySpec::PlaneBundle { m, k, .. } => {
            if *m == 0 || *m >= n {
                return Err(schema(format!("{path}.m"), format!("need 1 <= m < n = {n}")));
            }
            if *k == 0 {
                return Err(schema(format!("{path}.k"), "need at least one plane per direction"));
            }
        }
        FamilySpec::ProductSlab {
            axes,
            lower,
            upper,
            density,
            ..
        } => {
            check_axes(axes)?;
            positive(&path, "density", *density)?;
            if upper.len() != n || lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
                return Err(schema(format!("{path}.upper"), "need lower < upper coordinatewise"));
            }
        }
    }
    Ok(())
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let de = toml::Deserializer::new(text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(path, e.into_inner().message().trim().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Structural checks done before any computation: unique names,
    /// positive resolutions and thresholds, matching dimensions.
    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::BTreeSet::new();
        for (i, e) in self.experiments.iter().enumerate() {
            let path = format!("experiment[{i}]");
            if e.name().is_empty() {
                return Err(schema(format!("{path}.name"), "must not be empty"));
            }
            if !names.insert(e.name()) {
                return Err(schema(
                    format!("{path}.name"),
                    format!("duplicate experiment name \"{}\"", e.name()),
                ));
            }
            if let Some(f) = e.family() {
                validate_family(&path, f)?;
                if let Some(g) = e.function() {
                    let n = family_dim(f);
                    if g.dims().iter().any(|&k| k != n) {
                        return Err(schema(format!("{path}.function"), format!("expected points of R^{n}")));
                    }
                }
            }
            match e {
                Experiment::Isoperimetric { h, d, maximal, .. } => {
                    positive(&path, "h", *h)?;
                    positive(&path, "d", *d)?;
                    if let Some(mx) = maximal {
                        positive(&path, "maximal.sMin", mx.s_min)?;
                        positive(&path, "maximal.sMax", mx.s_max)?;
                    }
                }
                Experiment::BallIso { h, radius, .. } => {
                    positive(&path, "h", *h)?;
                    if let Some(r) = radius {
                        positive(&path, "radius", *r)?;
                    }
                }
                Experiment::SizeIso { d, .. } => positive(&path, "d", *d)?,
                Experiment::SobolevAveraged {
                    h,
                    d,
                    lambda,
                    radius,
                    besicovitch,
                    ..
                } => {
                    if !(*besicovitch >= 1.0 && besicovitch.is_finite()) {
                        return Err(schema(
                            format!("{path}.besicovitch"),
                            format!("need 1 <= besicovitch < inf, got {besicovitch}"),
                        ));
                    }
                    positive(&path, "h", *h)?;
                    positive(&path, "d", *d)?;
                    positive(&path, "radius", *radius)?;
                    if !(*lambda > 0.0 && *lambda < 1.0) {
                        return Err(schema(
                            format!("{path}.lambda"),
                            format!("need 0 < lambda < 1, got {lambda}"),
                        ));
                    }
                }
                Experiment::SobolevRectifiable { h, d, .. } => {
                    positive(&path, "h", *h)?;
                    positive(&path, "d", *d)?;
                }
                Experiment::Poincare { h, radius, .. } => {
                    positive(&path, "h", *h)?;
                    positive(&path, "radius", *radius)?;
                }
                Experiment::Blowup { steps, n, .. } | Experiment::MedianContrast { steps, n, .. } => {
                    if *steps < 2 {
                        return Err(schema(format!("{path}.steps"), "need at least two steps"));
                    }
                    if *n < 2 {
                        return Err(schema(format!("{path}.n"), "need n >= 2"));
                    }
                }
                Experiment::Decomposition { h, levels, .. } => {
                    positive(&path, "h", *h)?;
                    if *levels == 0 {
                        return Err(schema(format!("{path}.levels"), "need at least one level"));
                    }
                }
                Experiment::Lemma { count, .. } => {
                    if *count == 0 {
                        return Err(schema(format!("{path}.count"), "need at least one instance"));
                    }
                }
                Experiment::WeakEmbedding { weights, values, .. } => {
                    if weights.len() != values.len() {
                        return Err(schema(format!("{path}.values"), "one value per weight"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_small_config() {
        let c = Config::from_toml(
            r#"
            seed = 3
            [tolerances]
            report = 1e-8

            [[experiment]]
            kind = "ball-iso"
            name = "disc"
            family = { kind = "disc", n = 3, axes = [0, 1], radius = 1.0 }
            h = 0.05

            [[experiment]]
            kind = "blowup"
            name = "bundle"
            series = "planeBundle"
            p = "inf"
            n = 2
            m = 1
            steps = 4
            "#,
        )
        .unwrap();
        assert_eq!(c.experiments.len(), 2);
        assert_eq!(c.tolerances.report, 1e-8);
        match &c.experiments[1] {
            Experiment::Blowup { p, .. } => assert!(p.is_infinite()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_config_is_valid() {
        assert!(Config::from_toml("").unwrap().experiments.is_empty());
    }

    fn schema_path(text: &str) -> String {
        match Config::from_toml(text).unwrap_err() {
            Error::Schema { path, .. } => path,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_errors_with_paths() {
        let path = schema_path(
            r#"
            [[experiment]]
            kind = "size-iso"
            name = "a"
            family = { kind = "disc", n = 3, axes = [0, 1], radius = 1.0 }
            dd = 1.0
            "#,
        );
        assert!(path.starts_with("experiment[0]"), "{path}");
        let path = schema_path(
            r#"
            [[experiment]]
            kind = "size-iso"
            name = "a"
            d = 1.0
            family = { kind = "disc", n = 3, axes = [0, 1], radius = 1.0, colour = 2 }
            "#,
        );
        assert!(path.starts_with("experiment[0]"), "{path}");
        let detail = Config::from_toml(
            r#"
            [[experiment]]
            kind = "size-iso"
            name = "a"
            d = 1.0
            family = { kind = "disc", n = 3, axes = [0, 1], radius = 1.0, colour = 2 }
            "#,
        )
        .unwrap_err()
        .to_string();
        assert!(detail.contains("colour"), "{detail}");
        assert_eq!(schema_path("[tolerances]\nreprot = 1.0\n"), "tolerances.reprot");
    }

    #[test]
    fn ranges_are_checked_before_running() {
        let path = schema_path(
            r#"
            [[experiment]]
            kind = "isoperimetric"
            name = "a"
            family = { kind = "sphere", center = [0.0, 0.0], radius = 1.0 }
            h = -0.1
            d = 1.0
            "#,
        );
        assert_eq!(path, "experiment[0].h");
        let path = schema_path(
            r#"
            [[experiment]]
            kind = "lemma"
            name = "a"
            lemma = "iteration"
            [[experiment]]
            kind = "lemma"
            name = "a"
            lemma = "calculus"
            "#,
        );
        assert_eq!(path, "experiment[1].name");
    }

    #[test]
    fn families_build() {
        let specs = [
            FamilySpec::Sphere {
                center: vec![0.0, 0.0, 0.0],
                radius: 1.0,
                axes: Some(vec![0, 1]),
                multiplicity: 1.0,
            },
            FamilySpec::PlaneBundle {
                n: 2,
                m: 1,
                k: 4,
                clipped: true,
            },
        ];
        assert_eq!(specs[0].build().unwrap().m(), 1);
        assert_eq!(specs[1].build().unwrap().n(), 2);
    }
}
