//! Executes configured experiments and writes their reports.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::config::{Config, Experiment, LemmaKind};
use crate::error::{Error, Result};
use crate::geom::{Point, Tolerances};
use crate::inequalities::blowup::{critical_exponent, lebesgue_scaling, median_contrast, plane_bundle, sobolev_vs_iso};
use crate::inequalities::report::format_float;
use crate::inequalities::theorems::{
    delta_total, verify_ball_iso, verify_isoperimetric, verify_poincare, verify_size_iso, verify_sobolev_avg,
    verify_sobolev_rect, SobolevAveraged,
};
use crate::inequalities::{gamma_lower_bound, lemmas, structure, BlowupKind, BlowupSeries, GammaBound};
use crate::inequalities::{LemmaSuiteReport, VerificationReport};
use crate::maximal::{MaximalParams, MedianParams};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunOutput {
    pub reports: Vec<VerificationReport>,
    pub series: Vec<BlowupSeries>,
    pub lemmas: Vec<LemmaSuiteReport>,
    pub gamma: Vec<GammaBound>,
}

impl RunOutput {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
            && self.series.iter().all(|s| s.pass)
            && self.lemmas.iter().all(|l| l.pass)
            && self.gamma.iter().all(|g| g.consistent)
    }

    pub fn summaries(&self) -> Vec<String> {
        let mut out: Vec<String> = self.reports.iter().map(VerificationReport::summary).collect();
        out.extend(self.series.iter().map(BlowupSeries::summary));
        out.extend(self.lemmas.iter().map(LemmaSuiteReport::summary));
        out.extend(self.gamma.iter().map(|g| {
            format!(
                "{} gamma({}) >= {:.7} from {} ({} instances, upper {:.4})",
                if g.consistent { "PASS" } else { "FAIL" },
                g.m,
                g.lower,
                g.source,
                g.instances,
                g.upper
            )
        }));
        out
    }
}

pub enum JobOutput {
    Reports(Vec<VerificationReport>),
    Series(BlowupSeries),
    Lemma(LemmaSuiteReport),
}

fn sweep(steps: usize) -> Vec<usize> {
    (1..=steps).map(|j| 1usize << j).collect()
}

/// Runs one experiment.
pub fn run_experiment(e: &Experiment, seed: u64, tol: &Tolerances) -> Result<JobOutput> {
    Ok(match e {
        Experiment::Isoperimetric {
            name,
            family,
            h,
            d,
            delta_source,
            maximal,
        } => {
            let v = family.build()?.sample(*h)?;
            let params = match maximal {
                Some(m) => MaximalParams::new(m.s_min, m.s_max, m.centers.clone(), m.radii_per_center)?,
                None => MaximalParams::for_resolution(&v, *h)?,
            };
            let delta = delta_total(&v, *delta_source, &[])?;
            JobOutput::Reports(vec![verify_isoperimetric(name, &v, *d, &params, &delta, tol)?])
        }
        Experiment::BallIso {
            name,
            family,
            h,
            center,
            radius,
            delta_source,
        } => {
            let family = family.build()?;
            let a = center
                .as_deref()
                .map_or_else(|| Point::zeros(family.n()), Point::from_column_slice);
            let r = radius.unwrap_or_else(|| family.support_max_distance(&a));
            let v = family.sample(*h)?;
            let delta = delta_total(&v, *delta_source, &[])?;
            JobOutput::Reports(vec![verify_ball_iso(name, &v, &a, r, &delta, tol)?])
        }
        Experiment::SizeIso { name, family, d } => {
            JobOutput::Reports(verify_size_iso(name, &family.build()?, *d, tol)?)
        }
        Experiment::SobolevAveraged {
            name,
            family,
            h,
            function,
            d,
            lambda,
            radius,
            besicovitch,
            domain,
        } => {
            let v = family.build()?.sample(*h)?;
            let params = SobolevAveraged {
                d: *d,
                median: MedianParams::new(*lambda)?,
                radius: *radius,
                besicovitch: Some(*besicovitch),
                domain: domain.as_ref().map(|b| b.build()),
            };
            JobOutput::Reports(vec![verify_sobolev_avg(name, &v, &function.build(), &params, tol)?])
        }
        Experiment::SobolevRectifiable {
            name,
            family,
            h,
            function,
            d,
        } => {
            let v = family.build()?.sample(*h)?;
            JobOutput::Reports(vec![verify_sobolev_rect(name, &v, &function.build(), *d, tol)?])
        }
        Experiment::Poincare {
            name,
            family,
            h,
            function,
            center,
            radius,
        } => {
            let v = family.build()?.sample(*h)?;
            let a = Point::from_column_slice(center);
            JobOutput::Reports(vec![verify_poincare(name, &v, &function.build(), &a, *radius, tol)?])
        }
        Experiment::Blowup {
            name,
            series,
            p,
            n,
            m,
            steps,
            cells,
            expect_divergence,
        } => {
            let divergent = expect_divergence.unwrap_or(*p > critical_exponent(*n));
            let m = m.unwrap_or(n - 1);
            JobOutput::Series(match series {
                BlowupKind::LebesgueScaling => lebesgue_scaling(name, *n, *p, *steps, *cells, divergent)?,
                BlowupKind::PlaneBundle => plane_bundle(name, m, *n, *p, &sweep(*steps), divergent)?,
                BlowupKind::SobolevVsIso => {
                    let beta = if m == 1 {
                        f64::INFINITY
                    } else {
                        m as f64 / (m as f64 - 1.0)
                    };
                    if *p != beta {
                        return Err(Error::Argument(format!(
                            "the sobolevVsIso series uses p = m/(m - 1) = {}, got {p}",
                            format_float(beta)
                        )));
                    }
                    sobolev_vs_iso(name, m, *n, &sweep(*steps), tol)?
                }
            })
        }
        Experiment::MedianContrast {
            name,
            m,
            n,
            steps,
            lambda,
        } => JobOutput::Series(median_contrast(
            name,
            *m,
            *n,
            &sweep(*steps),
            &MedianParams::new(*lambda)?,
            tol,
        )?),
        Experiment::Decomposition {
            name,
            family,
            function,
            h,
            levels,
        } => JobOutput::Reports(vec![structure::decomposition_check(
            name,
            &family.build()?,
            &function.build(),
            *h,
            *levels,
            tol,
        )?]),
        Experiment::Lemma {
            name,
            lemma,
            seed: own,
            count,
        } => {
            let seed = own.unwrap_or(seed);
            let mut report = match lemma {
                LemmaKind::Iteration => lemmas::iteration_suite(seed, *count)?,
                LemmaKind::Calculus => lemmas::calculus_suite(seed, *count)?,
                LemmaKind::WeakLp => lemmas::weak_lp_suite(seed, *count)?,
                LemmaKind::Superlevel => lemmas::superlevel_suite(seed, *count)?,
            };
            report.name = name.clone();
            JobOutput::Lemma(report)
        }
        Experiment::WeakEmbedding {
            name,
            weights,
            values,
            p,
            q,
        } => {
            let o = lemmas::weak_lp_check(weights, values, *p, *q)?;
            JobOutput::Reports(vec![VerificationReport::new(name, "weak-embedding", o.lhs, o.rhs, tol)
                .num("p", *p)
                .num("q", *q)
                .num("kappa", o.kappa)
                .num("supportMass", o.support_mass)])
        }
    })
}

/// Runs every experiment, in parallel, and merges the results in name
/// order. The first failing job in that order determines the error.
pub fn run(config: &Config) -> Result<RunOutput> {
    let mut jobs: Vec<(&str, Result<JobOutput>)> = config
        .experiments
        .par_iter()
        .map(|e| {
            log::info!("running {}", e.name());
            (e.name(), run_experiment(e, config.seed, &config.tolerances))
        })
        .collect();
    jobs.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = RunOutput::default();
    for (name, job) in jobs {
        match job.map_err(|e| annotate(name, e))? {
            JobOutput::Reports(r) => out.reports.extend(r),
            JobOutput::Series(s) => out.series.push(s),
            JobOutput::Lemma(l) => out.lemmas.push(l),
        }
    }
    out.reports.sort_by(|a, b| a.name.cmp(&b.name));
    out.gamma = gamma_lower_bound(&out.reports);
    Ok(out)
}

fn annotate(name: &str, e: Error) -> Error {
    match e {
        Error::Precondition { theorem, detail } => Error::Precondition {
            theorem,
            detail: format!("{detail} (experiment \"{name}\")"),
        },
        Error::Resolution { detail, hint } => Error::Resolution {
            detail: format!("{detail} (experiment \"{name}\")"),
            hint,
        },
        Error::Domain(d) => Error::Domain(format!("{d} (experiment \"{name}\")")),
        Error::Argument(d) => Error::Argument(format!("{d} (experiment \"{name}\")")),
        other => other,
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn float_cell(x: f64) -> String {
    format_float(x)
}

/// One row per report; parameters flattened to the sorted union of keys.
pub fn write_reports_csv<W: std::io::Write>(reports: &[VerificationReport], out: W) -> Result<()> {
    let keys: BTreeSet<&str> = reports
        .iter()
        .flat_map(|r| r.params.keys().map(String::as_str))
        .collect();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "name",
        "theorem",
        "lhs",
        "rhs",
        "ratio",
        "pass",
        "impliedGammaLowerBound",
        "conservative",
    ];
    header.extend(keys.iter().copied());
    w.write_record(&header)?;
    for r in reports {
        let mut flags = Vec::with_capacity(r.conservative.len());
        for f in &r.conservative {
            let side = cell(&serde_json::to_value(f.side)?);
            let direction = cell(&serde_json::to_value(f.direction)?);
            flags.push(format!("{side}:{direction}:{}", f.quantity));
        }
        let mut row = vec![
            r.name.clone(),
            r.theorem.clone(),
            float_cell(r.lhs),
            float_cell(r.rhs),
            float_cell(r.ratio),
            r.pass.to_string(),
            r.implied_gamma.map(float_cell).unwrap_or_default(),
            flags.join(";"),
        ];
        row.extend(keys.iter().map(|k| r.params.get(*k).map(cell).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per step of every series.
pub fn write_series_csv<W: std::io::Write>(series: &[BlowupSeries], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "name",
        "kind",
        "p",
        "step",
        "parameter",
        "norm",
        "budget",
        "growthFactor",
        "medianNorm",
        "pass",
    ])?;
    for s in series {
        for i in 0..s.norms.len() {
            w.write_record([
                s.name.clone(),
                s.kind.clone(),
                float_cell(s.p),
                i.to_string(),
                float_cell(s.parameters[i]),
                float_cell(s.norms[i]),
                float_cell(s.budgets[i]),
                s.growth[i].map(float_cell).unwrap_or_default(),
                s.median_norms.as_ref().map(|g| float_cell(g[i])).unwrap_or_default(),
                s.pass.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_lemmas_csv<W: std::io::Write>(lemmas: &[LemmaSuiteReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "instances", "rejected", "violations", "pass"])?;
    for l in lemmas {
        w.write_record([
            l.name.clone(),
            l.instances.to_string(),
            l.rejected.to_string(),
            l.violations.to_string(),
            l.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gamma_csv<W: std::io::Write>(gamma: &[GammaBound], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "lower", "source", "instances", "discValue", "upper", "consistent"])?;
    for g in gamma {
        w.write_record([
            g.m.to_string(),
            float_cell(g.lower),
            g.source.clone(),
            g.instances.to_string(),
            float_cell(g.disc_value),
            float_cell(g.upper),
            g.consistent.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `reports.csv`, `series.csv`, `lemmas.csv`, `gamma.csv` and
/// `report.json` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let files = [
        dir.join("reports.csv"),
        dir.join("series.csv"),
        dir.join("lemmas.csv"),
        dir.join("gamma.csv"),
        dir.join("report.json"),
    ];
    write_reports_csv(&out.reports, std::fs::File::create(&files[0])?)?;
    write_series_csv(&out.series, std::fs::File::create(&files[1])?)?;
    write_lemmas_csv(&out.lemmas, std::fs::File::create(&files[2])?)?;
    write_gamma_csv(&out.gamma, std::fs::File::create(&files[3])?)?;
    let mut json = serde_json::to_string_pretty(out)?;
    json.push('\n');
    std::fs::write(&files[4], json)?;
    Ok(files.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
        seed = 9

        [[experiment]]
        kind = "ball-iso"
        name = "b-disc"
        family = { kind = "disc", n = 3, axes = [0, 1], radius = 1.0 }
        h = 0.05

        [[experiment]]
        kind = "size-iso"
        name = "a-size"
        family = { kind = "disc", n = 3, axes = [0, 1], radius = 1.0 }
        d = 1.0

        [[experiment]]
        kind = "lemma"
        name = "c-superlevel"
        lemma = "superlevel"
        count = 50

        [[experiment]]
        kind = "blowup"
        name = "d-lebesgue"
        series = "lebesgueScaling"
        p = "inf"
        n = 2
        steps = 3
        cells = 17
    "#;

    #[test]
    fn runs_and_merges_by_name() {
        let config = Config::from_toml(SMALL).unwrap();
        let out = run(&config).unwrap();
        let names: Vec<&str> = out.reports.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["a-size/level", "a-size/mass", "b-disc"]);
        assert!(out.all_pass(), "{:?}", out.summaries());
        assert_eq!(out.gamma.len(), 1);
        assert!((out.gamma[0].lower - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn outputs_are_deterministic() {
        let config = Config::from_toml(SMALL).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = write_outputs(a.path(), &run(&config).unwrap()).unwrap();
        let fb = write_outputs(b.path(), &run(&config).unwrap()).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
        let csv = std::fs::read_to_string(&fa[0]).unwrap();
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("name,theorem,lhs,rhs,ratio,pass,impliedGammaLowerBound,conservative,"));
        assert!(header.contains(",h,"));
    }

    #[test]
    fn precondition_errors_name_the_experiment() {
        let config = Config::from_toml(
            r#"
            [[experiment]]
            kind = "weak-embedding"
            name = "bad"
            weights = [1.0]
            values = [1.0]
            p = 2.0
            q = 2.0
            "#,
        )
        .unwrap();
        let e = run(&config).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("bad"));
    }
}
