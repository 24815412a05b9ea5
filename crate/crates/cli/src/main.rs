//! `varifold`: run inequality experiments from a config file or from flags.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use varifold_core::experiment::config::{LemmaKind, MaximalSpec};
use varifold_core::varifold::io;
use varifold_core::{
    run, write_outputs, BlowupKind, CenterStrategy, Config, DeltaSource, Error, Experiment, FamilySpec, FunctionSpec,
    Result, RunOutput,
};

const OUT_ENV: &str = "VARIFOLD_OUT";
const DEFAULT_OUT: &str = "varifold-out";

#[derive(Parser)]
#[command(name = "varifold", version, about = "Numerical checks of varifold inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Base config; its seed, tolerances and output are used unless
    /// overridden by flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: config `output`, then $VARIFOLD_OUT, then
    /// ./varifold-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override `tolerances.report`.
    #[arg(long)]
    tol_report: Option<f64>,
    /// Override `tolerances.threshold`.
    #[arg(long)]
    tol_threshold: Option<f64>,
    /// Print summaries only, write no files.
    #[arg(long)]
    no_write: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a config file.
    Run {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check one theorem on one family.
    Verify(VerifyArgs),
    /// Compute a blow-up series.
    Blowup(BlowupArgs),
    /// Aggregate implied lower bounds for gamma(m).
    GammaBound(GammaArgs),
    /// Run the randomized lemma suites.
    Lemmas(LemmaArgs),
    /// Read a varifold CSV and write it back.
    Convert {
        input: PathBuf,
        /// Destination; stdout when omitted.
        output: Option<PathBuf>,
    },
    /// Sample an analytic family into a varifold CSV.
    Sample {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        /// Destination; stdout when omitted.
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Theorem {
    Isoperimetric,
    BallIso,
    SizeIso,
    SobolevAveraged,
    SobolevRectifiable,
    Poincare,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Sphere,
    Disc,
    PlaneBundle,
    Slab,
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctionKind {
    Zero,
    RadialCap,
    Bump,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Analytic,
    DictionaryLowerBound,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeriesKind {
    LebesgueScaling,
    PlaneBundle,
    SobolevVsIso,
    MedianContrast,
}

#[derive(Clone, Copy, ValueEnum)]
enum LemmaChoice {
    All,
    Iteration,
    Calculus,
    WeakLp,
    Superlevel,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "disc")]
    family: FamilyKind,
    /// Dimension of the varifold.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Ambient dimension (default m + 1).
    #[arg(long)]
    n: Option<usize>,
    /// Sphere or disc radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    multiplicity: f64,
    /// Number of planes of a plane bundle.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Clip the plane bundle to the unit ball.
    #[arg(long)]
    clipped: bool,
    /// Slab half width.
    #[arg(long, default_value_t = 1.0)]
    half_width: f64,
    /// Slab density.
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    /// Use complete planes for the slab.
    #[arg(long)]
    complete: bool,
}

impl FamilyArgs {
    fn spec(&self) -> FamilySpec {
        let n = self.n.unwrap_or(self.m + 1);
        let axes: Vec<usize> = (0..self.m).collect();
        match self.family {
            FamilyKind::Sphere => FamilySpec::Sphere {
                center: vec![0.0; n],
                radius: self.radius,
                axes: Some((0..=self.m).collect()),
                multiplicity: self.multiplicity,
            },
            FamilyKind::Disc => FamilySpec::Disc {
                n,
                axes,
                center: None,
                radius: self.radius,
                multiplicity: self.multiplicity,
            },
            FamilyKind::PlaneBundle => FamilySpec::PlaneBundle {
                n,
                m: self.m,
                k: self.k,
                clipped: self.clipped,
            },
            FamilyKind::Slab => FamilySpec::ProductSlab {
                axes,
                lower: vec![-self.half_width; self.m],
                upper: vec![self.half_width; self.m],
                density: self.density,
                complete: self.complete,
            },
        }
    }

    fn n(&self) -> usize {
        self.n.unwrap_or(self.m + 1)
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    theorem: Theorem,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Density threshold.
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    #[arg(long, value_enum, default_value = "analytic")]
    delta_source: Source,
    /// Smallest radius of the maximal function.
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    /// Grid centers with this many points per axis (odd).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum, default_value = "bump")]
    function: FunctionKind,
    /// Support radius of the test function.
    #[arg(long, default_value_t = 0.5)]
    function_radius: f64,
    /// Ball center, comma separated (default origin).
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    /// Ball radius for ball-iso and poincare, r for sobolev-averaged.
    #[arg(long)]
    ball_radius: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// The Besicovitch number beta(n); required for sobolev-averaged.
    #[arg(long)]
    besicovitch: Option<f64>,
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BlowupArgs {
    #[arg(long, value_enum)]
    kind: SeriesKind,
    /// Exponent, a number or `inf`.
    #[arg(long, default_value = "inf", value_parser = parse_exponent)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 4)]
    steps: usize,
    #[arg(long, default_value_t = 65)]
    cells: usize,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long)]
    expect_divergence: Option<bool>,
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GammaArgs {
    /// Dimensions to probe; repeat or comma separate.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    m: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long, value_enum, default_value = "all")]
    lemma: LemmaChoice,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[command(flatten)]
    common: Common,
}

fn parse_exponent(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|e| format!("expected a number or inf: {e}")),
    }
}

fn base_config(common: &Common) -> Result<Config> {
    let mut config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(t) = common.tol_report {
        config.tolerances.report = t;
    }
    if let Some(t) = common.tol_threshold {
        config.tolerances.threshold = t;
    }
    Ok(config)
}

fn output_dir(common: &Common, config: &Config) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.output.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Runs `config`, prints summaries, writes reports, and returns whether
/// everything passed.
fn execute(config: &Config, common: &Common) -> Result<bool> {
    config.validate()?;
    let out = run(config)?;
    report(&out);
    if !common.no_write {
        let dir = output_dir(common, config);
        write_outputs(&dir, &out)?;
        log::info!("reports written to {}", dir.display());
    }
    Ok(out.all_pass())
}

fn report(out: &RunOutput) {
    for line in out.summaries() {
        log::info!("{line}");
        println!("{line}");
    }
}

fn single(common: &Common, experiment: Experiment) -> Result<bool> {
    let mut config = base_config(common)?;
    config.experiments = vec![experiment];
    execute(&config, common)
}

fn function_spec(kind: FunctionKind, n: usize, radius: f64) -> FunctionSpec {
    let center = vec![0.0; n];
    match kind {
        FunctionKind::Zero => FunctionSpec::Zero,
        FunctionKind::RadialCap => FunctionSpec::RadialCap {
            center,
            radius,
            height: 1.0,
        },
        FunctionKind::Bump => FunctionSpec::Bump {
            center,
            radius,
            height: 1.0,
        },
    }
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let family = a.family.spec();
    let n = a.family.n();
    let label = match a.theorem {
        Theorem::Isoperimetric => "isoperimetric",
        Theorem::BallIso => "ball-iso",
        Theorem::SizeIso => "size-iso",
        Theorem::SobolevAveraged => "sobolev-averaged",
        Theorem::SobolevRectifiable => "sobolev-rectifiable",
        Theorem::Poincare => "poincare",
    };
    let name = a.name.unwrap_or_else(|| label.to_string());
    let delta_source = match a.delta_source {
        Source::Analytic => DeltaSource::Analytic,
        Source::DictionaryLowerBound => DeltaSource::DictionaryLowerBound,
    };
    let function = function_spec(a.function, n, a.function_radius);
    let experiment = match a.theorem {
        Theorem::Isoperimetric => Experiment::Isoperimetric {
            name,
            family,
            h: a.h,
            d: a.d,
            delta_source,
            maximal: match (a.s_min, a.s_max) {
                (Some(s_min), s_max) => Some(MaximalSpec {
                    s_min,
                    s_max: s_max.unwrap_or(4.0),
                    centers: a
                        .grid
                        .map_or(CenterStrategy::AtomsAndQuery, |points_per_axis| CenterStrategy::Grid {
                            points_per_axis,
                        }),
                    radii_per_center: 16,
                }),
                (None, Some(_)) => return Err(Error::Argument("--s-max needs --s-min".into())),
                (None, None) => None,
            },
        },
        Theorem::BallIso => Experiment::BallIso {
            name,
            family,
            h: a.h,
            center: a.center,
            radius: a.ball_radius,
            delta_source,
        },
        Theorem::SizeIso => Experiment::SizeIso { name, family, d: a.d },
        Theorem::SobolevAveraged => Experiment::SobolevAveraged {
            name,
            family,
            h: a.h,
            function,
            d: a.d,
            lambda: a.lambda,
            radius: a.ball_radius.unwrap_or(2.0),
            besicovitch: a.besicovitch.ok_or_else(|| Error::Schema {
                path: "besicovitch".into(),
                detail: "sobolev-averaged needs --besicovitch".into(),
            })?,
            domain: None,
        },
        Theorem::SobolevRectifiable => Experiment::SobolevRectifiable {
            name,
            family,
            h: a.h,
            function,
            d: a.d,
        },
        Theorem::Poincare => Experiment::Poincare {
            name,
            family,
            h: a.h,
            function,
            center: a.center.unwrap_or_else(|| vec![0.0; n]),
            radius: a.ball_radius.unwrap_or(2.0),
        },
    };
    single(&a.common, experiment)
}

fn blowup(a: BlowupArgs) -> Result<bool> {
    let (label, series) = match a.kind {
        SeriesKind::LebesgueScaling => ("lebesgue-scaling", Some(BlowupKind::LebesgueScaling)),
        SeriesKind::PlaneBundle => ("plane-bundle", Some(BlowupKind::PlaneBundle)),
        SeriesKind::SobolevVsIso => ("sobolev-vs-iso", Some(BlowupKind::SobolevVsIso)),
        SeriesKind::MedianContrast => ("median-contrast", None),
    };
    let name = a.name.unwrap_or_else(|| label.to_string());
    let experiment = match series {
        Some(series) => Experiment::Blowup {
            name,
            series,
            p: a.p,
            n: a.n,
            m: a.m,
            steps: a.steps,
            cells: a.cells,
            expect_divergence: a.expect_divergence,
        },
        None => Experiment::MedianContrast {
            name,
            m: a.m.unwrap_or(a.n - 1),
            n: a.n,
            steps: a.steps,
            lambda: a.lambda,
        },
    };
    single(&a.common, experiment)
}

fn gamma_bound(a: GammaArgs) -> Result<bool> {
    let mut config = base_config(&a.common)?;
    if a.common.config.is_none() {
        for &m in &a.m {
            let n = m + 1;
            config.experiments.push(Experiment::BallIso {
                name: format!("disc-m{m}"),
                family: FamilySpec::Disc {
                    n,
                    axes: (0..m).collect(),
                    center: None,
                    radius: 1.0,
                    multiplicity: 1.0,
                },
                h: a.h,
                center: None,
                radius: None,
                delta_source: DeltaSource::Analytic,
            });
            config.experiments.push(Experiment::BallIso {
                name: format!("sphere-m{m}"),
                family: FamilySpec::Sphere {
                    center: vec![0.0; n],
                    radius: 1.0,
                    axes: None,
                    multiplicity: 1.0,
                },
                h: a.h,
                center: None,
                radius: None,
                delta_source: DeltaSource::Analytic,
            });
        }
    }
    execute(&config, &a.common)
}

fn lemmas(a: LemmaArgs) -> Result<bool> {
    let mut config = base_config(&a.common)?;
    let kinds: &[(LemmaKind, &str)] = &[
        (LemmaKind::Iteration, "iteration"),
        (LemmaKind::Calculus, "calculus"),
        (LemmaKind::WeakLp, "weak-lp"),
        (LemmaKind::Superlevel, "superlevel"),
    ];
    let chosen = match a.lemma {
        LemmaChoice::All => kinds,
        LemmaChoice::Iteration => &kinds[0..1],
        LemmaChoice::Calculus => &kinds[1..2],
        LemmaChoice::WeakLp => &kinds[2..3],
        LemmaChoice::Superlevel => &kinds[3..4],
    };
    config.experiments = chosen
        .iter()
        .map(|(lemma, name)| Experiment::Lemma {
            name: name.to_string(),
            lemma: *lemma,
            seed: None,
            count: a.count,
        })
        .collect();
    execute(&config, &a.common)
}

fn convert(input: &Path, output: Option<&Path>) -> Result<bool> {
    let v = io::load(input)?;
    match output {
        Some(path) => io::save(&v, path)?,
        None => io::write_csv(&v, std::io::stdout().lock())?,
    }
    Ok(true)
}

fn sample(family: &FamilyArgs, h: f64, output: Option<&Path>) -> Result<bool> {
    let spec = family.spec();
    let config = Config {
        experiments: vec![Experiment::SizeIso {
            name: "sample".into(),
            family: spec.clone(),
            d: 1.0,
        }],
        ..Config::default()
    };
    config.validate()?;
    if !(h > 0.0) {
        return Err(Error::Schema {
            path: "h".into(),
            detail: format!("must be positive, got {h}"),
        });
    }
    let v = spec.build()?.sample(h)?;
    match output {
        Some(path) => io::save(&v, path)?,
        None => io::write_csv(&v, std::io::stdout().lock())?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { path, mut common } => {
            common.config = Some(path);
            base_config(&common).and_then(|config| execute(&config, &common))
        }
        Command::Verify(a) => verify(a),
        Command::Blowup(a) => blowup(a),
        Command::GammaBound(a) => gamma_bound(a),
        Command::Lemmas(a) => lemmas(a),
        Command::Convert { input, output } => convert(&input, output.as_deref()),
        Command::Sample { family, h, output } => sample(&family, h, output.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
