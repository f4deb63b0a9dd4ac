//! `leggett`: sweeps, power analysis, simulated runs and the verification
//! suite from the command line.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage or
//! configuration error.

mod args;
mod svg;

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use leggett_core::inequality::{self, AveragingMethod, EvaluateOptions, InequalityReport};
use leggett_core::models::SourceKind;
use leggett_core::stats::{self, VarianceConvention};
use leggett_core::{geom, verify, Coupling, Execution, MeasurementModel, ModelSpec, Schedule};

#[derive(Parser)]
#[command(name = "leggett", version, about = "NLHV model simulation and Leggett-type inequality analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the inequality over an angle grid for one or more models.
    Sweep(SweepArgs),
    /// Pairs needed for a target standard error of the correlation.
    Power(PowerArgs),
    /// Simulate one coincidence run and estimate its correlation.
    Simulate(SimulateArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Tabulate the bound and the quantum left-hand side.
    Bound(BoundArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    /// Trapezoid rule over exact correlations.
    Exact,
    /// Trapezoid rule over simulated correlations.
    Mc,
    /// Closed-form average.
    Closed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variance {
    #[value(name = "n")]
    N,
    #[value(name = "n-1")]
    NMinusOne,
}

impl From<Variance> for VarianceConvention {
    fn from(v: Variance) -> Self {
        match v {
            Variance::N => VarianceConvention::N,
            Variance::NMinusOne => VarianceConvention::NMinusOne,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct Run {
    /// Master seed. Overrides the seed in a model spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Single-threaded execution (results are identical either way).
    #[arg(long)]
    sequential: bool,
}

impl Run {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Model spec as inline JSON or a file path; repeatable. Defaults to the
    /// singlet and the three uniform-source NLHV couplings.
    #[arg(long)]
    model: Vec<String>,
    /// Angles, e.g. `10deg,0.3rad` or the inclusive grid `0deg..180deg:181`.
    #[arg(long, default_value = "0deg..180deg:181")]
    alpha: String,
    /// Two planes: `xy`, `xz`, `yz` or `n:X:Y:Z` for a custom normal.
    #[arg(long, default_value = "xy,xz")]
    planes: String,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    method: Method,
    /// Averaging nodes [default: 256 exact, 16 mc].
    #[arg(long)]
    nodes: Option<usize>,
    /// Events per correlation for `--method mc`.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long)]
    allow_non_orthogonal: bool,
    /// Also write the SVG plot here.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    run: Run,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PowerArgs {
    /// Expected correlation, |E| < 1.
    #[arg(long, allow_negative_numbers = true)]
    correlation: f64,
    /// Target standard error of the correlation.
    #[arg(long)]
    stderr: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = r#"{"model":"qm"}"#)]
    model: String,
    /// Angle between the two settings.
    #[arg(long)]
    alpha: String,
    /// Plane holding both settings.
    #[arg(long, default_value = "xy")]
    plane: String,
    /// Rotation of the setting pair within the plane.
    #[arg(long, default_value = "0deg")]
    sigma: String,
    /// Fixed number of pairs.
    #[arg(long, conflicts_with_all = ["duration", "rate"], required_unless_present = "duration")]
    samples: Option<u64>,
    /// Run length in seconds; the pair count is Poisson(rate x duration).
    #[arg(long, requires = "rate")]
    duration: Option<f64>,
    /// Pair rate per second.
    #[arg(long, requires = "duration")]
    rate: Option<f64>,
    #[arg(long, value_enum, default_value_t = Variance::N)]
    variance: Variance,
    #[command(flatten)]
    run: Run,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// Quadrature nodes for the rotation-average lemma.
    #[arg(long)]
    nodes: Option<usize>,
    /// Monte Carlo events per rotation-averaged correlation.
    #[arg(long)]
    samples: Option<u64>,
    /// Overrides the node-dependent lemma tolerance.
    #[arg(long)]
    lemma_tolerance: Option<f64>,
    /// Points of the bound-satisfaction grid over [0, π].
    #[arg(long)]
    grid_points: Option<usize>,
    /// Samples per Malus marginal check.
    #[arg(long)]
    malus_samples: Option<u64>,
    /// Samples per derivation-chain check.
    #[arg(long)]
    chain_samples: Option<u64>,
    /// Samples for the projection lemma.
    #[arg(long)]
    projection_samples: Option<u64>,
    /// Shift the NLHV marginals by this much (test fixture).
    #[arg(long, hide = true, allow_negative_numbers = true)]
    inject_bias: Option<f64>,
    #[command(flatten)]
    run: Run,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value = "0deg..180deg:181")]
    alpha: String,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Power(a) => power(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Bound(a) => bound(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| format!("cannot write '{}'", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn format_or(output: &Output, default: Format, allowed: &[Format]) -> Result<Format> {
    let f = output.format.unwrap_or(default);
    if !allowed.contains(&f) {
        bail!("this command does not support that --format");
    }
    Ok(f)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// CSV with the resolved configuration as a leading `# config:` comment.
fn to_csv<C: Serialize, R: Serialize>(config: &C, rows: &[R]) -> Result<String> {
    let mut buf = format!("# config: {}\n", serde_json::to_string(config)?).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf)?)
}

#[derive(Serialize)]
struct SweepConfig {
    command: &'static str,
    models: Vec<ModelSpec>,
    alphas_rad: Vec<f64>,
    planes: [String; 2],
    method: Method,
    averaging: AveragingMethod,
    allow_non_orthogonal: bool,
    execution: Execution,
}

#[derive(Serialize)]
struct SweepRow {
    model: String,
    seed: u64,
    alpha_rad: f64,
    alpha_deg: f64,
    e_xy_alpha: f64,
    e_xy_0: f64,
    e_xz_alpha: f64,
    e_xz_0: f64,
    lhs: f64,
    bound: f64,
    margin: f64,
    violated: bool,
    lhs_stderr: f64,
}

impl SweepRow {
    fn new(model: String, seed: u64, r: &InequalityReport) -> Self {
        SweepRow {
            model,
            seed,
            alpha_rad: r.alpha,
            alpha_deg: r.alpha.to_degrees(),
            e_xy_alpha: r.e_xy_alpha,
            e_xy_0: r.e_xy_0,
            e_xz_alpha: r.e_xz_alpha,
            e_xz_0: r.e_xz_0,
            lhs: r.lhs,
            bound: r.bound,
            margin: r.margin,
            violated: r.violated,
            lhs_stderr: r.lhs_stderr,
        }
    }
}

fn default_models() -> Vec<ModelSpec> {
    let mut v = vec![ModelSpec::quantum(0)];
    v.extend(Coupling::ALL.iter().map(|&c| ModelSpec::nlhv(SourceKind::SingularUniform, c, 0)));
    v
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let format = format_or(&a.output, Format::Csv, &[Format::Csv, Format::Json, Format::Svg])?;
    let mut specs = if a.model.is_empty() {
        default_models()
    } else {
        a.model.iter().map(|m| args::parse_model(m)).collect::<Result<_>>()?
    };
    if let Some(seed) = a.run.seed {
        specs.iter_mut().for_each(|s| s.seed = seed);
    }
    let alphas = args::parse_alphas(&a.alpha)?;
    let planes = args::parse_planes(&a.planes)?;
    let averaging = match a.method {
        Method::Exact => AveragingMethod::Quadrature {
            nodes: a.nodes.unwrap_or(inequality::DEFAULT_NODES),
        },
        Method::Mc => {
            let nodes = a.nodes.unwrap_or(16).max(1);
            AveragingMethod::MonteCarlo {
                nodes,
                samples_per_node: a.samples / nodes as u64,
            }
        }
        Method::Closed => AveragingMethod::ClosedForm,
    };
    let options = EvaluateOptions {
        allow_non_orthogonal: a.allow_non_orthogonal,
    };
    let exec = a.run.execution();
    let config = SweepConfig {
        command: "sweep",
        models: specs.clone(),
        alphas_rad: alphas.clone(),
        planes: [args::plane_name(&planes.0), args::plane_name(&planes.1)],
        method: a.method,
        averaging,
        allow_non_orthogonal: a.allow_non_orthogonal,
        execution: exec,
    };

    let mut rows = Vec::new();
    let mut series = Vec::new();
    for spec in &specs {
        let model = spec.build()?;
        let label = model.to_string();
        let reports = inequality::sweep(&model, &alphas, planes, averaging, options, spec.seed, exec)
            .with_context(|| format!("sweep failed for {label}"))?;
        series.push(svg::Series {
            label: label.clone(),
            points: reports.iter().map(|r| (r.alpha.to_degrees(), r.lhs)).collect(),
        });
        rows.extend(reports.iter().map(|r| SweepRow::new(label.clone(), spec.seed, r)));
    }

    let config_json = serde_json::to_string(&config)?;
    let plot = || {
        let bound = svg::Series {
            label: "bound".into(),
            points: alphas.iter().map(|&x| (x.to_degrees(), inequality::leggett_bound(x))).collect(),
        };
        svg::render(&series, &bound, &config_json)
    };
    if let Some(path) = &a.svg {
        emit(&Some(path.clone()), &plot())?;
    }
    let text = match format {
        Format::Csv => to_csv(&config, &rows)?,
        Format::Json => to_json(&serde_json::json!({ "config": config, "rows": rows }))?,
        _ => plot(),
    };
    emit(&a.output.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PowerReport {
    correlation: f64,
    target_stderr: f64,
    n: u64,
    sample_mean: f64,
    stderr_sample_mean: f64,
}

/// `required_pairs` together with the intermediate `S` and its target error.
fn power_report(correlation: f64, target_stderr: f64) -> Result<PowerReport> {
    let n = stats::required_pairs(correlation, target_stderr)?;
    Ok(PowerReport {
        correlation,
        target_stderr,
        n,
        sample_mean: stats::sample_mean_of(correlation),
        stderr_sample_mean: target_stderr / 2.0,
    })
}

fn power(a: PowerArgs) -> Result<ExitCode> {
    let format = format_or(&a.output, Format::Json, &[Format::Json, Format::Csv])?;
    let report = power_report(a.correlation, a.stderr)?;
    let text = match format {
        Format::Csv => to_csv(&serde_json::json!({ "command": "power" }), &[&report])?,
        _ => to_json(&report)?,
    };
    emit(&a.output.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SimulateConfig {
    command: &'static str,
    model: ModelSpec,
    alpha_rad: f64,
    sigma_rad: f64,
    plane: String,
    a: geom::UnitVec,
    b: geom::UnitVec,
    schedule: Schedule,
    variance: VarianceConvention,
    execution: Execution,
}

#[derive(Serialize)]
struct SimulateReport {
    n_same: u64,
    n_diff: u64,
    n: u64,
    value: f64,
    sample_mean: f64,
    stderr: f64,
    stderr_binomial: f64,
    stderr_poisson: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<f64>,
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let format = format_or(&a.output, Format::Json, &[Format::Json, Format::Csv])?;
    let mut spec = args::parse_model(&a.model)?;
    if let Some(seed) = a.run.seed {
        spec.seed = seed;
    }
    let model = spec.build()?;
    let plane = args::parse_plane(&a.plane)?;
    let alpha = args::parse_angle(&a.alpha)?;
    let sigma = args::parse_angle(&a.sigma)?;
    let (sa, sb) = geom::settings_in_plane(&plane, alpha, sigma);
    let schedule = match (a.samples, a.duration, a.rate) {
        (Some(n), _, _) => Schedule::Fixed { n },
        (None, Some(seconds), Some(rate)) => Schedule::Duration { seconds, rate },
        _ => bail!("give --samples, or --duration with --rate"),
    };
    let exec = a.run.execution();
    let config = SimulateConfig {
        command: "simulate",
        model: spec,
        alpha_rad: alpha,
        sigma_rad: sigma,
        plane: args::plane_name(&plane),
        a: sa,
        b: sb,
        schedule,
        variance: a.variance.into(),
        execution: exec,
    };
    let counts = stats::run_experiment(&model, &sa, &sb, schedule, spec.seed, exec)?;
    let est = stats::estimate_correlation(&counts, a.variance.into())?;
    let report = SimulateReport {
        n_same: counts.n_same,
        n_diff: counts.n_diff,
        n: counts.n,
        value: est.value,
        sample_mean: est.sample_mean,
        stderr: est.stderr,
        stderr_binomial: stats::estimate_correlation(&counts, VarianceConvention::N)?.stderr,
        stderr_poisson: stats::stderr_poisson_propagation(counts.n_same, counts.n_diff)?,
        exact: model.exact_correlation(&sa, &sb),
    };
    let text = match format {
        Format::Csv => to_csv(&config, &[&report])?,
        _ => to_json(&serde_json::json!({ "config": config, "estimate": report }))?,
    };
    emit(&a.output.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let format = format_or(&a.output, Format::Text, &[Format::Text, Format::Json, Format::Csv])?;
    let mut config = verify::VerifyConfig::default();
    if let Some(seed) = a.run.seed {
        config.seed = seed;
    }
    if let Some(nodes) = a.nodes {
        config.nodes = nodes;
    }
    if let Some(samples) = a.samples {
        config.samples = samples;
    }
    if let Some(g) = a.grid_points {
        config.grid_points = g;
    }
    if let Some(s) = a.malus_samples {
        config.malus_samples = s;
    }
    if let Some(s) = a.chain_samples {
        config.chain_samples = s;
    }
    if let Some(s) = a.projection_samples {
        config.projection_samples = s;
    }
    config.lemma_tolerance = a.lemma_tolerance;
    config.inject_bias = a.inject_bias;
    config.execution = a.run.execution();

    let report = verify::run(&config)?;
    let text = match format {
        Format::Json => to_json(&report)?,
        Format::Csv => to_csv(&report.config, &report.checks)?,
        _ => format!("# config: {}\n{}", serde_json::to_string(&report.config)?, report.to_text()),
    };
    emit(&a.output.out, &text)?;
    if !report.passed {
        for c in report.checks.iter().filter(|c| !c.passed) {
            eprintln!(
                "check failed: {} observed={} tolerance={} {}",
                c.name, c.observed, c.tolerance, c.detail
            );
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct BoundRow {
    alpha_rad: f64,
    alpha_deg: f64,
    bound: f64,
    quantum_lhs: f64,
    quantum_margin: f64,
    violated: bool,
}

fn bound(a: BoundArgs) -> Result<ExitCode> {
    let format = format_or(&a.output, Format::Csv, &[Format::Csv, Format::Json, Format::Svg])?;
    let alphas = args::parse_alphas(&a.alpha)?;
    let rows: Vec<BoundRow> = alphas
        .iter()
        .map(|&x| BoundRow {
            alpha_rad: x,
            alpha_deg: x.to_degrees(),
            bound: inequality::leggett_bound(x),
            quantum_lhs: inequality::quantum_lhs(x),
            quantum_margin: inequality::quantum_margin(x),
            violated: inequality::quantum_margin(x) < 0.0,
        })
        .collect();
    let max = inequality::max_violation_angle();
    let config = serde_json::json!({
        "command": "bound",
        "alphas_rad": alphas,
        "violation_threshold_rad": inequality::violation_threshold(),
        "max_violation_rad": max.alpha,
        "max_violation_excess": max.excess,
    });
    let text = match format {
        Format::Json => to_json(&serde_json::json!({ "config": config, "rows": rows }))?,
        Format::Csv => to_csv(&config, &rows)?,
        _ => {
            let q = svg::Series {
                label: "qm".into(),
                points: rows.iter().map(|r| (r.alpha_deg, r.quantum_lhs)).collect(),
            };
            let b = svg::Series {
                label: "bound".into(),
                points: rows.iter().map(|r| (r.alpha_deg, r.bound)).collect(),
            };
            svg::render(&[q], &b, &serde_json::to_string(&config)?)
        }
    };
    emit(&a.output.out, &text)?;
    Ok(ExitCode::SUCCESS)
}
