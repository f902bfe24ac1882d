//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage or scenario-file errors, 3 when a
//! run fails or output cannot be written.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::algorithms::{Algorithm, StepSizeSchedule};
use crate::analysis::ContractionCertificate;
use crate::config::{fmt_f64, format_certificate, write_trace_csv, ScenarioConfig};
use crate::experiments::{
    bias_study, lemma4_recursion, scenario_random_weak, scenario_strong_interference_a,
    scenario_strong_interference_b, BiasStudyParams, Scenario,
};
use crate::noise::{NoiseKind, DEFAULT_SUMMABLE_EXPONENT};
use crate::Error;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "AIWF_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "aiwf-out";

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Built-in scenario names.
pub const SCENARIOS: &[&str] = &["strong-a", "strong-b", "random-weak"];

#[derive(Debug, Parser)]
#[command(name = "aiwf", version, about = "Iterative water-filling simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every listed algorithm on a scenario and write traces plus a summary.
    Run(RunArgs),
    /// Print the contraction certificate of a scenario's network.
    Certificate(ScenarioArg),
    /// Estimate the distribution of the noisy water-filling bias.
    BiasStudy(BiasArgs),
    /// Simulate the scalar averaging recursion over many seeds.
    Lemma4(Lemma4Args),
}

#[derive(Debug, Args)]
pub struct ScenarioArg {
    /// Built-in scenario name (strong-a, strong-b, random-weak) or a scenario file.
    pub target: Option<String>,
    /// Same as the positional argument.
    #[arg(long)]
    pub scenario: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArg,
    /// Comma-separated algorithms: iwf, riwf, aiwf.
    #[arg(long)]
    pub algos: Option<String>,
    /// none, gaussian-ier, diminishing or summable.
    #[arg(long)]
    pub noise: Option<String>,
    /// Interference error ratio in dB (implies gaussian-ier when --noise is absent).
    #[arg(long = "ier-db", allow_hyphen_values = true)]
    pub ier_db: Option<f64>,
    /// Comma-separated relaxation factors; one R-IWF run per value.
    #[arg(long)]
    pub lambda: Option<String>,
    /// A-IWF stepsizes: `harmonic` or `power:SCALE,OFFSET,GAMMA`.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub decimation: Option<usize>,
    /// Output directory (default: $AIWF_OUT_DIR or ./aiwf-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    /// Noise draws per bias estimate.
    #[arg(long = "samples", short = 'L', default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1000)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "ier-db", default_value_t = 10.0, allow_hyphen_values = true)]
    pub ier_db: f64,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
    /// Histogram CSV path (default: <out dir>/bias-L<samples>.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Lemma4Args {
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,
    /// Variance of the zero-mean Gaussian noise.
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub w0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV path (default: <out dir>/lemma4.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed command: exit code plus diagnostic.
#[derive(Debug)]
pub struct CliFailure {
    pub code: u8,
    pub message: String,
}

impl CliFailure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

fn config_err(e: Error) -> CliFailure {
    CliFailure::config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliFailure {
    CliFailure::runtime(e.to_string())
}

pub type CliResult = std::result::Result<(), CliFailure>;

/// Parses `std::env::args` and runs the command, printing to stdout.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult {
    match &cli.command {
        Command::Run(args) => cmd_run(args, out),
        Command::Certificate(args) => cmd_certificate(args, out),
        Command::BiasStudy(args) => cmd_bias_study(args, out),
        Command::Lemma4(args) => cmd_lemma4(args, out),
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Resolves a built-in name or a scenario file.
pub fn load_scenario(target: &str) -> Result<(Scenario, Option<PathBuf>), Error> {
    match target {
        "strong-a" => Ok((scenario_strong_interference_a(), None)),
        "strong-b" => Ok((scenario_strong_interference_b(), None)),
        "random-weak" => Ok((scenario_random_weak(10, 64, 0, None)?, None)),
        path => {
            let cfg = ScenarioConfig::load(Path::new(path))?;
            let out = cfg.output.dir.clone();
            Ok((cfg.to_scenario()?, out))
        }
    }
}

fn scenario_target(arg: &ScenarioArg) -> Result<String, CliFailure> {
    match (&arg.target, &arg.scenario) {
        (Some(a), Some(b)) if a != b => Err(CliFailure::config(format!(
            "conflicting scenarios '{a}' and '{b}'"
        ))),
        (Some(a), _) | (None, Some(a)) => Ok(a.clone()),
        (None, None) => Err(CliFailure::config(format!(
            "no scenario given; use one of {} or a scenario file",
            SCENARIOS.join(", ")
        ))),
    }
}

fn parse_f64_list(key: &str, text: &str) -> Result<Vec<f64>, CliFailure> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliFailure::config(format!("--{key}: cannot parse '{v}'")))
        })
        .collect()
}

fn parse_schedule(text: &str) -> Result<StepSizeSchedule, CliFailure> {
    let schedule = if text == "harmonic" {
        StepSizeSchedule::Harmonic
    } else if let Some(params) = text.strip_prefix("power:") {
        let v = parse_f64_list("schedule", params)?;
        if v.len() != 3 {
            return Err(CliFailure::config(
                "--schedule power needs SCALE,OFFSET,GAMMA",
            ));
        }
        StepSizeSchedule::PowerDecay {
            scale: v[0],
            offset: v[1],
            gamma: v[2],
        }
    } else {
        return Err(CliFailure::config(format!(
            "--schedule: unknown schedule '{text}'"
        )));
    };
    schedule
        .validate()
        .map_err(|e| CliFailure::config(format!("--schedule: {e}")))?;
    Ok(schedule)
}

fn parse_noise(kind: &str, ier_db: Option<f64>) -> Result<NoiseKind, CliFailure> {
    let noise = match kind.replace('_', "-").as_str() {
        "none" => NoiseKind::None,
        "gaussian-ier" => NoiseKind::GaussianIer {
            ier_db: ier_db.ok_or_else(|| CliFailure::config("--noise gaussian-ier needs --ier-db"))?,
        },
        "diminishing" => NoiseKind::Diminishing {
            decay_exponent: 1.0,
            scale: 1.0,
        },
        "summable" => NoiseKind::Summable {
            decay_exponent: DEFAULT_SUMMABLE_EXPONENT,
            scale: 1.0,
        },
        other => {
            return Err(CliFailure::config(format!(
                "--noise: unknown noise kind '{other}'"
            )))
        }
    };
    noise
        .validate()
        .map_err(|e| CliFailure::config(format!("--noise: {e}")))?;
    Ok(noise)
}

/// Applies command-line overrides to a scenario.
fn apply_overrides(s: &mut Scenario, args: &RunArgs) -> CliResult {
    let lambdas = args
        .lambda
        .as_deref()
        .map(|l| parse_f64_list("lambda", l))
        .transpose()?;
    let schedule = args.schedule.as_deref().map(parse_schedule).transpose()?;

    if let Some(algos) = &args.algos {
        let mut list = Vec::new();
        for tag in algos.split(',').map(str::trim) {
            match tag {
                "iwf" => list.push(Algorithm::Iwf),
                "riwf" => {
                    for lambda in lambdas.clone().unwrap_or_else(|| vec![0.5]) {
                        list.push(Algorithm::Riwf { lambda });
                    }
                }
                "aiwf" => list.push(Algorithm::Aiwf {
                    schedule: schedule.clone().unwrap_or(StepSizeSchedule::Harmonic),
                }),
                other => {
                    return Err(CliFailure::config(format!(
                        "--algos: unknown algorithm '{other}' (expected iwf, riwf, aiwf)"
                    )))
                }
            }
        }
        s.algorithms = list;
    } else {
        if let Some(lambdas) = &lambdas {
            let mut list = Vec::new();
            let mut replaced = false;
            for a in s.algorithms.drain(..) {
                match a {
                    Algorithm::Riwf { .. } if replaced => {}
                    Algorithm::Riwf { .. } => {
                        replaced = true;
                        list.extend(lambdas.iter().map(|&lambda| Algorithm::Riwf { lambda }));
                    }
                    other => list.push(other),
                }
            }
            if !replaced {
                list.extend(lambdas.iter().map(|&lambda| Algorithm::Riwf { lambda }));
            }
            s.algorithms = list;
        }
        if let Some(schedule) = &schedule {
            for a in &mut s.algorithms {
                if let Algorithm::Aiwf { schedule: sch } = a {
                    *sch = schedule.clone();
                }
            }
        }
    }
    for a in &s.algorithms {
        a.validate()
            .map_err(|e| CliFailure::config(format!("algorithm {}: {e}", a.label())))?;
    }

    match (&args.noise, args.ier_db) {
        (Some(kind), ier) => s.noise = parse_noise(kind, ier)?,
        (None, Some(ier_db)) => s.noise = parse_noise("gaussian-ier", Some(ier_db))?,
        (None, None) => {}
    }
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(m) = args.max_iters {
        if m == 0 {
            return Err(CliFailure::config("--max-iters must be at least 1"));
        }
        s.max_iters = m;
    }
    if let Some(tol) = args.tol {
        if !(tol > 0.0) {
            return Err(CliFailure::config("--tol must be positive"));
        }
        s.tol = tol;
    }
    if let Some(w) = args.window {
        if w < 2 {
            return Err(CliFailure::config("--window must be at least 2"));
        }
        s.window = w;
    }
    if let Some(d) = args.decimation {
        if d == 0 {
            return Err(CliFailure::config("--decimation must be at least 1"));
        }
        s.decimation = d;
    }
    if s.algorithms.is_empty() {
        return Err(CliFailure::config("no algorithms to run"));
    }
    Ok(())
}

fn noise_label(n: &NoiseKind) -> String {
    match n {
        NoiseKind::None => "none".into(),
        NoiseKind::GaussianIer { ier_db } => format!("gaussian_ier ier_db={ier_db}"),
        NoiseKind::GaussianFixedVariance { .. } => "gaussian_fixed_variance".into(),
        NoiseKind::Diminishing {
            decay_exponent,
            scale,
        } => format!("diminishing decay_exponent={decay_exponent} scale={scale}"),
        NoiseKind::Summable {
            decay_exponent,
            scale,
        } => format!("summable decay_exponent={decay_exponent} scale={scale}"),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliFailure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| runtime_err(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime_err(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> CliResult {
    let target = scenario_target(&args.scenario)?;
    let (mut scenario, cfg_dir) = load_scenario(&target).map_err(config_err)?;
    apply_overrides(&mut scenario, args)?;
    let dir = args
        .out
        .clone()
        .or(cfg_dir)
        .unwrap_or_else(default_out_dir);

    let cert = ContractionCertificate::compute(&scenario.network).map_err(runtime_err)?;
    let traces = scenario.run_all().map_err(runtime_err)?;

    let mut summary = String::new();
    summary.push_str(&format!("scenario {}\n", scenario.name));
    summary.push_str(&format!(
        "users {}\nchannels {}\nseed {}\nmax_iters {}\ntol {}\nwindow {}\n",
        scenario.network.num_users(),
        scenario.network.num_channels(),
        scenario.seed,
        scenario.max_iters,
        fmt_f64(scenario.tol),
        scenario.window
    ));
    summary.push_str(&format!("noise {}\n", noise_label(&scenario.noise)));
    summary.push_str(&format_certificate(&cert));
    for trace in &traces {
        let label = trace.algorithm.label();
        let path = dir.join(format!("{}-{label}.csv", scenario.name));
        let mut w = create(&path)?;
        write_trace_csv(trace, &mut w).map_err(runtime_err)?;
        w.flush().map_err(runtime_err)?;
        let distance = trace
            .distance_to_reference
            .last()
            .map_or_else(|| "-".to_string(), |d| fmt_f64(*d));
        summary.push_str(&format!(
            "algorithm {label} verdict {} final_step {} fixed_point_residual {} distance_to_reference {} trace {}\n",
            trace.verdict.label(),
            fmt_f64(*trace.residuals.last().expect("at least one step")),
            fmt_f64(trace.fixed_point_residual),
            distance,
            path.file_name().unwrap().to_string_lossy()
        ));
    }
    let summary_path = dir.join(format!("{}-summary.txt", scenario.name));
    let mut w = create(&summary_path)?;
    w.write_all(summary.as_bytes()).map_err(runtime_err)?;
    w.flush().map_err(runtime_err)?;
    out.write_all(summary.as_bytes()).map_err(runtime_err)?;
    Ok(())
}

pub fn cmd_certificate(args: &ScenarioArg, out: &mut dyn Write) -> CliResult {
    let target = scenario_target(args)?;
    let (scenario, _) = load_scenario(&target).map_err(config_err)?;
    let cert = ContractionCertificate::compute(&scenario.network).map_err(runtime_err)?;
    write!(out, "scenario {}\n{}", scenario.name, format_certificate(&cert)).map_err(runtime_err)
}

pub fn cmd_bias_study(args: &BiasArgs, out: &mut dyn Write) -> CliResult {
    if args.samples == 0 || args.repetitions == 0 || args.bins == 0 {
        return Err(CliFailure::config(
            "--samples, --repetitions and --bins must be positive",
        ));
    }
    let params = BiasStudyParams {
        ier_db: args.ier_db,
        samples_per_estimate: args.samples,
        repetitions: args.repetitions,
        bins: args.bins,
        seed: args.seed,
        ..BiasStudyParams::default()
    };
    let result = bias_study(&params).map_err(runtime_err)?;
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir().join(format!("bias-L{}.csv", args.samples)));
    let mut w = create(&path)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "bin_lower,bin_upper,mass")?;
        let h = &result.histogram;
        for (b, mass) in h.mass.iter().enumerate() {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(h.edges[b]),
                fmt_f64(h.edges[b + 1]),
                fmt_f64(*mass)
            )?;
        }
        w.flush()
    })()
    .map_err(runtime_err)?;
    writeln!(
        out,
        "samples_per_estimate {}\nrepetitions {}\ncount {}\nmean {}\nstd {}\nskewness {}\nhistogram {}",
        result.samples_per_estimate,
        result.repetitions,
        result.sample_means.len(),
        fmt_f64(result.mean()),
        fmt_f64(result.std_dev()),
        fmt_f64(result.skewness()),
        path.display()
    )
    .map_err(runtime_err)
}

pub fn cmd_lemma4(args: &Lemma4Args, out: &mut dyn Write) -> CliResult {
    if args.runs == 0 {
        return Err(CliFailure::config("--runs must be positive"));
    }
    if !(args.variance >= 0.0 && args.variance.is_finite()) {
        return Err(CliFailure::config("--variance must be finite and nonnegative"));
    }
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir().join("lemma4.csv"));
    let mut w = create(&path)?;
    let mut below = 0usize;
    let mut rows = String::from("run,final_w\n");
    for r in 0..args.runs {
        let traj = lemma4_recursion(
            &StepSizeSchedule::Harmonic,
            args.variance,
            args.w0,
            args.steps,
            args.seed.wrapping_add(r as u64),
        )
        .map_err(runtime_err)?;
        let last = traj.last();
        if last.abs() < args.threshold {
            below += 1;
        }
        rows.push_str(&format!("{r},{}\n", fmt_f64(last)));
    }
    w.write_all(rows.as_bytes()).map_err(runtime_err)?;
    w.flush().map_err(runtime_err)?;
    writeln!(
        out,
        "runs {}\nsteps {}\nthreshold {}\nbelow_threshold {below}\nfraction {}\noutput {}",
        args.runs,
        args.steps,
        fmt_f64(args.threshold),
        fmt_f64(below as f64 / args.runs as f64),
        path.display()
    )
    .map_err(runtime_err)
}
