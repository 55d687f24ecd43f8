//! Command-line surface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
//! failure. Diagnostics go to stderr; result data goes to `--out` files or
//! stdout, never mixed with diagnostics.

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataset::{parse_dataset, DatasetFormat};
use crate::diagnostics::compare_fits;
use crate::error::{Error, Result};
use crate::legacy::bt500_reject;
use crate::report::{
    build_rejection_file, build_report, read_report, report_to_string, to_json_17, CiMode,
    ReportFormat,
};
use crate::solver::{fit, Method, SolverConfig};
use crate::synthetic::{coverage_experiment, robustness_experiment};

#[derive(Parser)]
#[command(
    name = "scorefit",
    about = "Recover quality scores, subject biases and inconsistencies from raw opinion scores",
    disable_version_flag = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a dataset with one of the estimation methods.
    Fit(FitArgs),
    /// Run outlier-vote counting and the two-threshold rejection rule.
    Reject(RejectArgs),
    /// Seeded simulation experiments.
    Simulate(SimulateArgs),
    /// Agreement statistics between the quality scores of two reports.
    Compare(CompareArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Dataset file (.csv or .json).
    dataset: PathBuf,
    /// Estimation method: mos|bt500|p913|nr|ap.
    #[arg(long, default_value = "ap")]
    method: String,
    /// Quality intervals to include: mle|alt|both.
    #[arg(long, default_value = "both")]
    ci: String,
    /// Refresh rate for the nr solver, in (0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Stop threshold on the quality step norm.
    #[arg(long)]
    threshold: Option<f64>,
    /// Iteration safety cap.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Lower bound on inconsistency estimates.
    #[arg(long)]
    upsilon_floor: Option<f64>,
    /// Output path; stdout when omitted. `.csv` selects the CSV report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RejectArgs {
    /// Dataset file (.csv or .json).
    dataset: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment kind: robustness|coverage.
    kind: String,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed for the simulation streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// First report file.
    report_a: PathBuf,
    /// Second report file.
    report_b: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct RobustnessConfig {
    dataset: PathBuf,
    methods: Vec<String>,
    corrupt_counts: Vec<usize>,
    prob: f64,
    runs: usize,
}

#[derive(Debug, Deserialize)]
struct CoverageConfig {
    dataset: PathBuf,
    method: String,
    runs: usize,
}

/// Parse arguments and run; returns the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(args) => run_fit(args),
        Command::Reject(args) => run_reject(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Compare(args) => run_compare(args),
    }
}

fn run_fit(args: FitArgs) -> Result<()> {
    let method: Method = args.method.parse()?;
    let ci_mode: CiMode = args.ci.parse()?;
    let tensor = parse_dataset(&args.dataset, DatasetFormat::infer(&args.dataset))?;

    let mut config = match method {
        Method::Nr => SolverConfig::nr(),
        _ => SolverConfig::ap(),
    };
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(threshold) = args.threshold {
        config.psi_threshold = threshold;
    }
    if let Some(max_iterations) = args.max_iterations {
        config.max_iterations = max_iterations;
    }
    if let Some(floor) = args.upsilon_floor {
        config.upsilon_floor = floor;
    }
    config.validate()?;

    let report = fit(&tensor, method, Some(&config))?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    let file = build_report(&report, &tensor, ci_mode);
    let format = args
        .out
        .as_deref()
        .map(ReportFormat::infer)
        .unwrap_or(ReportFormat::Json);
    let text = report_to_string(&file, format)?;
    write_output(&text, args.out.as_deref())
}

fn run_reject(args: RejectArgs) -> Result<()> {
    let tensor = parse_dataset(&args.dataset, DatasetFormat::infer(&args.dataset))?;
    let rejection = bt500_reject(&tensor)?;
    let file = build_rejection_file(&rejection, &tensor);
    let text = to_json_17(&file)?;
    write_output(&text, args.out.as_deref())
}

/// Paths inside a config file resolve relative to the file's directory.
fn resolve_config_path(config: &Path, dataset: &Path) -> PathBuf {
    if dataset.is_absolute() {
        dataset.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(dataset)
    }
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::DatasetParse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

#[derive(Serialize)]
struct RobustnessOutput<'a> {
    seed: u64,
    corruption_prob: f64,
    runs: usize,
    curves: &'a [crate::synthetic::RobustnessCurve],
}

#[derive(Serialize)]
struct CoverageOutput<'a> {
    seed: u64,
    #[serde(flatten)]
    result: &'a crate::synthetic::SimResult,
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    match args.kind.as_str() {
        "robustness" => {
            let config: RobustnessConfig = read_config(&args.config)?;
            let dataset_path = resolve_config_path(&args.config, &config.dataset);
            let tensor = parse_dataset(&dataset_path, DatasetFormat::infer(&dataset_path))?;
            let methods: Vec<Method> = config
                .methods
                .iter()
                .map(|m| m.parse())
                .collect::<Result<_>>()?;
            let curves = robustness_experiment(
                &tensor,
                &methods,
                &config.corrupt_counts,
                config.prob,
                config.runs,
                args.seed,
            )?;
            let text = to_json_17(&RobustnessOutput {
                seed: args.seed,
                corruption_prob: config.prob,
                runs: config.runs,
                curves: &curves,
            })?;
            write_output(&text, args.out.as_deref())
        }
        "coverage" => {
            let config: CoverageConfig = read_config(&args.config)?;
            let dataset_path = resolve_config_path(&args.config, &config.dataset);
            let tensor = parse_dataset(&dataset_path, DatasetFormat::infer(&dataset_path))?;
            let method: Method = config.method.parse()?;
            let result = coverage_experiment(&tensor, method, config.runs, args.seed)?;
            let text = to_json_17(&CoverageOutput {
                seed: args.seed,
                result: &result,
            })?;
            write_output(&text, args.out.as_deref())
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown simulation `{other}` (expected robustness|coverage)"
        ))),
    }
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let a = read_report(&args.report_a)?;
    let b = read_report(&args.report_b)?;
    let ids_a: Vec<&str> = a.stimuli.iter().map(|s| s.id.as_str()).collect();
    let ids_b: Vec<&str> = b.stimuli.iter().map(|s| s.id.as_str()).collect();
    if ids_a != ids_b {
        return Err(Error::ReportMismatch(
            "stimulus identifier sequences differ".into(),
        ));
    }
    let psi_a: Vec<f64> = a.stimuli.iter().map(|s| s.psi).collect();
    let psi_b: Vec<f64> = b.stimuli.iter().map(|s| s.psi).collect();
    let comparison = compare_fits(&psi_a, &psi_b)?;
    let text = to_json_17(&comparison)?;
    write_output(&text, args.out.as_deref())
}
