//! Command-line frontend for the log-determinant estimator.
//!
//! Three subcommands share one set of flags: `logdet` prints the estimate
//! as JSON, `diagnose` prints the full moment-count sweep as a plot-ready
//! CSV table (optionally with absolute errors against a reference value),
//! and `moments` prints the probed moment estimates.
//!
//! Exit codes: 0 on success, 2 for input or configuration errors, 3 for
//! numerical failures. When `SPECDET_OUT_DIR` is set, every document
//! printed to stdout is also written into that directory.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use specdet::estimator::{self, EstimatorError, LogDetOutcome};
use specdet::matio::MatIoError;
use specdet::maxent::{Grid, MaxEntError};
use specdet::oracle::{self, OracleError};
use specdet::probe::{estimate_moments, MomentSet, ProbeConfig, ProbeError};
use specdet::CsrMatrix64;

const OUT_DIR_ENV: &str = "SPECDET_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "specdet",
    version,
    about = "Estimate the log-determinant of large sparse symmetric positive definite matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate ln det(A) and print the result document as JSON
    Logdet(LogdetArgs),
    /// Fit every moment count and print the sweep as a CSV table
    Diagnose(DiagnoseArgs),
    /// Probe normalized spectral moments and print them
    Moments(MomentsArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Matrix Market file (coordinate real, symmetric or general)
    #[arg(long)]
    matrix: PathBuf,
    /// Number of Gaussian probe vectors
    #[arg(long, default_value_t = 30)]
    samples: usize,
    /// Largest moment order to estimate
    #[arg(long, default_value_t = 8)]
    max_moments: usize,
    /// Spacing of the reconstruction grid on (0, 1)
    #[arg(long, default_value_t = 1e-3)]
    grid_dx: f64,
    /// Worst-moment residual at which a fit counts as converged
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Entropy drop (nats) under which the moment sweep stops
    #[arg(long, default_value_t = 0.01)]
    eps_stop: f64,
    /// Master random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct LogdetArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output format: the full JSON document or the sweep table as CSV
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Known exact log-determinant to put absolute errors in the table
    #[arg(long, allow_hyphen_values = true)]
    exact_logdet: Option<f64>,
    /// Compute the reference by dense eigendecomposition (n <= 5000)
    #[arg(long)]
    dense_oracle: bool,
    /// Output format: the sweep table as CSV or the full JSON document
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output format: the moment document as JSON or per-order CSV rows
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 3,
        }
    }
}

impl From<MatIoError> for CliError {
    fn from(err: MatIoError) -> Self {
        CliError::input(err.to_string())
    }
}

impl From<ProbeError> for CliError {
    fn from(err: ProbeError) -> Self {
        match err {
            ProbeError::InvalidConfig(_) | ProbeError::Matrix(_) => {
                CliError::input(err.to_string())
            }
            ProbeError::NonPositiveTrace(_) => CliError::numerical(err.to_string()),
        }
    }
}

impl From<MaxEntError> for CliError {
    fn from(err: MaxEntError) -> Self {
        CliError::numerical(err.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(err: EstimatorError) -> Self {
        match err {
            EstimatorError::Matrix(e) => e.into(),
            EstimatorError::Probe(e) => e.into(),
            EstimatorError::InsufficientMoments { .. }
            | EstimatorError::InvalidMoments(_)
            | EstimatorError::InvalidBound(_) => CliError::input(err.to_string()),
            EstimatorError::MaxEnt(_)
            | EstimatorError::AllMomentCountsFailed { .. }
            | EstimatorError::EmptySweep => CliError::numerical(err.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(err: OracleError) -> Self {
        match err {
            OracleError::TooLarge { .. } | OracleError::NotSquare { .. } => {
                CliError::input(err.to_string())
            }
            _ => CliError::numerical(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Logdet(args) => cmd_logdet(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Moments(args) => cmd_moments(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

#[derive(Serialize)]
struct ConfigEcho {
    samples: usize,
    max_moments: usize,
    grid_dx: f64,
    tol: f64,
    eps_stop: f64,
    seed: u64,
}

impl ConfigEcho {
    fn new(common: &CommonArgs) -> Self {
        Self {
            samples: common.samples,
            max_moments: common.max_moments,
            grid_dx: common.grid_dx,
            tol: common.tol,
            eps_stop: common.eps_stop,
            seed: common.seed,
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    #[serde(rename = "M")]
    m: usize,
    entropy: f64,
    logdet: f64,
    residual: f64,
    converged: bool,
    /// Informativeness of the transition into this count; null for the
    /// first fitted count.
    ic: Option<f64>,
    ic_flagged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    abs_error: Option<f64>,
}

#[derive(Serialize)]
struct SkippedRow {
    #[serde(rename = "M")]
    m: usize,
    error: String,
}

#[derive(Serialize)]
struct Timing {
    probe_s: f64,
    maxent_s: f64,
}

#[derive(Serialize)]
struct ResultDoc {
    matrix: String,
    config: ConfigEcho,
    logdet: f64,
    n: usize,
    c: f64,
    #[serde(rename = "M_selected")]
    m_selected: usize,
    entropy: f64,
    residual: f64,
    warning: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<f64>,
    sweep: Vec<SweepRow>,
    skipped: Vec<SkippedRow>,
    timing: Timing,
}

fn load_matrix(path: &Path) -> Result<CsrMatrix64, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    CsrMatrix64::parse_matrix_market(BufReader::new(file))
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn build_grid(common: &CommonArgs) -> Result<Grid<f64>, CliError> {
    if !(common.tol.is_finite() && common.tol > 0.0) {
        return Err(CliError::input(format!(
            "--tol must be positive and finite, got {}",
            common.tol
        )));
    }
    if !(common.eps_stop.is_finite() && common.eps_stop >= 0.0) {
        return Err(CliError::input(format!(
            "--eps-stop must be nonnegative and finite, got {}",
            common.eps_stop
        )));
    }
    Grid::new(common.grid_dx).map_err(|e| CliError::input(e.to_string()))
}

fn probe_config(common: &CommonArgs) -> ProbeConfig {
    ProbeConfig {
        num_samples: common.samples,
        max_moment: common.max_moments,
        seed: common.seed,
    }
}

fn build_rows(outcome: &LogDetOutcome<f64>, reference: Option<f64>) -> Vec<SweepRow> {
    let ic_by_count: HashMap<usize, (f64, bool)> = outcome
        .ic
        .entries
        .iter()
        .map(|e| (e.moment_count, (e.ic, e.flagged)))
        .collect();
    outcome
        .sweep
        .entries
        .iter()
        .map(|e| {
            let ic = ic_by_count.get(&e.moment_count).copied();
            SweepRow {
                m: e.moment_count,
                entropy: e.entropy,
                logdet: e.logdet,
                residual: e.residual,
                converged: e.converged,
                ic: ic.map(|(value, _)| value),
                ic_flagged: ic.map(|(_, flagged)| flagged),
                abs_error: reference.map(|r| (e.logdet - r).abs()),
            }
        })
        .collect()
}

fn build_doc(
    common: &CommonArgs,
    outcome: &LogDetOutcome<f64>,
    reference: Option<f64>,
) -> ResultDoc {
    ResultDoc {
        matrix: common.matrix.display().to_string(),
        config: ConfigEcho::new(common),
        logdet: outcome.estimate.value,
        n: outcome.estimate.n,
        c: outcome.estimate.c,
        m_selected: outcome.estimate.moments_used,
        entropy: outcome.estimate.entropy,
        residual: outcome.estimate.residual,
        warning: outcome.estimate.warning.clone(),
        reference,
        sweep: build_rows(outcome, reference),
        skipped: outcome
            .sweep
            .skipped
            .iter()
            .map(|(m, error)| SkippedRow {
                m: *m,
                error: error.clone(),
            })
            .collect(),
        timing: Timing {
            probe_s: outcome.estimate.probe_seconds,
            maxent_s: outcome.estimate.maxent_seconds,
        },
    }
}

fn csv_cell(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| format!("{v:.10e}"))
}

fn sweep_csv(rows: &[SweepRow], with_abs_error: bool) -> String {
    let mut out = String::from("M,entropy,logdet,residual,ic,abs_error,converged\n");
    if !with_abs_error {
        out = String::from("M,entropy,logdet,residual,ic,converged\n");
    }
    for row in rows {
        let _ = write!(
            out,
            "{},{:.10e},{:.10e},{:.10e},{}",
            row.m,
            row.entropy,
            row.logdet,
            row.residual,
            csv_cell(row.ic)
        );
        if with_abs_error {
            let _ = write!(out, ",{}", csv_cell(row.abs_error));
        }
        let _ = writeln!(out, ",{}", row.converged);
    }
    out
}

/// Print the document and mirror it into `SPECDET_OUT_DIR` when set.
fn emit(text: &str, matrix: &Path, kind: &str, ext: &str) -> Result<(), CliError> {
    println!("{text}");
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        let stem = matrix
            .file_stem()
            .map_or_else(|| "matrix".into(), |s| s.to_string_lossy().into_owned());
        let dir = PathBuf::from(dir);
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(format!("{stem}.{kind}.{ext}"));
        fs::write(&path, format!("{text}\n"))
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn warn_to_stderr(outcome: &LogDetOutcome<f64>) {
    if let Some(warning) = &outcome.estimate.warning {
        eprintln!("warning: {warning}");
    }
    for (m, error) in &outcome.sweep.skipped {
        eprintln!("note: moment count {m} skipped: {error}");
    }
}

fn cmd_logdet(args: LogdetArgs) -> Result<(), CliError> {
    let grid = build_grid(&args.common)?;
    let matrix = load_matrix(&args.common.matrix)?;
    let cfg = probe_config(&args.common);
    let outcome = estimator::logdet(
        &matrix,
        &cfg,
        &grid,
        args.common.tol,
        args.common.eps_stop,
    )?;
    warn_to_stderr(&outcome);
    let doc = build_doc(&args.common, &outcome, None);
    let text = match args.format {
        Format::Json => to_pretty_json(&doc)?,
        Format::Csv => sweep_csv(&doc.sweep, false),
    };
    emit(
        text.trim_end(),
        &args.common.matrix,
        "logdet",
        format_ext(args.format),
    )
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<(), CliError> {
    let grid = build_grid(&args.common)?;
    let matrix = load_matrix(&args.common.matrix)?;
    let reference = match (args.exact_logdet, args.dense_oracle) {
        (Some(value), _) => Some(value),
        (None, true) => Some(oracle::exact_logdet_csr(&matrix)?.logdet()),
        (None, false) => None,
    };
    let cfg = probe_config(&args.common);
    let outcome = estimator::diagnose(
        &matrix,
        &cfg,
        &grid,
        args.common.tol,
        args.common.eps_stop,
    )?;
    warn_to_stderr(&outcome);
    let doc = build_doc(&args.common, &outcome, reference);
    let text = match args.format {
        Format::Csv => sweep_csv(&doc.sweep, reference.is_some()),
        Format::Json => to_pretty_json(&doc)?,
    };
    emit(
        text.trim_end(),
        &args.common.matrix,
        "diagnose",
        format_ext(args.format),
    )
}

fn cmd_moments(args: MomentsArgs) -> Result<(), CliError> {
    // The grid is unused here but its flags are still validated so a bad
    // configuration fails the same way across subcommands.
    build_grid(&args.common)?;
    let matrix = load_matrix(&args.common.matrix)?;
    let c = matrix.gershgorin_bound();
    let b = matrix
        .divided_by(c.value)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    let moments = estimate_moments(&b, &probe_config(&args.common))?;
    let text = match args.format {
        Format::Json => to_pretty_json(&moments)?,
        Format::Csv => moments_csv(&moments),
    };
    emit(
        text.trim_end(),
        &args.common.matrix,
        "moments",
        format_ext(args.format),
    )
}

fn moments_csv(moments: &MomentSet<f64>) -> String {
    let mut out = String::from("order,mean,std\n");
    for (i, (mean, std)) in moments.means.iter().zip(&moments.std).enumerate() {
        let _ = writeln!(out, "{},{mean:.10e},{std:.10e}", i + 1);
    }
    out
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("cannot serialize output: {e}")))
}

fn format_ext(format: Format) -> &'static str {
    match format {
        Format::Json => "json",
        Format::Csv => "csv",
    }
}
