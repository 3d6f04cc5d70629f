//! `lowrank` command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for numeric or I/O
//! failures.

mod matrix_io;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lowrank_core::bench::{
    default_mu_grid, gen_instance, gen_mask, run_sweep, write_results_csv, ExperimentSpec,
    MaskPattern,
};
use lowrank_core::linalg::singular_values;
use lowrank_core::penalty::{inverse_spectrum_weights, DEFAULT_EPS};
use lowrank_core::proximal::prox_rh;
use lowrank_core::solver::{admm_complete, solve_objective, AdmmConfig, MaskedObservations};
use lowrank_core::{DenseMatrix, PenaltyWeights, Preset};

pub use matrix_io::{load_matrix, save_matrix, MatrixIoError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lowrank",
    version,
    about = "Low-rank envelope penalties: synthesis, completion, sweeps and proximal maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a noisy low-rank matrix, its ground truth and optionally a mask.
    Synth(SynthArgs),
    /// Complete a masked matrix with ADMM.
    Complete(CompleteArgs),
    /// Run the missing-data sweep and write a result table.
    Sweep(SweepArgs),
    /// Apply the proximal map of the envelope penalty to a matrix.
    Prox(ProxArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Pattern {
    Uniform,
    Tracking,
}

impl From<Pattern> for MaskPattern {
    fn from(p: Pattern) -> Self {
        match p {
            Pattern::Uniform => MaskPattern::Uniform,
            Pattern::Tracking => MaskPattern::Tracking,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PenaltyKind {
    Nuclear,
    Wnnm,
    Rmu,
    Hardrank,
    /// Inverse-spectrum weights `√μ/(σ_i+ε)`, `μ/(σ_i+ε)` from the measurements.
    Rh,
}

#[derive(Debug, Args)]
struct PenaltyArgs {
    #[arg(long, value_enum)]
    penalty: PenaltyKind,
    /// Strength for nuclear, rmu and rh.
    #[arg(long)]
    mu: Option<f64>,
    /// Rank bound for hardrank.
    #[arg(long)]
    rank: Option<usize>,
    /// Comma-separated non-decreasing weights for wnnm.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measurements `M0 + N`.
    #[arg(long)]
    out: PathBuf,
    /// Ground truth `M0`.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "uniform")]
    pattern: Pattern,
    /// Missing fraction of the mask written to --mask-out.
    #[arg(long, default_value_t = 0.0)]
    missing: f64,
    #[arg(long)]
    mask_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = AdmmConfig::default().rho)]
    rho: f64,
    #[arg(long, default_value_t = AdmmConfig::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = AdmmConfig::default().primal_tol)]
    primal_tol: f64,
    #[arg(long, default_value_t = AdmmConfig::default().rel_obj_tol)]
    rel_obj_tol: f64,
    /// Scale of the data term, in (0, 1].
    #[arg(long, default_value_t = AdmmConfig::default().data_scale)]
    data_scale: f64,
}

impl SolverArgs {
    fn config(&self) -> AdmmConfig {
        AdmmConfig {
            rho: self.rho,
            max_iters: self.max_iters,
            primal_tol: self.primal_tol,
            rel_obj_tol: self.rel_obj_tol,
            data_scale: self.data_scale,
        }
    }
}

#[derive(Debug, Args)]
struct CompleteArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// 0/1 mask; every entry is observed when omitted.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    pattern: Pattern,
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Comma-separated μ grid; defaults to half-decades from 1 to 10^3.5.
    #[arg(long, value_delimiter = ',')]
    mus: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    rows: usize,
    #[arg(long, default_value_t = 512)]
    cols: usize,
    #[arg(long, default_value_t = 4)]
    rank: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Result CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProxArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Strength τ > 1 of the quadratic term.
    #[arg(long)]
    tau: f64,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[arg(long)]
    out: PathBuf,
}

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<lowrank_core::Error> for Failure {
    fn from(e: lowrank_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<MatrixIoError> for Failure {
    fn from(e: MatrixIoError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Complete(a) => complete(a),
        Command::Sweep(a) => sweep(a),
        Command::Prox(a) => prox(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn penalty_weights(p: &PenaltyArgs, data: &DenseMatrix) -> Result<PenaltyWeights, Failure> {
    let k = data.rows().min(data.cols());
    let need_mu = || {
        p.mu.ok_or_else(|| Failure::Usage("--mu is required for this penalty".into()))
    };
    let w = match p.penalty {
        PenaltyKind::Nuclear => Preset::Nuclear { mu: need_mu()? }.weights(k)?,
        PenaltyKind::Rmu => Preset::Rmu { mu: need_mu()? }.weights(k)?,
        PenaltyKind::Hardrank => {
            let rank = p
                .rank
                .ok_or_else(|| Failure::Usage("--rank is required for hardrank".into()))?;
            Preset::HardRank { rank }.weights(k)?
        }
        PenaltyKind::Wnnm => {
            let weights = p
                .weights
                .clone()
                .ok_or_else(|| Failure::Usage("--weights is required for wnnm".into()))?;
            Preset::Wnnm { weights }.weights(k)?
        }
        PenaltyKind::Rh => {
            let s = singular_values(data)?;
            inverse_spectrum_weights(&s, need_mu()?, DEFAULT_EPS)?
        }
    };
    Ok(w)
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let spec = ExperimentSpec {
        rows: a.rows,
        cols: a.cols,
        rank: a.rank,
        noise_sigma: a.sigma,
        pattern: a.pattern.into(),
        missing_fractions: vec![a.missing],
        seed: a.seed,
        ..ExperimentSpec::default()
    };
    let (m0, m) = gen_instance(&spec, 0)?;
    save_matrix(&m, &a.out)?;
    if let Some(gt) = &a.gt {
        save_matrix(&m0, gt)?;
    }
    if let Some(path) = &a.mask_out {
        save_matrix(&gen_mask(&spec, 0, a.missing)?, path)?;
    }
    Ok(())
}

fn complete(a: CompleteArgs) -> Result<(), Failure> {
    let m = load_matrix(&a.matrix)?;
    let obs = match &a.mask {
        Some(path) => MaskedObservations::new(m, load_matrix(path)?)?,
        None => MaskedObservations::full(m),
    };
    let w = penalty_weights(&a.penalty, &obs.zero_filled())?;
    let (x, diag) = admm_complete(&obs, &w, &a.solver.config())?;
    save_matrix(&x, &a.out)?;
    let objective = solve_objective(&x, &obs, &w)?;
    println!("objective {objective:.17e}");
    println!("iterations {}", diag.iterations);
    println!("converged {}", diag.converged);
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), Failure> {
    let spec = ExperimentSpec {
        rows: a.rows,
        cols: a.cols,
        rank: a.rank,
        noise_sigma: a.sigma,
        pattern: a.pattern.into(),
        missing_fractions: a.fractions,
        instances: a.instances,
        mu_grid: a.mus.unwrap_or_else(default_mu_grid),
        seed: a.seed,
        admm: a.solver.config(),
    };
    if let Err(e) = spec.validate() {
        return Err(Failure::Usage(e.to_string()));
    }
    let records = run_sweep(&spec)?;
    match &a.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| io_failure(path, e))?;
            write_results_csv(&records, std::io::BufWriter::new(file))
                .map_err(|e| io_failure(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_results_csv(&records, &mut lock)
                .and_then(|()| lock.flush())
                .map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

fn prox(a: ProxArgs) -> Result<(), Failure> {
    let n = load_matrix(&a.matrix)?;
    let w = penalty_weights(&a.penalty, &n)?;
    let x = prox_rh(&n, &w, a.tau)?;
    save_matrix(&x, &a.out)?;
    Ok(())
}
