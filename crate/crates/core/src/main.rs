#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use sparsecert::certificates::{compute_certificate, CertificateError};
use sparsecert::experiments::{
    analyze, build_matrix, estimate_lw_tail, estimate_tropp_moments, run_experiment, write_outputs,
    ExperimentConfig, ExperimentError, LwMode, MatrixKind,
};
use sparsecert::numerics::{read_matrix_file, Dictionary, NumericsError};
use sparsecert::solver::{solve_bpdn, SolverConfig, SolverError};
use sparsecert::sparse_model::{SparseModelError, SparseSignal};

#[derive(Parser)]
#[command(name = "sparsecert", version, about = "Constrained l1 recovery with certificates and error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coherence, spectral norm and normalization of a dictionary.
    Analyze {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long = "A0", default_value_t = sparsecert::bounds::DEFAULT_A0)]
        a0: f64,
    },
    /// Dual certificate of a sparse signal.
    Certify {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        signal: PathBuf,
    },
    /// Solve min ‖x‖₁ s.t. ‖Ax − y‖₂ ≤ ε.
    Solve {
        #[command(flatten)]
        matrix: MatrixArgs,
        /// JSON array with the n entries of y.
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Solver configuration JSON.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a Monte Carlo batch and write trials.csv and summary.json.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Moment estimates over random supports.
    Tropp {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
    },
    /// Tail of the off-support correlations over random signs.
    Lwtail {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        p: usize,
        /// Thresholds, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, default_value_t = 10000)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Fixed)]
        mode: ModeArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixed,
    Joint,
}

#[derive(Args)]
struct MatrixArgs {
    /// Matrix file (JSON header line followed by CSV rows).
    #[arg(long, conflicts_with = "builtin")]
    matrix: Option<PathBuf>,
    /// Built-in dictionary: identity_dct, identity_hadamard or signs.
    #[arg(long)]
    builtin: Option<MatrixKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Seed for the signs dictionary; also seeds sampling in `tropp` and `lwtail`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Input(String),
    Numeric(String),
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Numerics(n) => n.into(),
            ExperimentError::Solver(s) => s.into(),
            ExperimentError::Certificate(c) => c.into(),
            e if e.is_input_error() => Failure::Input(e.to_string()),
            e => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<NumericsError> for Failure {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::NotPositiveDefinite { .. } | NumericsError::ConvergenceFailure { .. } => {
                Failure::Numeric(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Numerics(n) => n.into(),
            SolverError::DimensionMismatch(_) | SolverError::InvalidEpsilon(_) => Failure::Input(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<CertificateError> for Failure {
    fn from(e: CertificateError) -> Self {
        match e {
            CertificateError::Numerics(n) => n.into(),
            CertificateError::NotInvertible => Failure::Numeric(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<SparseModelError> for Failure {
    fn from(e: SparseModelError) -> Self {
        Failure::input(e)
    }
}

impl MatrixArgs {
    fn load(&self) -> Result<Dictionary, Failure> {
        match (&self.matrix, self.builtin) {
            (Some(path), None) => {
                let (_, m) = read_matrix_file(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                Ok(Dictionary::new(m)?)
            }
            (None, Some(kind)) => {
                let (Some(n), Some(m)) = (self.n, self.m) else {
                    return Err(Failure::Input("--builtin needs --n and --m".into()));
                };
                Ok(build_matrix(kind, n, m, self.seed)?)
            }
            _ => Err(Failure::Input("give exactly one of --matrix or --builtin".into())),
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Failure::input)?;
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure::input(e)),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze { matrix, a0 } => {
            let a = matrix.load()?;
            print_json(&analyze(&a, a0)?)
        }
        Command::Certify { matrix, signal } => {
            let a = matrix.load()?;
            let x0: SparseSignal = read_json(&signal)?;
            let cert = compute_certificate(&a, &x0)?;
            print_json(&cert.to_json(true))
        }
        Command::Solve { matrix, y, epsilon, config } => {
            let a = matrix.load()?;
            let y: Vec<f64> = read_json(&y)?;
            let cfg: SolverConfig = match config {
                Some(path) => read_json(&path)?,
                None => SolverConfig::default(),
            };
            print_json(&solve_bpdn(&a, &y, epsilon, &cfg)?)
        }
        Command::Experiment { config, out, threads } => {
            let cfg: ExperimentConfig = read_json(&config)?;
            let a = cfg.matrix.load()?;
            let (summary, records) = run_experiment(&a, &cfg, threads)?;
            let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
            let (csv, json) = write_outputs(&dir, &summary, &records)?;
            eprintln!("wrote {} and {}", csv.display(), json.display());
            print_json(&summary)
        }
        Command::Tropp { matrix, p, trials } => {
            let a = matrix.load()?;
            print_json(&estimate_tropp_moments(&a, p, trials, matrix.seed)?)
        }
        Command::Lwtail {
            matrix,
            p,
            t,
            trials,
            mode,
        } => {
            let a = matrix.load()?;
            let mode = match mode {
                ModeArg::Fixed => LwMode::FixedSupport,
                ModeArg::Joint => LwMode::Joint,
            };
            print_json(&estimate_lw_tail(&a, p, &t, trials, matrix.seed, mode)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
