//! Monte Carlo harness: per-trial recovery experiments, moment and tail
//! estimates, and the CSV/JSON reports they produce.
//!
//! Each trial owns its randomness. The trial seed is `root_seed ⊕ index` and
//! independent ChaCha streams of that seed drive the signal, the
//! compressible tail and the noise, so the trials can run in any order and on
//! any number of threads without changing a single output byte.

mod matrices;
mod moments;
mod report;

use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matrices::{build_matrix, MatrixKind};
pub use moments::{estimate_lw_tail, estimate_tropp_moments, LwMode, LwTailEstimate, LwTailPoint, TroppEstimate};
pub use report::{analyze, trials_csv, write_outputs, MatrixDiagnostics, SCHEMA_VERSION};

use crate::bounds::{
    self, cortropp_condition, l1_error_bound, prop1_bound, prop2_floor, probability_floor, theorem1_constant,
};
use crate::certificates::{compute_certificate, CertificateError};
use crate::numerics::{norm1, norm2, read_matrix_file, submatrix_norm_1_to_2, Dictionary, NumericsError, SubMatrix};
use crate::solver::{solve_bpdn, verify_kkt, SolveStatus, SolverConfig, SolverError};
use crate::sparse_model::{
    random_signs, sample_generic_p_sparse, sample_sphere, stream_rng, trial_seed, MagnitudeRule, SparseModelError,
};

const SIGNAL_STREAM: u64 = 0;
const TAIL_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("bad matrix shape: {0}")]
    BadShape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Signal(#[from] SparseModelError),
}

impl ExperimentError {
    /// True for failures caused by input files or configuration rather than numerics.
    pub fn is_input_error(&self) -> bool {
        match self {
            ExperimentError::Config(_)
            | ExperimentError::Io { .. }
            | ExperimentError::Csv(_)
            | ExperimentError::Json(_)
            | ExperimentError::BadShape(_) => true,
            ExperimentError::Numerics(e) => matches!(e, NumericsError::Io(_) | NumericsError::Format(_)),
            _ => false,
        }
    }
}

/// Where the dictionary comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MatrixSource {
    File { path: PathBuf },
    Builtin {
        kind: MatrixKind,
        n: usize,
        m: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl MatrixSource {
    pub fn load(&self) -> Result<Dictionary, ExperimentError> {
        match self {
            MatrixSource::File { path } => {
                let (_, matrix) = read_matrix_file(path)?;
                Ok(Dictionary::new(matrix)?)
            }
            MatrixSource::Builtin { kind, n, m, seed } => build_matrix(*kind, *n, *m, *seed),
        }
    }
}

/// How the noise vector `b` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRule {
    /// Uniform on the sphere `‖b‖₂ = ε`.
    #[default]
    Sphere,
    /// Uniform in the ball `‖b‖₂ ≤ ε`.
    Ball,
    /// `b = ε · A s / ‖A s‖₂` for a random sign vector `s`, correlated with `A`.
    Adversarial,
    /// `b = 0`.
    Zero,
}

/// Compressible-signal mode: tail of norm `C1·epsilon1`, noise of norm
/// `epsilon1`, constraint level `epsilon1(1 + C1‖A‖₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressibleConfig {
    #[serde(rename = "C1")]
    pub c1: f64,
    pub epsilon1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub matrix: MatrixSource,
    pub p: usize,
    pub trials: usize,
    #[serde(default)]
    pub root_seed: u64,
    pub epsilon: f64,
    #[serde(default)]
    pub noise_rule: NoiseRule,
    #[serde(default)]
    pub magnitude_rule: MagnitudeRule,
    #[serde(default)]
    pub compressible: Option<CompressibleConfig>,
    #[serde(rename = "A0", default = "default_a0")]
    pub a0: f64,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_a0() -> f64 {
    bounds::DEFAULT_A0
}

fn default_c0() -> f64 {
    bounds::DEFAULT_C0
}

fn default_t() -> f64 {
    bounds::DEFAULT_T
}

impl ExperimentConfig {
    /// A config with default constants for a built-in matrix.
    pub fn builtin(kind: MatrixKind, n: usize, m: usize, p: usize, epsilon: f64, trials: usize) -> Self {
        Self {
            matrix: MatrixSource::Builtin { kind, n, m, seed: 0 },
            p,
            trials,
            root_seed: 0,
            epsilon,
            noise_rule: NoiseRule::default(),
            magnitude_rule: MagnitudeRule::default(),
            compressible: None,
            a0: bounds::DEFAULT_A0,
            c0: bounds::DEFAULT_C0,
            t: bounds::DEFAULT_T,
            solver: SolverConfig::default(),
            output_dir: None,
        }
    }

    pub fn validate(&self, m: usize) -> Result<(), ExperimentError> {
        if self.trials < 1 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if self.p < 1 || self.p > m {
            return Err(ExperimentError::Config(format!("p = {} must lie in [1, m = {m}]", self.p)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(ExperimentError::Config("epsilon must be finite and nonnegative".into()));
        }
        if let Some(c) = self.compressible {
            if !(c.c1 >= 0.0 && c.epsilon1 >= 0.0) {
                return Err(ExperimentError::Config("C1 and epsilon1 must be nonnegative".into()));
            }
        }
        if !(self.a0 >= 0.0 && self.c0 > 0.0 && self.t > 0.0) {
            return Err(ExperimentError::Config("A0 >= 0, c0 > 0 and t > 0 are required".into()));
        }
        self.solver.validate()?;
        Ok(())
    }
}

/// Everything measured in one trial. Undefined quantities are empty in CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed: u64,
    pub p: usize,
    /// Support indices joined by `;`.
    pub support: String,
    pub invertible: bool,
    pub ic: Option<f64>,
    pub gram_inv_spectral: Option<f64>,
    pub d_norm: Option<f64>,
    pub fuchs: bool,
    pub epsilon: f64,
    pub noise_norm: f64,
    pub l2_error: Option<f64>,
    pub l1_error: Option<f64>,
    pub prop1_rhs: Option<f64>,
    pub theorem_bound: f64,
    pub l1_bound: f64,
    pub residual_norm: Option<f64>,
    pub solver_status: String,
    pub solver_iterations: usize,
    pub polished: bool,
    pub lambda: Option<f64>,
    pub x0_l1: f64,
    pub xstar_l1: Option<f64>,
    pub kkt_max_offsupport_dual: Option<f64>,
    pub kkt_onsupport_sign_error: Option<f64>,
    pub kkt_implicit_eq_residual: Option<f64>,
    /// `l2_error ≤ Cε` with a converged solver.
    pub success: bool,
    /// `l2_error ≤ prop1_rhs + 1e-6`, checked when invertible and IC < 1.
    pub prop1_holds: Option<bool>,
    /// `l1_error ≤ l1_bound + 1e-6`, checked when `success`.
    pub l1_holds: Option<bool>,
    pub error: String,
}

/// Solver slack allowed when checking the per-trial bounds.
pub const BOUND_SLACK: f64 = 1e-6;

fn draw_noise<R: Rng + ?Sized>(a: &Dictionary, rule: NoiseRule, radius: f64, rng: &mut R) -> Vec<f64> {
    let n = a.n();
    match rule {
        NoiseRule::Zero => vec![0.0; n],
        NoiseRule::Sphere => sample_sphere(n, radius, rng),
        NoiseRule::Ball => {
            let dir = sample_sphere(n, 1.0, rng);
            let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
            dir.into_iter().map(|v| v * r).collect()
        }
        NoiseRule::Adversarial => {
            let s = random_signs(a.m(), rng);
            let v = a.apply(&s);
            let nv = norm2(&v);
            if nv == 0.0 || radius == 0.0 {
                vec![0.0; n]
            } else {
                v.into_iter().map(|t| t * radius / nv).collect()
            }
        }
    }
}

/// Runs one trial: draws `x⁰` (plus a tail in compressible mode) and `b`,
/// solves with `y = Ax + b`, and evaluates the certificate and every bound.
///
/// Solver and certificate failures are recorded in the returned record, never
/// propagated; they count as failures of the success event.
pub fn run_trial(a: &Dictionary, cfg: &ExperimentConfig, trial_index: u64) -> Result<TrialRecord, ExperimentError> {
    let seed = trial_seed(cfg.root_seed, trial_index);
    let m = a.m();
    let xs = sample_generic_p_sparse(m, cfg.p, cfg.magnitude_rule, &mut stream_rng(seed, SIGNAL_STREAM))?;

    let (x_true, epsilon, noise_radius) = match cfg.compressible {
        Some(c) => {
            let tail = sample_sphere(m, c.c1 * c.epsilon1, &mut stream_rng(seed, TAIL_STREAM));
            let mut x1 = xs.to_dense();
            for (xi, ri) in x1.iter_mut().zip(&tail) {
                *xi += ri;
            }
            let eps = bounds::corollary1_epsilon(c.epsilon1, c.c1, a.spectral_norm()?);
            (x1, eps, c.epsilon1)
        }
        None => (xs.to_dense(), cfg.epsilon, cfg.epsilon),
    };
    let b = draw_noise(a, cfg.noise_rule, noise_radius, &mut stream_rng(seed, NOISE_STREAM));
    let mut y = a.apply(&x_true);
    for (yi, bi) in y.iter_mut().zip(&b) {
        *yi += bi;
    }

    let p = cfg.p;
    let theorem_bound = theorem1_constant(p as f64) * epsilon;
    let l1_bound = l1_error_bound(p as f64, epsilon);
    let mut rec = TrialRecord {
        trial_index,
        seed,
        p,
        support: xs.support().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";"),
        invertible: false,
        ic: None,
        gram_inv_spectral: None,
        d_norm: None,
        fuchs: false,
        epsilon,
        noise_norm: norm2(&b),
        l2_error: None,
        l1_error: None,
        prop1_rhs: None,
        theorem_bound,
        l1_bound,
        residual_norm: None,
        solver_status: String::new(),
        solver_iterations: 0,
        polished: false,
        lambda: None,
        x0_l1: xs.l1_norm(),
        xstar_l1: None,
        kkt_max_offsupport_dual: None,
        kkt_onsupport_sign_error: None,
        kkt_implicit_eq_residual: None,
        success: false,
        prop1_holds: None,
        l1_holds: None,
        error: String::new(),
    };
    let mut errors = Vec::new();

    match compute_certificate(a, &xs) {
        Ok(cert) if cert.invertible => {
            rec.invertible = true;
            rec.ic = Some(cert.ic);
            rec.gram_inv_spectral = Some(cert.gram_inv_spectral);
            rec.d_norm = Some(cert.d_norm);
            rec.fuchs = cert.ic < 1.0;
            if rec.fuchs {
                let nu = submatrix_norm_1_to_2(&SubMatrix::complement(a, xs.support())?);
                rec.prop1_rhs = Some(prop1_bound(&cert, epsilon, nu).expect("IC < 1 checked"));
            }
        }
        Ok(_) => errors.push("GramSingular".to_string()),
        Err(e) => errors.push(format!("certificate: {e}")),
    }

    match solve_bpdn(a, &y, epsilon, &cfg.solver) {
        Ok(sol) => {
            rec.solver_status = format!("{:?}", sol.status);
            rec.solver_iterations = sol.iterations;
            rec.polished = sol.polished;
            rec.lambda = Some(sol.lambda);
            rec.residual_norm = Some(sol.residual_norm);
            rec.xstar_l1 = Some(sol.l1_norm);
            let x0 = xs.to_dense();
            let diff: Vec<f64> = sol.x_star.iter().zip(&x0).map(|(p, q)| p - q).collect();
            let l2 = norm2(&diff);
            let l1 = norm1(&diff);
            rec.l2_error = Some(l2);
            rec.l1_error = Some(l1);
            let converged = sol.status == SolveStatus::Converged;
            rec.success = converged && l2 <= theorem_bound;
            if let Some(rhs) = rec.prop1_rhs {
                rec.prop1_holds = Some(converged && l2 <= rhs + BOUND_SLACK);
            }
            if rec.success {
                rec.l1_holds = Some(l1 <= l1_bound + BOUND_SLACK);
            }
            if converged && sol.lambda > 0.0 {
                match verify_kkt(a, &y, epsilon, &sol) {
                    Ok(k) => {
                        rec.kkt_max_offsupport_dual = Some(k.max_offsupport_dual);
                        rec.kkt_onsupport_sign_error = Some(k.onsupport_sign_error);
                        rec.kkt_implicit_eq_residual = k.implicit_eq_residual;
                    }
                    Err(e) => errors.push(format!("kkt: {e}")),
                }
            }
            if !converged {
                errors.push(format!("solver status {:?}", sol.status));
            }
        }
        Err(e) => {
            rec.solver_status = "Error".into();
            errors.push(format!("solver: {e}"));
        }
    }
    rec.error = errors.join("; ");
    Ok(rec)
}

/// Hypothesis checks of the asymptotic statements at the configured scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub coherence: f64,
    pub spectral_norm: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    pub c0: f64,
    pub coherence_criterion: bool,
    /// Smallest `A0` for which the coherence criterion would hold.
    pub a0_needed: f64,
    pub sparsity_threshold: f64,
    pub p_within_threshold: bool,
    pub cortropp_ok: bool,
    pub small_m: bool,
}

/// Aggregate rates over a batch, compared with the guaranteed floors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub trials: usize,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub epsilon: f64,
    pub theorem1_c: f64,
    pub successes: usize,
    pub empirical_success_rate: f64,
    pub empirical_ic_quarter_rate: f64,
    pub empirical_gram_rate: f64,
    pub joint_rate: f64,
    pub fuchs_rate: f64,
    pub invertible_rate: f64,
    pub probability_floor: f64,
    pub prop2_floor: f64,
    pub l1_success_rate: f64,
    pub prop1_checked: usize,
    pub prop1_violations: usize,
    pub l1_checked: usize,
    pub l1_violations: usize,
    pub solver_failures: usize,
    pub max_l2_error: f64,
    pub hypotheses: HypothesisReport,
    pub config: ExperimentConfig,
}

fn rate(count: usize, total: usize) -> f64 {
    count as f64 / total as f64
}

/// Aggregates trial records; single-threaded over index-ordered records.
pub fn summarize(
    a: &Dictionary,
    cfg: &ExperimentConfig,
    records: &[TrialRecord],
) -> Result<Summary, ExperimentError> {
    let total = records.len().max(1);
    let count = |f: &dyn Fn(&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let ic_q = |r: &TrialRecord| r.invertible && r.ic.is_some_and(|v| v <= 0.25);
    let gram2 = |r: &TrialRecord| r.invertible && r.gram_inv_spectral.is_some_and(|v| v <= 2.0);

    let m = a.m();
    let mf = m as f64;
    let mu = a.coherence()?;
    let spectral = a.spectral_norm()?;
    let epsilon = records.first().map_or(cfg.epsilon, |r| r.epsilon);
    let threshold = bounds::sparsity_threshold(mf, spectral, cfg.c0);
    let successes = count(&|r| r.success);
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        trials: records.len(),
        m,
        n: a.n(),
        p: cfg.p,
        epsilon,
        theorem1_c: theorem1_constant(cfg.p as f64),
        successes,
        empirical_success_rate: rate(successes, total),
        empirical_ic_quarter_rate: rate(count(&ic_q), total),
        empirical_gram_rate: rate(count(&gram2), total),
        joint_rate: rate(count(&|r| ic_q(r) && gram2(r)), total),
        fuchs_rate: rate(count(&|r| r.fuchs), total),
        invertible_rate: rate(count(&|r| r.invertible), total),
        probability_floor: probability_floor(mf),
        prop2_floor: prop2_floor(mf, cfg.t, cfg.c0),
        l1_success_rate: rate(
            count(&|r| r.solver_status == "Converged" && r.l1_error.is_some_and(|e| e <= r.l1_bound)),
            total,
        ),
        prop1_checked: count(&|r| r.prop1_holds.is_some()),
        prop1_violations: count(&|r| r.prop1_holds == Some(false)),
        l1_checked: count(&|r| r.l1_holds.is_some()),
        l1_violations: count(&|r| r.l1_holds == Some(false)),
        solver_failures: count(&|r| r.solver_status != "Converged"),
        max_l2_error: records.iter().filter_map(|r| r.l2_error).fold(0.0, f64::max),
        hypotheses: HypothesisReport {
            coherence: mu,
            spectral_norm: spectral,
            a0: cfg.a0,
            c0: cfg.c0,
            coherence_criterion: crate::numerics::coherence_criterion_value(mu, mf, cfg.a0),
            a0_needed: mu * mf.ln(),
            sparsity_threshold: threshold,
            p_within_threshold: (cfg.p as f64) <= threshold,
            cortropp_ok: cortropp_condition(cfg.a0, cfg.c0),
            small_m: m < bounds::ASYMPTOTIC_MIN_M,
        },
        config: cfg.clone(),
    })
}

/// Runs every trial (in parallel when `threads` allows) and aggregates them.
/// Records come back in trial-index order.
pub fn run_experiment(
    a: &Dictionary,
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<(Summary, Vec<TrialRecord>), ExperimentError> {
    cfg.validate(a.m())?;
    if !a.is_normalized() {
        return Err(NumericsError::NotNormalized.into());
    }
    // warm the caches before fanning out
    a.spectral_norm()?;
    a.coherence()?;
    let work = || -> Result<Vec<TrialRecord>, ExperimentError> {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|i| run_trial(a, cfg, i))
            .collect()
    };
    let records = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let summary = summarize(a, cfg, &records)?;
    Ok((summary, records))
}
