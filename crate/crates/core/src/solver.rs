//! Basis pursuit denoising: `min ‖x‖₁ subject to ‖Ax − y‖₂ ≤ ε`.
//!
//! The main solver is a two-block ADMM on the splitting
//! `w − x = 0`, `Aw − y − v = 0`, with `x` soft-thresholded and `v` projected
//! onto the ε-ball. Because both constraints share one penalty, the `w` step
//! always solves with `I + AᵗA` (factored once through `I + AAᵗ`) and the
//! penalty can be rebalanced without refactoring.
//!
//! Every few iterations the support and signs of the current iterate are
//! handed to an active-set polish that solves the optimality system exactly:
//! on a support `S` with signs `σ`,
//!
//! ```text
//! x_S = (A_SᵗA_S)⁻¹A_Sᵗy − λ (A_SᵗA_S)⁻¹σ,   ‖Ax − y‖₂ = ε,
//! ```
//!
//! which has a closed-form `λ` because the least-squares residual is
//! orthogonal to `A_S (A_SᵗA_S)⁻¹σ`. A polished point is accepted only when its
//! signs agree with `σ` and `‖Aᵗ(y − Ax)/λ‖_∞ ≤ 1` off the support, which is a
//! complete KKT certificate for the convex problem.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    axpy, dot, gram, norm1, norm2, norm_inf, Cholesky, Dictionary, NumericsError, SymmetricMatrix,
};
use crate::sparse_model::sign_vector;

/// Largest `m` accepted by [`oracle_solve`].
pub const ORACLE_MAX_M: usize = 12;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("epsilon must be finite and nonnegative, got {0}")]
    InvalidEpsilon(f64),
    #[error("oracle solver accepts m <= {ORACLE_MAX_M}, got m = {0}")]
    GuardExceeded(usize),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Residual-balancing rule for the ADMM penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyAdaptation {
    /// Rebalance when one residual exceeds the other by this factor.
    pub mu: f64,
    /// Multiplicative step of the penalty.
    pub tau: f64,
    /// Iterations between rebalancing checks; 0 disables adaptation.
    pub every: usize,
}

impl Default for PenaltyAdaptation {
    fn default() -> Self {
        Self {
            mu: 10.0,
            tau: 2.0,
            every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub primal_tol: f64,
    pub feasibility_tol: f64,
    pub penalty_initial: f64,
    pub penalty_adaptation: PenaltyAdaptation,
    pub lambda_bisection_tol: f64,
    /// Iterations between polish attempts.
    pub polish_every: usize,
    /// Active-set corrections tried per polish attempt.
    pub polish_steps: usize,
    /// Slack on `|dual| ≤ 1` off the support when certifying a polished point.
    pub kkt_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            primal_tol: 1e-9,
            feasibility_tol: 1e-9,
            penalty_initial: 1.0,
            penalty_adaptation: PenaltyAdaptation::default(),
            lambda_bisection_tol: 1e-10,
            polish_every: 10,
            polish_steps: 8,
            kkt_tol: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let tols = [
            self.primal_tol,
            self.feasibility_tol,
            self.penalty_initial,
            self.lambda_bisection_tol,
            self.kkt_tol,
        ];
        if tols.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(SolverError::PreconditionViolation("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub x_star: Vec<f64>,
    pub residual_norm: f64,
    pub l1_norm: f64,
    pub support_star: Vec<usize>,
    pub support_threshold: f64,
    /// Multiplier of the penalized form `½‖Ax − y‖² + λ‖x‖₁` at the solution.
    pub lambda: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// True when the returned point came from the exact active-set polish.
    pub polished: bool,
}

impl Solution {
    fn finish(a: &Dictionary, y: &[f64], x: Vec<f64>, lambda: f64, iterations: usize, status: SolveStatus, polished: bool) -> Self {
        let ax = a.apply(&x);
        let residual_norm = norm2(&ax.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>());
        let support_threshold = 1e-8 * norm_inf(&x).max(1.0);
        let support_star = (0..x.len()).filter(|&i| x[i].abs() > support_threshold).collect();
        Self {
            l1_norm: norm1(&x),
            x_star: x,
            residual_norm,
            support_star,
            support_threshold,
            lambda,
            iterations,
            status,
            polished,
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn check_inputs(a: &Dictionary, y: &[f64], epsilon: f64) -> Result<(), SolverError> {
    if y.len() != a.n() {
        return Err(SolverError::DimensionMismatch(format!(
            "y has length {}, A has n = {}",
            y.len(),
            a.n()
        )));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(SolverError::InvalidEpsilon(epsilon));
    }
    Ok(())
}

/// Distance from `y` to the column space of `A` (modified Gram–Schmidt).
pub fn range_residual(a: &Dictionary, y: &[f64]) -> f64 {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(a.n());
    for j in 0..a.m() {
        if basis.len() == a.n() {
            break;
        }
        let mut q = a.column(j).to_vec();
        let orig = norm2(&q);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &q);
                axpy(-c, b, &mut q);
            }
        }
        let nq = norm2(&q);
        if nq > 1e-10 * orig {
            q.iter_mut().for_each(|v| *v /= nq);
            basis.push(q);
        }
    }
    let mut r = y.to_vec();
    for _ in 0..2 {
        for b in &basis {
            let c = dot(b, &r);
            axpy(-c, b, &mut r);
        }
    }
    norm2(&r)
}

/// Solves `min ‖x‖₁ s.t. ‖Ax − y‖₂ ≤ ε`.
///
/// Returns `status = MaxIters` rather than an error when the iteration budget
/// runs out, and `status = Infeasible` when `ε = 0` and `y ∉ range(A)`.
pub fn solve_bpdn(a: &Dictionary, y: &[f64], epsilon: f64, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    check_inputs(a, y, epsilon)?;
    cfg.validate()?;
    let (n, m) = (a.n(), a.m());

    if norm2(y) <= epsilon {
        return Ok(Solution::finish(a, y, vec![0.0; m], 0.0, 0, SolveStatus::Converged, true));
    }
    if epsilon == 0.0 && range_residual(a, y) > 1e-9 * norm2(y).max(1.0) {
        return Ok(Solution::finish(a, y, vec![0.0; m], 0.0, 0, SolveStatus::Infeasible, false));
    }

    // (I + AᵗA)⁻¹ b = b − Aᵗ (I + AAᵗ)⁻¹ A b
    let inner = Cholesky::factor(&a.matrix().outer_gram().shifted(1.0))?;
    let solve_w = |b: &[f64]| -> Vec<f64> {
        let t = inner.solve(&a.apply(b));
        let at = a.apply_transpose(&t);
        b.iter().zip(&at).map(|(p, q)| p - q).collect()
    };

    let mut polisher = Polisher::new(a, y, epsilon, cfg);
    let mut rho = cfg.penalty_initial;
    let mut x = vec![0.0; m];
    let mut v = project_ball(&y.iter().map(|t| -t).collect::<Vec<_>>(), epsilon);
    let mut u1 = vec![0.0; m];
    let mut u2 = vec![0.0; n];
    let sqrt_dims = ((m + n) as f64).sqrt();

    for iter in 1..=cfg.max_iters {
        // w-step
        let mut rhs: Vec<f64> = x.iter().zip(&u1).map(|(p, q)| p - q).collect();
        let shifted: Vec<f64> = (0..n).map(|i| y[i] + v[i] - u2[i]).collect();
        axpy(1.0, &a.apply_transpose(&shifted), &mut rhs);
        let w = solve_w(&rhs);
        let aw = a.apply(&w);

        // (x, v)-step
        let x_new: Vec<f64> = (0..m).map(|i| soft_threshold(w[i] + u1[i], 1.0 / rho)).collect();
        let v_arg: Vec<f64> = (0..n).map(|i| aw[i] - y[i] + u2[i]).collect();
        let v_new = project_ball(&v_arg, epsilon);

        let r1: Vec<f64> = (0..m).map(|i| w[i] - x_new[i]).collect();
        let r2: Vec<f64> = (0..n).map(|i| aw[i] - y[i] - v_new[i]).collect();
        axpy(1.0, &r1, &mut u1);
        axpy(1.0, &r2, &mut u2);

        let dx: Vec<f64> = (0..m).map(|i| x_new[i] - x[i]).collect();
        let dv: Vec<f64> = (0..n).map(|i| v_new[i] - v[i]).collect();
        let mut s = dx;
        axpy(1.0, &a.apply_transpose(&dv), &mut s);
        let dual_res = rho * norm2(&s);
        let primal_res = (dot(&r1, &r1) + dot(&r2, &r2)).sqrt();

        x = x_new;
        v = v_new;

        if iter % cfg.polish_every.max(1) == 0 {
            // dual estimate: ρ·u2 ≈ (Ax − y)/λ
            let dual_u: Vec<f64> = u2.iter().map(|t| -rho * t).collect();
            if let Some((xp, lam)) = polisher.attempt(&x, &dual_u)? {
                return Ok(Solution::finish(a, y, xp, lam, iter, SolveStatus::Converged, true));
            }
        }

        let wa = (dot(&w, &w) + dot(&aw, &aw)).sqrt();
        let xv = (dot(&x, &x) + dot(&v, &v)).sqrt();
        let eps_pri = cfg.primal_tol * (sqrt_dims + wa.max(xv).max(norm2(y)));
        let eps_dual = cfg.primal_tol * ((m as f64).sqrt() + rho * norm2(&u1));
        if primal_res <= eps_pri && dual_res <= eps_dual {
            let dual_u: Vec<f64> = u2.iter().map(|t| -rho * t).collect();
            if let Some((xp, lam)) = polisher.attempt(&x, &dual_u)? {
                return Ok(Solution::finish(a, y, xp, lam, iter, SolveStatus::Converged, true));
            }
            let sol = {
                let ru2 = rho * norm2(&u2);
                let lam = if ru2 > 0.0 { epsilon / ru2 } else { 0.0 };
                Solution::finish(a, y, x.clone(), lam, iter, SolveStatus::Converged, false)
            };
            if sol.residual_norm <= epsilon * (1.0 + cfg.feasibility_tol) {
                return Ok(sol);
            }
        }

        let ad = cfg.penalty_adaptation;
        if ad.every > 0 && iter % ad.every == 0 {
            if primal_res > ad.mu * dual_res {
                rho *= ad.tau;
                u1.iter_mut().chain(u2.iter_mut()).for_each(|t| *t /= ad.tau);
            } else if dual_res > ad.mu * primal_res {
                rho /= ad.tau;
                u1.iter_mut().chain(u2.iter_mut()).for_each(|t| *t *= ad.tau);
            }
        }
    }

    let ru2 = rho * norm2(&u2);
    let lam = if ru2 > 0.0 { epsilon / ru2 } else { 0.0 };
    Ok(Solution::finish(a, y, x, lam, cfg.max_iters, SolveStatus::MaxIters, false))
}

fn project_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let nv = norm2(v);
    if nv <= radius {
        v.to_vec()
    } else {
        v.iter().map(|t| t * radius / nv).collect()
    }
}

/// Exact solve of the optimality system on a guessed support and sign pattern.
struct Polisher<'a> {
    a: &'a Dictionary,
    y: &'a [f64],
    epsilon: f64,
    cfg: &'a SolverConfig,
    last_failed: Option<(Vec<usize>, Vec<f64>)>,
}

enum PolishOutcome {
    Accepted(Vec<f64>, f64),
    /// Indices whose polished sign disagreed with the guess.
    SignFlip(Vec<usize>),
    /// Most violating off-support index of the dual certificate.
    DualViolation(usize),
    Failed,
}

impl<'a> Polisher<'a> {
    fn new(a: &'a Dictionary, y: &'a [f64], epsilon: f64, cfg: &'a SolverConfig) -> Self {
        Self {
            a,
            y,
            epsilon,
            cfg,
            last_failed: None,
        }
    }

    /// Tries the support of `x` and a few active-set corrections of it.
    fn attempt(&mut self, x: &[f64], dual_u: &[f64]) -> Result<Option<(Vec<f64>, f64)>, SolverError> {
        let mut support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
        let mut signs: Vec<f64> = support.iter().map(|&i| x[i].signum()).collect();
        if support.is_empty() {
            return Ok(None);
        }
        if self
            .last_failed
            .as_ref()
            .is_some_and(|(s, g)| *s == support && *g == signs)
        {
            return Ok(None);
        }
        let first = (support.clone(), signs.clone());
        for _ in 0..=self.cfg.polish_steps {
            match self.polish(&support, &signs, dual_u)? {
                PolishOutcome::Accepted(xp, lam) => return Ok(Some((xp, lam))),
                PolishOutcome::SignFlip(bad) => {
                    let keep: Vec<usize> = (0..support.len()).filter(|k| !bad.contains(k)).collect();
                    if keep.is_empty() {
                        break;
                    }
                    support = keep.iter().map(|&k| support[k]).collect();
                    signs = keep.iter().map(|&k| signs[k]).collect();
                }
                PolishOutcome::DualViolation(j) => {
                    let pos = support.partition_point(|&i| i < j);
                    let sign = self.dual_sign(&support, &signs, j);
                    support.insert(pos, j);
                    signs.insert(pos, sign);
                }
                PolishOutcome::Failed => break,
            }
        }
        self.last_failed = Some(first);
        Ok(None)
    }

    fn dual_sign(&self, support: &[usize], signs: &[f64], j: usize) -> f64 {
        // sign of the violating correlation at the current polished point
        match self.lambda_point(support, signs) {
            Some((x, _)) => {
                let r: Vec<f64> = self.y.iter().zip(self.a.apply(&x)).map(|(p, q)| p - q).collect();
                let c = dot(self.a.column(j), &r);
                if c >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            None => 1.0,
        }
    }

    fn lambda_point(&self, support: &[usize], signs: &[f64]) -> Option<(Vec<f64>, f64)> {
        let sub = self.a.submatrix(support.to_vec()).ok()?;
        let chol = Cholesky::factor(&gram(&sub)).ok()?;
        let x_ls = chol.solve(&sub.apply_transpose(self.y));
        let h = chol.solve(signs);
        let fit = sub.apply(&x_ls);
        let r_ls: Vec<f64> = self.y.iter().zip(&fit).map(|(p, q)| p - q).collect();
        let d = sub.apply(&h);
        let (rl, dn) = (norm2(&r_ls), norm2(&d));
        if !(rl < self.epsilon) || dn == 0.0 {
            return None;
        }
        let lam = ((self.epsilon - rl) * (self.epsilon + rl)).sqrt() / dn;
        let mut x = vec![0.0; self.a.m()];
        for (k, &i) in support.iter().enumerate() {
            x[i] = x_ls[k] - lam * h[k];
        }
        Some((x, lam))
    }

    fn polish(&self, support: &[usize], signs: &[f64], dual_u: &[f64]) -> Result<PolishOutcome, SolverError> {
        let (a, y) = (self.a, self.y);
        if support.len() > a.n() {
            return Ok(PolishOutcome::Failed);
        }
        let sub = a.submatrix(support.to_vec())?;
        let g: SymmetricMatrix = gram(&sub);
        let chol = match Cholesky::factor(&g) {
            Ok(c) => c,
            Err(_) => return Ok(PolishOutcome::Failed),
        };
        let x_ls = chol.solve(&sub.apply_transpose(y));
        let h = chol.solve(signs);
        let fit = sub.apply(&x_ls);
        let r_ls: Vec<f64> = y.iter().zip(&fit).map(|(p, q)| p - q).collect();
        let rl = norm2(&r_ls);

        let (xs, lam, cert_u): (Vec<f64>, f64, Vec<f64>) = if self.epsilon > 0.0 {
            let d = sub.apply(&h);
            let dn = norm2(&d);
            if !(rl < self.epsilon) || dn == 0.0 {
                return Ok(PolishOutcome::Failed);
            }
            let lam = ((self.epsilon - rl) * (self.epsilon + rl)).sqrt() / dn;
            let xs: Vec<f64> = x_ls.iter().zip(&h).map(|(p, q)| p - lam * q).collect();
            let mut full = vec![0.0; a.m()];
            for (k, &i) in support.iter().enumerate() {
                full[i] = xs[k];
            }
            let r: Vec<f64> = y.iter().zip(a.apply(&full)).map(|(p, q)| (p - q) / lam).collect();
            (xs, lam, r)
        } else {
            if rl > 1e-9 * norm2(y).max(1.0) {
                return Ok(PolishOutcome::Failed);
            }
            // any u with A_Sᵗu = σ certifies; correct the ADMM estimate onto that affine set
            let mismatch: Vec<f64> = signs
                .iter()
                .zip(sub.apply_transpose(dual_u))
                .map(|(s, t)| s - t)
                .collect();
            let mut u = dual_u.to_vec();
            axpy(1.0, &sub.apply(&chol.solve(&mismatch)), &mut u);
            (x_ls, 0.0, u)
        };

        let flips: Vec<usize> = (0..support.len())
            .filter(|&k| !(xs[k] * signs[k] > 0.0))
            .collect();
        if !flips.is_empty() {
            return Ok(PolishOutcome::SignFlip(flips));
        }

        let eta = a.apply_transpose(&cert_u);
        let mut on = vec![false; a.m()];
        for &i in support {
            on[i] = true;
        }
        let mut worst: Option<(usize, f64)> = None;
        for j in 0..a.m() {
            if !on[j] && eta[j].abs() > 1.0 + self.cfg.kkt_tol && worst.is_none_or(|(_, v)| eta[j].abs() > v) {
                worst = Some((j, eta[j].abs()));
            }
        }
        if let Some((j, _)) = worst {
            if self.epsilon == 0.0 {
                return Ok(PolishOutcome::Failed);
            }
            return Ok(PolishOutcome::DualViolation(j));
        }

        let mut full = vec![0.0; a.m()];
        for (k, &i) in support.iter().enumerate() {
            full[i] = xs[k];
        }
        let res: Vec<f64> = a.apply(&full).iter().zip(y).map(|(p, q)| p - q).collect();
        if norm2(&res) > self.epsilon * (1.0 + self.cfg.feasibility_tol) + if self.epsilon == 0.0 { 1e-9 * norm2(y).max(1.0) } else { 0.0 } {
            return Ok(PolishOutcome::Failed);
        }
        Ok(PolishOutcome::Accepted(full, lam))
    }
}

/// KKT diagnostics of a converged solution with an active constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `Aᵗu` with `u = (y − Ax⋆)/λ`.
    pub dual_vector: Vec<f64>,
    pub max_offsupport_dual: f64,
    pub onsupport_sign_error: f64,
    /// `‖x⋆_{I⋆} − [(A_{I⋆}ᵗA_{I⋆})⁻¹A_{I⋆}ᵗy − λ(A_{I⋆}ᵗA_{I⋆})⁻¹sign(x⋆_{I⋆})]‖₂`;
    /// `None` when that Gram matrix is numerically singular.
    pub implicit_eq_residual: Option<f64>,
    pub gram_singular: bool,
    pub support_threshold: f64,
}

/// Checks the optimality conditions of `sol`: dual feasibility off the
/// support, sign agreement on it, and the implicit equation on `I⋆`.
pub fn verify_kkt(a: &Dictionary, y: &[f64], epsilon: f64, sol: &Solution) -> Result<KktReport, SolverError> {
    check_inputs(a, y, epsilon)?;
    if sol.status != SolveStatus::Converged {
        return Err(SolverError::PreconditionViolation(format!(
            "solution status is {:?}, expected Converged",
            sol.status
        )));
    }
    if !(sol.lambda > 0.0) {
        return Err(SolverError::PreconditionViolation(
            "lambda must be positive (constraint inactive)".into(),
        ));
    }
    if sol.x_star.len() != a.m() {
        return Err(SolverError::DimensionMismatch("solution length differs from m".into()));
    }
    let lam = sol.lambda;
    let x = &sol.x_star;
    let u: Vec<f64> = y.iter().zip(a.apply(x)).map(|(p, q)| (p - q) / lam).collect();
    let dual_vector = a.apply_transpose(&u);
    let support = &sol.support_star;
    let mut on = vec![false; a.m()];
    for &i in support {
        on[i] = true;
    }
    let max_offsupport_dual = (0..a.m())
        .filter(|&j| !on[j])
        .fold(0.0_f64, |acc, j| acc.max(dual_vector[j].abs()));
    let sgn = sign_vector(x);
    let onsupport_sign_error = support
        .iter()
        .fold(0.0_f64, |acc, &i| acc.max((dual_vector[i] - sgn[i]).abs()));

    let (implicit_eq_residual, gram_singular) = if support.is_empty() {
        (Some(0.0), false)
    } else {
        let sub = a.submatrix(support.clone())?;
        match Cholesky::factor(&gram(&sub)) {
            Ok(chol) => {
                let mut rhs = sub.apply_transpose(y);
                for (k, &i) in support.iter().enumerate() {
                    rhs[k] -= lam * sgn[i];
                }
                let z = chol.solve(&rhs);
                let diff: Vec<f64> = support.iter().zip(&z).map(|(&i, zk)| x[i] - zk).collect();
                (Some(norm2(&diff)), false)
            }
            Err(NumericsError::NotPositiveDefinite { .. }) => (None, true),
            Err(e) => return Err(e.into()),
        }
    };

    Ok(KktReport {
        dual_vector,
        max_offsupport_dual,
        onsupport_sign_error,
        implicit_eq_residual,
        gram_singular,
        support_threshold: sol.support_threshold,
    })
}

/// Penalized-form solution `argmin ½‖Ax − y‖² + λ‖x‖₁` by cyclic exact
/// coordinate minimization, warm-started from `x`.
fn lasso_coordinate_descent(a: &Dictionary, y: &[f64], lambda: f64, x: &mut [f64]) {
    const STATIONARITY: f64 = 1e-12;
    const MAX_SWEEPS: usize = 1_000_000;
    let sq: Vec<f64> = a.col_norms().iter().map(|c| c * c).collect();
    let mut r: Vec<f64> = y.iter().zip(a.apply(x)).map(|(p, q)| p - q).collect();
    for _ in 0..MAX_SWEEPS {
        let mut max_change = 0.0_f64;
        for j in 0..a.m() {
            let col = a.column(j);
            let z = x[j] + dot(col, &r) / sq[j];
            let new = soft_threshold(z, lambda / sq[j]);
            let delta = new - x[j];
            if delta != 0.0 {
                axpy(-delta, col, &mut r);
                x[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change <= STATIONARITY * norm_inf(x).max(1.0) {
            break;
        }
    }
}

/// One bisection step of [`oracle_solve_traced`]: `(λ, ‖Ax(λ) − y‖₂)`.
pub type BisectionPoint = (f64, f64);

/// Small-instance reference solver: coordinate descent on the penalized form
/// with bisection on `λ ∈ [0, ‖Aᵗy‖_∞]` until the residual matches `ε`.
pub fn oracle_solve(a: &Dictionary, y: &[f64], epsilon: f64) -> Result<Solution, SolverError> {
    oracle_solve_traced(a, y, epsilon, SolverConfig::default().lambda_bisection_tol).map(|(s, _)| s)
}

/// [`oracle_solve`] that also returns every bisection iterate.
pub fn oracle_solve_traced(
    a: &Dictionary,
    y: &[f64],
    epsilon: f64,
    lambda_tol: f64,
) -> Result<(Solution, Vec<BisectionPoint>), SolverError> {
    check_inputs(a, y, epsilon)?;
    if a.m() > ORACLE_MAX_M {
        return Err(SolverError::GuardExceeded(a.m()));
    }
    let m = a.m();
    let residual = |x: &[f64]| norm2(&a.apply(x).iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>());
    if norm2(y) <= epsilon {
        return Ok((Solution::finish(a, y, vec![0.0; m], 0.0, 0, SolveStatus::Converged, false), vec![]));
    }
    if epsilon == 0.0 {
        return Err(SolverError::PreconditionViolation("oracle requires epsilon > 0".into()));
    }

    let mut hi = norm_inf(&a.apply_transpose(y));
    let mut lo = 0.0;
    let mut x_hi = vec![0.0; m];
    let mut x_lo = vec![0.0; m];
    let mut trace = vec![(hi, norm2(y))];
    let mut steps = 0;
    // warm starts follow the path downward from λ = ‖Aᵗy‖_∞
    let mut x = x_hi.clone();
    while hi - lo > lambda_tol && steps < 200 {
        let mid = 0.5 * (lo + hi);
        lasso_coordinate_descent(a, y, mid, &mut x);
        let res = residual(&x);
        trace.push((mid, res));
        if res > epsilon {
            hi = mid;
            x_hi = x.clone();
        } else {
            lo = mid;
            x_lo = x.clone();
        }
        steps += 1;
    }
    let _ = x_hi;
    if lo == 0.0 {
        lasso_coordinate_descent(a, y, 0.0, &mut x_lo);
        if residual(&x_lo) > epsilon * (1.0 + 1e-9) {
            let sol = Solution::finish(a, y, x_lo, 0.0, steps, SolveStatus::Infeasible, false);
            return Ok((sol, trace));
        }
    }
    let sol = Solution::finish(a, y, x_lo, lo, steps, SolveStatus::Converged, false);
    Ok((sol, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn eye2_padded() -> Dictionary {
        // I₂ plus a third column so that m > n
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Dictionary::new(Matrix::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![r, -r]]).unwrap()).unwrap()
    }

    fn eye2() -> Dictionary {
        Dictionary::new_allow_square(Matrix::identity(2)).unwrap()
    }

    #[test]
    fn identity_example() {
        let sol = solve_bpdn(&eye2(), &[2.0, 0.0], 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!((sol.x_star[0] - 1.0).abs() < 1e-12 && sol.x_star[1] == 0.0);
        assert!((sol.l1_norm - 1.0).abs() < 1e-12);
        assert!((sol.lambda - 1.0).abs() < 1e-12);
        let kkt = verify_kkt(&eye2(), &[2.0, 0.0], 1.0, &sol).unwrap();
        assert!(kkt.implicit_eq_residual.unwrap() < 1e-12);
        assert!(kkt.onsupport_sign_error < 1e-12);
    }

    #[test]
    fn padded_identity_example() {
        let a = eye2_padded();
        let sol = solve_bpdn(&a, &[2.0, 0.0], 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!((sol.l1_norm - 1.0).abs() < 1e-9, "{sol:?}");
        let oracle = oracle_solve(&a, &[2.0, 0.0], 1.0).unwrap();
        assert!((oracle.l1_norm - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_is_optimal_inside_ball() {
        let sol = solve_bpdn(&eye2_padded(), &[0.3, 0.4], 0.5, &SolverConfig::default()).unwrap();
        assert_eq!(sol.x_star, vec![0.0; 3]);
        assert_eq!(sol.lambda, 0.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn epsilon_zero_outside_range_is_infeasible() {
        let a = Dictionary::new(Matrix::from_columns(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap()).unwrap();
        let sol = solve_bpdn(&a, &[1.0, 1.0], 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn epsilon_zero_basis_pursuit() {
        let a = eye2_padded();
        let sol = solve_bpdn(&a, &[1.0, -1.0], 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        // the third column reaches (1,−1) with ℓ1 norm √2 < 2
        assert!((sol.l1_norm - 2f64.sqrt()).abs() < 1e-9, "{sol:?}");
        assert!(sol.residual_norm < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = eye2_padded();
        assert!(matches!(
            solve_bpdn(&a, &[1.0], 0.1, &SolverConfig::default()),
            Err(SolverError::DimensionMismatch(_))
        ));
        assert!(matches!(
            solve_bpdn(&a, &[1.0, 0.0], -0.1, &SolverConfig::default()),
            Err(SolverError::InvalidEpsilon(_))
        ));
        let bad = SolverConfig {
            primal_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(solve_bpdn(&a, &[1.0, 0.0], 0.1, &bad).is_err());
    }

    #[test]
    fn kkt_requires_converged_and_active() {
        let a = eye2_padded();
        let mut sol = solve_bpdn(&a, &[2.0, 0.0], 1.0, &SolverConfig::default()).unwrap();
        sol.status = SolveStatus::MaxIters;
        assert!(matches!(
            verify_kkt(&a, &[2.0, 0.0], 1.0, &sol),
            Err(SolverError::PreconditionViolation(_))
        ));
        let zero = solve_bpdn(&a, &[0.1, 0.0], 1.0, &SolverConfig::default()).unwrap();
        assert!(verify_kkt(&a, &[0.1, 0.0], 1.0, &zero).is_err());
    }

    #[test]
    fn oracle_guard_and_endpoints() {
        let big = Dictionary::normalize(Matrix::from_col_major(2, 13, (0..26).map(|i| (i as f64).sin() + 1.5).collect()).unwrap()).unwrap();
        assert!(matches!(oracle_solve(&big, &[1.0, 0.0], 0.1), Err(SolverError::GuardExceeded(13))));

        let a = eye2_padded();
        let y = [2.0, 0.5];
        let (_, trace) = oracle_solve_traced(&a, &y, 0.7, 1e-10).unwrap();
        // first entry: λ = ‖Aᵗy‖_∞ with x = 0
        assert!((trace[0].1 - norm2(&y)).abs() < 1e-15);
        let mut pts = trace.clone();
        pts.sort_by(|p, q| p.0.total_cmp(&q.0));
        for w in pts.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-10, "residual not monotone in lambda: {w:?}");
        }
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }
}
