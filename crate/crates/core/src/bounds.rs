//! Closed-form recovery bounds, sparsity thresholds and probability floors.
//!
//! Probabilities are clamped to `[0, 1]`: the underlying expressions go
//! negative for small `m`, where the asymptotic statements say nothing.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::Certificate;

/// Below this many columns the asymptotic floors are reported but flagged.
pub const ASYMPTOTIC_MIN_M: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("the Fuchs condition IC < 1 fails (IC = {ic})")]
    FuchsViolated { ic: f64 },
    #[error("certificate has a singular Gram matrix")]
    NotInvertible,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `C = 2√2 + 8(2+√2)√p / 3`. Real-valued `p` so that the formal `p = 0` works.
pub fn theorem1_constant(p: f64) -> f64 {
    2.0 * SQRT_2 + 8.0 * (2.0 + SQRT_2) * p.sqrt() / 3.0
}

/// `‖x⋆ − x⁰‖₁ ≤ (ε/3)(14√(2p) + 16p)`.
pub fn l1_error_bound(p: f64, epsilon: f64) -> f64 {
    epsilon / 3.0 * (14.0 * (2.0 * p).sqrt() + 16.0 * p)
}

/// Right-hand side of the per-instance ℓ2 bound
/// `2ε(√g + d_norm/(1−IC) · (√g·ν + 1))`, with `g = ‖(A_IᵗA_I)⁻¹‖₂`
/// and `ν = ‖A_{I^c}‖₁→₂`.
pub fn prop1_bound(cert: &Certificate, epsilon: f64, norm_1to2_offsupport: f64) -> Result<f64, BoundsError> {
    if !cert.invertible {
        return Err(BoundsError::NotInvertible);
    }
    prop1_bound_from_parts(
        cert.gram_inv_spectral,
        cert.ic,
        cert.d_norm,
        epsilon,
        norm_1to2_offsupport,
    )
}

/// [`prop1_bound`] on raw scalars.
pub fn prop1_bound_from_parts(
    gram_inv_spectral: f64,
    ic: f64,
    d_norm: f64,
    epsilon: f64,
    norm_1to2_offsupport: f64,
) -> Result<f64, BoundsError> {
    if !(ic < 1.0) {
        return Err(BoundsError::FuchsViolated { ic });
    }
    let sg = gram_inv_spectral.sqrt();
    Ok(2.0 * epsilon * (sg + d_norm / (1.0 - ic) * (sg * norm_1to2_offsupport + 1.0)))
}

/// `c₀ m / (‖A‖₂² ln m)`; `m` is real so formal values are accepted.
pub fn sparsity_threshold(m: f64, spectral_norm_a: f64, c0: f64) -> f64 {
    c0 * m / (spectral_norm_a * spectral_norm_a * m.ln())
}

/// `m^{−2 ln 2}`.
fn m_pow(m: f64) -> f64 {
    m.powf(-2.0 * LN_2)
}

fn clamp_probability(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// `1 − 4 m^{−2 ln 2}`, clamped to `[0, 1]`.
pub fn probability_floor(m: f64) -> f64 {
    clamp_probability(1.0 - 4.0 * m_pow(m))
}

/// `1 − 2m exp(−t² ln m / (8c₀²)) − 2 m^{−2 ln 2}`, clamped to `[0, 1]`.
pub fn prop2_floor(m: f64, t: f64, c0: f64) -> f64 {
    let tail = 2.0 * m * (-(t * t) * m.ln() / (8.0 * c0 * c0)).exp();
    clamp_probability(1.0 - tail - 2.0 * m_pow(m))
}

/// The two moment bounds for a uniformly random support of size `p`:
/// `30μ ln m + 13√(2p‖A‖₂² ln m / m)` (Gram deviation) and
/// `4μ√(ln m) + √(p‖A‖₂²/m)` (cross correlation).
pub fn tropp_rhs(m: f64, p: f64, spectral_norm_a: f64, mu: f64) -> (f64, f64) {
    let ln_m = m.ln();
    let a2 = spectral_norm_a * spectral_norm_a;
    let gram = 30.0 * mu * ln_m + 13.0 * (2.0 * p * a2 * ln_m / m).sqrt();
    let cross = 4.0 * mu * ln_m.sqrt() + (p * a2 / m).sqrt();
    (gram, cross)
}

/// `min(1, 2|J| exp(−t²/(2κ²)))`.
pub fn lemma_lw_tail(t: f64, kappa: f64, j_size: usize) -> f64 {
    lemma_lw_tail_unclamped(t, kappa, j_size).min(1.0)
}

pub fn lemma_lw_tail_unclamped(t: f64, kappa: f64, j_size: usize) -> f64 {
    2.0 * j_size as f64 * (-(t * t) / (2.0 * kappa * kappa)).exp()
}

/// `30A₀ + 13√(2c₀) ≤ 1/4`.
pub fn cortropp_condition(a0: f64, c0: f64) -> bool {
    30.0 * a0 + 13.0 * (2.0 * c0).sqrt() <= 0.25
}

/// `ε = ε₁(1 + C₁‖A‖₂)`.
pub fn corollary1_epsilon(epsilon1: f64, c1: f64, spectral_norm_a: f64) -> f64 {
    epsilon1 * (1.0 + c1 * spectral_norm_a)
}

/// Default coherence constant: half of the `cortropp_condition` budget.
pub const DEFAULT_A0: f64 = 1.0 / 240.0;
/// Default sparsity constant: the other half, `13√(2c₀) = 1/8`.
pub const DEFAULT_C0: f64 = (1.0 / 104.0) * (1.0 / 104.0) / 2.0;
/// Default tail threshold, the `1/4` used for the joint event.
pub const DEFAULT_T: f64 = 0.25;

/// Scalars that feed the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub epsilon: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    pub c0: f64,
    pub t: f64,
    pub kappa: f64,
    pub q: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub epsilon1: f64,
    /// Multiplier of the penalized form, filled in from a solution when known.
    pub lambda: Option<f64>,
}

impl BoundParams {
    /// Defaults for everything but the dimensions, sparsity and noise level.
    pub fn new(m: usize, n: usize, p: usize, epsilon: f64) -> Self {
        Self {
            m,
            n,
            p,
            epsilon,
            a0: DEFAULT_A0,
            c0: DEFAULT_C0,
            t: DEFAULT_T,
            kappa: 1.0,
            q: 2.0 * (m as f64).ln(),
            c1: 0.0,
            epsilon1: 0.0,
            lambda: None,
        }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        let reals = [
            self.epsilon,
            self.a0,
            self.c0,
            self.t,
            self.kappa,
            self.q,
            self.c1,
            self.epsilon1,
            self.lambda.unwrap_or(0.0),
        ];
        if reals.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(BoundsError::InvalidParameter("all parameters must be finite and nonnegative".into()));
        }
        if self.p > self.m {
            return Err(BoundsError::InvalidParameter(format!("p = {} exceeds m = {}", self.p, self.m)));
        }
        if !(self.q > 0.0) {
            return Err(BoundsError::InvalidParameter("q must be positive".into()));
        }
        Ok(())
    }
}

/// Every bound evaluated for one parameter set, with the parameters echoed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub params: BoundParams,
    pub theorem1_c: f64,
    pub theorem1_l2_bound: f64,
    pub l1_bound: f64,
    /// Only defined for an invertible certificate with IC < 1.
    pub prop1_rhs: Option<f64>,
    pub probability_floor: f64,
    pub prop2_floor: f64,
    pub sparsity_threshold: f64,
    pub tropp_gram_rhs: f64,
    pub tropp_cross_rhs: f64,
    pub lw_tail: f64,
    pub cortropp_ok: bool,
    pub corollary1_epsilon: f64,
    /// `m` is below [`ASYMPTOTIC_MIN_M`]; the floors are formal only.
    pub small_m: bool,
}

/// Matrix-dependent inputs to [`BoundReport::evaluate`].
#[derive(Debug, Clone, Copy)]
pub struct MatrixFacts {
    pub spectral_norm: f64,
    pub coherence: f64,
    /// `‖A_{I^c}‖₁→₂`, equal to 1 for normalized columns.
    pub norm_1to2_offsupport: f64,
}

impl BoundReport {
    pub fn evaluate(
        params: &BoundParams,
        facts: MatrixFacts,
        cert: Option<&Certificate>,
    ) -> Result<Self, BoundsError> {
        params.validate()?;
        let m = params.m as f64;
        let p = params.p as f64;
        let c = theorem1_constant(p);
        let prop1_rhs = cert
            .filter(|c| c.invertible && c.ic < 1.0)
            .map(|c| prop1_bound(c, params.epsilon, facts.norm_1to2_offsupport))
            .transpose()?;
        let (tropp_gram_rhs, tropp_cross_rhs) = tropp_rhs(m, p, facts.spectral_norm, facts.coherence);
        let j_size = params.m.saturating_sub(params.p).max(1);
        Ok(Self {
            params: params.clone(),
            theorem1_c: c,
            theorem1_l2_bound: c * params.epsilon,
            l1_bound: l1_error_bound(p, params.epsilon),
            prop1_rhs,
            probability_floor: probability_floor(m),
            prop2_floor: prop2_floor(m, params.t, params.c0),
            sparsity_threshold: sparsity_threshold(m, facts.spectral_norm, params.c0),
            tropp_gram_rhs,
            tropp_cross_rhs,
            lw_tail: lemma_lw_tail(params.t, params.kappa, j_size),
            cortropp_ok: cortropp_condition(params.a0, params.c0),
            corollary1_epsilon: corollary1_epsilon(params.epsilon1, params.c1, facts.spectral_norm),
            small_m: params.m < ASYMPTOTIC_MIN_M,
        })
    }
}
