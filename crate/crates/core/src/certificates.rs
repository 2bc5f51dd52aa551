//! Dual certificate `d(x⁰) = A_I (A_IᵗA_I)⁻¹ sign(x⁰_I)`, the identification
//! coefficient `IC(x⁰) = max_{j∉I} |a_jᵗ d(x⁰)|`, and the ℓ1 subgradient /
//! Bregman-distance helpers used to bound the off-support mass of a solution.

use serde::Serialize;
use thiserror::Error;

use crate::numerics::{
    dot, gram, largest_eigenvalue_psd, norm2, Cholesky, Dictionary, NumericsError, PowerIterationOptions,
};
use crate::sparse_model::{sign_vector, SparseSignal};

/// Slack allowed on `‖ξ‖_∞ ≤ 1` and on the sign match in [`is_subgradient`].
pub const SUBGRADIENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("signal has empty support")]
    EmptySupport,
    #[error("xi is not a subgradient of the l1 norm at the reference point")]
    NotASubgradient,
    #[error("certificate has a singular Gram matrix")]
    NotInvertible,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Certificate quantities for one `(A, x⁰)` pair. When `A_IᵗA_I` is singular
/// only `invertible = false` and the support size are meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub p: usize,
    pub invertible: bool,
    pub d: Vec<f64>,
    pub ic: f64,
    pub s: Vec<f64>,
    pub gram_inv_spectral: f64,
    pub d_norm: f64,
}

#[derive(Serialize)]
struct CertificateJson<'a> {
    p: usize,
    invertible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    ic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gram_inv_spectral: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fuchs_condition: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<&'a [f64]>,
}

impl Certificate {
    fn singular(p: usize) -> Self {
        Self {
            p,
            invertible: false,
            d: Vec::new(),
            ic: f64::NAN,
            s: Vec::new(),
            gram_inv_spectral: f64::INFINITY,
            d_norm: f64::NAN,
        }
    }

    /// JSON with every scalar; the `d` and `s` vectors only when asked for.
    pub fn to_json(&self, include_vectors: bool) -> serde_json::Value {
        let inv = self.invertible;
        let j = CertificateJson {
            p: self.p,
            invertible: inv,
            ic: inv.then_some(self.ic),
            gram_inv_spectral: inv.then_some(self.gram_inv_spectral),
            d_norm: inv.then_some(self.d_norm),
            fuchs_condition: inv.then_some(self.ic < 1.0),
            d: (inv && include_vectors).then_some(self.d.as_slice()),
            s: (inv && include_vectors).then_some(self.s.as_slice()),
        };
        serde_json::to_value(j).expect("certificate serializes")
    }
}

/// Computes `d(x⁰)`, `s = Aᵗd(x⁰)`, `IC(x⁰)`, `‖d(x⁰)‖₂` and `‖(A_IᵗA_I)⁻¹‖₂`.
///
/// A singular Gram matrix is not an error: it yields a certificate with
/// `invertible = false`.
pub fn compute_certificate(a: &Dictionary, x0: &SparseSignal) -> Result<Certificate, CertificateError> {
    if !a.is_normalized() {
        return Err(NumericsError::NotNormalized.into());
    }
    if x0.m() != a.m() {
        return Err(CertificateError::DimensionMismatch(format!(
            "signal has m = {}, dictionary has m = {}",
            x0.m(),
            a.m()
        )));
    }
    if x0.p() == 0 {
        return Err(CertificateError::EmptySupport);
    }
    certificate_for_support(a, x0.support(), &x0.support_signs())
}

/// Same as [`compute_certificate`] for an explicit support and sign pattern.
pub fn certificate_for_support(
    a: &Dictionary,
    support: &[usize],
    signs: &[f64],
) -> Result<Certificate, CertificateError> {
    if support.is_empty() {
        return Err(CertificateError::EmptySupport);
    }
    if support.len() != signs.len() {
        return Err(CertificateError::DimensionMismatch("support and signs differ in length".into()));
    }
    let p = support.len();
    let sub = a.submatrix(support.to_vec())?;
    let chol = match Cholesky::factor(&gram(&sub)) {
        Ok(c) => c,
        Err(NumericsError::NotPositiveDefinite { .. }) => return Ok(Certificate::singular(p)),
        Err(e) => return Err(e.into()),
    };
    let coeffs = chol.solve(signs);
    let d = sub.apply(&coeffs);
    let s = a.apply_transpose(&d);

    let mut on_support = vec![false; a.m()];
    for &i in support {
        on_support[i] = true;
    }
    let ic = s
        .iter()
        .zip(&on_support)
        .filter(|(_, &on)| !on)
        .fold(0.0_f64, |acc, (v, _)| acc.max(v.abs()));

    let gram_inv_spectral = largest_eigenvalue_psd(p, |v| chol.solve(v), PowerIterationOptions::default())?;
    // ⟨sign, G⁻¹ sign⟩ is the numerically cleaner route to ‖d‖²
    let d_norm = dot(signs, &coeffs).max(0.0).sqrt();
    debug_assert!((d_norm - norm2(&d)).abs() <= 1e-8 * (1.0 + d_norm));

    Ok(Certificate {
        p,
        invertible: true,
        d,
        ic,
        s,
        gram_inv_spectral,
        d_norm,
    })
}

/// `IC < 1`, strict.
pub fn fuchs_condition(cert: &Certificate) -> Result<bool, CertificateError> {
    if !cert.invertible {
        return Err(CertificateError::NotInvertible);
    }
    Ok(cert.ic < 1.0)
}

/// Whether `xi ∈ ∂‖x‖₁`: `‖ξ‖_∞ ≤ 1` and `ξ(i) = sign(x(i))` on the support of `x`.
pub fn is_subgradient(xi: &[f64], x: &[f64]) -> Result<bool, CertificateError> {
    if xi.len() != x.len() {
        return Err(CertificateError::DimensionMismatch(format!(
            "xi has length {}, x has length {}",
            xi.len(),
            x.len()
        )));
    }
    let sgn = sign_vector(x);
    Ok(xi.iter().zip(&sgn).all(|(&v, &s)| {
        v.abs() <= 1.0 + SUBGRADIENT_TOLERANCE && (s == 0.0 || (v - s).abs() <= SUBGRADIENT_TOLERANCE)
    }))
}

/// `D_ξ(x, x¹) = ‖x‖₁ − ‖x¹‖₁ − ⟨ξ, x − x¹⟩` for `ξ ∈ ∂‖x¹‖₁`.
pub fn bregman_distance(xi: &[f64], x: &[f64], x1: &[f64]) -> Result<f64, CertificateError> {
    if x.len() != x1.len() {
        return Err(CertificateError::DimensionMismatch("x and x1 differ in length".into()));
    }
    if !is_subgradient(xi, x1)? {
        return Err(CertificateError::NotASubgradient);
    }
    let l1 = |v: &[f64]| v.iter().map(|t| t.abs()).sum::<f64>();
    let inner: f64 = xi.iter().zip(x.iter().zip(x1)).map(|(g, (a, b))| g * (a - b)).sum();
    Ok(l1(x) - l1(x1) - inner)
}
