//! Built-in test dictionaries.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::numerics::{Dictionary, Matrix};
use crate::sparse_model::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// `[I_n | DCT_n]`, orthonormal DCT-II; `μ = √(2/n)·cos(π/2n)`.
    IdentityDct,
    /// `[I_n | H_n/√n]`, Sylvester Hadamard, `n` a power of two.
    IdentityHadamard,
    /// Random ±1/√n entries.
    Signs,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixKind::IdentityDct => "identity_dct",
            MatrixKind::IdentityHadamard => "identity_hadamard",
            MatrixKind::Signs => "signs",
        })
    }
}

impl FromStr for MatrixKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity_dct" => Ok(MatrixKind::IdentityDct),
            "identity_hadamard" => Ok(MatrixKind::IdentityHadamard),
            "signs" => Ok(MatrixKind::Signs),
            other => Err(ExperimentError::Config(format!("unknown matrix kind {other:?}"))),
        }
    }
}

/// Builds a normalized dictionary of the given kind.
///
/// The identity-based kinds require `m = 2n` and ignore `seed`.
pub fn build_matrix(kind: MatrixKind, n: usize, m: usize, seed: u64) -> Result<Dictionary, ExperimentError> {
    if n == 0 || m <= n {
        return Err(ExperimentError::BadShape(format!("need m > n >= 1, got n = {n}, m = {m}")));
    }
    let matrix = match kind {
        MatrixKind::IdentityDct | MatrixKind::IdentityHadamard => {
            if m != 2 * n {
                return Err(ExperimentError::BadShape(format!("{kind} needs m = 2n, got n = {n}, m = {m}")));
            }
            let second = if kind == MatrixKind::IdentityDct {
                dct_matrix(n)
            } else {
                if !n.is_power_of_two() {
                    return Err(ExperimentError::BadShape(format!("{kind} needs n a power of two, got {n}")));
                }
                hadamard_matrix(n)
            };
            let mut a = Matrix::zeros(n, m);
            for i in 0..n {
                a.set(i, i, 1.0);
            }
            for k in 0..n {
                a.column_mut(n + k).copy_from_slice(second.column(k));
            }
            a
        }
        MatrixKind::Signs => {
            let mut rng = stream_rng(seed, 0);
            let scale = 1.0 / (n as f64).sqrt();
            let data = (0..n * m)
                .map(|_| if rng.random::<bool>() { scale } else { -scale })
                .collect();
            Matrix::from_col_major(n, m, data)?
        }
    };
    Ok(Dictionary::normalize(matrix)?)
}

/// Orthonormal DCT-II basis, one frequency per column.
fn dct_matrix(n: usize) -> Matrix {
    let mut c = Matrix::zeros(n, n);
    let nf = n as f64;
    for k in 0..n {
        let alpha = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for j in 0..n {
            c.set(j, k, alpha * (PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos());
        }
    }
    c
}

/// Sylvester Hadamard matrix scaled to orthonormal columns.
fn hadamard_matrix(n: usize) -> Matrix {
    let scale = 1.0 / (n as f64).sqrt();
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            h.set(i, j, sign * scale);
        }
    }
    h
}
