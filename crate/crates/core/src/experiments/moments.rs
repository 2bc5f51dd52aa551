//! Monte Carlo estimates of the random-support moment bounds and of the
//! Hoeffding tail of the off-support correlations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::bounds::{lemma_lw_tail, tropp_rhs};
use crate::numerics::{
    dot, gram, norm2, spectral_norm, Cholesky, Dictionary, NumericsError, PowerIterationOptions, SubMatrix,
};
use crate::sparse_model::{random_signs, stream_rng, trial_seed, uniform_subset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TroppEstimate {
    pub m: usize,
    pub p: usize,
    pub trials: usize,
    pub seed: u64,
    pub q: f64,
    /// `E(‖A_IᵗA_I − Id‖₂^q)^{1/q}`.
    pub gram_moment: f64,
    /// `E(max_{j∉I} ‖A_Iᵗa_j‖₂^q)^{1/q}`.
    pub cross_moment: f64,
    pub gram_rhs: f64,
    pub cross_rhs: f64,
    pub gram_dominated: bool,
    pub cross_dominated: bool,
}

fn sorted_subset(m: usize, p: usize, seed: u64) -> Vec<usize> {
    let mut s = uniform_subset(m, p, &mut stream_rng(seed, 0));
    s.sort_unstable();
    s
}

fn q_root(samples: &[f64], q: f64) -> f64 {
    let scale = samples.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    // factor out the max so large q does not overflow
    let mean = samples.iter().map(|v| (v / scale).powf(q)).sum::<f64>() / samples.len() as f64;
    scale * mean.powf(1.0 / q)
}

/// Plug-in estimates of both q-th moment roots with `q = 2 ln m`, over
/// uniformly random supports of size `p`. Support `k` is drawn from seed
/// `seed ⊕ k`.
pub fn estimate_tropp_moments(
    a: &Dictionary,
    p: usize,
    trials: usize,
    seed: u64,
) -> Result<TroppEstimate, ExperimentError> {
    let m = a.m();
    if p < 1 || p > m || trials < 1 {
        return Err(ExperimentError::Config(format!(
            "need 1 <= p <= m and trials >= 1, got p = {p}, m = {m}, trials = {trials}"
        )));
    }
    let q = 2.0 * (m as f64).ln();
    let samples: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64), NumericsError> {
            let support = sorted_subset(m, p, trial_seed(seed, k));
            let sub = SubMatrix::new(a, support.clone())?;
            let g = gram(&sub);
            let mut dev = g.as_matrix().clone();
            for i in 0..p {
                dev.set(i, i, 0.0);
            }
            let gram_dev = if dev.max_abs() == 0.0 {
                0.0
            } else {
                spectral_norm(&dev, PowerIterationOptions::default())?
            };
            let cross = SubMatrix::complement(a, &support)?
                .indices()
                .iter()
                .map(|&j| norm2(&sub.apply_transpose(a.column(j))))
                .fold(0.0, f64::max);
            Ok((gram_dev, cross))
        })
        .collect::<Result<_, _>>()?;
    let gram_samples: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let cross_samples: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let gram_moment = q_root(&gram_samples, q);
    let cross_moment = q_root(&cross_samples, q);
    let (gram_rhs, cross_rhs) = tropp_rhs(m as f64, p as f64, a.spectral_norm()?, a.coherence()?);
    Ok(TroppEstimate {
        m,
        p,
        trials,
        seed,
        q,
        gram_moment,
        cross_moment,
        gram_rhs,
        cross_rhs,
        gram_dominated: gram_moment <= gram_rhs,
        cross_dominated: cross_moment <= cross_rhs,
    })
}

/// Whether the support is held fixed while only the signs vary, or is
/// redrawn together with the signs on every draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LwMode {
    #[default]
    FixedSupport,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LwTailPoint {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub dominated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LwTailEstimate {
    pub mode: LwMode,
    pub m: usize,
    pub p: usize,
    pub j_size: usize,
    pub trials: usize,
    pub seed: u64,
    /// `max_j ‖W_j‖₂`; in joint mode, the maximum over every drawn support.
    pub kappa: f64,
    /// The fixed support, empty in joint mode.
    pub support: Vec<usize>,
    pub points: Vec<LwTailPoint>,
}

/// The vectors `W_j = (A_IᵗA_I)⁻¹A_Iᵗa_j` for `j ∉ I`, one per row.
fn w_vectors(a: &Dictionary, support: &[usize]) -> Result<Vec<Vec<f64>>, NumericsError> {
    let sub = SubMatrix::new(a, support.to_vec())?;
    let chol = Cholesky::factor(&gram(&sub))?;
    SubMatrix::complement(a, support)?
        .indices()
        .iter()
        .map(|&j| Ok(chol.solve(&sub.apply_transpose(a.column(j)))))
        .collect()
}

fn z0(w: &[Vec<f64>], signs: &[f64]) -> f64 {
    w.iter().map(|wj| dot(wj, signs).abs()).fold(0.0, f64::max)
}

fn kappa_of(w: &[Vec<f64>]) -> f64 {
    w.iter().map(|wj| norm2(wj)).fold(0.0, f64::max)
}

/// Empirical `P(Z₀ ≥ t)` with `Z₀ = max_{j∉I} |⟨W_j, σ⟩|` over random signs,
/// for each threshold in `ts`, next to the Hoeffding bound `lemma_lw_tail`.
///
/// A singular Gram matrix aborts the batch.
pub fn estimate_lw_tail(
    a: &Dictionary,
    p: usize,
    ts: &[f64],
    trials: usize,
    seed: u64,
    mode: LwMode,
) -> Result<LwTailEstimate, ExperimentError> {
    let m = a.m();
    if p < 1 || p >= m || trials < 1 {
        return Err(ExperimentError::Config(format!(
            "need 1 <= p < m and trials >= 1, got p = {p}, m = {m}, trials = {trials}"
        )));
    }
    if ts.iter().any(|t| !(*t >= 0.0)) {
        return Err(ExperimentError::Config("thresholds must be nonnegative".into()));
    }
    let (kappa, support, z) = match mode {
        LwMode::FixedSupport => {
            let support = sorted_subset(m, p, seed);
            let w = w_vectors(a, &support)?;
            let z: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|k| z0(&w, &random_signs(p, &mut stream_rng(trial_seed(seed, k), 1))))
                .collect();
            (kappa_of(&w), support, z)
        }
        LwMode::Joint => {
            let draws: Vec<(f64, f64)> = (0..trials as u64)
                .into_par_iter()
                .map(|k| -> Result<(f64, f64), NumericsError> {
                    let s = trial_seed(seed, k);
                    let w = w_vectors(a, &sorted_subset(m, p, s))?;
                    Ok((kappa_of(&w), z0(&w, &random_signs(p, &mut stream_rng(s, 1)))))
                })
                .collect::<Result<_, _>>()?;
            let kappa = draws.iter().map(|d| d.0).fold(0.0, f64::max);
            (kappa, Vec::new(), draws.into_iter().map(|d| d.1).collect())
        }
    };
    let j_size = m - p;
    let points = ts
        .iter()
        .map(|&t| {
            let empirical = z.iter().filter(|&&v| v >= t).count() as f64 / trials as f64;
            let bound = if kappa > 0.0 {
                lemma_lw_tail(t, kappa, j_size)
            } else if t == 0.0 {
                1.0
            } else {
                0.0
            };
            LwTailPoint {
                t,
                empirical,
                bound,
                dominated: empirical <= bound,
            }
        })
        .collect();
    Ok(LwTailEstimate {
        mode,
        m,
        p,
        j_size,
        trials,
        seed,
        kappa,
        support,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{build_matrix, MatrixKind};
    use super::*;
    use crate::numerics::Matrix;

    #[test]
    fn orthonormal_square_gives_zero_moments() {
        let mut data = vec![0.0; 64];
        for i in 0..8 {
            data[i * 8 + i] = 1.0;
        }
        let a = Dictionary::new_allow_square(Matrix::from_col_major(8, 8, data).unwrap()).unwrap();
        let est = estimate_tropp_moments(&a, 3, 50, 1).unwrap();
        assert_eq!(est.gram_moment, 0.0);
        assert_eq!(est.cross_moment, 0.0);
    }

    #[test]
    fn p_one_gram_moment_is_zero() {
        let a = build_matrix(MatrixKind::IdentityDct, 16, 32, 0).unwrap();
        let est = estimate_tropp_moments(&a, 1, 100, 3).unwrap();
        assert_eq!(est.gram_moment, 0.0);
        assert!(est.cross_moment > 0.0);
    }

    #[test]
    fn tropp_deterministic() {
        let a = build_matrix(MatrixKind::IdentityDct, 16, 32, 0).unwrap();
        assert_eq!(
            estimate_tropp_moments(&a, 4, 200, 9).unwrap(),
            estimate_tropp_moments(&a, 4, 200, 9).unwrap()
        );
    }

    #[test]
    fn q_root_handles_constant_samples() {
        assert!((q_root(&[0.3; 10], 11.1) - 0.3).abs() < 1e-15);
        assert_eq!(q_root(&[0.0; 4], 3.0), 0.0);
    }

    #[test]
    fn lw_tail_trivial_thresholds() {
        let a = build_matrix(MatrixKind::IdentityDct, 16, 32, 0).unwrap();
        for mode in [LwMode::FixedSupport, LwMode::Joint] {
            let probe = estimate_lw_tail(&a, 3, &[0.0], 500, 5, mode).unwrap();
            let above = probe.kappa * 3f64.sqrt() * (1.0 + 1e-9);
            let est = estimate_lw_tail(&a, 3, &[0.0, above], 500, 5, mode).unwrap();
            assert_eq!(est.points[0].empirical, 1.0);
            assert_eq!(est.points[1].empirical, 0.0);
            assert_eq!(est.j_size, 29);
        }
    }

    #[test]
    fn lw_tail_modes_are_labelled() {
        let a = build_matrix(MatrixKind::IdentityDct, 16, 32, 0).unwrap();
        let fixed = estimate_lw_tail(&a, 2, &[0.5], 100, 1, LwMode::FixedSupport).unwrap();
        assert_eq!(fixed.support.len(), 2);
        let joint = estimate_lw_tail(&a, 2, &[0.5], 100, 1, LwMode::Joint).unwrap();
        assert!(joint.support.is_empty());
        let v = serde_json::to_value(&joint).unwrap();
        assert_eq!(v["mode"], "joint");
    }
}
