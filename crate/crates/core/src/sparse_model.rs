//! Random signals from the generic p-sparse model (uniform support of size
//! `p`, independent fair signs) and compressible vectors built on top of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::norm2;

#[derive(Debug, Error, PartialEq)]
pub enum SparseModelError {
    #[error("sparsity p = {p} must lie in [1, m = {m}]")]
    InvalidSparsity { p: usize, m: usize },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("tail norm {norm} exceeds bound {bound}")]
    TailExceedsBound { norm: f64, bound: f64 },
}

/// How nonzero magnitudes are drawn. The sparse model fixes only the support
/// and the signs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MagnitudeRule {
    Constant { value: f64 },
    /// `exp(U[ln low, ln high])`.
    LogUniform { low: f64, high: f64 },
}

impl Default for MagnitudeRule {
    fn default() -> Self {
        MagnitudeRule::Constant { value: 1.0 }
    }
}

impl MagnitudeRule {
    pub fn log_uniform_default() -> Self {
        MagnitudeRule::LogUniform { low: 0.1, high: 10.0 }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MagnitudeRule::Constant { value } => value,
            MagnitudeRule::LogUniform { low, high } => {
                let (a, b) = (low.ln(), high.ln());
                (a + (b - a) * rng.random::<f64>()).exp()
            }
        }
    }
}

/// A `p`-sparse vector of length `m` with explicit support, signs and magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr", into = "SignalRepr")]
pub struct SparseSignal {
    m: usize,
    support: Vec<usize>,
    signs: Vec<i8>,
    magnitudes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SignalRepr {
    m: usize,
    support: Vec<usize>,
    signs: Vec<i8>,
    magnitudes: Vec<f64>,
}

impl TryFrom<SignalRepr> for SparseSignal {
    type Error = SparseModelError;

    fn try_from(r: SignalRepr) -> Result<Self, Self::Error> {
        SparseSignal::new(r.m, r.support, r.signs, r.magnitudes)
    }
}

impl From<SparseSignal> for SignalRepr {
    fn from(s: SparseSignal) -> Self {
        SignalRepr {
            m: s.m,
            support: s.support,
            signs: s.signs,
            magnitudes: s.magnitudes,
        }
    }
}

impl SparseSignal {
    pub fn new(m: usize, support: Vec<usize>, signs: Vec<i8>, magnitudes: Vec<f64>) -> Result<Self, SparseModelError> {
        if support.len() != signs.len() || support.len() != magnitudes.len() {
            return Err(SparseModelError::InvalidSignal(
                "support, signs and magnitudes must have equal length".into(),
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SparseModelError::InvalidSignal("support must be strictly increasing".into()));
        }
        if support.last().is_some_and(|&i| i >= m) {
            return Err(SparseModelError::InvalidSignal("support index out of range".into()));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(SparseModelError::InvalidSignal("signs must be +1 or -1".into()));
        }
        if magnitudes.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(SparseModelError::InvalidSignal("magnitudes must be positive and finite".into()));
        }
        Ok(Self {
            m,
            support,
            signs,
            magnitudes,
        })
    }

    /// Reads support, signs and magnitudes off a dense vector.
    pub fn from_dense(x: &[f64]) -> Result<Self, SparseModelError> {
        let mut support = Vec::new();
        let mut signs = Vec::new();
        let mut magnitudes = Vec::new();
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                support.push(i);
                signs.push(if v > 0.0 { 1 } else { -1 });
                magnitudes.push(v.abs());
            }
        }
        Self::new(x.len(), support, signs, magnitudes)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// `sign(x_I)` as reals.
    pub fn support_signs(&self) -> Vec<f64> {
        self.signs.iter().map(|&s| f64::from(s)).collect()
    }

    /// Complement of the support in `{0, …, m-1}`.
    pub fn off_support(&self) -> Vec<usize> {
        let mut mask = vec![true; self.m];
        for &i in &self.support {
            mask[i] = false;
        }
        (0..self.m).filter(|&i| mask[i]).collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.m];
        for ((&i, &s), &a) in self.support.iter().zip(&self.signs).zip(&self.magnitudes) {
            x[i] = f64::from(s) * a;
        }
        x
    }

    pub fn l1_norm(&self) -> f64 {
        self.magnitudes.iter().sum()
    }
}

/// Draws a signal from the generic `p`-sparse model: the support is a uniform
/// `p`-subset (partial Fisher–Yates), signs are independent fair coins and
/// magnitudes follow `rule`.
pub fn sample_generic_p_sparse<R: Rng + ?Sized>(
    m: usize,
    p: usize,
    rule: MagnitudeRule,
    rng: &mut R,
) -> Result<SparseSignal, SparseModelError> {
    if p < 1 || p > m {
        return Err(SparseModelError::InvalidSparsity { p, m });
    }
    let mut support = uniform_subset(m, p, rng);
    support.sort_unstable();
    let signs: Vec<i8> = (0..p).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let magnitudes: Vec<f64> = (0..p).map(|_| rule.sample(rng)).collect();
    SparseSignal::new(m, support, signs, magnitudes)
}

/// A uniformly random `p`-subset of `0..m`, unsorted.
pub fn uniform_subset<R: Rng + ?Sized>(m: usize, p: usize, rng: &mut R) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..p {
        let j = rng.random_range(i..m);
        pool.swap(i, j);
    }
    pool.truncate(p);
    pool
}

/// A uniform random sign vector of length `p`.
pub fn random_signs<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<f64> {
    (0..p).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// `x¹ = x^s + r` with `‖r‖₂ ≤ tail_bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibleSignal {
    sparse_part: SparseSignal,
    tail: Vec<f64>,
    tail_bound: f64,
}

impl CompressibleSignal {
    pub fn new(sparse_part: SparseSignal, tail: Vec<f64>, tail_bound: f64) -> Result<Self, SparseModelError> {
        if tail.len() != sparse_part.m() {
            return Err(SparseModelError::InvalidSignal("tail length differs from m".into()));
        }
        let norm = norm2(&tail);
        // rescaling to a sphere can overshoot by an ulp or two
        if norm > tail_bound * (1.0 + 4.0 * f64::EPSILON) {
            return Err(SparseModelError::TailExceedsBound { norm, bound: tail_bound });
        }
        Ok(Self {
            sparse_part,
            tail,
            tail_bound,
        })
    }

    pub fn sparse_part(&self) -> &SparseSignal {
        &self.sparse_part
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = self.sparse_part.to_dense();
        for (xi, ri) in x.iter_mut().zip(&self.tail) {
            *xi += ri;
        }
        x
    }
}

/// A point drawn uniformly on the sphere of the given radius in `ℝ^dim`.
/// Radius zero consumes no randomness.
pub fn sample_sphere<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    if radius == 0.0 || dim == 0 {
        return vec![0.0; dim];
    }
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm2(&g);
        if n > 0.0 {
            return g.into_iter().map(|v| v * radius / n).collect();
        }
    }
}

/// Adds a tail drawn uniformly on the sphere of radius `tail_energy`.
pub fn make_compressible<R: Rng + ?Sized>(
    xs: SparseSignal,
    tail_energy: f64,
    rng: &mut R,
) -> Result<CompressibleSignal, SparseModelError> {
    if !(tail_energy >= 0.0) {
        return Err(SparseModelError::InvalidSignal("tail energy must be nonnegative".into()));
    }
    let tail = sample_sphere(xs.m(), tail_energy, rng);
    CompressibleSignal::new(xs, tail, tail_energy)
}

/// Entrywise sign; only exact zeros map to zero.
pub fn sign_vector(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Per-trial seed: `root ⊕ index`.
pub fn trial_seed(root_seed: u64, trial_index: u64) -> u64 {
    root_seed ^ trial_index
}

/// Independent ChaCha stream for one consumer (signal, tail, noise, ...) of a trial seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_support_when_p_equals_m() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..20 {
            let s = sample_generic_p_sparse(7, 7, MagnitudeRule::default(), &mut rng).unwrap();
            assert_eq!(s.support(), &[0, 1, 2, 3, 4, 5, 6]);
        }
    }

    #[test]
    fn rejects_bad_sparsity() {
        let mut rng = stream_rng(3, 0);
        assert_eq!(
            sample_generic_p_sparse(5, 0, MagnitudeRule::default(), &mut rng),
            Err(SparseModelError::InvalidSparsity { p: 0, m: 5 })
        );
        assert!(sample_generic_p_sparse(5, 6, MagnitudeRule::default(), &mut rng).is_err());
    }

    #[test]
    fn single_index_frequency_is_fair() {
        let mut rng = stream_rng(17, 0);
        let hits = (0..10_000)
            .filter(|_| sample_generic_p_sparse(2, 1, MagnitudeRule::default(), &mut rng).unwrap().support()[0] == 0)
            .count();
        let f = hits as f64 / 10_000.0;
        assert!((0.48..=0.52).contains(&f), "frequency {f}");
    }

    #[test]
    fn inclusion_frequency_is_p_over_m() {
        let mut rng = stream_rng(5, 0);
        let mut counts = [0usize; 8];
        for _ in 0..10_000 {
            for &i in sample_generic_p_sparse(8, 3, MagnitudeRule::default(), &mut rng).unwrap().support() {
                counts[i] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / 10_000.0 - 0.375).abs() <= 0.02);
        }
    }

    #[test]
    fn dense_view_has_p_nonzeros_and_sign_vector_matches() {
        let mut rng = stream_rng(8, 0);
        let s = sample_generic_p_sparse(30, 6, MagnitudeRule::log_uniform_default(), &mut rng).unwrap();
        let x = s.to_dense();
        assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 6);
        let sg = sign_vector(&x);
        for i in 0..30 {
            match s.support().binary_search(&i) {
                Ok(k) => assert_eq!(sg[i], f64::from(s.signs()[k])),
                Err(_) => assert_eq!(sg[i], 0.0),
            }
        }
        for &a in s.magnitudes() {
            assert!((0.1..=10.0).contains(&a));
        }
        assert_eq!(SparseSignal::from_dense(&x).unwrap(), s);
    }

    #[test]
    fn sign_vector_examples() {
        assert_eq!(sign_vector(&[2.0, -3.0, 0.0]), vec![1.0, -1.0, 0.0]);
        assert_eq!(sign_vector(&[0.0; 4]), vec![0.0; 4]);
        assert_eq!(sign_vector(&[-1e-300, 1e-300]), vec![-1.0, 1.0]);
        assert_eq!(sign_vector(&[-0.0]), vec![0.0]);
    }

    #[test]
    fn compressible_tail() {
        let mut rng = stream_rng(1, 0);
        let xs = sample_generic_p_sparse(20, 3, MagnitudeRule::default(), &mut rng).unwrap();
        let c0 = make_compressible(xs.clone(), 0.0, &mut rng).unwrap();
        assert_eq!(c0.to_dense(), xs.to_dense());
        let c = make_compressible(xs.clone(), 0.5, &mut stream_rng(9, 1)).unwrap();
        assert!((norm2(c.tail()) - 0.5).abs() < 1e-12);
        let again = make_compressible(xs.clone(), 0.5, &mut stream_rng(9, 1)).unwrap();
        assert_eq!(c, again);
        assert!(make_compressible(xs.clone(), -1.0, &mut rng).is_err());
        assert!(CompressibleSignal::new(xs, vec![1.0; 20], 0.1).is_err());
    }

    #[test]
    fn json_shape_and_validation() {
        let s = SparseSignal::new(5, vec![1, 3], vec![1, -1], vec![2.0, 0.5]).unwrap();
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["support"], serde_json::json!([1, 3]));
        assert_eq!(j["signs"], serde_json::json!([1, -1]));
        let back: SparseSignal = serde_json::from_value(j).unwrap();
        assert_eq!(back, s);
        let bad = serde_json::json!({"m": 5, "support": [3, 1], "signs": [1, 1], "magnitudes": [1.0, 1.0]});
        assert!(serde_json::from_value::<SparseSignal>(bad).is_err());
        let bad = serde_json::json!({"m": 5, "support": [1], "signs": [0], "magnitudes": [1.0]});
        assert!(serde_json::from_value::<SparseSignal>(bad).is_err());
    }

    #[test]
    fn seeded_streams_are_reproducible_and_distinct() {
        let a = sample_generic_p_sparse(50, 5, MagnitudeRule::default(), &mut stream_rng(42, 0)).unwrap();
        let b = sample_generic_p_sparse(50, 5, MagnitudeRule::default(), &mut stream_rng(42, 0)).unwrap();
        assert_eq!(a, b);
        let c: Vec<u64> = (0..4).map(|_| stream_rng(42, 1).random()).collect();
        let d: u64 = stream_rng(42, 0).random();
        assert_ne!(c[0], d);
    }

    #[test]
    fn uniform_subset_is_distinct() {
        let mut rng = stream_rng(2, 0);
        let mut s = uniform_subset(40, 40, &mut rng);
        s.sort_unstable();
        assert_eq!(s, (0..40).collect::<Vec<_>>());
    }
}
