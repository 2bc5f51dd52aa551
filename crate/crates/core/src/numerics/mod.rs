//! Dense linear-algebra kernels: the measurement dictionary, column
//! submatrices, Gram matrices, SPD solves and the three matrix norms used by
//! the recovery bounds (2→2, 1→2 and mutual coherence).

mod io;
mod matrix;

use std::sync::OnceLock;

use thiserror::Error;

pub use io::{read_matrix_file, read_matrix_str, write_matrix_file, write_matrix_string, MatrixHeader};
pub use matrix::{axpy, dot, norm1, norm2, norm_inf, sub, Cholesky, Matrix, SymmetricMatrix, PIVOT_TOLERANCE};

/// Columns within this distance of unit norm count as normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("power iteration did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("dictionary columns are not normalized")]
    NotNormalized,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Settings for [`spectral_norm`] and the other power iterations.
#[derive(Debug, Clone, Copy)]
pub struct PowerIterationOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 10_000,
        }
    }
}

/// The `n × m` measurement matrix together with its cached column norms,
/// spectral norm and coherence.
#[derive(Debug)]
pub struct Dictionary {
    matrix: Matrix,
    col_norms: Vec<f64>,
    normalized: bool,
    spectral: OnceLock<f64>,
    coherence: OnceLock<f64>,
}

impl Clone for Dictionary {
    fn clone(&self) -> Self {
        let out = Self {
            matrix: self.matrix.clone(),
            col_norms: self.col_norms.clone(),
            normalized: self.normalized,
            spectral: OnceLock::new(),
            coherence: OnceLock::new(),
        };
        if let Some(&v) = self.spectral.get() {
            let _ = out.spectral.set(v);
        }
        if let Some(&v) = self.coherence.get() {
            let _ = out.coherence.set(v);
        }
        out
    }
}

impl Dictionary {
    /// Wraps `matrix` without rescaling. Requires `m > n ≥ 1`, finite
    /// entries and no zero column.
    pub fn new(matrix: Matrix) -> Result<Self, NumericsError> {
        let (n, m) = (matrix.rows(), matrix.cols());
        if n < 1 || m <= n {
            return Err(NumericsError::InvalidDictionary(format!(
                "need m > n >= 1, got n = {n}, m = {m}"
            )));
        }
        Self::build(matrix)
    }

    /// Same checks as [`Dictionary::new`] except that square matrices are
    /// allowed. Only used for the orthogonal special cases in tests.
    pub fn new_allow_square(matrix: Matrix) -> Result<Self, NumericsError> {
        let (n, m) = (matrix.rows(), matrix.cols());
        if n < 1 || m < n {
            return Err(NumericsError::InvalidDictionary(format!(
                "need m >= n >= 1, got n = {n}, m = {m}"
            )));
        }
        Self::build(matrix)
    }

    fn build(matrix: Matrix) -> Result<Self, NumericsError> {
        if !matrix.is_finite() {
            return Err(NumericsError::InvalidDictionary("non-finite entry".into()));
        }
        let col_norms: Vec<f64> = (0..matrix.cols()).map(|j| norm2(matrix.column(j))).collect();
        if let Some(j) = col_norms.iter().position(|&c| !(c > 0.0)) {
            return Err(NumericsError::InvalidDictionary(format!("column {j} is zero")));
        }
        let normalized = col_norms
            .iter()
            .all(|c| (c - 1.0).abs() <= NORMALIZATION_TOLERANCE);
        Ok(Self {
            matrix,
            col_norms,
            normalized,
            spectral: OnceLock::new(),
            coherence: OnceLock::new(),
        })
    }

    /// Rescales every column to unit Euclidean norm.
    pub fn normalize(mut matrix: Matrix) -> Result<Self, NumericsError> {
        for j in 0..matrix.cols() {
            let c = norm2(matrix.column(j));
            if c > 0.0 {
                matrix.column_mut(j).iter_mut().for_each(|v| *v /= c);
            }
        }
        Self::new(matrix)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        self.matrix.column(j)
    }

    pub fn col_norms(&self) -> &[f64] {
        &self.col_norms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    /// `Aᵗ y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.matrix.tr_mul_vec(y)
    }

    /// ‖A‖₂, computed once.
    pub fn spectral_norm(&self) -> Result<f64, NumericsError> {
        if let Some(&v) = self.spectral.get() {
            return Ok(v);
        }
        let v = spectral_norm(&self.matrix, PowerIterationOptions::default())?;
        Ok(*self.spectral.get_or_init(|| v))
    }

    /// μ(A), computed once.
    pub fn coherence(&self) -> Result<f64, NumericsError> {
        coherence(self)
    }

    pub fn submatrix(&self, indices: Vec<usize>) -> Result<SubMatrix<'_>, NumericsError> {
        SubMatrix::new(self, indices)
    }
}

/// A selection of dictionary columns `A_I`, indices strictly increasing.
#[derive(Debug, Clone)]
pub struct SubMatrix<'a> {
    parent: &'a Dictionary,
    indices: Vec<usize>,
}

impl<'a> SubMatrix<'a> {
    pub fn new(parent: &'a Dictionary, indices: Vec<usize>) -> Result<Self, NumericsError> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NumericsError::InvalidIndexSet(
                "indices must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = indices.last() {
            if last >= parent.m() {
                return Err(NumericsError::InvalidIndexSet(format!(
                    "index {last} out of range for m = {}",
                    parent.m()
                )));
            }
        }
        Ok(Self { parent, indices })
    }

    /// The columns not in `indices`.
    pub fn complement(parent: &'a Dictionary, indices: &[usize]) -> Result<Self, NumericsError> {
        let mut mask = vec![true; parent.m()];
        for &i in indices {
            if i >= parent.m() {
                return Err(NumericsError::InvalidIndexSet(format!("index {i} out of range")));
            }
            mask[i] = false;
        }
        let rest = (0..parent.m()).filter(|&i| mask[i]).collect();
        Ok(Self { parent, indices: rest })
    }

    pub fn parent(&self) -> &'a Dictionary {
        self.parent
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    #[inline]
    pub fn column(&self, k: usize) -> &'a [f64] {
        self.parent.column(self.indices[k])
    }

    /// `A_I c` for a coefficient vector of length `|I|`.
    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len());
        let mut out = vec![0.0; self.parent.n()];
        for (k, &c) in coeffs.iter().enumerate() {
            axpy(c, self.column(k), &mut out);
        }
        out
    }

    /// `A_Iᵗ y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|k| dot(self.column(k), y)).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        let cols: Vec<Vec<f64>> = (0..self.len()).map(|k| self.column(k).to_vec()).collect();
        Matrix::from_columns(&cols).unwrap_or_else(|_| Matrix::zeros(self.parent.n(), 0))
    }
}

/// `A_Iᵗ A_I`.
pub fn gram(s: &SubMatrix<'_>) -> SymmetricMatrix {
    let p = s.len();
    let mut g = Matrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let v = dot(s.column(a), s.column(b));
            g.set(a, b, v);
            g.set(b, a, v);
        }
    }
    // already symmetric entry by entry; from_matrix only averages equal pairs
    SymmetricMatrix::from_matrix(g).expect("square by construction")
}

/// Solves `G z = rhs` for symmetric positive-definite `G`.
pub fn solve_spd(g: &SymmetricMatrix, rhs: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if rhs.len() != g.dim() {
        return Err(NumericsError::DimensionMismatch {
            expected: g.dim(),
            found: rhs.len(),
        });
    }
    Ok(Cholesky::factor(g)?.solve(rhs))
}

/// Largest eigenvalue of a positive semidefinite operator given as a closure.
///
/// Starts from the normalized all-ones vector and stops when successive
/// Rayleigh quotients agree to `tol` relative. If the first start lands in the
/// null space the iteration restarts once from a deterministic perturbation;
/// a second zero quotient means the operator is zero.
pub fn largest_eigenvalue_psd<F>(
    dim: usize,
    apply: F,
    opts: PowerIterationOptions,
) -> Result<f64, NumericsError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if dim == 0 {
        return Ok(0.0);
    }
    let ones = vec![1.0 / (dim as f64).sqrt(); dim];
    match power_from(&ones, &apply, opts)? {
        Some(v) => Ok(v),
        None => {
            let mut start: Vec<f64> = (0..dim)
                .map(|i| 1.0 + 0.5 * (((i * 7919 + 13) % 101) as f64 / 101.0 - 0.5))
                .collect();
            let s = norm2(&start);
            start.iter_mut().for_each(|v| *v /= s);
            Ok(power_from(&start, &apply, opts)?.unwrap_or(0.0))
        }
    }
}

fn power_from<F>(start: &[f64], apply: &F, opts: PowerIterationOptions) -> Result<Option<f64>, NumericsError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut v = start.to_vec();
    let mut rq_prev = f64::NAN;
    for _ in 0..opts.max_iters {
        let w = apply(&v);
        let rq = dot(&v, &w);
        let wn = norm2(&w);
        if wn == 0.0 || rq <= 0.0 {
            return Ok(None);
        }
        if (rq - rq_prev).abs() <= opts.tol * rq {
            return Ok(Some(rq.max(rq_prev)));
        }
        rq_prev = rq;
        v = w.into_iter().map(|x| x / wn).collect();
    }
    Err(NumericsError::ConvergenceFailure {
        iterations: opts.max_iters,
    })
}

/// ‖B‖₂, the largest singular value, by power iteration on the smaller of
/// `BᵗB` and `BBᵗ`.
pub fn spectral_norm(b: &Matrix, opts: PowerIterationOptions) -> Result<f64, NumericsError> {
    let lam = if b.cols() <= b.rows() {
        largest_eigenvalue_psd(b.cols(), |x| b.tr_mul_vec(&b.mul_vec(x)), opts)?
    } else {
        largest_eigenvalue_psd(b.rows(), |x| b.mul_vec(&b.tr_mul_vec(x)), opts)?
    };
    Ok(lam.max(0.0).sqrt())
}

/// ‖B‖₁→₂: the largest column norm.
pub fn norm_1_to_2(b: &Matrix) -> f64 {
    (0..b.cols()).fold(0.0, |acc, j| acc.max(norm2(b.column(j))))
}

/// ‖A_S‖₁→₂ for a column selection.
pub fn submatrix_norm_1_to_2(s: &SubMatrix<'_>) -> f64 {
    s.indices()
        .iter()
        .fold(0.0, |acc, &j| acc.max(s.parent().col_norms()[j]))
}

/// Mutual coherence `max_{i≠j} |⟨a_i, a_j⟩|` of a normalized dictionary.
pub fn coherence(a: &Dictionary) -> Result<f64, NumericsError> {
    if !a.is_normalized() {
        return Err(NumericsError::NotNormalized);
    }
    Ok(*a.coherence.get_or_init(|| {
        let m = a.m();
        let mut mu = 0.0_f64;
        for i in 0..m {
            let ci = a.column(i);
            for j in i + 1..m {
                mu = mu.max(dot(ci, a.column(j)).abs());
            }
        }
        mu.min(1.0)
    }))
}

/// `μ(A) ≤ A0 / ln m`.
pub fn coherence_criterion(a: &Dictionary, a0: f64) -> Result<bool, NumericsError> {
    let mu = coherence(a)?;
    Ok(coherence_criterion_value(mu, a.m() as f64, a0))
}

/// The criterion on raw scalars; `m` is real so that formal values work.
pub fn coherence_criterion_value(mu: f64, m: f64, a0: f64) -> bool {
    mu <= a0 / m.ln()
}
