//! Column-major dense matrices and the SPD factorization used by the rest of the crate.

use super::NumericsError;

/// Dense real matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim, dim);
        for i in 0..dim {
            out.set(i, i, 1.0);
        }
        out
    }

    /// Builds a matrix from column-major data. Fails if the length does not match.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.set(i, j, data[i * cols + j]);
            }
        }
        Ok(out)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(NumericsError::DimensionMismatch {
                    expected: rows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.rows + i] = value;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    /// `B x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec: dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.column(j), &mut out);
            }
        }
        out
    }

    /// `Bᵗ y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "tr_mul_vec: dimension mismatch");
        (0..self.cols).map(|j| dot(self.column(j), y)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `B Bᵗ`, exactly symmetric.
    pub fn outer_gram(&self) -> SymmetricMatrix {
        let mut g = Matrix::zeros(self.rows, self.rows);
        for j in 0..self.cols {
            let c = self.column(j);
            for b in 0..self.rows {
                let cb = c[b];
                if cb == 0.0 {
                    continue;
                }
                for a in b..self.rows {
                    let v = g.get(a, b) + c[a] * cb;
                    g.set(a, b, v);
                }
            }
        }
        for b in 0..self.rows {
            for a in b + 1..self.rows {
                let v = g.get(a, b);
                g.set(b, a, v);
            }
        }
        SymmetricMatrix(g)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A square matrix that is symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    /// Symmetrizes `m` by averaging it with its transpose.
    pub fn from_matrix(m: Matrix) -> Result<Self, NumericsError> {
        if m.rows() != m.cols() {
            return Err(NumericsError::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let dim = m.rows();
        let mut out = m;
        for j in 0..dim {
            for i in j + 1..dim {
                let avg = 0.5 * (out.get(i, j) + out.get(j, i));
                out.set(i, j, avg);
                out.set(j, i, avg);
            }
        }
        Ok(Self(out))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        Self(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.0.mul_vec(x)
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..self.dim() {
            m.set(i, i, m.get(i, i) + shift);
        }
        Self(m)
    }
}

/// Lower-triangular Cholesky factor `G = L Lᵗ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    // column-major lower triangle
    lower: Vec<f64>,
}

/// Relative pivot tolerance of the SPD factorization.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

impl Cholesky {
    /// Factors `g`; a pivot at or below `1e-12 · max diagonal` is reported as
    /// [`NumericsError::NotPositiveDefinite`].
    pub fn factor(g: &SymmetricMatrix) -> Result<Self, NumericsError> {
        let dim = g.dim();
        let max_diag = (0..dim).fold(0.0_f64, |acc, i| acc.max(g.get(i, i)));
        let threshold = PIVOT_TOLERANCE * max_diag;
        let mut l = vec![0.0; dim * dim];
        for j in 0..dim {
            let mut pivot = g.get(j, j);
            for k in 0..j {
                let ljk = l[k * dim + j];
                pivot -= ljk * ljk;
            }
            if !(pivot > threshold) || max_diag <= 0.0 {
                return Err(NumericsError::NotPositiveDefinite { index: j, pivot });
            }
            let diag = pivot.sqrt();
            l[j * dim + j] = diag;
            for i in j + 1..dim {
                let mut s = g.get(i, j);
                for k in 0..j {
                    s -= l[k * dim + i] * l[k * dim + j];
                }
                l[j * dim + i] = s / diag;
            }
        }
        Ok(Self { dim, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `L Lᵗ z = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.dim, "cholesky solve: dimension mismatch");
        let n = self.dim;
        let l = &self.lower;
        let mut z = rhs.to_vec();
        // forward: L w = rhs
        for j in 0..n {
            z[j] /= l[j * n + j];
            let zj = z[j];
            for i in j + 1..n {
                z[i] -= l[j * n + i] * zj;
            }
        }
        // backward: Lᵗ z = w
        for j in (0..n).rev() {
            let mut s = z[j];
            for i in j + 1..n {
                s -= l[j * n + i] * z[i];
            }
            z[j] = s / l[j * n + j];
        }
        z
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    // scaled to avoid overflow/underflow on extreme entries
    let scale = norm_inf(x);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt()
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_identity_and_diagonal() {
        let z = Cholesky::factor(&SymmetricMatrix::identity(2))
            .unwrap()
            .solve(&[3.0, -1.0]);
        assert_eq!(z, vec![3.0, -1.0]);
        let z = Cholesky::factor(&SymmetricMatrix::diagonal(&[2.0, 4.0]))
            .unwrap()
            .solve(&[2.0, 4.0]);
        assert!((z[0] - 1.0).abs() < 1e-15 && (z[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let m = Matrix::from_row_major(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let g = SymmetricMatrix::from_matrix(m).unwrap();
        assert!(matches!(
            Cholesky::factor(&g),
            Err(NumericsError::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn symmetrize_averages() {
        let m = Matrix::from_row_major(2, 2, &[1.0, 2.0, 4.0, 1.0]).unwrap();
        let g = SymmetricMatrix::from_matrix(m).unwrap();
        assert_eq!(g.get(0, 1), 3.0);
        assert_eq!(g.get(1, 0), 3.0);
    }

    #[test]
    fn norm2_handles_tiny_entries() {
        assert_eq!(norm2(&[0.0, 0.0]), 0.0);
        let v = norm2(&[3e-200, 4e-200]);
        assert!((v / 5e-200 - 1.0).abs() < 1e-14);
    }
}
