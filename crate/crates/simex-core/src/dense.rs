//! Small dense matrices.
//!
//! Dense algebra shows up in two places only: the Newton filter (exact
//! Jacobians solved with LU decomposition) and the diagnostic operations
//! that treat a linear filter as a matrix. Systems there are small, so a
//! plain row-major store with partial-pivoting LU is all that is needed.

use alloc::vec;
use alloc::vec::Vec;

use crate::scalar::{two_norm, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseError {
    /// A pivot column had no usable (nonzero) entry.
    Singular { col: usize },
    /// Operand shapes do not match.
    ShapeMismatch,
}

impl core::fmt::Display for DenseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DenseError::Singular { col } => write!(f, "singular matrix (pivot column {col})"),
            DenseError::ShapeMismatch => write!(f, "operand shapes do not match"),
        }
    }
}

impl core::error::Error for DenseError {}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from column vectors (all of equal length).
    pub fn from_columns(cols: &[Vec<S>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![S::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = S::zero();
            for j in 0..self.cols {
                acc = acc + self[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Conjugate-transpose product `Aᴴ x`.
    pub fn matvec_adjoint(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![S::zero(); self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j] = out[j] + self[(i, j)].conj() * x[i];
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self, DenseError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(DenseError::ShapeMismatch);
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = *a - *b;
        }
        Ok(out)
    }

    pub fn scale(&self, alpha: S) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = *a * alpha;
        }
        out
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<LuFactors<S>, DenseError> {
        assert_eq!(self.rows, self.cols, "LU requires a square matrix");
        let n = self.rows;
        let mut lu = self.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let a = lu[(i, k)].abs();
                if a > best {
                    best = a;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(DenseError::Singular { col: k });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                piv.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - factor * u;
                }
            }
        }
        Ok(LuFactors { lu, piv })
    }

    pub fn solve(&self, rhs: &[S]) -> Result<Vec<S>, DenseError> {
        Ok(self.lu()?.solve(rhs))
    }

    pub fn inverse(&self) -> Result<Self, DenseError> {
        let n = self.rows;
        let lu = self.lu()?;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![S::zero(); n];
            e[j] = S::one();
            cols.push(lu.solve(&e));
        }
        Ok(Self::from_columns(&cols))
    }

    /// Induced 2-norm (largest singular value), estimated by power
    /// iteration on `AᴴA` from a deterministic start vector.
    pub fn two_norm_est(&self, iters: usize) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let mut v: Vec<S> = (0..self.cols)
            .map(|j| S::from_re(1.0 + (j as f64) / (self.cols as f64 + 1.0)))
            .collect();
        let mut sigma = 0.0;
        for _ in 0..iters {
            let w = self.matvec(&v);
            sigma = two_norm(&w);
            let mut u = self.matvec_adjoint(&w);
            let nu = two_norm(&u);
            if nu == 0.0 {
                return 0.0;
            }
            for x in u.iter_mut() {
                *x = *x * S::from_re(1.0 / nu);
            }
            v = u;
        }
        sigma
    }
}

impl<S> core::ops::Index<(usize, usize)> for DenseMatrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> core::ops::IndexMut<(usize, usize)> for DenseMatrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Packed LU factors with the pivot permutation applied on solve.
pub struct LuFactors<S> {
    lu: DenseMatrix<S>,
    piv: Vec<usize>,
}

impl<S: Scalar> LuFactors<S> {
    pub fn solve(&self, rhs: &[S]) -> Vec<S> {
        let n = self.lu.rows;
        debug_assert_eq!(rhs.len(), n);
        let mut x: Vec<S> = self.piv.iter().map(|&p| rhs[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc = acc - self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;
    use num_complex::ComplexFloat;

    #[test]
    fn lu_solve_recovers_known_solution() {
        // 3x3 system solved by hand: x = [1, -2, 3].
        let a = DenseMatrix::from_fn(3, 3, |i, j| {
            [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]][i][j]
        });
        let x_true = [1.0, -2.0, 3.0];
        let rhs = a.matvec(&x_true);
        let x = a.solve(&rhs).unwrap();
        for (xi, ti) in x.iter().zip(x_true) {
            assert!((xi - ti).abs() < 1e-13);
        }
    }

    #[test]
    fn lu_needs_pivoting() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| [[0.0, 1.0], [1.0, 0.0]][i][j]);
        let x = a.solve(&[5.0, 7.0]).unwrap();
        assert_eq!(x, vec![7.0, 5.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| [[1.0, 2.0], [2.0, 4.0]][i][j]);
        assert!(matches!(a.lu(), Err(DenseError::Singular { .. })));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| {
            [[4.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 4.0]][i][j]
        });
        let inv = a.inverse().unwrap();
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            let col = inv.matvec(&a.matvec(&e));
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((col[j] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn two_norm_of_diagonal_is_largest_entry() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                [2.0, -7.0, 3.0][i]
            } else {
                0.0
            }
        });
        assert!((a.two_norm_est(200) - 7.0).abs() < 1e-10);
    }

    #[test]
    fn complex_lu_solve() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| {
            [
                [Complex64::new(1.0, 1.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(2.0, 0.0), Complex64::new(0.0, -1.0)],
            ][i][j]
        });
        let x_true = [Complex64::new(1.0, -1.0), Complex64::new(2.0, 3.0)];
        let rhs = a.matvec(&x_true);
        let x = a.solve(&rhs).unwrap();
        for (xi, ti) in x.iter().zip(x_true) {
            assert!((xi - ti).abs() < 1e-13);
        }
    }
}
