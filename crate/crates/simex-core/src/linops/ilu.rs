//! Incomplete LU factorization with a pivot-relative drop tolerance.
//!
//! Row-wise ILUT-style elimination with no fill-level cap. Entries are
//! dropped when they are smaller than `droptol` times the pivot involved:
//! an eliminated (L) entry when its magnitude is below `droptol × |U_kk|`
//! of the pivot row eliminating it — equivalently, when the multiplier is
//! below `droptol` — and a U entry of row `i` when its magnitude is below
//! `droptol × |pivot of row i|`. With `droptol = 0` nothing is dropped and
//! the factorization is an exact (no-pivoting) LU.

use alloc::vec;
use alloc::vec::Vec;

use super::sparse::SparseMatrix;
use super::LinOpError;
use crate::scalar::Scalar;

/// Unit-lower-triangular `L` and upper-triangular `U` factors in CSR form.
#[derive(Debug, Clone)]
pub struct IluFactors<S> {
    n: usize,
    droptol: f64,
    l_row_ptr: Vec<usize>,
    l_col: Vec<usize>,
    l_val: Vec<S>,
    u_row_ptr: Vec<usize>,
    u_col: Vec<usize>,
    u_val: Vec<S>,
    u_diag: Vec<S>,
}

impl<S: Scalar> IluFactors<S> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn droptol(&self) -> f64 {
        self.droptol
    }

    /// Nonzeros of `L` including the implicit unit diagonal.
    pub fn nnz_l(&self) -> usize {
        self.l_col.len() + self.n
    }

    pub fn nnz_u(&self) -> usize {
        self.u_col.len()
    }

    /// Forward then backward substitution: returns `U⁻¹ L⁻¹ r`.
    pub fn solve(&self, r: &[S]) -> Result<Vec<S>, LinOpError> {
        debug_assert_eq!(r.len(), self.n);
        let mut y = r.to_vec();
        for i in 0..self.n {
            let mut acc = y[i];
            for k in self.l_row_ptr[i]..self.l_row_ptr[i + 1] {
                acc = acc - self.l_val[k] * y[self.l_col[k]];
            }
            y[i] = acc;
        }
        for i in (0..self.n).rev() {
            let mut acc = y[i];
            for k in self.u_row_ptr[i]..self.u_row_ptr[i + 1] {
                let c = self.u_col[k];
                if c > i {
                    acc = acc - self.u_val[k] * y[c];
                }
            }
            if self.u_diag[i].abs() == 0.0 {
                return Err(LinOpError::ZeroPivot { row: i });
            }
            y[i] = acc / self.u_diag[i];
        }
        Ok(y)
    }
}

/// Apply the factors to a right-hand side (`U⁻¹ L⁻¹ r`).
pub fn ilu_apply<S: Scalar>(f: &IluFactors<S>, r: &[S]) -> Result<Vec<S>, LinOpError> {
    f.solve(r)
}

/// Factor `h` with the given drop tolerance.
pub fn ilu_factor<S: Scalar>(
    h: &SparseMatrix<S>,
    droptol: f64,
) -> Result<IluFactors<S>, LinOpError> {
    assert!(droptol >= 0.0, "drop tolerance must be nonnegative");
    let n = h.n();
    let mut f = IluFactors {
        n,
        droptol,
        l_row_ptr: vec![0; 1],
        l_col: Vec::new(),
        l_val: Vec::new(),
        u_row_ptr: vec![0; 1],
        u_col: Vec::new(),
        u_val: Vec::new(),
        u_diag: vec![S::zero(); n],
    };
    let mut w = vec![S::zero(); n];
    let mut in_row = vec![false; n];
    let mut occupied: Vec<usize> = Vec::new();

    for i in 0..n {
        occupied.clear();
        let (cols, vals) = h.row(i);
        for (c, v) in cols.iter().zip(vals) {
            w[*c] = *v;
            in_row[*c] = true;
            occupied.push(*c);
        }

        // Eliminate against stored U rows, ascending columns; fill created
        // by row k only lands at columns > k, so in-place insertion keeps
        // the traversal ordered. An entry is dropped from L when it is
        // smaller than droptol times the pivot eliminating it, i.e. when
        // the multiplier magnitude is below droptol; its update is then
        // skipped as well.
        let mut pos = 0;
        while pos < occupied.len() {
            let k = occupied[pos];
            if k >= i {
                break;
            }
            pos += 1;
            if w[k].abs() == 0.0 {
                continue;
            }
            let factor = w[k] / f.u_diag[k];
            if factor.abs() < droptol {
                w[k] = S::zero();
                continue;
            }
            w[k] = factor;
            for idx in f.u_row_ptr[k]..f.u_row_ptr[k + 1] {
                let c = f.u_col[idx];
                if c == k {
                    continue;
                }
                let upd = factor * f.u_val[idx];
                if in_row[c] {
                    w[c] = w[c] - upd;
                } else {
                    w[c] = S::zero() - upd;
                    in_row[c] = true;
                    let at = occupied[pos..].partition_point(|&x| x < c) + pos;
                    occupied.insert(at, c);
                }
            }
        }

        let pivot = w[i];
        if !in_row[i] || pivot.abs() == 0.0 {
            for &c in &occupied {
                w[c] = S::zero();
                in_row[c] = false;
            }
            return Err(LinOpError::ZeroPivot { row: i });
        }
        // U entries are dropped against this row's own pivot
        let threshold = droptol * pivot.abs();

        for &c in &occupied {
            let v = w[c];
            let keep = v.abs() != 0.0 && (c <= i || v.abs() >= threshold);
            if keep {
                if c < i {
                    f.l_col.push(c);
                    f.l_val.push(v);
                } else {
                    f.u_col.push(c);
                    f.u_val.push(v);
                    if c == i {
                        f.u_diag[i] = v;
                    }
                }
            }
            w[c] = S::zero();
            in_row[c] = false;
        }
        f.l_row_ptr.push(f.l_col.len());
        f.u_row_ptr.push(f.u_col.len());
    }
    Ok(f)
}
