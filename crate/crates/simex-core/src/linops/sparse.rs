//! Compressed-row sparse matrices, tridiagonal systems, grid permutations.

use alloc::vec;
use alloc::vec::Vec;

use super::LinOpError;
use crate::scalar::Scalar;

/// Square sparse matrix in compressed-row (CSR) form.
///
/// Immutable after assembly; rows keep their column indices sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<S> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> SparseMatrix<S> {
    /// Assemble from (row, col, value) triplets; duplicate positions are summed,
    /// exact zeros are kept out of the pattern.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, S)]) -> Self {
        let mut trips: Vec<(usize, usize, S)> = triplets
            .iter()
            .copied()
            .filter(|&(_, _, v)| v != S::zero())
            .collect();
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(trips.len());
        let mut values: Vec<S> = Vec::with_capacity(trips.len());
        let mut cur_row = 0usize;
        for (r, c, v) in trips {
            debug_assert!(r < n && c < n);
            while cur_row < r {
                cur_row += 1;
                row_ptr[cur_row] = col_idx.len();
            }
            if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                let last = values.len() - 1;
                values[last] = values[last] + v;
            } else {
                col_idx.push(c);
                values.push(v);
            }
        }
        while cur_row < n {
            cur_row += 1;
            row_ptr[cur_row] = col_idx.len();
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        let trips: Vec<(usize, usize, S)> = (0..n).map(|i| (i, i, S::one())).collect();
        Self::from_triplets(n, &trips)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[S]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => S::zero(),
        }
    }

    pub fn matvec_into(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = S::zero();
            for (c, v) in cols.iter().zip(vals) {
                acc = acc + *v * x[*c];
            }
            out[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.n];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn scale(&self, alpha: S) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = *v * alpha;
        }
        out
    }

    /// `I − alpha·self`, with the diagonal made explicit.
    ///
    /// This is the stage matrix `H = I − hγ·J` of the implicit equation
    /// when `alpha = hγ` and `self` is the implicit-part Jacobian.
    pub fn identity_minus_scaled(&self, alpha: S) -> Self {
        let mut trips: Vec<(usize, usize, S)> = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut diag_seen = false;
            for (c, v) in cols.iter().zip(vals) {
                let mut entry = S::zero() - alpha * *v;
                if *c == i {
                    entry = entry + S::one();
                    diag_seen = true;
                }
                trips.push((i, *c, entry));
            }
            if !diag_seen {
                trips.push((i, i, S::one()));
            }
        }
        Self::from_triplets(self.n, &trips)
    }

    /// Strict tridiagonal part `|i − j| ≤ 1` (periodic wrap entries excluded).
    pub fn tridiagonal_part(&self) -> TridiagonalMatrix<S> {
        let n = self.n;
        let mut sub = vec![S::zero(); n.saturating_sub(1)];
        let mut main = vec![S::zero(); n];
        let mut sup = vec![S::zero(); n.saturating_sub(1)];
        for i in 0..n {
            main[i] = self.get(i, i);
            if i + 1 < n {
                sup[i] = self.get(i, i + 1);
                sub[i] = self.get(i + 1, i);
            }
        }
        TridiagonalMatrix { n, sub, main, sup }
    }

    /// Symmetric permutation `PAPᵀ`: entry (i, j) moves to (perm[i], perm[j]).
    pub fn permute_symmetric(&self, perm: &GridPermutation) -> Self {
        debug_assert_eq!(perm.len(), self.n);
        let mut trips = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                trips.push((perm.map(i), perm.map(*c), *v));
            }
        }
        Self::from_triplets(self.n, &trips)
    }

    pub fn to_dense(&self) -> crate::dense::DenseMatrix<S> {
        crate::dense::DenseMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// Tridiagonal matrix stored as three diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix<S> {
    n: usize,
    sub: Vec<S>,
    main: Vec<S>,
    sup: Vec<S>,
}

impl<S: Scalar> TridiagonalMatrix<S> {
    pub fn new(sub: Vec<S>, main: Vec<S>, sup: Vec<S>) -> Self {
        let n = main.len();
        assert_eq!(sub.len() + 1, n.max(1));
        assert_eq!(sup.len() + 1, n.max(1));
        Self { n, sub, main, sup }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            sub: vec![S::zero(); n - 1],
            main: vec![S::one(); n],
            sup: vec![S::zero(); n - 1],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.n];
        for i in 0..self.n {
            let mut acc = self.main[i] * x[i];
            if i > 0 {
                acc = acc + self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < self.n {
                acc = acc + self.sup[i] * x[i + 1];
            }
            out[i] = acc;
        }
        out
    }

    /// Thomas algorithm. Fails on a zero pivot; no pivoting is performed,
    /// which is fine for the diagonally dominant stage matrices used here.
    pub fn solve(&self, rhs: &[S]) -> Result<Vec<S>, LinOpError> {
        tridiagonal_solve(self, rhs)
    }
}

/// Solve `T x = rhs` by the Thomas algorithm.
pub fn tridiagonal_solve<S: Scalar>(
    t: &TridiagonalMatrix<S>,
    rhs: &[S],
) -> Result<Vec<S>, LinOpError> {
    let n = t.n;
    debug_assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c_prime = vec![S::zero(); n];
    let mut d_prime = vec![S::zero(); n];
    if t.main[0].abs() == 0.0 {
        return Err(LinOpError::SingularTridiagonal { row: 0 });
    }
    c_prime[0] = if n > 1 { t.sup[0] / t.main[0] } else { S::zero() };
    d_prime[0] = rhs[0] / t.main[0];
    for i in 1..n {
        let denom = t.main[i] - t.sub[i - 1] * c_prime[i - 1];
        if denom.abs() == 0.0 {
            return Err(LinOpError::SingularTridiagonal { row: i });
        }
        if i + 1 < n {
            c_prime[i] = t.sup[i] / denom;
        }
        d_prime[i] = (rhs[i] - t.sub[i - 1] * d_prime[i - 1]) / denom;
    }
    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] = x[i] - c_prime[i] * next;
    }
    Ok(x)
}

/// A permutation of grid indices; for 2D grids in natural (row-major)
/// ordering this is the transpose permutation that exchanges the roles of
/// the two Cartesian directions. Always an involution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPermutation {
    map: Vec<usize>,
}

impl GridPermutation {
    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    /// Transpose permutation of an `m × m` grid: node `(i, j) ↦ (j, i)`.
    pub fn transpose_2d(m: usize) -> Self {
        let mut map = vec![0usize; m * m];
        for i in 0..m {
            for j in 0..m {
                map[i * m + j] = j * m + i;
            }
        }
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self, i: usize) -> usize {
        self.map[i]
    }

    /// Permuted vector `x̃` with `x̃[map[i]] = x[i]`.
    pub fn apply<S: Copy>(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.map.len());
        let mut out = x.to_vec();
        for (i, &p) in self.map.iter().enumerate() {
            out[p] = x[i];
        }
        out
    }

    pub fn is_involution(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &p)| self.map[p] == i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::inf_norm;

    #[test]
    fn csr_assembly_sums_duplicates_and_sorts() {
        let m = SparseMatrix::from_triplets(
            3,
            &[(1, 2, 4.0), (0, 0, 1.0), (1, 2, -1.0), (2, 0, 2.0), (1, 0, 5.0)],
        );
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(1, 2), 3.0);
        assert_eq!(m.get(1, 0), 5.0);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(2, 0), 2.0);
        assert_eq!(m.get(2, 2), 0.0);
        let (cols, _) = m.row(1);
        assert_eq!(cols, &[0, 2]);
    }

    #[test]
    fn matvec_matches_dense() {
        let m = SparseMatrix::from_triplets(
            3,
            &[(0, 0, 2.0), (0, 2, -1.0), (1, 1, 3.0), (2, 0, 1.0), (2, 2, 4.0)],
        );
        let x = [1.0, 2.0, 3.0];
        let y = m.matvec(&x);
        let yd = m.to_dense().matvec(&x);
        assert_eq!(y, yd);
    }

    #[test]
    fn identity_minus_scaled_builds_stage_matrix() {
        // J with an empty diagonal row still gets an explicit 1 on the diagonal.
        let j = SparseMatrix::from_triplets(2, &[(0, 1, 2.0), (1, 0, -3.0)]);
        let h = j.identity_minus_scaled(0.5);
        assert_eq!(h.get(0, 0), 1.0);
        assert_eq!(h.get(0, 1), -1.0);
        assert_eq!(h.get(1, 0), 1.5);
        assert_eq!(h.get(1, 1), 1.0);
    }

    #[test]
    fn thomas_identity_returns_rhs() {
        let t = TridiagonalMatrix::<f64>::identity(4);
        let r = [1.0, -2.0, 0.5, 3.0];
        assert_eq!(t.solve(&r).unwrap(), r.to_vec());
    }

    #[test]
    fn thomas_matches_hand_solution() {
        // tridiag(-1, 2, -1), n = 3, rhs = e1: x = [3/4, 1/2, 1/4]
        // (derived by forward elimination on the 3x3 system).
        let t = TridiagonalMatrix::new(
            vec![-1.0, -1.0],
            vec![2.0, 2.0, 2.0],
            vec![-1.0, -1.0],
        );
        let x = t.solve(&[1.0, 0.0, 0.0]).unwrap();
        let expect = [0.75, 0.5, 0.25];
        for (a, b) in x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn thomas_residual_on_random_diagonally_dominant_system() {
        // Deterministic pseudo-random coefficients; dominance keeps the
        // elimination well conditioned.
        let n = 50;
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let sub: Vec<f64> = (0..n - 1).map(|_| next()).collect();
        let sup: Vec<f64> = (0..n - 1).map(|_| next()).collect();
        let main: Vec<f64> = (0..n).map(|_| 4.0 + next()).collect();
        let rhs: Vec<f64> = (0..n).map(|_| next()).collect();
        let t = TridiagonalMatrix::new(sub, main, sup);
        let x = t.solve(&rhs).unwrap();
        let ax = t.matvec(&x);
        let resid: Vec<f64> = ax.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        assert!(inf_norm(&resid) < 1e-12);
    }

    #[test]
    fn thomas_zero_pivot_is_an_error() {
        let t = TridiagonalMatrix::new(vec![1.0], vec![0.0, 1.0], vec![1.0]);
        assert!(matches!(
            t.solve(&[1.0, 1.0]),
            Err(LinOpError::SingularTridiagonal { row: 0 })
        ));
    }

    #[test]
    fn transpose_permutation_is_involution() {
        let p = GridPermutation::transpose_2d(5);
        assert!(p.is_involution());
        let x: Vec<f64> = (0..25).map(|i| i as f64).collect();
        assert_eq!(p.apply(&p.apply(&x)), x);
    }

    #[test]
    fn symmetric_permutation_transposes_grid_coupling() {
        // 2x2 grid, entry coupling (0,0)->(0,1) must become (0,0)->(1,0).
        let m = 2;
        let a = SparseMatrix::from_triplets(4, &[(0, 1, 7.0), (0, 0, 1.0)]);
        let p = GridPermutation::transpose_2d(m);
        let b = a.permute_symmetric(&p);
        assert_eq!(b.get(0, 2), 7.0);
        assert_eq!(b.get(0, 0), 1.0);
    }
}
