//! Finite-difference stencil assembly.
//!
//! 1D operators act on the interior nodes of `[0, π]` with homogeneous
//! Dirichlet boundaries (boundary nodes eliminated); 2D operators act on a
//! periodic `N × N` grid in natural row-major ordering, node `(i, j)`
//! stored at index `i·N + j` with `x₁` along `i` and `x₂` along `j`.

use alloc::vec::Vec;

use super::sparse::SparseMatrix;
use super::LinOpError;
use crate::scalar::Scalar;

/// Differentiation matrices used by the model problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilKind {
    /// Second derivative, second order, interior nodes of a Dirichlet grid:
    /// row pattern `[1, −2, 1]/δx²`.
    Laplacian1dO2Dirichlet,
    /// First derivative, second-order centered, Dirichlet interior:
    /// row pattern `[−1, 0, 1]/(2δx)`.
    Advection1dO2CenteredDirichlet,
    /// 2D Laplacian, second order, five-point stencil, periodic.
    Laplacian2dO2FivePointPeriodic,
    /// 2D Laplacian, fourth order, nine-point cross stencil (five points in
    /// each Cartesian direction), periodic.
    Laplacian2dO4Cross9Periodic,
    /// First derivative along one Cartesian direction, fourth order, five
    /// points, periodic: row pattern `[1, −8, 0, 8, −1]/(12δx)`.
    Gradient2dO4Periodic { axis: Axis },
}

/// Cartesian direction of a 2D grid in natural ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Build the scaled differentiation matrix for `kind` on a grid with `n`
/// points (1D Dirichlet kinds: `n` is the number of grid intervals, the
/// matrix acts on the `n − 1` interior nodes).
pub fn build_stencil<S: Scalar>(
    kind: StencilKind,
    n: usize,
    dx: f64,
) -> Result<SparseMatrix<S>, LinOpError> {
    assert!(dx > 0.0, "grid spacing must be positive");
    match kind {
        StencilKind::Laplacian1dO2Dirichlet => {
            require(n, 2)?;
            let dim = n - 1;
            let c = 1.0 / (dx * dx);
            let mut trips = Vec::with_capacity(3 * dim);
            for i in 0..dim {
                trips.push((i, i, S::from_re(-2.0 * c)));
                if i > 0 {
                    trips.push((i, i - 1, S::from_re(c)));
                }
                if i + 1 < dim {
                    trips.push((i, i + 1, S::from_re(c)));
                }
            }
            Ok(SparseMatrix::from_triplets(dim, &trips))
        }
        StencilKind::Advection1dO2CenteredDirichlet => {
            require(n, 2)?;
            let dim = n - 1;
            let c = 1.0 / (2.0 * dx);
            let mut trips = Vec::with_capacity(2 * dim);
            for i in 0..dim {
                if i > 0 {
                    trips.push((i, i - 1, S::from_re(-c)));
                }
                if i + 1 < dim {
                    trips.push((i, i + 1, S::from_re(c)));
                }
            }
            Ok(SparseMatrix::from_triplets(dim, &trips))
        }
        StencilKind::Laplacian2dO2FivePointPeriodic => {
            require(n, 3)?;
            let c = 1.0 / (dx * dx);
            let offsets = [(0i64, 0i64, -4.0), (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)];
            Ok(periodic_2d(n, &offsets, c))
        }
        StencilKind::Laplacian2dO4Cross9Periodic => {
            require(n, 5)?;
            let c = 1.0 / (12.0 * dx * dx);
            let offsets = [
                (0i64, 0i64, -60.0),
                (1, 0, 16.0),
                (-1, 0, 16.0),
                (2, 0, -1.0),
                (-2, 0, -1.0),
                (0, 1, 16.0),
                (0, -1, 16.0),
                (0, 2, -1.0),
                (0, -2, -1.0),
            ];
            Ok(periodic_2d(n, &offsets, c))
        }
        StencilKind::Gradient2dO4Periodic { axis } => {
            require(n, 5)?;
            let c = 1.0 / (12.0 * dx);
            let line = [(1i64, 8.0), (-1, -8.0), (2, -1.0), (-2, 1.0)];
            let offsets: Vec<(i64, i64, f64)> = line
                .iter()
                .map(|&(o, w)| match axis {
                    Axis::X1 => (o, 0, w),
                    Axis::X2 => (0, o, w),
                })
                .collect();
            Ok(periodic_2d(n, &offsets, c))
        }
    }
}

fn require(n: usize, min: usize) -> Result<(), LinOpError> {
    if n < min {
        Err(LinOpError::UnsupportedStencil { min_points: min, got: n })
    } else {
        Ok(())
    }
}

fn periodic_2d<S: Scalar>(n: usize, offsets: &[(i64, i64, f64)], scale: f64) -> SparseMatrix<S> {
    let dim = n * n;
    let mut trips = Vec::with_capacity(offsets.len() * dim);
    let wrap = |k: i64| -> usize { k.rem_euclid(n as i64) as usize };
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for &(di, dj, w) in offsets {
                let col = wrap(i as i64 + di) * n + wrap(j as i64 + dj);
                trips.push((row, col, S::from_re(w * scale)));
            }
        }
    }
    SparseMatrix::from_triplets(dim, &trips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::inf_norm;
    use core::f64::consts::PI;

    #[test]
    fn dirichlet_laplacian_has_interior_row_pattern() {
        let dx = PI / 10.0;
        let l = build_stencil::<f64>(StencilKind::Laplacian1dO2Dirichlet, 10, dx).unwrap();
        assert_eq!(l.n(), 9);
        let c = 1.0 / (dx * dx);
        let (cols, vals) = l.row(4);
        assert_eq!(cols, &[3, 4, 5]);
        assert_eq!(vals, &[c, -2.0 * c, c]);
        // boundary rows lose one neighbor
        assert_eq!(l.row(0).0, &[0, 1]);
    }

    #[test]
    fn periodic_laplacians_annihilate_constants() {
        for kind in [
            StencilKind::Laplacian2dO2FivePointPeriodic,
            StencilKind::Laplacian2dO4Cross9Periodic,
        ] {
            let a = build_stencil::<f64>(kind, 8, 0.3).unwrap();
            let ones = alloc::vec![1.0; a.n()];
            assert!(inf_norm(&a.matvec(&ones)) < 1e-12);
        }
    }

    #[test]
    fn gradient_annihilates_constants_and_is_exact_on_aligned_sines() {
        let n = 16;
        let dx = PI / n as f64;
        let g = build_stencil::<f64>(StencilKind::Gradient2dO4Periodic { axis: Axis::X2 }, n, dx)
            .unwrap();
        let ones = alloc::vec![1.0; n * n];
        assert!(inf_norm(&g.matvec(&ones)) < 1e-12);
        // d/dx2 of a function of x1 alone is zero
        let f: Vec<f64> = (0..n * n).map(|k| (2.0 * ((k / n) as f64) * dx).sin()).collect();
        assert!(inf_norm(&g.matvec(&f)) < 1e-12);
    }

    #[test]
    fn fourth_order_laplacian_accuracy_on_sin_2x1() {
        // Applied to samples of sin(2 x1) the nine-point cross must return
        // -4 sin(2 x1) up to O(dx^4); at N = 32 the max error is < 1e-3.
        let n = 32;
        let dx = PI / n as f64;
        let a = build_stencil::<f64>(StencilKind::Laplacian2dO4Cross9Periodic, n, dx).unwrap();
        let f: Vec<f64> = (0..n * n).map(|k| (2.0 * ((k / n) as f64) * dx).sin()).collect();
        let got = a.matvec(&f);
        let mut err: f64 = 0.0;
        for k in 0..n * n {
            err = err.max((got[k] + 4.0 * f[k]).abs());
        }
        assert!(err < 1e-3, "fourth-order error {err}");
        assert!(err > 1e-8, "error suspiciously small; wrong test setup?");
    }

    #[test]
    fn undersized_grid_is_rejected() {
        assert!(matches!(
            build_stencil::<f64>(StencilKind::Laplacian2dO4Cross9Periodic, 4, 0.1),
            Err(LinOpError::UnsupportedStencil { min_points: 5, got: 4 })
        ));
    }

    #[test]
    fn nine_point_cross_has_nine_entries_per_row() {
        let a = build_stencil::<f64>(StencilKind::Laplacian2dO4Cross9Periodic, 10, 0.1).unwrap();
        assert_eq!(a.nnz(), 9 * a.n());
    }
}
