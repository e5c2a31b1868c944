//! Sparse linear operators and solver kernels.
//!
//! Everything a filter is built from lives here: compressed-row sparse
//! matrices, finite-difference stencils, the Thomas algorithm, Jacobi and
//! Gauss-Seidel/SOR sweeps, the alternate-direction tridiagonal iteration,
//! incomplete LU with a pivot-relative drop tolerance, preconditioned CGS,
//! and a power-iteration spectral radius estimate. All kernels are generic
//! over the scalar field.

mod ilu;
mod iterative;
mod sparse;
mod stencil;

pub use ilu::{ilu_apply, ilu_factor, IluFactors};
pub use iterative::{
    ats_iteration, cgs_solve, gs_sweep, jacobi_sweep, spectral_radius_estimate, AtsOperator,
};
pub use sparse::{tridiagonal_solve, GridPermutation, SparseMatrix, TridiagonalMatrix};
pub use stencil::{build_stencil, Axis, StencilKind};

/// Errors shared by the solver kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum LinOpError {
    /// A diagonal entry required by a splitting is zero.
    ZeroDiagonal { row: usize },
    /// Elimination hit a zero pivot (possibly after dropping).
    ZeroPivot { row: usize },
    /// A tridiagonal solve hit a zero pivot.
    SingularTridiagonal { row: usize },
    /// A Krylov recurrence divided by a vanishing inner product.
    Breakdown { method: &'static str },
    /// The requested stencil/grid combination is not defined.
    UnsupportedStencil { min_points: usize, got: usize },
}

impl core::fmt::Display for LinOpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LinOpError::ZeroDiagonal { row } => write!(f, "zero diagonal entry in row {row}"),
            LinOpError::ZeroPivot { row } => write!(f, "zero pivot in row {row}"),
            LinOpError::SingularTridiagonal { row } => {
                write!(f, "singular tridiagonal system (pivot row {row})")
            }
            LinOpError::Breakdown { method } => write!(f, "{method} breakdown"),
            LinOpError::UnsupportedStencil { min_points, got } => {
                write!(f, "stencil needs at least {min_points} grid points, got {got}")
            }
        }
    }
}

impl core::error::Error for LinOpError {}
