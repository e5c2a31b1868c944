//! Shortcut-IMEX (SIMEX) Runge-Kutta time integration.
//!
//! Implicit-explicit (IMEX) Runge-Kutta methods split an ODE into an
//! implicitly treated part `f` and an explicitly treated part `f̂`,
//!
//! ```text
//! dy/dt = f̂(y, t) + f(y, t),
//! ```
//!
//! and solve an implicit equation at every stage of the implicit (ESDIRK)
//! tableau. SIMEX replaces the implicit solver by a fixed-effort
//! *implicit-step filter* and moves whatever residual the filter leaves
//! behind into the explicit part of the decomposition (the residual
//! balanced decomposition). The local truncation error of the step then
//! no longer depends on how accurately the implicit equation was solved;
//! the filter only has to keep the time-stepping stable.
//!
//! The crate is organized as:
//!
//! * [`tableau`] — joint implicit/explicit ESDIRK Butcher tableaus
//!   (CNH, ARK4(3)6L[2]SA, ARK5(4)8L[2]SA) with validation and order
//!   condition checks,
//! * [`linops`] — sparse matrices, finite-difference stencils, and the
//!   solver kernels filters are made of (Jacobi, Gauss-Seidel/SOR,
//!   alternate-direction tridiagonal, ILU with drop tolerance, CGS),
//! * [`filters`] — the implicit-step-filter abstraction and the filter
//!   catalog,
//! * [`integrator`] — IMEX-RK and SIMEX-RK steppers, the fixed-step
//!   driver with an instability guard, and an adaptive Dormand-Prince
//!   reference solver,
//! * [`problems`] — discretized reaction-advection-diffusion model
//!   systems with closed-form forcing terms,
//! * [`stability`] — generalized stability regions `Ω(A)` computed from
//!   amplification factors on a complex-plane grid.
//!
//! The whole crate is `no_std`-compatible (requires `alloc`); the `std`
//! feature (default) only forwards to the dependencies.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dense;
pub mod filters;
pub mod integrator;
pub mod linops;
pub mod problems;
pub mod scalar;
pub mod stability;
pub mod tableau;

pub use scalar::Scalar;
pub type Complex64 = num_complex::Complex<f64>;
