//! Model systems: discretized reaction-advection-diffusion problems with
//! closed-form forcing terms.
//!
//! The 1D problems live on the interior nodes of `[0, π]` with zero
//! Dirichlet boundaries and are forced so that
//!
//! ```text
//! u(x, t) = sin(x)·sin(3x − 6πt)
//! ```
//!
//! solves the continuous PDE; initial data samples the exact solution at
//! `t = 0`. The 2D problems are periodic on `[0, π]²`: a diffusion model
//! `dy/dt = zA y` whose matrix has spectrum in `[0, 1)`, and a forced
//! advection-diffusion equation with exact solution
//! `u = exp(−sin(t − 4x₁ − 2x₂))` discretized at fourth order.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] use num_traits::Float;

use crate::integrator::DecomposedSystem;
use crate::linops::{build_stencil, GridPermutation, SparseMatrix, StencilKind};
use crate::linops::StencilKind::*;
use crate::scalar::Scalar;
use crate::Complex64;

// ---------------------------------------------------------------------------
// closed-form solutions and forcings
// ---------------------------------------------------------------------------

/// Exact solution of both 1D problems.
pub fn heat_exact(x: f64, t: f64) -> f64 {
    x.sin() * (3.0 * x - 6.0 * PI * t).sin()
}

/// Forcing `φ = u_t − u_xx` of the 1D heat problem.
pub fn heat_forcing(x: f64, t: f64) -> f64 {
    let b = 3.0 * x - 6.0 * PI * t;
    -6.0 * PI * x.sin() * b.cos() + 10.0 * x.sin() * b.sin() - 6.0 * x.cos() * b.cos()
}

/// Forcing `ψ = u_t + u·u_x − u_xx − (1.1 − u²)u` of the 1D
/// advection-reaction-diffusion problem.
pub fn adv_reac_diff_forcing(x: f64, t: f64) -> f64 {
    let b = 3.0 * x - 6.0 * PI * t;
    let (sx, cx) = (x.sin(), x.cos());
    let (sb, cb) = (b.sin(), b.cos());
    let u = sx * sb;
    let u_t = -6.0 * PI * sx * cb;
    let u_x = cx * sb + 3.0 * sx * cb;
    let u_xx = -10.0 * sx * sb + 6.0 * cx * cb;
    u_t + u * u_x - u_xx - (1.1 - u * u) * u
}

/// Exact solution of the 2D advection-diffusion problem.
pub fn adv_diff_exact(x1: f64, x2: f64, t: f64) -> f64 {
    (-((t - 4.0 * x1 - 2.0 * x2).sin())).exp()
}

/// The unit advection velocity `(1/2, √3/2)`.
pub const ADV_VELOCITY: (f64, f64) = (0.5, 0.866_025_403_784_438_6);

/// Diffusion coefficient of the 2D advection-diffusion problem.
pub const ADV_DIFFUSIVITY: f64 = 0.3;

/// Forcing `ψ = u_t + v·∇u − 0.3Δu` of the 2D advection-diffusion problem,
/// differentiated in closed form: with `w = t − 4x₁ − 2x₂`,
/// `ψ = e^{−sin w}·[(1 + √3)cos w − 6 sin w − 6 cos²w]`.
pub fn adv_diff_forcing(x1: f64, x2: f64, t: f64) -> f64 {
    let w = t - 4.0 * x1 - 2.0 * x2;
    let (sw, cw) = (w.sin(), w.cos());
    (-sw).exp() * ((1.0 + 3.0f64.sqrt()) * cw - 6.0 * sw - 6.0 * cw * cw)
}

// ---------------------------------------------------------------------------
// 1D problems
// ---------------------------------------------------------------------------

/// Interior nodes `x_j = j·π/N`, `j = 1..N−1`.
fn interior_nodes(n: usize) -> Vec<f64> {
    let dx = PI / n as f64;
    (1..n).map(|j| j as f64 * dx).collect()
}

/// Forced 1D heat equation `u_t = u_xx + φ` on `N − 1` interior nodes:
/// implicit part `f(y) = L·y` (second-order Laplacian), explicit part
/// `f̂(t) = φ(t)` sampled at the nodes.
pub fn forced_heat_1d(n: usize) -> DecomposedSystem<f64> {
    assert!(n >= 3);
    let dx = PI / n as f64;
    let l = build_stencil::<f64>(Laplacian1dO2Dirichlet, n, dx).expect("n >= 3");
    let nodes = interior_nodes(n);
    let forcing_nodes = nodes.clone();
    let f_expl = Box::new(move |_y: &[f64], t: f64, out: &mut [f64]| {
        for (o, &x) in out.iter_mut().zip(&forcing_nodes) {
            *o = heat_forcing(x, t);
        }
    });
    let exact = Box::new(move |t: f64| nodes.iter().map(|&x| heat_exact(x, t)).collect());
    DecomposedSystem::new_linear("forced_heat_1d", l, f_expl)
        .with_grid_permutation(GridPermutation::identity(n - 1))
        .with_exact_solution(exact)
}

/// Nonlinear 1D advection-reaction-diffusion
/// `u_t + u·u_x = u_xx + (1.1 − u²)u + ψ`, centered second-order
/// differences. The implicit part carries everything but the forcing:
/// `f(y) = L·y + N(y)` with exact analytic Jacobian; `f̂(t) = ψ(t)`.
pub fn adv_reac_diff_1d(n: usize) -> DecomposedSystem<f64> {
    assert!(n >= 3);
    let dx = PI / n as f64;
    let dim = n - 1;
    let l = build_stencil::<f64>(Laplacian1dO2Dirichlet, n, dx).expect("n >= 3");
    let d1 = build_stencil::<f64>(Advection1dO2CenteredDirichlet, n, dx).expect("n >= 3");
    let nodes = interior_nodes(n);

    let (lf, d1f) = (l.clone(), d1.clone());
    let f_impl = Box::new(move |y: &[f64], _t: f64, out: &mut [f64]| {
        lf.matvec_into(y, out);
        let uy = d1f.matvec(y);
        for i in 0..y.len() {
            out[i] += -y[i] * uy[i] + (1.1 - y[i] * y[i]) * y[i];
        }
    });

    let (ld, d1d) = (l.to_dense(), d1.to_dense());
    let d1j = d1.clone();
    let jacobian = Box::new(move |y: &[f64], _t: f64| {
        let uy = d1j.matvec(y);
        crate::dense::DenseMatrix::from_fn(dim, dim, |i, j| {
            let mut v = ld[(i, j)] - y[i] * d1d[(i, j)];
            if i == j {
                v += -uy[i] + 1.1 - 3.0 * y[i] * y[i];
            }
            v
        })
    });

    let forcing_nodes = nodes.clone();
    let f_expl = Box::new(move |_y: &[f64], t: f64, out: &mut [f64]| {
        for (o, &x) in out.iter_mut().zip(&forcing_nodes) {
            *o = adv_reac_diff_forcing(x, t);
        }
    });
    let exact = Box::new(move |t: f64| nodes.iter().map(|&x| heat_exact(x, t)).collect());
    DecomposedSystem::new_nonlinear("adv_reac_diff_1d", dim, f_impl, Some(jacobian), f_expl)
        .with_exact_solution(exact)
}

// ---------------------------------------------------------------------------
// 2D diffusion model (stability scans)
// ---------------------------------------------------------------------------

/// Distinct grid nodes per direction used by [`model_matrix`]: the largest
/// odd number ≤ `n`.
///
/// An odd node count keeps the checkerboard mode (discrete eigenvalue
/// exactly 1 after normalization) off the periodic grid, so the spectrum
/// of `A` stays inside `[0, 1)` and its largest eigenvalue approaches 1
/// at rate `O(n⁻²)`.
pub fn model_grid_nodes(n: usize) -> usize {
    if n % 2 == 0 { n - 1 } else { n }
}

/// The normalized diffusion matrix `A = −⅛·δx²·Δ` on a periodic grid with
/// [`model_grid_nodes`]`(n)` nodes per direction and the five-point
/// Laplacian: symmetric, spectrum in `[0, 1)` with the zero eigenvalue on
/// constants.
pub fn model_matrix<S: Scalar>(n: usize) -> SparseMatrix<S> {
    assert!(n >= 4);
    let m = model_grid_nodes(n);
    let dx = PI / m as f64;
    let lap = build_stencil::<S>(Laplacian2dO2FivePointPeriodic, m, dx).expect("m >= 3");
    lap.scale(S::from_re(-0.125 * dx * dx))
}

/// Map a continuous diffusion coefficient `λ` to the model parameter
/// `z = 8λ/δx²`.
pub fn z_from_lambda(lambda: Complex64, dx: f64) -> Complex64 {
    lambda * (8.0 / (dx * dx))
}

/// The stability-scan model `dy/dt = zA·y` with the all-implicit
/// proto-decomposition (`f = zAy`, `f̂ = 0`).
pub fn model_2d<S: Scalar>(z: S, n: usize) -> DecomposedSystem<S> {
    let a = model_matrix::<S>(n);
    let m = model_grid_nodes(n);
    let f_expl = Box::new(move |_y: &[S], _t: f64, out: &mut [S]| {
        for o in out.iter_mut() {
            *o = S::zero();
        }
    });
    DecomposedSystem::new_linear("model_2d", a.scale(z), f_expl)
        .with_grid_permutation(GridPermutation::transpose_2d(m))
}

// ---------------------------------------------------------------------------
// 2D advection-diffusion
// ---------------------------------------------------------------------------

/// Forced 2D advection-diffusion `u_t + v·∇u = 0.3Δu + ψ` on a periodic
/// `N × N` grid with fourth-order stencils (nine-point cross Laplacian).
/// The proto-decomposition treats diffusion implicitly and advection plus
/// forcing explicitly.
pub fn adv_diff_2d(n: usize) -> DecomposedSystem<f64> {
    assert!(n >= 8);
    let dx = PI / n as f64;
    let lap = build_stencil::<f64>(Laplacian2dO4Cross9Periodic, n, dx).expect("n >= 5");
    let diffusion = lap.scale(ADV_DIFFUSIVITY);
    let d1 = build_stencil::<f64>(
        StencilKind::Gradient2dO4Periodic { axis: crate::linops::Axis::X1 },
        n,
        dx,
    )
    .expect("n >= 5");
    let d2 = build_stencil::<f64>(
        StencilKind::Gradient2dO4Periodic { axis: crate::linops::Axis::X2 },
        n,
        dx,
    )
    .expect("n >= 5");
    // explicit part: −v·∇u + ψ
    let mut trips = Vec::new();
    for i in 0..n * n {
        let (c1, v1) = d1.row(i);
        for (c, v) in c1.iter().zip(v1) {
            trips.push((i, *c, -ADV_VELOCITY.0 * *v));
        }
        let (c2, v2) = d2.row(i);
        for (c, v) in c2.iter().zip(v2) {
            trips.push((i, *c, -ADV_VELOCITY.1 * *v));
        }
    }
    let advection = SparseMatrix::from_triplets(n * n, &trips);

    let f_expl = Box::new(move |y: &[f64], t: f64, out: &mut [f64]| {
        advection.matvec_into(y, out);
        for i in 0..n {
            let x1 = i as f64 * dx;
            for j in 0..n {
                let x2 = j as f64 * dx;
                out[i * n + j] += adv_diff_forcing(x1, x2, t);
            }
        }
    });
    let exact = Box::new(move |t: f64| {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(adv_diff_exact(i as f64 * dx, j as f64 * dx, t));
            }
        }
        out
    });
    DecomposedSystem::new_linear("adv_diff_2d", diffusion, f_expl)
        .with_grid_permutation(GridPermutation::transpose_2d(n))
        .with_exact_solution(exact)
}

/// Discrete L² norm `sqrt(δx² Σ eᵢ²)` used for 2D grid errors.
pub fn discrete_l2_norm(v: &[f64], dx: f64) -> f64 {
    (dx * dx * v.iter().map(|e| e * e).sum::<f64>()).sqrt()
}
