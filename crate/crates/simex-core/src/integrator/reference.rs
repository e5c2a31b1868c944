//! Adaptive Dormand-Prince 5(4) reference solver.
//!
//! Used as the trusted oracle when a model problem has no closed-form
//! solution at the ODE level: the full right-hand side `f + f̂` is
//! integrated with tight tolerances and PI step-size control. FSAL, seven
//! stages, six evaluations per accepted step.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] use num_traits::Float;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceError {
    /// Step-size control drove `h` below the representable resolution.
    StepSizeUnderflow { t: f64 },
    MaxStepsExceeded,
}

impl core::fmt::Display for ReferenceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ReferenceError::StepSizeUnderflow { t } => {
                write!(f, "step size underflow at t = {t}")
            }
            ReferenceError::MaxStepsExceeded => write!(f, "maximum step count exceeded"),
        }
    }
}

impl core::error::Error for ReferenceError {}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// Fifth-order weights (row 7 of A; FSAL).
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Embedded fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 10_000_000;

/// Integrate `dy/dt = rhs(y, t)` from `t0` to `t_end` and return the state
/// at `t_end`, keeping the local error below `atol + rtol·|y|` per
/// component.
pub fn reference_solve<S: Scalar>(
    rhs: &(dyn Fn(&[S], f64, &mut [S]) + '_),
    y0: &[S],
    t0: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<Vec<S>, ReferenceError> {
    assert!(t_end > t0, "reference solver integrates forward");
    let n = y0.len();
    let span = t_end - t0;
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<S>> = (0..7).map(|_| vec![S::zero(); n]).collect();
    rhs(&y, t, &mut k[0]);

    // conservative initial step; the controller takes over immediately
    let f_norm = crate::scalar::inf_norm(&k[0]);
    let y_norm = crate::scalar::inf_norm(&y);
    let mut h = (0.01 * (y_norm + atol) / (f_norm + atol)).min(span / 10.0);
    if !(h > 0.0) || !h.is_finite() {
        h = span * 1e-6;
    }

    let safety = 0.9;
    let alpha = 0.17;
    let beta = 0.04;
    let mut err_old: f64 = 1e-4;
    let mut y_stage = vec![S::zero(); n];

    for _ in 0..MAX_STEPS {
        if t >= t_end {
            return Ok(y);
        }
        h = h.min(t_end - t);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(ReferenceError::StepSizeUnderflow { t });
        }
        for i in 1..7 {
            for (js, ys) in y_stage.iter_mut().enumerate() {
                let mut acc = y[js];
                for (j, kj) in k.iter().enumerate().take(i) {
                    let a = A[i - 1][j];
                    if a != 0.0 {
                        acc = acc + S::from_re(h * a) * kj[js];
                    }
                }
                *ys = acc;
            }
            let (head, tail) = k.split_at_mut(i);
            let _ = head;
            rhs(&y_stage, t + C[i] * h, &mut tail[0]);
        }
        // stage 7 input equals the fifth-order solution (row 6 of A = B5)
        let y_new = y_stage.clone();

        let mut err_sq = 0.0;
        for j in 0..n {
            let mut e = S::zero();
            for (i, ki) in k.iter().enumerate() {
                let d = B5[i] - B4[i];
                if d != 0.0 {
                    e = e + S::from_re(h * d) * ki[j];
                }
            }
            let scale = atol + rtol * y[j].abs().max(y_new[j].abs());
            let q = e.abs() / scale;
            err_sq += q * q;
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y = y_new;
            k.swap(0, 6); // FSAL: k7 = f(y_new, t+h) becomes next k1
            let fac = (safety * err.max(1e-16).powf(-alpha) * err_old.powf(beta)).clamp(0.2, 5.0);
            err_old = err.max(1e-10);
            h *= fac;
        } else {
            let fac =
                (safety * err.powf(-alpha) * err_old.powf(beta)).clamp(0.2, 5.0).min(1.0 / 1.1);
            h *= fac;
        }
    }
    Err(ReferenceError::MaxStepsExceeded)
}
