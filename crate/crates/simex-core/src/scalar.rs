//! Scalar field abstraction shared by all kernels.
//!
//! Every solver kernel in this crate is generic over [`Scalar`], which is
//! implemented by `f64` and `Complex<f64>`. Real and complex instantiations
//! run the same code path, so a kernel invoked on real data produces the
//! same values whether the scalar field is real or complex.

use alloc::vec::Vec;
use num_complex::ComplexFloat;

/// A double-precision real or complex scalar.
///
/// `abs` returns the modulus as `f64`, `conj` the complex conjugate
/// (identity for `f64`), and `From<f64>` embeds the reals.
pub trait Scalar:
    ComplexFloat<Real = f64>
    + From<f64>
    + core::fmt::Debug
    + core::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Embed a real number into the scalar field.
    ///
    /// (`From<f64>` under a dedicated name: `ComplexFloat` also brings
    /// `NumCast::from` into scope, which makes bare `S::from` ambiguous.)
    fn from_re(x: f64) -> Self {
        <Self as From<f64>>::from(x)
    }
}

impl<T> Scalar for T where
    T: ComplexFloat<Real = f64>
        + From<f64>
        + core::fmt::Debug
        + core::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Max-modulus norm.
pub fn inf_norm<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Euclidean norm.
pub fn two_norm<S: Scalar>(v: &[S]) -> f64 {
    num_traits::Float::sqrt(v.iter().map(|x| x.abs() * x.abs()).sum::<f64>())
}

/// Conjugated dot product `Σ conj(a_i)·b_i` (plain dot product over the reals).
pub fn dot_conj<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + x.conj() * *y;
    }
    acc
}

/// `y ← y + alpha·x`.
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * *xi;
    }
}

/// Lift a real vector into the scalar field.
pub fn from_real_vec<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&x| S::from_re(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;

    #[test]
    fn norms_and_dot_match_real_and_complex() {
        let vr = [3.0f64, -4.0];
        let vc = [Complex64::new(3.0, 0.0), Complex64::new(-4.0, 0.0)];
        assert_eq!(inf_norm(&vr), 4.0);
        assert_eq!(inf_norm(&vc), 4.0);
        assert_eq!(two_norm(&vr), 5.0);
        assert_eq!(two_norm(&vc), 5.0);
        assert_eq!(dot_conj(&vr, &vr), 25.0);
        assert_eq!(dot_conj(&vc, &vc), Complex64::new(25.0, 0.0));
    }

    #[test]
    fn dot_conj_conjugates_left_argument() {
        let a = [Complex64::new(0.0, 1.0)];
        let b = [Complex64::new(0.0, 1.0)];
        assert_eq!(dot_conj(&a, &b), Complex64::new(1.0, 0.0));
    }
}
