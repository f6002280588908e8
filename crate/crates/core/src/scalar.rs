use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the evaluators and reductions are generic over.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the supported float types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }

    /// Relative tolerance used by metric validation; never finer than the
    /// type's own resolution.
    #[inline]
    fn validation_tol() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `1 - (1 - p)^k`, the probability that at least one of `k` independent
/// Bernoulli(`p`) trials succeeds.
pub fn hit_probability<S: Scalar>(p: S, k: usize) -> S {
    if k == 0 || p <= S::zero() {
        return S::zero();
    }
    if p >= S::one() {
        return S::one();
    }
    -(S::from_usize_lossy(k) * (-p).ln_1p()).exp_m1()
}

/// `a <= b` up to a relative tolerance.
#[inline]
pub fn le_rel<S: Scalar>(a: S, b: S, rel: S) -> bool {
    a <= b + rel * (S::one() + a.abs().max(b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_probability_matches_power_form() {
        for &p in &[0.001, 0.13, 0.5, 0.999] {
            for k in 1..40 {
                let direct = 1.0 - (1.0f64 - p).powi(k as i32);
                assert!((hit_probability(p, k) - direct).abs() < 1e-14);
            }
        }
        assert_eq!(hit_probability(1.0f64, 3), 1.0);
        assert_eq!(hit_probability(0.0f64, 3), 0.0);
        assert_eq!(hit_probability(0.5f64, 0), 0.0);
    }

    #[test]
    fn f32_tolerance_is_not_below_resolution() {
        assert!(f32::validation_tol() > 1e-9);
        assert_eq!(f64::validation_tol(), 1e-9);
    }
}
