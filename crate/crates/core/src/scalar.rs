//! The floating-point abstraction every numerical routine is written against.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// A real scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for types that cannot hold a finite `f64` at all.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `x` raised to the largest tolerance this type can actually resolve.
    fn tol(x: f64) -> Self {
        let eps = Self::epsilon() * Self::lit(8.0);
        Self::lit(x).max(eps)
    }

    /// Largest magnitude treated as finite by bracketing searches (`1e300` for `f64`).
    fn overflow_limit() -> Self {
        let cap = Self::max_value() / Self::lit(1e8);
        Self::from_f64(1e300).map_or(cap, |v| v.min(cap))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff<T: Scalar>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs());
    if scale == T::zero() {
        T::zero()
    } else {
        (a - b).abs() / scale
    }
}

/// `n` log-spaced points covering `[lo, hi]` inclusive.
pub fn log_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2 && lo > T::zero() && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::of_usize(n - 1);
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + step * T::of_usize(i)).exp()
            }
        })
        .collect()
}
