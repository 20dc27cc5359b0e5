//! Bracketing by doubling/halving, then bisection on a monotone predicate.
//!
//! Every search here is phrased as "find the boundary of `{x : pred(x)}`" where the
//! predicate is monotone (false below the boundary, true above). That covers root
//! finding on monotone maps as well as the infimum conventions used by the level
//! solvers, and never needs a sign change of a continuous function.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_BISECTIONS: usize = 400;

/// Narrows `[lo, hi]` (with `!pred(lo)` and `pred(hi)`) until `hi - lo <= rel_tol * |hi|`.
///
/// Returns `(lo, hi)`. Brackets spanning more than a factor of four on the positive axis
/// are split at the geometric mean so that bracket width shrinks in ratio, not in absolute
/// terms.
pub fn bisect<T, F>(mut lo: T, mut hi: T, rel_tol: T, mut pred: F) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> bool,
{
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
        let mid = if lo > T::zero() && hi > four * lo {
            lo.sqrt() * hi.sqrt()
        } else {
            lo + (hi - lo) * half
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Doubles `start` until `pred` holds; returns `(last_false, first_true)`.
pub fn expand_up<T, F>(start: T, limit: T, mut pred: F) -> Result<(T, T)>
where
    T: Scalar,
    F: FnMut(T) -> bool,
{
    debug_assert!(start > T::zero());
    let two = T::lit(2.0);
    let mut prev = start;
    let mut x = start;
    loop {
        if pred(x) {
            return Ok((prev, x));
        }
        if x > limit {
            return Err(Error::OverflowRange { limit: limit.as_f64() });
        }
        prev = x;
        x = x * two;
    }
}

/// Halves `start` until `pred` fails; returns `(last_false, first_true)`, or `None` once
/// the probe drops below `floor` with `pred` still holding.
pub fn expand_down<T, F>(start: T, floor: T, mut pred: F) -> Option<(T, T)>
where
    T: Scalar,
    F: FnMut(T) -> bool,
{
    let half = T::lit(0.5);
    let mut prev = start;
    let mut x = start;
    loop {
        if !pred(x) {
            return Some((x, prev));
        }
        if x < floor {
            return None;
        }
        prev = x;
        x = x * half;
    }
}

/// Solves `f(x) = y` for a nondecreasing `f` on `[0, ∞)` with `f(0) = 0`.
///
/// `y = 0` maps to `0` exactly.
pub fn invert_increasing<T, F>(f: F, y: T, rel_tol: T) -> Result<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    if y < T::zero() || y.is_nan() {
        return Err(Error::InvalidParameter(format!("cannot invert at y = {y}")));
    }
    if y == T::zero() {
        return Ok(T::zero());
    }
    let pred = |x: T| f(x) >= y;
    let one = T::one();
    let (lo, hi) = if pred(one) {
        match expand_down(one, T::min_positive_value().sqrt(), pred) {
            Some(b) => b,
            None => return Ok(T::zero()),
        }
    } else {
        expand_up(one, T::overflow_limit(), pred)?
    };
    let (lo, hi) = bisect(lo, hi, rel_tol, pred);
    Ok(closest(&f, y, lo, hi))
}

fn closest<T: Scalar, F: Fn(T) -> T>(f: &F, y: T, lo: T, hi: T) -> T {
    if (f(lo) - y).abs() < (f(hi) - y).abs() {
        lo
    } else {
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let (lo, hi) = bisect(1.0_f64, 2.0, 1e-14, |x| x * x >= 2.0);
        assert!((hi - 2f64.sqrt()).abs() < 1e-13);
        assert!(lo <= hi);
    }

    #[test]
    fn geometric_split_on_wide_bracket() {
        let target = 3.7e-200;
        let (_, hi) = bisect(1e-300_f64, 1.0, 1e-12, |x| x >= target);
        assert!(((hi - target) / target).abs() < 1e-11);
    }

    #[test]
    fn inverse_of_cube() {
        let x = invert_increasing(|x: f64| x * x * x / 3.0, 9.0, 1e-14).unwrap();
        assert!((x - 3.0).abs() < 1e-12);
        assert_eq!(invert_increasing(|x: f64| x * x, 0.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn overflow_is_reported() {
        let err = invert_increasing(|x: f64| x.ln_1p(), 1e308, 1e-12).unwrap_err();
        assert!(matches!(err, Error::OverflowRange { .. }));
    }

    #[test]
    fn works_in_single_precision() {
        let x = invert_increasing(|x: f32| x * x / 2.0, 2.0, f32::tol(1e-12)).unwrap();
        assert!((x - 2.0).abs() < 1e-5);
    }
}
