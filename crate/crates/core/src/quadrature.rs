//! Adaptive Gauss–Kronrod (7/15) quadrature and the dyadic tail test for improper
//! integrals at the origin.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Endpoint ratio below which [`integrate`] switches to `ε = b·e^{−u}`.
pub const LOG_SUBSTITUTION_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_intervals: usize,
}

impl<T: Scalar> QuadOptions<T> {
    pub fn relative(rel_tol: T) -> Self {
        Self {
            rel_tol: rel_tol.max(T::epsilon() * T::lit(50.0)),
            abs_tol: T::zero(),
            max_intervals: 2000,
        }
    }
}

impl<T: Scalar> Default for QuadOptions<T> {
    fn default() -> Self {
        Self::relative(T::lit(1e-9))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub abs_error: T,
    pub intervals: usize,
    pub converged: bool,
}

/// One Kronrod panel: returns `(K15, |K15 − G7|)`.
pub fn kronrod15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Result<(T, T)> {
    let half = T::lit(0.5);
    let center = (a + b) * half;
    let half_len = (b - a) * half;
    let fc = f(center);
    check(fc, center)?;
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half_len * T::lit(x);
        let (xl, xr) = (center - dx, center + dx);
        let (fl, fr) = (f(xl), f(xr));
        check(fl, xl)?;
        check(fr, xr)?;
        kron = kron + (fl + fr) * T::lit(w);
        if j % 2 == 1 {
            gauss = gauss + (fl + fr) * T::lit(WG[j / 2]);
        }
    }
    Ok((kron * half_len, ((kron - gauss) * half_len).abs()))
}

fn check<T: Scalar>(v: T, at: T) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { at: at.as_f64() })
    }
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    err: T,
}

impl<T: Scalar> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T: Scalar> Eq for Panel<T> {}
impl<T: Scalar> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive integration on `[a, b]`: the panel with the largest error estimate is
/// split until the summed estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_plain<T, F>(f: F, a: T, b: T, opts: &QuadOptions<T>) -> Result<Integral<T>>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    if a == b {
        return Ok(Integral { value: T::zero(), abs_error: T::zero(), intervals: 0, converged: true });
    }
    if a > b {
        let r = integrate_plain(f, b, a, opts)?;
        return Ok(Integral { value: -r.value, ..r });
    }
    let (value, err) = kronrod15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, err });
    let (mut total, mut total_err) = (value, err);
    let half = T::lit(0.5);
    let floor = T::epsilon() * T::lit(50.0);
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target || total_err <= floor * total.abs() {
            return Ok(Integral { value: total, abs_error: total_err, intervals: heap.len(), converged: true });
        }
        if heap.len() >= opts.max_intervals {
            return Ok(Integral { value: total, abs_error: total_err, intervals: heap.len(), converged: false });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = worst.a + (worst.b - worst.a) * half;
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in this precision.
            heap.push(Panel { err: T::zero(), ..worst });
            total_err = heap.iter().fold(T::zero(), |s, p| s + p.err);
            continue;
        }
        let (lv, le) = kronrod15(&f, worst.a, mid)?;
        let (rv, re) = kronrod15(&f, mid, worst.b)?;
        total = total - worst.value + lv + rv;
        total_err = total_err - worst.err + le + re;
        heap.push(Panel { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, err: re });
        // Re-sum periodically; the running difference drifts when errors span many decades.
        if heap.len() % 64 == 0 {
            total = heap.iter().fold(T::zero(), |s, p| s + p.value);
            total_err = heap.iter().fold(T::zero(), |s, p| s + p.err);
        }
    }
}

/// Like [`integrate_plain`], but for `0 < a < b` with `a/b` below
/// [`LOG_SUBSTITUTION_RATIO`] integrates `f(b·e^{−u})·b·e^{−u}` over `u ∈ [0, ln(b/a)]`.
pub fn integrate<T, F>(f: F, a: T, b: T, opts: &QuadOptions<T>) -> Result<Integral<T>>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    if a > T::zero() && b > a && a / b < T::lit(LOG_SUBSTITUTION_RATIO) {
        let span = (b / a).ln();
        integrate_plain(
            |u: T| {
                let eps = b * (-u).exp();
                f(eps) * eps
            },
            T::zero(),
            span,
            opts,
        )
    } else {
        integrate_plain(f, a, b, opts)
    }
}

/// Parameters of the dyadic tail test for `∫_0^top f`.
#[derive(Debug, Clone, Copy)]
pub struct TailOptions<T> {
    /// Number of dyadic pieces `[top·2^{−j−1}, top·2^{−j}]` examined.
    pub max_halvings: usize,
    /// Consecutive ratios that must agree before a verdict.
    pub window: usize,
    /// Ratios at or above `1 − ratio_tol` count as non-decaying.
    pub ratio_tol: T,
    pub quad: QuadOptions<T>,
}

impl<T: Scalar> Default for TailOptions<T> {
    fn default() -> Self {
        Self { max_halvings: 60, window: 10, ratio_tol: T::lit(1e-6), quad: QuadOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TailOutcome<T> {
    /// Certified convergent; `value` includes the geometric extrapolation `tail`.
    Converged { value: T, tail: T, pieces: usize },
    /// Successive dyadic pieces stopped decaying for a full window.
    Diverged { partial: T, pieces: usize },
    Undecided { partial: T },
}

impl<T: Scalar> TailOutcome<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            TailOutcome::Converged { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, TailOutcome::Diverged { .. })
    }
}

fn piece_ratio<T: Scalar>(prev: T, next: T) -> T {
    if prev == T::zero() {
        if next == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        next / prev
    }
}

/// Integrates `f` over `(0, top]` piece by dyadic piece and classifies the tail.
///
/// Divergence: `window` consecutive ratios of successive pieces at or above `1 − ratio_tol`.
/// Convergence: the last `window` ratios all below that threshold; the remainder is
/// extrapolated geometrically from the last ratio. The scan stops early once the
/// extrapolated remainder is negligible against the requested quadrature tolerance.
pub fn dyadic_tail<T, F>(f: F, top: T, opts: &TailOptions<T>) -> Result<TailOutcome<T>>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    let half = T::lit(0.5);
    let threshold = T::one() - opts.ratio_tol;
    let mut pieces: Vec<T> = Vec::with_capacity(opts.max_halvings);
    let mut sum = T::zero();
    let mut hi = top;
    for _ in 0..opts.max_halvings {
        let lo = hi * half;
        let piece = integrate_plain(&f, lo, hi, &opts.quad)?.value;
        sum = sum + piece;
        pieces.push(piece);
        hi = lo;
        let n = pieces.len();
        if n <= opts.window {
            continue;
        }
        let ratios: Vec<T> = (n - opts.window..n).map(|j| piece_ratio(pieces[j - 1], pieces[j])).collect();
        if ratios.iter().all(|&q| q >= threshold) {
            return Ok(TailOutcome::Diverged { partial: sum, pieces: n });
        }
        if ratios.iter().all(|&q| q < threshold) {
            let last = *ratios.last().expect("window is nonempty");
            let tail = piece * last / (T::one() - last);
            if tail <= opts.quad.rel_tol * T::lit(1e-3) * sum.abs() {
                return Ok(TailOutcome::Converged { value: sum + tail, tail, pieces: n });
            }
        }
    }
    let n = pieces.len();
    if n > opts.window {
        let ratios: Vec<T> = (n - opts.window..n).map(|j| piece_ratio(pieces[j - 1], pieces[j])).collect();
        if ratios.iter().all(|&q| q < threshold) {
            let last = *ratios.last().expect("window is nonempty");
            let tail = pieces[n - 1] * last / (T::one() - last);
            return Ok(TailOutcome::Converged { value: sum + tail, tail, pieces: n });
        }
    }
    Ok(TailOutcome::Undecided { partial: sum })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &QuadOptions::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn log_substitution_handles_wide_ranges() {
        // ∫_{1e-8}^{1} dx/x = ln(1e8)
        let r = integrate(|x: f64| 1.0 / x, 1e-8, 1.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 1e8f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate_plain(|x: f64| x, 1.0, 0.0, &QuadOptions::default()).unwrap();
        assert!((r.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn nonfinite_integrand_is_an_error() {
        let err = integrate_plain(|_x: f64| f64::NAN, 0.0, 1.0, &QuadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn tail_test_classifies_power_laws() {
        let opts = TailOptions::default();
        // ∫_0^1 x^{-1/2} = 2
        match dyadic_tail(|x: f64| x.powf(-0.5), 1.0, &opts).unwrap() {
            TailOutcome::Converged { value, .. } => assert!((value - 2.0).abs() < 1e-9),
            other => panic!("expected convergence, got {other:?}"),
        }
        assert!(dyadic_tail(|x: f64| 1.0 / x, 1.0, &opts).unwrap().is_diverged());
        assert!(dyadic_tail(|x: f64| x.powi(-2), 1.0, &opts).unwrap().is_diverged());
        // Constant integrand on a finite interval.
        assert_eq!(dyadic_tail(|_x: f64| 3.0, 2.0, &opts).unwrap().value().map(|v| (v - 6.0).abs() < 1e-10), Some(true));
    }
}
