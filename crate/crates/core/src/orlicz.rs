//! Orlicz (Young) functions, their conjugates and inverses, and Luxemburg norms.
//!
//! The built-in family is `φ(x) = x^p/p` with the analytic conjugate `x^q/q`,
//! `1/p + 1/q = 1`. Any other convex `φ` is supplied through an evaluator and a
//! right-derivative; its conjugate `ψ(x) = sup_{y≥0}(xy − φ(y))` is then evaluated per
//! query point by locating the maximizer, the point where `φ′` crosses `x`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::roots::{bisect, expand_down, expand_up, invert_increasing};
use crate::scalar::{log_grid, Scalar};

type RealMap<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Points in the construction-time convexity probe.
pub const PROBE_POINTS: usize = 64;

#[derive(Clone)]
enum Repr<T> {
    Power { p: T },
    Custom { eval: RealMap<T>, deriv: RealMap<T> },
    /// Numeric conjugate of `base`.
    Conjugate { base: Arc<OrliczFunction<T>> },
}

/// A convex, strictly increasing `φ: [0,∞) → [0,∞)` with `φ(0) = 0`, `φ(x)/x → 0` at the
/// origin and `→ ∞` at infinity.
#[derive(Clone)]
pub struct OrliczFunction<T> {
    repr: Repr<T>,
    /// Relative tolerance for the maximizer and inverse searches.
    search_tol: T,
}

impl<T: Scalar> fmt::Debug for OrliczFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrliczFunction({self})")
    }
}

impl<T: Scalar> fmt::Display for OrliczFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Power { p } => write!(f, "power:{p}"),
            Repr::Custom { .. } => write!(f, "custom"),
            Repr::Conjugate { base } => write!(f, "conjugate({base})"),
        }
    }
}

/// Growth descriptor of an Orlicz function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth<T> {
    Power(T),
    General,
}

impl<T: Scalar> OrliczFunction<T> {
    /// `φ(x) = x^p/p`, `p > 1`.
    pub fn power(p: T) -> Result<Self> {
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::InvalidOrlicz(format!("power exponent must be finite and > 1, got {p}")));
        }
        Ok(Self { repr: Repr::Power { p }, search_tol: T::tol(1e-12) })
    }

    /// A user-supplied `φ` given by its evaluator and right-derivative.
    ///
    /// Convexity and monotonicity are checked on a fixed log-spaced probe grid.
    pub fn custom<E, D>(eval: E, deriv: D) -> Result<Self>
    where
        E: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> T + Send + Sync + 'static,
    {
        let phi = Self { repr: Repr::Custom { eval: Arc::new(eval), deriv: Arc::new(deriv) }, search_tol: T::tol(1e-12) };
        phi.validate()?;
        Ok(phi)
    }

    /// Overrides the relative tolerance of the numeric searches (default `1e-12`).
    pub fn with_search_tol(mut self, tol: T) -> Self {
        self.search_tol = tol.max(T::epsilon());
        self
    }

    pub fn search_tol(&self) -> T {
        self.search_tol
    }

    /// The same function with every analytic fast path removed.
    pub fn numeric(&self) -> Self {
        match &self.repr {
            Repr::Power { p } => {
                let (p1, p2) = (*p, *p);
                Self {
                    repr: Repr::Custom {
                        eval: Arc::new(move |x: T| x.powf(p1) / p1),
                        deriv: Arc::new(move |x: T| x.powf(p2 - T::one())),
                    },
                    search_tol: self.search_tol,
                }
            }
            _ => self.clone(),
        }
    }

    pub fn growth(&self) -> Growth<T> {
        match self.repr {
            Repr::Power { p } => Growth::Power(p),
            _ => Growth::General,
        }
    }

    pub fn power_exponent(&self) -> Option<T> {
        match self.growth() {
            Growth::Power(p) => Some(p),
            Growth::General => None,
        }
    }

    /// The analytic conjugate, when one is known.
    pub fn analytic_conjugate(&self) -> Option<Self> {
        match self.repr {
            Repr::Power { p } => {
                let q = p / (p - T::one());
                Some(Self { repr: Repr::Power { p: q }, search_tol: self.search_tol })
            }
            _ => None,
        }
    }

    pub fn eval(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        match &self.repr {
            Repr::Power { p } => x.powf(*p) / *p,
            Repr::Custom { eval, .. } => eval(x),
            Repr::Conjugate { base } => match base.maximizer(x) {
                Ok(y) => conj_value(base, x, y),
                Err(_) => T::infinity(),
            },
        }
    }

    /// `φ(x)`, reporting a failed maximizer search instead of returning `+∞`.
    pub fn try_eval(&self, x: T) -> Result<T> {
        match &self.repr {
            Repr::Conjugate { base } if x > T::zero() => Ok(conj_value(base, x, base.maximizer(x)?)),
            _ => Ok(self.eval(x)),
        }
    }

    /// Right-derivative `φ′(x)`.
    pub fn derivative(&self, x: T) -> T {
        let x = x.max(T::zero());
        match &self.repr {
            Repr::Power { p } => x.powf(*p - T::one()),
            Repr::Custom { deriv, .. } => deriv(x),
            Repr::Conjugate { base } => {
                if x == T::zero() {
                    T::zero()
                } else {
                    base.maximizer(x).unwrap_or(T::infinity())
                }
            }
        }
    }

    /// `φ⁻¹(y)`; analytic for the power family, bracketing plus bisection otherwise.
    pub fn inverse(&self, y: T) -> Result<T> {
        if y < T::zero() || y.is_nan() {
            return Err(Error::InvalidParameter(format!("inverse needs y >= 0, got {y}")));
        }
        if y == T::zero() {
            return Ok(T::zero());
        }
        match self.repr {
            Repr::Power { p } => Ok((p * y).powf(p.recip())),
            _ => {
                if y.is_infinite() {
                    return Err(Error::OverflowRange { limit: T::overflow_limit().as_f64() });
                }
                invert_increasing(|x| self.eval(x), y, self.search_tol)
            }
        }
    }

    /// The conjugate `ψ(x) = sup_{y≥0}(xy − φ(y))`.
    ///
    /// Returns the analytic conjugate when one is known; otherwise a numeric conjugate
    /// whose derivative is the maximizer, so that conjugating it again stays numeric.
    pub fn conjugate(&self) -> Result<Self> {
        if let Some(c) = self.analytic_conjugate() {
            return Ok(c);
        }
        self.validate()?;
        let psi = Self { repr: Repr::Conjugate { base: Arc::new(self.clone()) }, search_tol: self.search_tol };
        psi.validate()?;
        Ok(psi)
    }

    /// The `y ≥ 0` maximizing `xy − φ(y)`: the crossing point of `φ′` with `x`.
    pub fn maximizer(&self, x: T) -> Result<T> {
        if x <= T::zero() {
            return Ok(T::zero());
        }
        let pred = |y: T| self.derivative(y) >= x;
        let one = T::one();
        let bracket = if pred(one) {
            match expand_down(one, T::min_positive_value().sqrt(), pred) {
                Some(b) => b,
                None => return Ok(T::zero()),
            }
        } else {
            expand_up(one, T::overflow_limit(), pred)?
        };
        let (lo, hi) = bisect(bracket.0, bracket.1, self.search_tol, pred);
        // On a plateau of φ′ both ends are maximizers; prefer the larger objective.
        let (vl, vh) = (x * lo - self.eval(lo), x * hi - self.eval(hi));
        Ok(if vl > vh { lo } else { hi })
    }

    /// `φ(x) + ψ(y) − xy`, nonnegative by the Young inequality.
    pub fn young_gap(&self, x: T, y: T) -> Result<T> {
        let psi = self.conjugate()?;
        Ok(self.eval(x) + psi.try_eval(y)? - x * y)
    }

    /// Secant convexity and strict monotonicity on the probe grid `[1e-6, 1e6]`.
    ///
    /// Probe points where `φ` is no longer finite end the scan.
    pub fn validate(&self) -> Result<()> {
        if self.eval(T::zero()) != T::zero() {
            return Err(Error::InvalidOrlicz("phi(0) must be 0".into()));
        }
        let grid = log_grid(T::lit(1e-6), T::lit(1e6), PROBE_POINTS);
        let mut pts: Vec<(T, T)> = vec![(T::zero(), T::zero())];
        for &x in &grid {
            let v = self.eval(x);
            if !v.is_finite() {
                break;
            }
            pts.push((x, v));
        }
        let slack = T::tol(1e-9);
        for w in pts.windows(2) {
            if !(w[1].1 > w[0].1) {
                return Err(Error::InvalidOrlicz(format!("not strictly increasing near x = {}", w[1].0)));
            }
        }
        for w in pts.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            if s1 > s2 * (T::one() + slack) {
                return Err(Error::NonConvexInput { at: w[1].0.as_f64() });
            }
        }
        Ok(())
    }
}

fn conj_value<T: Scalar>(base: &OrliczFunction<T>, x: T, y: T) -> T {
    (x * y - base.eval(y)).max(T::zero())
}

/// Observations of `|X|` with optional probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample<T> {
    values: Vec<T>,
    weights: Option<Vec<T>>,
}

impl<T: Scalar> EmpiricalSample<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empirical sample is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("empirical sample has non-finite values".into()));
        }
        Ok(Self { values, weights: None })
    }

    pub fn weighted(values: Vec<T>, weights: Vec<T>) -> Result<Self> {
        let mut s = Self::new(values)?;
        if weights.len() != s.values.len() {
            return Err(Error::DimensionMismatch { expected: s.values.len(), got: weights.len() });
        }
        if weights.iter().any(|w| !(*w >= T::zero())) {
            return Err(Error::InvalidParameter("weights must be nonnegative".into()));
        }
        let total = weights.iter().fold(T::zero(), |a, &w| a + w);
        if (total - T::one()).abs() > T::tol(1e-12) * T::of_usize(weights.len()) {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        s.weights = Some(weights);
        Ok(s)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ wᵢ f(|vᵢ|)`, equal weights when none are given.
    pub fn expectation<F: Fn(T) -> T>(&self, f: F) -> T {
        match &self.weights {
            Some(w) => self.values.iter().zip(w).fold(T::zero(), |acc, (&v, &wi)| acc + wi * f(v.abs())),
            None => {
                let sum = self.values.iter().fold(T::zero(), |acc, &v| acc + f(v.abs()));
                sum / T::of_usize(self.values.len())
            }
        }
    }
}

/// `inf{c > 0 : E φ(|X|/c) ≤ 1}` for the empirical law of `sample`.
pub fn luxemburg_norm<T: Scalar>(phi: &OrliczFunction<T>, sample: &EmpiricalSample<T>) -> Result<T> {
    luxemburg_norm_with_tol(phi, sample, T::tol(1e-10))
}

pub fn luxemburg_norm_with_tol<T: Scalar>(phi: &OrliczFunction<T>, sample: &EmpiricalSample<T>, rel_tol: T) -> Result<T> {
    let top = sample.values().iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if top == T::zero() {
        return Ok(T::zero());
    }
    let pred = |c: T| sample.expectation(|v| phi.eval(v / c)) <= T::one();
    let bracket = if pred(top) {
        expand_down(top, top * T::epsilon(), pred).ok_or(Error::OverflowRange { limit: T::overflow_limit().as_f64() })?
    } else {
        expand_up(top, T::overflow_limit(), pred)?
    };
    let (_, hi) = bisect(bracket.0, bracket.1, rel_tol, pred);
    Ok(hi)
}
