//! Level constants `S_k`, their sum, and the two-sided envelope of the
//! sample-boundedness constant.
//!
//! For each level `[r_{k+1}, r_k]` the constant `S_k` is the `c > 0` solving
//!
//! ```text
//! ∫_{r_{k+1}}^{r_k} (η⁻¹(ε)ⁿ/(rⁿε)) · ψ(rⁿε/(c·η⁻¹(ε)ⁿ)) dε = 1.
//! ```
//!
//! On the terminal level `[0, r_m]` (finite `η′(0)`) it is the infimum of the `c` for
//! which the improper integral is at most one, and may be `+∞`. The lower envelope
//! `ΣS_k / (3(n+2))` is explicit; the upper side is reported as the scale `ΣS_k` only.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Modulus, NormSpace};
use crate::orlicz::OrliczFunction;
use crate::partition::{Partition, StepLabel};
use crate::quadrature::{dyadic_tail, integrate, QuadOptions, TailOptions, TailOutcome};
use crate::roots::{bisect, expand_down};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<T> {
    /// Relative quadrature tolerance (default `1e-9`).
    pub quad_tol: T,
    /// Relative root tolerance on `S_k` (default `1e-10`).
    pub root_tol: T,
    /// Doublings allowed while bracketing `S_k` from above.
    pub max_doublings: usize,
    /// Terminal-level probes `c = 2^i`, `i = 0..=terminal_probes`.
    pub terminal_probes: i32,
    pub tail: TailOptions<T>,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self::with_tolerances(T::lit(1e-9), T::lit(1e-10))
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn with_tolerances(quad_tol: T, root_tol: T) -> Self {
        let quad = QuadOptions::relative(quad_tol);
        Self {
            quad_tol,
            root_tol: root_tol.max(T::tol(1e-15)),
            max_doublings: 1000,
            terminal_probes: 40,
            tail: TailOptions { quad, ..TailOptions::default() },
        }
    }

    fn quad(&self) -> QuadOptions<T> {
        QuadOptions::relative(self.quad_tol)
    }
}

/// `ε ↦ (η⁻¹(ε)ⁿ/(rⁿε)) · ψ(rⁿε/(c·η⁻¹(ε)ⁿ))` on one level.
pub struct LevelIntegrand<'a, T> {
    pub level: usize,
    pub lower: T,
    pub upper: T,
    n: i32,
    r: T,
    modulus: &'a Modulus<T>,
    psi: &'a OrliczFunction<T>,
}

impl<T: Scalar> LevelIntegrand<'_, T> {
    /// With `w = (η⁻¹(ε)/r)ⁿ` and `u = ε/w` the integrand is `ψ(u/c)/u`.
    pub fn eval(&self, eps: T, c: T) -> T {
        if eps <= T::zero() {
            return T::zero();
        }
        let u = eps / (self.modulus.eta_inv(eps) / self.r).powi(self.n);
        self.psi.eval(u / c) / u
    }

    /// The integral over `[lower, upper]`.
    pub fn integral(&self, c: T, opts: &QuadOptions<T>) -> Result<T> {
        Ok(integrate(|e| self.eval(e, c), self.lower, self.upper, opts)?.value)
    }

    /// The integral over `[0, upper]` through the dyadic tail test.
    pub fn improper_integral(&self, c: T, opts: &TailOptions<T>) -> Result<TailOutcome<T>> {
        dyadic_tail(|e| self.eval(e, c), self.upper, opts)
    }
}

/// How a level's lower endpoint arose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelKind {
    Step(StepLabel),
    Terminal,
}

impl fmt::Display for LevelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelKind::Step(l) => l.fmt(f),
            LevelKind::Terminal => f.write_str("T"),
        }
    }
}

/// The two-sided estimate of `S_k` from the step sizes alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket<T> {
    /// `¼ r_k φ⁻¹(2rⁿ/η⁻¹(r_k)ⁿ)`, valid on every level.
    pub lo: T,
    /// `r_{k+1} φ⁻¹(rⁿ/η⁻¹(r_{k+1})ⁿ)`, valid on halving levels only.
    pub hi: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSolution<T> {
    pub k: usize,
    pub lower: T,
    pub upper: T,
    pub kind: LevelKind,
    /// `S_k`; `+∞` on a divergent terminal level.
    pub s: T,
    /// Defining integral at `s`, minus one; NaN when `s` is infinite.
    pub residual: T,
    pub bracket: Bracket<T>,
}

impl<T: Scalar> LevelSolution<T> {
    pub fn is_finite(&self) -> bool {
        self.s.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport<T> {
    pub n: usize,
    pub levels: Vec<LevelSolution<T>>,
    /// `Σ S_k` over the solved levels.
    pub partial_sum: T,
    /// `Σ S_k`; `+∞` when the verdict is infinite.
    pub sum: T,
    /// `sum / (3(n+2))`, a lower bound on the sample-boundedness constant.
    pub lower_bound: T,
    /// `3(n+2)`.
    pub lower_constant: T,
    pub finite: bool,
    /// Estimated contribution of levels cut by truncation (zero when none were cut).
    pub tail_bound: T,
    /// Ratio used for the geometric tail estimate, when the partition was truncated.
    pub tail_ratio: Option<T>,
    pub truncated: bool,
}

impl<T: Scalar> BoundsReport<T> {
    /// `k,r_k,label,S_k,residual,bracket_lo,bracket_hi`; absent upper brackets are empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,r_k,label,S_k,residual,bracket_lo,bracket_hi")?;
        for l in &self.levels {
            let hi = l.bracket.hi.map(|h| fmt_num(h)).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                l.k,
                fmt_num(l.upper),
                l.kind,
                fmt_num(l.s),
                fmt_num(l.residual),
                fmt_num(l.bracket.lo),
                hi
            )?;
        }
        Ok(())
    }
}

/// Locale-free scientific notation with 17 significant digits.
pub fn fmt_num<T: Scalar>(x: T) -> String {
    let v = x.as_f64();
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Everything the level solvers need for one `(T, d, φ)` instance.
pub struct BoundsContext<'a, T> {
    pub space: &'a NormSpace<T>,
    pub modulus: &'a Modulus<T>,
    pub phi: &'a OrliczFunction<T>,
    pub partition: &'a Partition<T>,
    pub opts: SolverOptions<T>,
    psi: OrliczFunction<T>,
}

impl<'a, T: Scalar> BoundsContext<'a, T> {
    pub fn new(
        space: &'a NormSpace<T>,
        modulus: &'a Modulus<T>,
        phi: &'a OrliczFunction<T>,
        partition: &'a Partition<T>,
        opts: SolverOptions<T>,
    ) -> Result<Self> {
        let psi = phi.conjugate()?;
        Ok(Self { space, modulus, phi, partition, opts, psi })
    }

    pub fn psi(&self) -> &OrliczFunction<T> {
        &self.psi
    }

    fn n(&self) -> i32 {
        self.space.dim() as i32
    }

    pub fn integrand_on(&self, level: usize, lower: T, upper: T) -> LevelIntegrand<'_, T> {
        LevelIntegrand { level, lower, upper, n: self.n(), r: self.space.radius(), modulus: self.modulus, psi: &self.psi }
    }

    pub fn integrand(&self, k: usize) -> Result<LevelIntegrand<'_, T>> {
        let (lo, hi) = self.level(k)?;
        Ok(self.integrand_on(k, lo, hi))
    }

    fn level(&self, k: usize) -> Result<(T, T)> {
        self.partition
            .level_bounds(k)
            .ok_or_else(|| Error::InvalidParameter(format!("level {k} does not exist in this partition")))
    }

    fn kind(&self, k: usize) -> LevelKind {
        match self.partition.label(k) {
            Some(l) => LevelKind::Step(l),
            None => LevelKind::Terminal,
        }
    }

    /// `x ↦ x·φ⁻¹(rⁿ/η⁻¹(x)ⁿ)`: the halving-level upper bracket evaluated at `x = r_{k+1}`.
    fn upper_profile(&self, x: T) -> Result<T> {
        let ratio = (self.space.radius() / self.modulus.eta_inv(x)).powi(self.n());
        Ok(x * self.phi.inverse(ratio)?)
    }

    /// Brackets on `S_k` that need no quadrature.
    pub fn bromba_bracket(&self, k: usize) -> Result<Bracket<T>> {
        let (lower, upper) = self.level(k)?;
        let ratio = (self.space.radius() / self.modulus.eta_inv(upper)).powi(self.n());
        let lo = T::lit(0.25) * upper * self.phi.inverse(T::lit(2.0) * ratio)?;
        let hi = match self.kind(k) {
            LevelKind::Step(StepLabel::Halving) => Some(self.upper_profile(lower)?),
            _ => None,
        };
        Ok(Bracket { lo, hi })
    }

    /// `S_k` on an interior level.
    pub fn solve_level(&self, k: usize) -> Result<LevelSolution<T>> {
        if self.partition.is_terminal_level(k) {
            return Err(Error::InvalidParameter(format!("level {k} is terminal; use solve_terminal")));
        }
        let (lower, upper) = self.level(k)?;
        let bracket = self.bromba_bracket(k)?;
        let s = self.solve_equation(k, lower, upper, bracket)?;
        let residual = self.integrand_on(k, lower, upper).integral(s, &self.opts.quad())? - T::one();
        Ok(LevelSolution { k, lower, upper, kind: self.kind(k), s, residual, bracket })
    }

    /// `S_m(δ)`: the terminal level's equation with the lower limit raised to `δ > 0`.
    pub fn solve_terminal_truncated(&self, delta: T) -> Result<LevelSolution<T>> {
        let m = self.partition.terminal_m().ok_or_else(|| Error::InvalidParameter("partition has no terminal level".into()))?;
        let upper = self.partition.radii()[m];
        if !(delta > T::zero() && delta < upper) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, r_m), got {delta}")));
        }
        let bracket = Bracket { lo: self.bromba_bracket(m)?.lo, hi: None };
        let s = self.solve_equation(m, delta, upper, bracket)?;
        let residual = self.integrand_on(m, delta, upper).integral(s, &self.opts.quad())? - T::one();
        Ok(LevelSolution { k: m, lower: delta, upper, kind: LevelKind::Terminal, s, residual, bracket })
    }

    /// Bisection on the decreasing map `c ↦ ∫ = 1` over `[lower, upper]`.
    fn solve_equation(&self, k: usize, lower: T, upper: T, bracket: Bracket<T>) -> Result<T> {
        let integrand = self.integrand_on(k, lower, upper);
        let quad = self.opts.quad();
        let mut failure = None;
        let mut pred = |c: T| match integrand.integral(c, &quad) {
            Ok(v) => v <= T::one(),
            Err(e) => {
                failure.get_or_insert(e);
                true
            }
        };
        let mut lo = bracket.lo;
        if pred(lo) {
            lo = match expand_down(lo, T::min_positive_value().sqrt(), &mut pred) {
                Some((l, _)) => l,
                None => return Err(Error::BracketFailure { level: k, doublings: 0 }),
            };
        }
        let two = T::lit(2.0);
        let mut hi = bracket.hi.unwrap_or(lo).max(lo * two);
        let mut doublings = 0;
        while !pred(hi) {
            doublings += 1;
            if doublings > self.opts.max_doublings || !hi.is_finite() {
                return Err(Error::BracketFailure { level: k, doublings });
            }
            lo = lo.max(hi);
            hi = hi * two;
        }
        let (lo, hi) = bisect(lo, hi, self.opts.root_tol, &mut pred);
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(lo.sqrt() * hi.sqrt())
    }

    /// `S_m` on the terminal level `[0, r_m]`: `(+∞, false)` when every probe diverges.
    pub fn solve_terminal(&self) -> Result<LevelSolution<T>> {
        let m = self.partition.terminal_m().ok_or_else(|| Error::InvalidParameter("partition has no terminal level".into()))?;
        let integrand = self.integrand(m)?;
        let tail = self.opts.tail;
        let bracket = Bracket { lo: self.bromba_bracket(m)?.lo, hi: None };
        let (lower, upper) = (T::zero(), integrand.upper);

        let mut convergent = None;
        let mut undecided = false;
        for i in 0..=self.opts.terminal_probes {
            let c = T::lit(2.0).powi(i);
            match integrand.improper_integral(c, &tail)? {
                TailOutcome::Converged { .. } => {
                    convergent = Some(c);
                    break;
                }
                TailOutcome::Undecided { .. } => undecided = true,
                TailOutcome::Diverged { .. } => {}
            }
        }
        let Some(c_conv) = convergent else {
            if undecided {
                return Err(Error::SlowConvergence { budget: tail.max_halvings });
            }
            let s = T::infinity();
            return Ok(LevelSolution { k: m, lower, upper, kind: LevelKind::Terminal, s, residual: T::nan(), bracket });
        };

        let mut failure = None;
        let mut pred = |c: T| match integrand.improper_integral(c, &tail) {
            Ok(TailOutcome::Converged { value, .. }) => value <= T::one(),
            Ok(TailOutcome::Diverged { .. }) => false,
            Ok(TailOutcome::Undecided { .. }) => {
                failure.get_or_insert(Error::SlowConvergence { budget: tail.max_halvings });
                true
            }
            Err(e) => {
                failure.get_or_insert(e);
                true
            }
        };
        let mut hi = c_conv;
        let mut doublings = 0;
        while !pred(hi) {
            doublings += 1;
            if doublings > self.opts.max_doublings {
                return Err(Error::BracketFailure { level: m, doublings });
            }
            hi = hi * T::lit(2.0);
        }
        let mut lo = bracket.lo.min(hi * T::lit(0.5));
        if pred(lo) {
            lo = match expand_down(lo, T::min_positive_value().sqrt(), &mut pred) {
                Some((l, _)) => l,
                None => return Err(Error::BracketFailure { level: m, doublings: 0 }),
            };
        }
        let (_, s) = bisect(lo, hi, self.opts.root_tol, &mut pred);
        if let Some(e) = failure {
            return Err(e);
        }
        let value = integrand.improper_integral(s, &tail)?.value().ok_or(Error::SlowConvergence { budget: tail.max_halvings })?;
        Ok(LevelSolution { k: m, lower, upper, kind: LevelKind::Terminal, s, residual: value - T::one(), bracket })
    }

    /// Solves every level (interior levels in parallel), the terminal level if present, and
    /// estimates the truncated tail.
    pub fn total_bound(&self) -> Result<BoundsReport<T>> {
        let interior: Vec<Result<LevelSolution<T>>> =
            (0..self.partition.interior_levels()).into_par_iter().map(|k| self.solve_level(k)).collect();
        let mut levels = interior.into_iter().collect::<Result<Vec<_>>>()?;
        if self.partition.terminal_m().is_some() {
            levels.push(self.solve_terminal()?);
        }
        let partial_sum = levels.iter().fold(T::zero(), |a, l| a + l.s);
        let mut finite = levels.iter().all(LevelSolution::is_finite);

        let (mut tail_bound, mut tail_ratio) = (T::zero(), None);
        if self.partition.truncated() && finite {
            let (bound, ratio) = self.tail_estimate()?;
            tail_ratio = Some(ratio);
            tail_bound = bound;
            finite = bound.is_finite();
        }
        let lower_constant = T::lit(3.0) * (T::of_usize(self.space.dim()) + T::lit(2.0));
        let sum = if finite { partial_sum } else { T::infinity() };
        Ok(BoundsReport {
            n: self.space.dim(),
            levels,
            partial_sum,
            sum,
            lower_bound: sum / lower_constant,
            lower_constant,
            finite,
            tail_bound,
            tail_ratio,
            truncated: self.partition.truncated(),
        })
    }

    /// `report` with an infinite terminal level replaced by `S_m(δ)`, `δ = r_m·delta_factor`.
    ///
    /// The verdict fields are left untouched; only the level list and `partial_sum` change,
    /// so the result can seed a density whose mass stops at `δ`.
    pub fn truncate_terminal(&self, report: &BoundsReport<T>, delta_factor: T) -> Result<BoundsReport<T>> {
        let mut out = report.clone();
        if let Some(last) = out.levels.last_mut() {
            if last.kind == LevelKind::Terminal && !last.is_finite() {
                *last = self.solve_terminal_truncated(last.upper * delta_factor)?;
            }
        }
        out.partial_sum = out.levels.iter().fold(T::zero(), |a, l| a + l.s);
        Ok(out)
    }

    /// Geometric extrapolation of the halving-form upper brackets past the last radius.
    ///
    /// The ratio is the largest of the last (up to three) successive ratios of
    /// `x·φ⁻¹(rⁿ/η⁻¹(x)ⁿ)` along the radii; a ratio within `ratio_tol` of one or above
    /// means the tail does not decay and the bound is infinite.
    fn tail_estimate(&self) -> Result<(T, T)> {
        let radii = self.partition.radii();
        let take = radii.len().min(4);
        let profile = radii[radii.len() - take..].iter().map(|&x| self.upper_profile(x)).collect::<Result<Vec<T>>>()?;
        let ratio = profile.windows(2).map(|w| w[1] / w[0]).fold(T::zero(), T::max);
        let last = *profile.last().expect("a partition has at least one radius");
        if take < 2 || ratio >= T::one() - self.opts.tail.ratio_tol {
            return Ok((T::infinity(), ratio));
        }
        Ok((last * ratio / (T::one() - ratio), ratio))
    }

    /// `r_k φ⁻¹(r/η⁻¹(r_k))` along the radii, for `n = 1`.
    pub fn one_dim_profile(&self) -> Result<Vec<T>> {
        if self.space.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.space.dim() });
        }
        let r = self.space.radius();
        self.partition
            .radii()
            .iter()
            .map(|&rk| Ok(rk * self.phi.inverse(r / self.modulus.eta_inv(rk))?))
            .collect()
    }
}

/// `∫_0^r ψ(1/(Aε^{n−1})) ε^{n−1} dε` through the dyadic tail test.
pub fn sobolev_term1<T: Scalar>(space: &NormSpace<T>, psi: &OrliczFunction<T>, a: T, opts: &TailOptions<T>) -> Result<TailOutcome<T>> {
    let n1 = space.dim() as i32 - 1;
    dyadic_tail(
        |e: T| {
            let w = e.powi(n1);
            psi.eval(T::one() / (a * w)) * w
        },
        space.radius(),
        opts,
    )
}

/// Whether `∫_0^r ψ(1/(Aε^{n−1}))ε^{n−1}dε` is certified finite for some probe `A`.
pub fn embedding_criterion<T: Scalar>(space: &NormSpace<T>, phi: &OrliczFunction<T>, probes: &[T], opts: &TailOptions<T>) -> Result<bool> {
    if probes.is_empty() {
        return Err(Error::InvalidParameter("at least one probe A is required".into()));
    }
    let psi = phi.conjugate()?;
    let mut undecided = false;
    for &a in probes {
        match sobolev_term1(space, &psi, a, opts)? {
            TailOutcome::Converged { .. } => return Ok(true),
            TailOutcome::Undecided { .. } => undecided = true,
            TailOutcome::Diverged { .. } => {}
        }
    }
    if undecided {
        Err(Error::SlowConvergence { budget: opts.max_halvings })
    } else {
        Ok(false)
    }
}
