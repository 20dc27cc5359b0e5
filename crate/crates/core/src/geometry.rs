//! Norms on ℝⁿ and their duals, unit-ball volumes, uniform sampling on
//! `T = B(0, r)`, the modulus `η`, and the metric `d(s,t) = η(‖s − t‖)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{log_grid, rel_diff, Scalar};

type NormFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type RealMap<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Quasi-random points used by the approximate dual norm of a generic norm.
pub const GENERIC_DUAL_PROBES: usize = 100_000;
/// Rejection draws used by the Monte Carlo volume of a generic norm.
pub const GENERIC_VOLUME_DRAWS: usize = 1_000_000;
const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Clone)]
pub enum NormKind<T> {
    /// `ℓ_p`, `p ∈ [1, ∞]` (use `T::infinity()` for the sup-norm).
    Lp(T),
    /// `x ↦ ‖(w₁x₁, …, wₙxₙ)‖_p` with positive weights.
    WeightedLp { p: T, weights: Vec<T> },
    /// Any norm given as a callable; `extent` bounds `|xᵢ|` over its unit ball.
    Generic { norm: NormFn<T>, extent: T },
}

impl<T: fmt::Debug> fmt::Debug for NormKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Lp(p) => write!(f, "Lp({p:?})"),
            NormKind::WeightedLp { p, weights } => write!(f, "WeightedLp({p:?}, {weights:?})"),
            NormKind::Generic { extent, .. } => write!(f, "Generic(extent {extent:?})"),
        }
    }
}

/// `ℝⁿ` with a norm, together with the radius `r` of the ball `T = B(0, r)`.
#[derive(Debug, Clone)]
pub struct NormSpace<T> {
    n: usize,
    kind: NormKind<T>,
    r: T,
}

/// A dual-norm value; `approximate` marks a sampled lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualNorm<T> {
    pub value: T,
    pub approximate: bool,
}

/// A volume, exact when `std_error` is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Volume<T> {
    pub value: T,
    pub std_error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallSample<T> {
    pub points: Vec<Vec<T>>,
    pub acceptance: T,
}

fn lp_norm<T: Scalar>(p: T, x: &[T]) -> T {
    if p.is_infinite() {
        return x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    }
    if p == T::one() {
        return x.iter().fold(T::zero(), |s, v| s + v.abs());
    }
    let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let sum = x.iter().fold(T::zero(), |s, v| s + (v.abs() / scale).powf(p));
    scale * sum.powf(p.recip())
}

/// `q` with `1/p + 1/q = 1`, mapping `1 ↔ ∞`.
pub fn dual_exponent<T: Scalar>(p: T) -> T {
    if p.is_infinite() {
        T::one()
    } else if p == T::one() {
        T::infinity()
    } else {
        p / (p - T::one())
    }
}

fn check_p<T: Scalar>(p: T) -> Result<()> {
    if p >= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("norm exponent must lie in [1, inf], got {p}")))
    }
}

impl<T: Scalar> NormSpace<T> {
    pub fn new(n: usize, kind: NormKind<T>, r: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be positive and finite, got {r}")));
        }
        match &kind {
            NormKind::Lp(p) => check_p(*p)?,
            NormKind::WeightedLp { p, weights } => {
                check_p(*p)?;
                if weights.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
                }
                if weights.iter().any(|w| !(*w > T::zero()) || !w.is_finite()) {
                    return Err(Error::InvalidParameter("norm weights must be positive".into()));
                }
            }
            NormKind::Generic { extent, .. } => {
                if !(*extent > T::zero()) || !extent.is_finite() {
                    return Err(Error::InvalidParameter("generic norm extent must be positive".into()));
                }
            }
        }
        Ok(Self { n, kind, r })
    }

    pub fn lp(n: usize, p: T, r: T) -> Result<Self> {
        Self::new(n, NormKind::Lp(p), r)
    }

    pub fn linf(n: usize, r: T) -> Result<Self> {
        Self::lp(n, T::infinity(), r)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> T {
        self.r
    }

    pub fn kind(&self) -> &NormKind<T> {
        &self.kind
    }

    /// The same norm on a ball of another radius.
    pub fn with_radius(&self, r: T) -> Result<Self> {
        Self::new(self.n, self.kind.clone(), r)
    }

    /// `‖x‖`. Panics if `x` does not have length `n`.
    pub fn norm(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.n, "vector length must match the dimension");
        match &self.kind {
            NormKind::Lp(p) => lp_norm(*p, x),
            NormKind::WeightedLp { p, weights } => {
                let scaled: Vec<T> = x.iter().zip(weights).map(|(&a, &w)| a * w).collect();
                lp_norm(*p, &scaled)
            }
            NormKind::Generic { norm, .. } => norm(x),
        }
    }

    pub fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, got: x.len() })
        }
    }

    /// `‖x − y‖`.
    pub fn distance(&self, x: &[T], y: &[T]) -> T {
        let diff: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a - b).collect();
        self.norm(&diff)
    }

    /// The space carrying the dual norm, when it is known in closed form.
    pub fn dual_space(&self) -> Option<Self> {
        let kind = match &self.kind {
            NormKind::Lp(p) => NormKind::Lp(dual_exponent(*p)),
            NormKind::WeightedLp { p, weights } => NormKind::WeightedLp {
                p: dual_exponent(*p),
                weights: weights.iter().map(|w| w.recip()).collect(),
            },
            NormKind::Generic { .. } => return None,
        };
        Some(Self { n: self.n, kind, r: self.r })
    }

    /// `‖v‖* = sup_{‖u‖≤1} |⟨u, v⟩|`.
    ///
    /// Exact for the `ℓ_p` families. For a generic norm, the supremum is taken over
    /// [`GENERIC_DUAL_PROBES`] Halton points pushed to the unit sphere, which yields a
    /// lower bound flagged `approximate`.
    pub fn dual_norm(&self, v: &[T]) -> Result<DualNorm<T>> {
        self.check_dim(v)?;
        if let Some(dual) = self.dual_space() {
            return Ok(DualNorm { value: dual.norm(v), approximate: false });
        }
        let NormKind::Generic { extent, .. } = &self.kind else { unreachable!("closed-form kinds handled above") };
        let two = T::lit(2.0);
        let mut u = vec![T::zero(); self.n];
        let mut best = T::zero();
        for i in 1..=GENERIC_DUAL_PROBES {
            for (d, c) in u.iter_mut().enumerate() {
                *c = (T::lit(halton(i, d)) * two - T::one()) * *extent;
            }
            let nu = self.norm(&u);
            if nu > T::zero() {
                let dot = u.iter().zip(v).fold(T::zero(), |s, (&a, &b)| s + a * b).abs();
                best = best.max(dot / nu);
            }
        }
        Ok(DualNorm { value: best, approximate: true })
    }

    /// `|B(0, 1)|`: closed form `2ⁿΓ(1+1/p)ⁿ/Γ(1+n/p)` for `ℓ_p`, rescaled by the weights
    /// for weighted norms, Monte Carlo for generic norms.
    pub fn unit_ball_volume(&self) -> Volume<T> {
        match &self.kind {
            NormKind::Lp(p) => Volume { value: lp_unit_volume(self.n, *p), std_error: T::zero() },
            NormKind::WeightedLp { p, weights } => {
                let det = weights.iter().fold(T::one(), |a, &w| a * w);
                Volume { value: lp_unit_volume(self.n, *p) / det, std_error: T::zero() }
            }
            NormKind::Generic { .. } => self.unit_ball_volume_mc(GENERIC_VOLUME_DRAWS, 0),
        }
    }

    /// Rejection Monte Carlo estimate of `|B(0, 1)|` from `draws` box points.
    pub fn unit_ball_volume_mc(&self, draws: usize, seed: u64) -> Volume<T> {
        let extents = self.unit_extents();
        let box_volume = extents.iter().fold(T::one(), |a, &e| a * e * T::lit(2.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = vec![T::zero(); self.n];
        let mut hits = 0usize;
        for _ in 0..draws {
            for (c, &e) in x.iter_mut().zip(&extents) {
                *c = T::lit(rng.random_range(-1.0..1.0)) * e;
            }
            if self.norm(&x) <= T::one() {
                hits += 1;
            }
        }
        let frac = hits as f64 / draws as f64;
        let se = (frac * (1.0 - frac) / draws as f64).sqrt();
        Volume { value: box_volume * T::lit(frac), std_error: box_volume * T::lit(se) }
    }

    /// `|T| = rⁿ |B(0, 1)|`.
    pub fn ball_volume(&self) -> Volume<T> {
        let v = self.unit_ball_volume();
        let scale = self.r.powi(self.n as i32);
        Volume { value: v.value * scale, std_error: v.std_error * scale }
    }

    /// Half-widths of the bounding box of the unit ball, per coordinate.
    fn unit_extents(&self) -> Vec<T> {
        match &self.kind {
            NormKind::Lp(_) => vec![T::one(); self.n],
            NormKind::WeightedLp { weights, .. } => weights.iter().map(|w| w.recip()).collect(),
            NormKind::Generic { extent, .. } => vec![*extent; self.n],
        }
    }

    /// Draws one point uniformly from `B(0, radius)` into `out` by rejection from the
    /// bounding box; returns the number of box draws used.
    pub fn draw_in_ball<R: Rng + ?Sized>(&self, rng: &mut R, radius: T, out: &mut [T]) -> Result<usize> {
        let extents = self.unit_extents();
        let mut attempts = 0usize;
        loop {
            attempts += 1;
            for (c, &e) in out.iter_mut().zip(&extents) {
                *c = T::lit(rng.random_range(-1.0..1.0)) * e * radius;
            }
            if self.norm(out) <= radius {
                return Ok(attempts);
            }
            if attempts >= 1_000_000 && (1.0 / attempts as f64) < MIN_ACCEPTANCE {
                return Err(Error::RejectionStalled { acceptance: 1.0 / attempts as f64 });
            }
        }
    }

    /// A direction `u` with `‖u‖ = 1`, drawn by normalizing a box point.
    pub fn draw_direction<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        let extents = self.unit_extents();
        loop {
            for (c, &e) in out.iter_mut().zip(&extents) {
                *c = T::lit(rng.random_range(-1.0..1.0)) * e;
            }
            let nu = self.norm(out);
            if nu > T::lit(1e-3) {
                out.iter_mut().for_each(|c| *c = *c / nu);
                return;
            }
        }
    }

    /// `count` points uniform on `T`, deterministic in `seed`.
    pub fn sample_ball(&self, count: usize, seed: u64) -> Result<BallSample<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }

    /// Splits `count` draws over `shards` independent streams of `seed`; the result is the
    /// concatenation in shard order, independent of how many threads run the shards.
    pub fn sample_ball_sharded(&self, count: usize, seed: u64, shards: usize) -> Result<BallSample<T>> {
        let shards = shards.max(1);
        let parts: Vec<Result<BallSample<T>>> = (0..shards)
            .into_par_iter()
            .map(|i| {
                let share = count / shards + usize::from(i < count % shards);
                let mut rng = shard_rng(seed, i as u64);
                self.sample_with(&mut rng, share)
            })
            .collect();
        let mut points = Vec::with_capacity(count);
        let mut attempts = 0.0;
        for part in parts {
            let part = part?;
            if part.acceptance > T::zero() {
                attempts += part.points.len() as f64 / part.acceptance.as_f64();
            }
            points.extend(part.points);
        }
        let acceptance = if attempts > 0.0 { T::lit(points.len() as f64 / attempts) } else { T::one() };
        Ok(BallSample { points, acceptance })
    }

    /// The first `count` Halton points of the bounding box of `T` that fall in `T`.
    pub fn halton_grid(&self, count: usize) -> Vec<Vec<T>> {
        let extents = self.unit_extents();
        let mut out = Vec::with_capacity(count);
        let mut index = 1;
        while out.len() < count {
            let x: Vec<T> = (0..self.n).map(|d| T::lit(2.0 * halton(index, d) - 1.0) * extents[d] * self.r).collect();
            index += 1;
            if self.norm(&x) <= self.r {
                out.push(x);
            }
        }
        out
    }

    fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<BallSample<T>> {
        let mut points = Vec::with_capacity(count);
        let mut attempts = 0usize;
        for _ in 0..count {
            let mut x = vec![T::zero(); self.n];
            attempts += self.draw_in_ball(rng, self.r, &mut x)?;
            points.push(x);
        }
        let acceptance = if attempts == 0 { T::one() } else { T::lit(count as f64 / attempts as f64) };
        if attempts > 0 && acceptance.as_f64() < MIN_ACCEPTANCE {
            return Err(Error::RejectionStalled { acceptance: acceptance.as_f64() });
        }
        Ok(BallSample { points, acceptance })
    }
}

/// Stream `shard` of the ChaCha generator keyed by `seed`.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

fn lp_unit_volume<T: Scalar>(n: usize, p: T) -> T {
    if p.is_infinite() {
        return T::lit(2.0).powi(n as i32);
    }
    let (nf, pf) = (n as f64, p.as_f64());
    let ln_v = nf * std::f64::consts::LN_2 + nf * libm::lgamma(1.0 + 1.0 / pf) - libm::lgamma(1.0 + nf / pf);
    T::lit(ln_v.exp())
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical-inverse (Halton) coordinate `dim` of point `index`.
pub fn halton(index: usize, dim: usize) -> f64 {
    let base = PRIMES[dim % PRIMES.len()];
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

#[derive(Clone)]
enum ModRepr<T> {
    Power { alpha: T },
    CappedLinear { knee: T, slope: T },
    Custom { eta: RealMap<T>, eta_inv: RealMap<T> },
}

/// A concave, strictly increasing `η` with `η(0) = 0`, together with `η⁻¹` and `η′(0)`.
#[derive(Clone)]
pub struct Modulus<T> {
    repr: ModRepr<T>,
    derivative_at_zero: T,
}

impl<T: Scalar> fmt::Debug for Modulus<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Modulus({self})")
    }
}

impl<T: Scalar> fmt::Display for Modulus<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            ModRepr::Power { alpha } => write!(f, "power:{alpha}"),
            ModRepr::CappedLinear { knee, slope } => write!(f, "capped:{knee}:{slope}"),
            ModRepr::Custom { .. } => write!(f, "custom"),
        }
    }
}

impl<T: Scalar> Modulus<T> {
    /// `η(x) = x^α`, `α ∈ (0, 1]`; `η′(0) = ∞` exactly when `α < 1`.
    pub fn power(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::InvalidParameter(format!("modulus exponent must lie in (0, 1], got {alpha}")));
        }
        let d0 = if alpha == T::one() { T::one() } else { T::infinity() };
        Ok(Self { repr: ModRepr::Power { alpha }, derivative_at_zero: d0 })
    }

    pub fn identity() -> Self {
        Self { repr: ModRepr::Power { alpha: T::one() }, derivative_at_zero: T::one() }
    }

    /// `η(x) = x` up to `knee`, then slope `slope ∈ (0, 1]`; `η′(0) = 1`.
    pub fn capped_linear(knee: T, slope: T) -> Result<Self> {
        if !(knee > T::zero()) || !(slope > T::zero() && slope <= T::one()) {
            return Err(Error::InvalidParameter(format!("capped modulus needs knee > 0 and slope in (0, 1], got {knee}, {slope}")));
        }
        Ok(Self { repr: ModRepr::CappedLinear { knee, slope }, derivative_at_zero: T::one() })
    }

    /// A user-supplied modulus. `derivative_at_zero` may be `T::infinity()`.
    pub fn custom<E, I>(eta: E, eta_inv: I, derivative_at_zero: T) -> Result<Self>
    where
        E: Fn(T) -> T + Send + Sync + 'static,
        I: Fn(T) -> T + Send + Sync + 'static,
    {
        if !(derivative_at_zero > T::zero()) {
            return Err(Error::InvalidParameter("eta'(0) must be positive".into()));
        }
        let m = Self { repr: ModRepr::Custom { eta: Arc::new(eta), eta_inv: Arc::new(eta_inv) }, derivative_at_zero };
        m.validate()?;
        Ok(m)
    }

    pub fn eta(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        match &self.repr {
            ModRepr::Power { alpha } => {
                if *alpha == T::one() {
                    x
                } else {
                    x.powf(*alpha)
                }
            }
            ModRepr::CappedLinear { knee, slope } => {
                if x <= *knee {
                    x
                } else {
                    *knee + *slope * (x - *knee)
                }
            }
            ModRepr::Custom { eta, .. } => eta(x),
        }
    }

    pub fn eta_inv(&self, e: T) -> T {
        if e <= T::zero() {
            return T::zero();
        }
        match &self.repr {
            ModRepr::Power { alpha } => {
                if *alpha == T::one() {
                    e
                } else {
                    e.powf(alpha.recip())
                }
            }
            ModRepr::CappedLinear { knee, slope } => {
                if e <= *knee {
                    e
                } else {
                    *knee + (e - *knee) / *slope
                }
            }
            ModRepr::Custom { eta_inv, .. } => eta_inv(e),
        }
    }

    /// `η′(0)`, possibly `+∞`.
    pub fn derivative_at_zero(&self) -> T {
        self.derivative_at_zero
    }

    pub fn power_exponent(&self) -> Option<T> {
        match self.repr {
            ModRepr::Power { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// `ε / η⁻¹(ε)`, nonincreasing in `ε` for a concave `η`; its limit at `0⁺` is `η′(0)`.
    pub fn slope_ratio(&self, e: T) -> T {
        if e <= T::zero() {
            return self.derivative_at_zero;
        }
        e / self.eta_inv(e)
    }

    /// Monotonicity, concavity and inverse consistency on a log-spaced probe grid.
    pub fn validate(&self) -> Result<()> {
        if self.eta(T::zero()) != T::zero() {
            return Err(Error::InvalidParameter("eta(0) must be 0".into()));
        }
        let grid = log_grid(T::lit(1e-6), T::lit(1e6), 64);
        let pts: Vec<(T, T)> = grid.iter().map(|&x| (x, self.eta(x))).collect();
        for w in pts.windows(2) {
            if !(w[1].1 > w[0].1) {
                return Err(Error::InvalidParameter(format!("eta is not strictly increasing near {}", w[1].0)));
            }
        }
        let slack = T::tol(1e-9);
        for w in pts.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            if s2 > s1 * (T::one() + slack) {
                return Err(Error::NonConcaveModulus { at: w[1].0.as_f64() });
            }
        }
        for &(x, e) in &pts {
            if rel_diff(self.eta_inv(e), x) > T::tol(1e-10) {
                return Err(Error::InvalidParameter(format!("eta_inv(eta(x)) != x at x = {x}")));
            }
        }
        Ok(())
    }
}

/// `d(s, t) = η(‖s − t‖)`.
pub fn metric<T: Scalar>(space: &NormSpace<T>, modulus: &Modulus<T>, s: &[T], t: &[T]) -> Result<T> {
    space.check_dim(s)?;
    space.check_dim(t)?;
    Ok(modulus.eta(space.distance(s, t)))
}

/// `min(1, η⁻¹(ε)ⁿ / rⁿ)`: the normalized measure of a metric ball of radius `ε` lying
/// inside `T`.
pub fn ball_measure_fraction<T: Scalar>(space: &NormSpace<T>, modulus: &Modulus<T>, eps: T) -> T {
    let ratio = modulus.eta_inv(eps) / space.radius();
    ratio.powi(space.dim() as i32).min(T::one())
}
