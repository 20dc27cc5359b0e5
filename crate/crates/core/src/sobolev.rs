//! Numerical checks of the Sobolev-type inequality
//!
//! ```text
//! |f(s) − f(t)| ≤ 6AB ( ∫_0^r ψ(1/(Aε^{n−1})) ε^{n−1} dε + (1/(n|B(0,1)|)) ∫_T φ(‖∇f‖*/B) )
//! ```
//!
//! and of its Hölder form for `φ = x^p/p`, `p > n`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::sobolev_term1;
use crate::error::{Error, Result};
use crate::geometry::{dual_exponent, NormSpace};
use crate::orlicz::OrliczFunction;
use crate::quadrature::{TailOptions, TailOutcome};
use crate::scalar::Scalar;

type Field<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type GradField<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Central-difference step for the gradient check.
pub const FD_STEP: f64 = 1e-6;
/// Points closer than this to a declared kink are skipped by the gradient check.
pub const KINK_SKIP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Linear,
    RadialSmooth,
    RandomTrig,
    PiecewiseLinear,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Linear => "linear",
            Family::RadialSmooth => "radial-smooth",
            Family::RandomTrig => "random-trigonometric",
            Family::PiecewiseLinear => "piecewise-linear",
            Family::Custom => "custom",
        })
    }
}

/// A Lipschitz function with its a.e. gradient.
#[derive(Clone)]
pub struct TestFunction<T> {
    pub family: Family,
    pub lipschitz_hint: Option<T>,
    eval: Field<T>,
    grad: GradField<T>,
    /// Distance-like measure to the non-smoothness locus, if any.
    kink: Option<Field<T>>,
}

impl<T: Scalar> fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self.family)
    }
}

impl<T: Scalar> TestFunction<T> {
    pub fn custom<F, G>(eval: F, grad: G) -> Self
    where
        F: Fn(&[T]) -> T + Send + Sync + 'static,
        G: Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    {
        Self { family: Family::Custom, lipschitz_hint: None, eval: Arc::new(eval), grad: Arc::new(grad), kink: None }
    }

    /// `u ↦ ⟨a, u⟩`.
    pub fn linear(a: Vec<T>) -> Self {
        let g = a.clone();
        Self {
            family: Family::Linear,
            lipschitz_hint: None,
            eval: Arc::new(move |u: &[T]| u.iter().zip(&a).fold(T::zero(), |s, (&x, &c)| s + x * c)),
            grad: Arc::new(move |_: &[T]| g.clone()),
            kink: None,
        }
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self {
            family: Family::Linear,
            lipschitz_hint: Some(T::zero()),
            eval: Arc::new(move |_: &[T]| c),
            grad: Arc::new(move |_: &[T]| vec![T::zero(); n]),
            kink: None,
        }
    }

    /// `u ↦ exp(−‖u‖₂²/σ²)`.
    pub fn radial(sigma: T) -> Self {
        let s2 = sigma * sigma;
        let hint = (T::lit(2.0) / s2).sqrt() * (T::lit(-0.5)).exp();
        Self {
            family: Family::RadialSmooth,
            lipschitz_hint: Some(hint),
            eval: Arc::new(move |u: &[T]| (-sq_norm(u) / s2).exp()),
            grad: Arc::new(move |u: &[T]| {
                let f = (-sq_norm(u) / s2).exp();
                u.iter().map(|&x| T::lit(-2.0) * x / s2 * f).collect()
            }),
            kink: None,
        }
    }

    /// `u ↦ Σ_j a_j sin(⟨k_j, u⟩ + b_j)` with coefficients drawn from `seed`.
    pub fn random_trig(n: usize, terms: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::with_capacity(terms);
        for _ in 0..terms {
            let a = T::lit(rng.random_range(-1.0..1.0) / terms as f64);
            let k: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(-3.0..3.0))).collect();
            let b = T::lit(rng.random_range(0.0..std::f64::consts::TAU));
            modes.push((a, k, b));
        }
        let modes = Arc::new(modes);
        let m2 = Arc::clone(&modes);
        let phase = |k: &[T], b: T, u: &[T]| u.iter().zip(k).fold(b, |s, (&x, &c)| s + x * c);
        Self {
            family: Family::RandomTrig,
            lipschitz_hint: None,
            eval: Arc::new(move |u: &[T]| modes.iter().fold(T::zero(), |s, (a, k, b)| s + *a * phase(k, *b, u).sin())),
            grad: Arc::new(move |u: &[T]| {
                let mut g = vec![T::zero(); u.len()];
                for (a, k, b) in m2.iter() {
                    let c = *a * phase(k, *b, u).cos();
                    g.iter_mut().zip(k).for_each(|(gi, &ki)| *gi = *gi + c * ki);
                }
                g
            }),
            kink: None,
        }
    }

    /// `u ↦ |u₁| + ½ max(u_n − 0.3, 0)`, with kinks on `u₁ = 0` and `u_n = 0.3`.
    pub fn piecewise_linear(n: usize) -> Self {
        let last = n - 1;
        let shift = T::lit(0.3);
        let half = T::lit(0.5);
        Self {
            family: Family::PiecewiseLinear,
            lipschitz_hint: None,
            eval: Arc::new(move |u: &[T]| u[0].abs() + half * (u[last] - shift).max(T::zero())),
            grad: Arc::new(move |u: &[T]| {
                let mut g = vec![T::zero(); u.len()];
                g[0] = if u[0] >= T::zero() { T::one() } else { -T::one() };
                if u[last] > shift {
                    g[last] = g[last] + half;
                }
                g
            }),
            kink: Some(Arc::new(move |u: &[T]| u[0].abs().min((u[last] - shift).abs()))),
        }
    }

    pub fn eval(&self, u: &[T]) -> T {
        (self.eval)(u)
    }

    pub fn gradient(&self, u: &[T]) -> Vec<T> {
        (self.grad)(u)
    }

    /// Whether `u` lies within `KINK_SKIP` of a declared non-smoothness locus.
    pub fn near_kink(&self, u: &[T]) -> bool {
        self.kink.as_ref().is_some_and(|k| k(u) < T::lit(KINK_SKIP))
    }

    /// Largest relative gap between the gradient and central differences over `points`
    /// random interior points, skipping points near kinks.
    pub fn gradient_check(&self, space: &NormSpace<T>, points: usize, seed: u64) -> Result<T> {
        let n = space.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = T::lit(FD_STEP);
        let inner = space.radius() * T::lit(1.0 - 1e-3);
        let mut worst = T::zero();
        let mut u = vec![T::zero(); n];
        let mut checked = 0;
        while checked < points {
            space.draw_in_ball(&mut rng, inner, &mut u)?;
            if self.near_kink(&u) {
                continue;
            }
            checked += 1;
            let g = self.gradient(&u);
            let scale = g.iter().fold(T::one(), |m, v| m.max(v.abs()));
            for i in 0..n {
                let mut a = u.clone();
                let mut b = u.clone();
                a[i] = a[i] + h;
                b[i] = b[i] - h;
                let fd = (self.eval(&a) - self.eval(&b)) / (h + h);
                worst = worst.max((fd - g[i]).abs() / scale);
            }
        }
        Ok(worst)
    }
}

fn sq_norm<T: Scalar>(u: &[T]) -> T {
    u.iter().fold(T::zero(), |s, &x| s + x * x)
}

/// Sample sizes and seeds for the Monte Carlo parts.
#[derive(Debug, Clone, Copy)]
pub struct SobolevOptions<T> {
    pub grid_count: usize,
    pub mc_count: usize,
    pub seed: u64,
    pub shards: usize,
    pub tail: TailOptions<T>,
}

impl<T: Scalar> Default for SobolevOptions<T> {
    fn default() -> Self {
        Self { grid_count: 1024, mc_count: 100_000, seed: 1, shards: 8, tail: TailOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevCheck<T> {
    pub a: T,
    pub b: T,
    pub lhs: T,
    pub term1: T,
    pub term2: T,
    pub term2_std_error: T,
    pub rhs: T,
    /// `6AB·term2_std_error`.
    pub rhs_std_error: T,
    pub margin: T,
}

impl<T: Scalar> SobolevCheck<T> {
    /// `margin ≥ −rel_tol·rhs`.
    pub fn holds(&self, rel_tol: T) -> bool {
        self.margin >= -rel_tol * self.rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderCheck<T> {
    pub p: T,
    pub max_ratio: T,
    pub bound_constant: T,
    /// Standard error of `bound_constant` (delta method on the Monte Carlo integral).
    pub std_error: T,
}

impl<T: Scalar> HolderCheck<T> {
    pub fn holds(&self, sigmas: T) -> bool {
        self.max_ratio <= self.bound_constant + sigmas * self.std_error
    }
}

/// Grid extremes and gradient dual norms for one `(T, f)`, reused across `(A, B)` probes.
pub struct SobolevEvaluator<'a, T> {
    space: &'a NormSpace<T>,
    f: &'a TestFunction<T>,
    opts: SobolevOptions<T>,
    grid: Vec<Vec<T>>,
    lhs: T,
    grad_norms: Vec<T>,
}

impl<'a, T: Scalar> SobolevEvaluator<'a, T> {
    pub fn new(space: &'a NormSpace<T>, f: &'a TestFunction<T>, opts: SobolevOptions<T>) -> Result<Self> {
        if opts.grid_count < 2 || opts.mc_count < 2 {
            return Err(Error::InvalidParameter("grid_count and mc_count must be at least 2".into()));
        }
        let grid = space.halton_grid(opts.grid_count);
        let values: Vec<T> = grid.iter().map(|u| f.eval(u)).collect();
        let (lo, hi) = values.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
        let points = space.sample_ball_sharded(opts.mc_count, opts.seed, opts.shards)?.points;
        let grad_norms = points
            .par_iter()
            .map(|u| Ok(space.dual_norm(&f.gradient(u))?.value))
            .collect::<Result<Vec<T>>>()?;
        Ok(Self { space, f, opts, grid, lhs: hi - lo, grad_norms })
    }

    /// `max f − min f` over the grid.
    pub fn lhs(&self) -> T {
        self.lhs
    }

    /// `rⁿ/n`: converts a mean over `T` into `(1/(n|B(0,1)|))∫_T`.
    fn volume_factor(&self) -> T {
        self.space.radius().powi(self.space.dim() as i32) / T::of_usize(self.space.dim())
    }

    fn mean_and_error<F: Fn(T) -> T>(&self, h: F) -> (T, T) {
        let m = T::of_usize(self.grad_norms.len());
        let (s, s2) = self.grad_norms.iter().fold((T::zero(), T::zero()), |(a, b), &g| {
            let v = h(g);
            (a + v, b + v * v)
        });
        let mean = s / m;
        let var = ((s2 - m * mean * mean) / (m - T::one())).max(T::zero());
        (mean, (var / m).sqrt())
    }

    /// `term₂ = (1/(n|B(0,1)|))∫_T φ(‖∇f‖*/B)` and its standard error.
    pub fn term2(&self, phi: &OrliczFunction<T>, b: T) -> (T, T) {
        let (mean, se) = self.mean_and_error(|g| phi.eval(g / b));
        let v = self.volume_factor();
        (v * mean, v * se)
    }

    /// `term₁`, or `DivergentTerm1` when the tail test certifies divergence.
    pub fn term1(&self, psi: &OrliczFunction<T>, a: T) -> Result<T> {
        match sobolev_term1(self.space, psi, a, &self.opts.tail)? {
            TailOutcome::Converged { value, .. } => Ok(value),
            TailOutcome::Diverged { .. } => Err(Error::DivergentTerm1),
            TailOutcome::Undecided { .. } => Err(Error::SlowConvergence { budget: self.opts.tail.max_halvings }),
        }
    }

    pub fn check(&self, phi: &OrliczFunction<T>, psi: &OrliczFunction<T>, a: T, b: T) -> Result<SobolevCheck<T>> {
        if !(a > T::zero() && b > T::zero()) {
            return Err(Error::InvalidParameter(format!("A and B must be positive, got {a}, {b}")));
        }
        let term1 = self.term1(psi, a)?;
        let (term2, se) = self.term2(phi, b);
        let six_ab = T::lit(6.0) * a * b;
        let rhs = six_ab * (term1 + term2);
        Ok(SobolevCheck { a, b, lhs: self.lhs, term1, term2, term2_std_error: se, rhs, rhs_std_error: six_ab * se, margin: rhs - self.lhs })
    }

    /// The `(A, B)` minimizing the right-hand side.
    ///
    /// For `φ = x^p/p` with `p > n` this is the closed-form pair making `term₁ = 1/q` and
    /// `term₂ = 1/p`. Otherwise the best of a 9×9 grid of factors `4^{−4..4}` around a
    /// heuristic centre, together with `(1, 1)`.
    pub fn optimal_ab(&self, phi: &OrliczFunction<T>) -> Result<(T, T)> {
        let n = T::of_usize(self.space.dim());
        let tiny = T::epsilon();
        if let Some(p) = phi.power_exponent().filter(|&p| p > n) {
            let q = dual_exponent(p);
            let gamma = (T::one() - q) * (n - T::one()) + T::one();
            let a = (self.space.radius().powf(gamma) / gamma).powf(q.recip());
            let (j, _) = self.term2(phi, T::one());
            let b = (p * j).powf(p.recip()).max(tiny);
            return Ok((a, b));
        }
        let psi = phi.conjugate()?;
        let (mean, _) = self.mean_and_error(|g| g);
        let centre_b = mean.max(tiny);
        let mut probes = vec![(T::one(), T::one())];
        for i in -4..=4 {
            for j in -4..=4 {
                probes.push((T::lit(4f64.powi(i)), centre_b * T::lit(4f64.powi(j))));
            }
        }
        let mut best: Option<(T, T, T)> = None;
        for (a, b) in probes {
            match self.check(phi, &psi, a, b) {
                Ok(c) => {
                    if best.is_none_or(|(_, _, r)| c.rhs < r) {
                        best = Some((a, b, c.rhs));
                    }
                }
                Err(Error::DivergentTerm1) => {}
                Err(e) => return Err(e),
            }
        }
        best.map(|(a, b, _)| (a, b)).ok_or(Error::DivergentTerm1)
    }

    /// The Hölder-form check for exponent `p > n`.
    pub fn holder(&self, p: T) -> Result<HolderCheck<T>> {
        let n = T::of_usize(self.space.dim());
        if !(p > n) {
            return Err(Error::ExponentOutOfRange { p: p.as_f64(), n: self.space.dim() });
        }
        let expo = T::one() - n / p;
        let values: Vec<T> = self.grid.iter().map(|u| self.f.eval(u)).collect();
        let max_ratio = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let mut m = T::zero();
                for j in 0..i {
                    let d = self.space.distance(&self.grid[i], &self.grid[j]);
                    if d > T::zero() {
                        m = m.max((values[i] - values[j]).abs() / d.powf(expo));
                    }
                }
                m
            })
            .reduce(T::zero, T::max);
        let (mean, se) = self.mean_and_error(|g| g.powf(p));
        let integral = self.volume_factor() * mean;
        let lead = T::lit(6.0) * ((p - T::one()) / (p - n)).powf(T::one() - p.recip());
        let bound_constant = lead * integral.powf(p.recip());
        let std_error = if mean > T::zero() { bound_constant * se / (p * mean) } else { T::zero() };
        Ok(HolderCheck { p, max_ratio, bound_constant, std_error })
    }
}

/// One inequality check at `(A, B)`.
pub fn check_theorem<T: Scalar>(
    space: &NormSpace<T>,
    phi: &OrliczFunction<T>,
    f: &TestFunction<T>,
    a: T,
    b: T,
    opts: SobolevOptions<T>,
) -> Result<SobolevCheck<T>> {
    let psi = phi.conjugate()?;
    SobolevEvaluator::new(space, f, opts)?.check(phi, &psi, a, b)
}

/// The Hölder-form check; `ExponentOutOfRange` when `p ≤ n`.
pub fn holder_check<T: Scalar>(space: &NormSpace<T>, f: &TestFunction<T>, p: T, opts: SobolevOptions<T>) -> Result<HolderCheck<T>> {
    if !(p > T::of_usize(space.dim())) {
        return Err(Error::ExponentOutOfRange { p: p.as_f64(), n: space.dim() });
    }
    SobolevEvaluator::new(space, f, opts)?.holder(p)
}

/// The standard corpus on `ℝⁿ`: one member of each family.
pub fn standard_corpus<T: Scalar>(n: usize, seed: u64) -> Vec<TestFunction<T>> {
    let a: Vec<T> = (0..n).map(|i| T::lit((-0.5f64).powi(i as i32))).collect();
    vec![
        TestFunction::linear(a),
        TestFunction::radial(T::lit(0.6)),
        TestFunction::random_trig(n, 6, seed),
        TestFunction::piecewise_linear(n),
    ]
}

/// The 5×5 grid `A, B ∈ {1/4, 1/2, 1, 2, 4}`.
pub fn standard_probes<T: Scalar>() -> Vec<(T, T)> {
    let levels = [0.25, 0.5, 1.0, 2.0, 4.0];
    levels.iter().flat_map(|&a| levels.iter().map(move |&b| (T::lit(a), T::lit(b)))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SobolevOptions<f64> {
        SobolevOptions { grid_count: 400, mc_count: 20_000, seed: 5, shards: 4, tail: TailOptions::default() }
    }

    #[test]
    fn constant_function_has_zero_lhs() {
        let space = NormSpace::linf(2, 1.0).unwrap();
        let phi = OrliczFunction::power(3.0).unwrap();
        let c = check_theorem(&space, &phi, &TestFunction::constant(2, 3.0), 1.0, 1.0, opts()).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert_eq!(c.term2, 0.0);
        assert!(c.holds(1e-6));
    }

    #[test]
    fn linear_on_square_hand_values() {
        // term1 = ∫_0^1 (2/3) ε^{-1/2} dε = 4/3; term2 = (1/2)·E[1/3] = 1/6.
        let space = NormSpace::linf(2, 1.0).unwrap();
        let phi = OrliczFunction::power(3.0).unwrap();
        let f = TestFunction::linear(vec![1.0, 0.0]);
        let c = check_theorem(&space, &phi, &f, 1.0, 1.0, opts()).unwrap();
        assert!((c.term1 - 4.0 / 3.0).abs() < 1e-7, "{}", c.term1);
        assert!((c.term2 - 1.0 / 6.0).abs() < 1e-12);
        assert!((c.rhs - 9.0).abs() < 1e-6);
        assert!(c.lhs > 1.9 && c.lhs <= 2.0);
    }

    #[test]
    fn divergent_term1_is_reported() {
        let space = NormSpace::linf(2, 1.0).unwrap();
        let phi = OrliczFunction::power(2.0).unwrap();
        let f = TestFunction::linear(vec![1.0, 0.0]);
        assert!(matches!(check_theorem(&space, &phi, &f, 1.0, 1.0, opts()), Err(Error::DivergentTerm1)));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for n in 1..=3 {
            let space = NormSpace::lp(n, 2.0, 1.0).unwrap();
            for f in standard_corpus::<f64>(n, 11) {
                let err = f.gradient_check(&space, 100, 3).unwrap();
                assert!(err < 1e-4, "{:?} n={n}: {err}", f.family);
            }
        }
    }

    #[test]
    fn holder_desk_check() {
        let space = NormSpace::linf(2, 1.0).unwrap();
        let f = TestFunction::linear(vec![1.0, 0.0]);
        let h = holder_check(&space, &f, 3.0, opts()).unwrap();
        assert!((h.bound_constant - 6.0 * 2f64.cbrt()).abs() < 1e-12);
        assert!(h.max_ratio <= 2f64.powf(2.0 / 3.0) + 1e-12);
        assert!(h.holds(3.0));
        assert!(matches!(holder_check(&space, &f, 2.0, opts()), Err(Error::ExponentOutOfRange { .. })));
    }

    #[test]
    fn closed_form_pair_gives_six_ab() {
        let space = NormSpace::lp(1, 2.0, 1.0).unwrap();
        let phi = OrliczFunction::power(2.0).unwrap();
        let f = TestFunction::radial(0.6);
        let ev = SobolevEvaluator::new(&space, &f, opts()).unwrap();
        let (a, b) = ev.optimal_ab(&phi).unwrap();
        assert!((a - 1.0).abs() < 1e-15);
        let psi = phi.conjugate().unwrap();
        let c = ev.check(&phi, &psi, a, b).unwrap();
        assert!((c.rhs - 6.0 * a * b).abs() < 1e-9 * c.rhs);
        let unit = ev.check(&phi, &psi, 1.0, 1.0).unwrap();
        assert!(c.rhs <= unit.rhs * (1.0 + 1e-12));
    }

    #[test]
    fn scale_coherence() {
        let space = NormSpace::linf(2, 1.0).unwrap();
        let phi = OrliczFunction::power(3.0).unwrap();
        let psi = phi.conjugate().unwrap();
        let f = TestFunction::random_trig(2, 4, 9);
        let g = {
            let (f1, f2) = (f.clone(), f.clone());
            TestFunction::custom(move |u| 2.0 * f1.eval(u), move |u| f2.gradient(u).iter().map(|x| 2.0 * x).collect())
        };
        let c1 = SobolevEvaluator::new(&space, &f, opts()).unwrap().check(&phi, &psi, 0.5, 1.5).unwrap();
        let c2 = SobolevEvaluator::new(&space, &g, opts()).unwrap().check(&phi, &psi, 0.5, 3.0).unwrap();
        assert!((c2.rhs - 2.0 * c1.rhs).abs() < 1e-12 * c2.rhs);
        assert!((c2.lhs - 2.0 * c1.lhs).abs() < 1e-12);
    }
}
