//! The extremal process `X(t, ω) = ∫_{d(ω,0)}^{d(ω,t)} g(ε) dε` on `T = B(0, r)` and its
//! Monte Carlo checks.
//!
//! `g` is assembled level by level from the constants `S_k`. Paths are evaluated through the
//! upper antiderivative `U(ε) = ∫_ε^{η(r)} g`, tabulated per level as a cubic Hermite
//! interpolant with exact slopes `−g`, so that `X(t, ω) = U(d(ω,0)) − U(d(ω,t))`.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{fmt_num, BoundsReport};
use crate::error::{Error, Result};
use crate::geometry::{shard_rng, Modulus, NormSpace};
use crate::orlicz::OrliczFunction;
use crate::quadrature::{integrate, integrate_plain, QuadOptions};
use crate::scalar::Scalar;

/// Relative accuracy of the antiderivative tables against each level's mass.
const TABLE_TOL: f64 = 1e-12;
const MAX_REFINE_DEPTH: usize = 40;
/// Pairs closer than this fraction of `r` are not drawn: their distance is not resolvable.
const MIN_PAIR_SEPARATION: f64 = 1e-9;
const PAIR_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone)]
struct LevelTable<T> {
    lower: T,
    upper: T,
    s: T,
    /// Ascending nodes with `U_k(x) = ∫_x^{upper} g` and `g(x)`; a leading node at zero is
    /// joined linearly.
    nodes: Vec<(T, T, T)>,
}

impl<T: Scalar> LevelTable<T> {
    fn mass(&self) -> T {
        self.nodes[0].1
    }

    fn eval(&self, x: T) -> T {
        let i = self.nodes.partition_point(|n| n.0 <= x);
        if i == 0 {
            return self.mass();
        }
        if i == self.nodes.len() {
            return T::zero();
        }
        let (x0, h0, g0) = self.nodes[i - 1];
        let (x1, h1, g1) = self.nodes[i];
        let h = x1 - x0;
        let t = (x - x0) / h;
        if x0 == T::zero() {
            return h0 + (h1 - h0) * t;
        }
        hermite(t, h, h0, -g0, h1, -g1)
    }
}

fn hermite<T: Scalar>(t: T, h: T, y0: T, m0: T, y1: T, m1: T) -> T {
    let (two, three) = (T::lit(2.0), T::lit(3.0));
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = two * t3 - three * t2 + T::one();
    let h10 = t3 - two * t2 + t;
    let h01 = three * t2 - two * t3;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
}

/// The density `g` and its tabulated antiderivative.
#[derive(Clone)]
pub struct DensityG<T> {
    space: NormSpace<T>,
    modulus: Modulus<T>,
    phi: OrliczFunction<T>,
    psi: OrliczFunction<T>,
    k_const: T,
    eta_r: T,
    levels: Vec<LevelTable<T>>,
    /// `above[k] = ∫_{upper_k}^{η(r)} g`.
    above: Vec<T>,
    total: T,
}

/// Builds `g` on the levels of `report`, which must all be finite.
pub fn build_density<T: Scalar>(
    space: &NormSpace<T>,
    modulus: &Modulus<T>,
    phi: &OrliczFunction<T>,
    report: &BoundsReport<T>,
) -> Result<DensityG<T>> {
    if report.levels.is_empty() {
        return Err(Error::InvalidParameter("bounds report has no levels".into()));
    }
    if report.n != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: report.n });
    }
    if let Some(l) = report.levels.iter().find(|l| !(l.s.is_finite() && l.s > T::zero())) {
        return Err(Error::InfiniteLevel { level: l.k });
    }
    let mut density = DensityG {
        space: space.clone(),
        modulus: modulus.clone(),
        phi: phi.clone(),
        psi: phi.conjugate()?,
        k_const: T::lit(3.0) * (T::of_usize(space.dim()) + T::lit(2.0)),
        eta_r: modulus.eta(space.radius()),
        levels: Vec::new(),
        above: Vec::new(),
        total: T::zero(),
    };
    let tables: Vec<Result<LevelTable<T>>> = report
        .levels
        .par_iter()
        .map(|l| density.tabulate(l.lower, l.upper, l.s))
        .collect();
    let mut levels = tables.into_iter().collect::<Result<Vec<_>>>()?;
    levels.sort_by(|a, b| b.upper.partial_cmp(&a.upper).expect("finite radii"));
    let mut acc = T::zero();
    for l in &levels {
        density.above.push(acc);
        acc = acc + l.mass();
    }
    density.total = acc;
    density.levels = levels;
    Ok(density)
}

impl<T: Scalar> DensityG<T> {
    /// `K = 3(n + 2)`.
    pub fn k_const(&self) -> T {
        self.k_const
    }

    pub fn space(&self) -> &NormSpace<T> {
        &self.space
    }

    pub fn modulus(&self) -> &Modulus<T> {
        &self.modulus
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// `(r_{k+1}, r_k, S_k)` for level `k`.
    pub fn level(&self, k: usize) -> (T, T, T) {
        let l = &self.levels[k];
        (l.lower, l.upper, l.s)
    }

    fn g_on(&self, s: T, eps: T) -> T {
        if eps <= T::zero() {
            return T::zero();
        }
        let u = eps / (self.modulus.eta_inv(eps) / self.space.radius()).powi(self.space.dim() as i32);
        s / self.k_const * self.psi.eval(u / s) / u
    }

    /// `ψ(rⁿε/(S_k η⁻¹(ε)ⁿ))`, the quantity bounding `K·φ(g(ε))`.
    pub fn psi_argument_value(&self, eps: T) -> T {
        match self.level_of(eps) {
            Some(k) => {
                let u = eps / (self.modulus.eta_inv(eps) / self.space.radius()).powi(self.space.dim() as i32);
                self.psi.eval(u / self.levels[k].s)
            }
            None => T::zero(),
        }
    }

    fn level_of(&self, eps: T) -> Option<usize> {
        if !(eps > T::zero()) || eps > self.eta_r {
            return None;
        }
        let k = self.levels.partition_point(|l| l.lower >= eps);
        (k < self.levels.len() && eps <= self.levels[k].upper).then_some(k)
    }

    /// `g(ε)`; zero above `η(r)` and below the last level.
    pub fn g(&self, eps: T) -> T {
        match self.level_of(eps) {
            Some(k) => self.g_on(self.levels[k].s, eps),
            None => T::zero(),
        }
    }

    /// `∫_ε^{η(r)} g` from the tables.
    pub fn upper_antiderivative(&self, eps: T) -> T {
        if eps >= self.eta_r {
            return T::zero();
        }
        let k = self.levels.partition_point(|l| l.lower >= eps);
        if k == self.levels.len() {
            return self.total;
        }
        self.above[k] + self.levels[k].eval(eps)
    }

    /// `G(ε) = ∫_0^ε g`.
    pub fn antiderivative(&self, eps: T) -> T {
        self.total - self.upper_antiderivative(eps)
    }

    /// Total mass `∫_0^{η(r)} g` from the tables.
    pub fn total_mass(&self) -> T {
        self.total
    }

    /// `K⁻¹ Σ S_k`.
    pub fn target(&self) -> T {
        self.levels.iter().fold(T::zero(), |a, l| a + l.s) / self.k_const
    }

    pub fn level_mass_table(&self, k: usize) -> T {
        self.levels[k].mass()
    }

    /// `∫ g` over level `k` by fresh quadrature, independent of the tables.
    pub fn level_mass_quadrature(&self, k: usize, rel_tol: T) -> Result<T> {
        let l = &self.levels[k];
        let opts = QuadOptions::relative(rel_tol);
        if l.lower > T::zero() {
            return Ok(integrate(|e| self.g_on(l.s, e), l.lower, l.upper, &opts)?.value);
        }
        let tail = crate::quadrature::TailOptions { quad: opts, ..Default::default() };
        crate::quadrature::dyadic_tail(|e| self.g_on(l.s, e), l.upper, &tail)?
            .value()
            .ok_or(Error::SlowConvergence { budget: tail.max_halvings })
    }

    fn tabulate(&self, lower: T, upper: T, s: T) -> Result<LevelTable<T>> {
        let g = |e: T| self.g_on(s, e);
        let quad = QuadOptions::relative(T::tol(1e-13));
        let half = T::lit(0.5);

        // Panel breakpoints, descending, no wider than a factor of two.
        let mut breaks = vec![upper];
        let floor = lower;
        loop {
            let b = breaks.last().copied().expect("nonempty") * half;
            if b <= floor {
                break;
            }
            breaks.push(b);
            let n = breaks.len();
            if floor == T::zero() && n >= 8 {
                let last = integrate_plain(g, breaks[n - 1], breaks[n - 2], &quad)?.value;
                let prev = integrate_plain(g, breaks[n - 2], breaks[n - 3], &quad)?.value;
                if prev > T::zero() && last / prev < T::lit(0.95) && last <= T::lit(1e-16) * s / self.k_const {
                    break;
                }
                if n > 4000 {
                    return Err(Error::SlowConvergence { budget: n });
                }
            }
        }
        if floor > T::zero() {
            breaks.push(floor);
        }

        let mut desc: Vec<(T, T, T)> = vec![(upper, T::zero(), g(upper))];
        for w in breaks.windows(2) {
            let (x1, x0) = (w[0], w[1]);
            let (_, h1, g1) = *desc.last().expect("nonempty");
            let mass = integrate_plain(g, x0, x1, &quad)?.value;
            let tol = T::lit(TABLE_TOL) * s / self.k_const;
            self.refine(&g, x0, h1 + mass, g(x0), x1, h1, g1, tol, 0, &quad, &mut desc)?;
        }
        if floor == T::zero() {
            // Geometric extrapolation of the remaining mass below the last node.
            let n = breaks.len();
            let last = integrate_plain(g, breaks[n - 1], breaks[n - 2], &quad)?.value;
            let prev = integrate_plain(g, breaks[n - 2], breaks[n - 3], &quad)?.value;
            let rho = if prev > T::zero() { (last / prev).min(T::lit(0.99)) } else { T::zero() };
            let (_, h, _) = *desc.last().expect("nonempty");
            desc.push((T::zero(), h + last * rho / (T::one() - rho), T::zero()));
        }
        desc.reverse();
        Ok(LevelTable { lower, upper, s, nodes: desc })
    }

    /// Appends nodes in `[x0, x1)` (descending) so the Hermite interpolant meets `tol`.
    #[allow(clippy::too_many_arguments)]
    fn refine<F: Fn(T) -> T>(
        &self,
        g: &F,
        x0: T,
        h0: T,
        g0: T,
        x1: T,
        h1: T,
        g1: T,
        tol: T,
        depth: usize,
        quad: &QuadOptions<T>,
        desc: &mut Vec<(T, T, T)>,
    ) -> Result<()> {
        let xm = (x0 + x1) * T::lit(0.5);
        let hm = h1 + integrate_plain(g, xm, x1, quad)?.value;
        let gm = g(xm);
        let predicted = hermite(T::lit(0.5), x1 - x0, h0, -g0, h1, -g1);
        if (predicted - hm).abs() <= tol || depth >= MAX_REFINE_DEPTH {
            desc.push((xm, hm, gm));
            desc.push((x0, h0, g0));
            return Ok(());
        }
        self.refine(g, xm, hm, gm, x1, h1, g1, tol, depth + 1, quad, desc)?;
        self.refine(g, x0, h0, g0, xm, hm, gm, tol, depth + 1, quad, desc)
    }

    /// The path indexed by `omega`.
    pub fn path(&self, omega: &[T]) -> Result<ProcessSample<'_, T>> {
        self.check_in_ball(omega)?;
        let base = self.upper_antiderivative(self.modulus.eta(self.space.norm(omega)));
        Ok(ProcessSample { density: self, omega: omega.to_vec(), base })
    }

    fn check_in_ball(&self, x: &[T]) -> Result<()> {
        self.space.check_dim(x)?;
        let r = self.space.radius();
        let excess = self.space.norm(x) - r;
        if excess > T::lit(1e-12) * r {
            return Err(Error::OutOfBall { excess: excess.as_f64() });
        }
        Ok(())
    }

    fn increment(&self, omega: &[T], s: &[T], t: &[T]) -> T {
        let ds = self.modulus.eta(self.space.distance(omega, s));
        let dt = self.modulus.eta(self.space.distance(omega, t));
        self.upper_antiderivative(dt) - self.upper_antiderivative(ds)
    }

    /// `(r_{k+1}, r_k]` clipped to resolvable scales, for levels that admit near-diagonal pairs.
    fn pair_scales(&self) -> Vec<(usize, T, T)> {
        let r = self.space.radius();
        let min_eps = self.modulus.eta(r * T::lit(MIN_PAIR_SEPARATION));
        self.levels
            .iter()
            .enumerate()
            .filter_map(|(k, l)| {
                let lo = if l.lower > T::zero() { l.lower } else { l.upper * T::lit(2f64.powi(-20)) };
                let lo = lo.max(min_eps);
                (lo < l.upper).then_some((k, lo, l.upper))
            })
            .collect()
    }

    fn draw_pair<R: Rng + ?Sized>(&self, rng: &mut R, index: usize, scales: &[(usize, T, T)]) -> Result<(Vec<T>, Vec<T>, Option<usize>)> {
        let n = self.space.dim();
        let r = self.space.radius();
        let mut s = vec![T::zero(); n];
        let mut t = vec![T::zero(); n];
        if index.is_multiple_of(2) || scales.is_empty() {
            loop {
                self.space.draw_in_ball(rng, r, &mut s)?;
                self.space.draw_in_ball(rng, r, &mut t)?;
                if self.space.distance(&s, &t) > r * T::lit(MIN_PAIR_SEPARATION) {
                    return Ok((s, t, None));
                }
            }
        }
        let (k, lo, hi) = scales[(index / 2) % scales.len()];
        let u = T::lit(rng.random::<f64>());
        let eps = (lo.ln() + u * (hi.ln() - lo.ln())).exp().min(hi);
        let delta = self.modulus.eta_inv(eps).min(r);
        if r - delta > r * T::lit(1e-12) {
            self.space.draw_in_ball(rng, r - delta, &mut s)?;
        }
        let mut dir = vec![T::zero(); n];
        self.space.draw_direction(rng, &mut dir);
        for i in 0..n {
            t[i] = s[i] + delta * dir[i];
        }
        Ok((s, t, Some(k)))
    }
}

/// One path `t ↦ X(t, ω)`.
pub struct ProcessSample<'a, T> {
    density: &'a DensityG<T>,
    pub omega: Vec<T>,
    base: T,
}

impl<T: Scalar> ProcessSample<'_, T> {
    pub fn value(&self, t: &[T]) -> Result<T> {
        self.density.check_in_ball(t)?;
        let d = self.density.modulus.eta(self.density.space.distance(&self.omega, t));
        Ok(self.base - self.density.upper_antiderivative(d))
    }
}

/// `X(tᵢ, ω)` for each point.
pub fn evaluate_path<T: Scalar>(density: &DensityG<T>, omega: &[T], points: &[Vec<T>]) -> Result<Vec<T>> {
    let path = density.path(omega)?;
    points.iter().map(|t| path.value(t)).collect()
}

/// The boundary point `((‖ω‖ − r)/‖ω‖)·ω`, at distance `r` from `ω`.
pub fn antipode<T: Scalar>(space: &NormSpace<T>, omega: &[T]) -> Vec<T> {
    let r = space.radius();
    let norm = space.norm(omega);
    if norm > T::zero() {
        let f = (norm - r) / norm;
        return omega.iter().map(|&w| f * w).collect();
    }
    let mut e = vec![T::zero(); omega.len()];
    e[0] = T::one();
    let ne = space.norm(&e);
    e[0] = r / ne;
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEstimate<T> {
    pub s: Vec<T>,
    pub t: Vec<T>,
    pub d: T,
    /// Level whose scale the pair was drawn at; `None` for a uniform pair.
    pub level: Option<usize>,
    pub estimate: T,
    pub std_error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementReport<T> {
    pub pairs: Vec<PairEstimate<T>>,
    pub samples: usize,
    pub max_estimate: T,
    pub max_std_error: T,
    /// Largest `(estimate − 1)/std_error` over pairs with positive error.
    pub max_excess_sigma: T,
}

impl<T: Scalar> IncrementReport<T> {
    /// Every estimate lies within `sigmas` standard errors of `[0, 1]`.
    pub fn holds(&self, sigmas: T) -> bool {
        self.pairs.iter().all(|p| p.estimate <= T::one() + sigmas * p.std_error)
    }

    /// `pair,s,t,d,estimate,stderr,level`; vector coordinates are `;`-separated.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "pair,s,t,d,estimate,stderr,level")?;
        let vec = |v: &[T]| v.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(";");
        for (i, p) in self.pairs.iter().enumerate() {
            let level = p.level.map(|k| k.to_string()).unwrap_or_else(|| "uniform".into());
            writeln!(out, "{i},{},{},{},{},{},{level}", vec(&p.s), vec(&p.t), fmt_num(p.d), fmt_num(p.estimate), fmt_num(p.std_error))?;
        }
        Ok(())
    }
}

/// Estimates `Eφ(|X(s) − X(t)|/d(s, t))` over `mc_count` uniform `ω` for `pair_count` pairs.
///
/// Pairs alternate between uniform pairs and pairs with `d(s, t)` log-uniform inside one
/// level, cycling through the levels. Output is deterministic in `(seed, shards)`.
pub fn verify_increment_condition<T: Scalar>(
    density: &DensityG<T>,
    pair_count: usize,
    mc_count: usize,
    seed: u64,
    shards: usize,
) -> Result<IncrementReport<T>> {
    if pair_count == 0 || mc_count == 0 {
        return Err(Error::InvalidParameter("pair and sample counts must be at least 1".into()));
    }
    let omegas = density.space.sample_ball_sharded(mc_count, seed, shards)?.points;
    let scales = density.pair_scales();
    let mut rng = shard_rng(seed, PAIR_STREAM);
    let drawn = (0..pair_count).map(|i| density.draw_pair(&mut rng, i, &scales)).collect::<Result<Vec<_>>>()?;

    let pairs: Vec<PairEstimate<T>> = drawn
        .into_par_iter()
        .map(|(s, t, level)| {
            let d = density.modulus.eta(density.space.distance(&s, &t));
            let (mut sum, mut sum_sq) = (T::zero(), T::zero());
            for w in &omegas {
                let v = density.phi.eval(density.increment(w, &s, &t).abs() / d);
                sum = sum + v;
                sum_sq = sum_sq + v * v;
            }
            let m = T::of_usize(omegas.len());
            let mean = sum / m;
            let var = if omegas.len() > 1 { ((sum_sq - m * mean * mean) / (m - T::one())).max(T::zero()) } else { T::zero() };
            PairEstimate { s, t, d, level, estimate: mean, std_error: (var / m).sqrt() }
        })
        .collect();

    let best = pairs.iter().max_by(|a, b| a.estimate.partial_cmp(&b.estimate).expect("finite estimates")).expect("pair_count >= 1");
    let max_excess_sigma = pairs
        .iter()
        .filter(|p| p.std_error > T::zero())
        .map(|p| (p.estimate - T::one()) / p.std_error)
        .fold(T::neg_infinity(), T::max);
    Ok(IncrementReport {
        max_estimate: best.estimate,
        max_std_error: best.std_error,
        max_excess_sigma,
        samples: omegas.len(),
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupIdentity<T> {
    /// Mean over `ω` of the sup over grid plus extremizers.
    pub mean_sup: T,
    /// `K⁻¹ Σ S_k`.
    pub target: T,
    /// Largest `|sup − target|` over the sampled `ω`.
    pub max_deviation: T,
    /// Largest sup over the grid alone (no extremizers).
    pub grid_only_max: T,
    pub samples: usize,
}

impl<T: Scalar> SupIdentity<T> {
    pub fn holds(&self, rel_tol: T) -> bool {
        self.max_deviation <= rel_tol * self.target && self.grid_only_max <= self.target * (T::one() + rel_tol)
    }
}

/// Per-`ω` sup of `|X(s) − X(t)|` over a Halton grid plus `ω` and its antipode.
pub fn verify_sup_identity<T: Scalar>(
    density: &DensityG<T>,
    grid_count: usize,
    mc_count: usize,
    seed: u64,
    shards: usize,
) -> Result<SupIdentity<T>> {
    if grid_count < 2 || mc_count == 0 {
        return Err(Error::InvalidParameter("grid_count must be at least 2 and mc_count at least 1".into()));
    }
    let grid = density.space.halton_grid(grid_count);
    let omegas = density.space.sample_ball_sharded(mc_count, seed, shards)?.points;
    let target = density.target();
    let per_omega: Vec<Result<(T, T)>> = omegas
        .par_iter()
        .map(|w| {
            let values = evaluate_path(density, w, &grid)?;
            let (lo, hi) = values.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
            let path = density.path(w)?;
            let at_omega = path.value(w)?;
            let at_antipode = path.value(&antipode(&density.space, w))?;
            let full = hi.max(at_omega).max(at_antipode) - lo.min(at_omega).min(at_antipode);
            Ok((full, hi - lo))
        })
        .collect();
    let (mut sum, mut dev, mut grid_max) = (T::zero(), T::zero(), T::zero());
    for r in per_omega {
        let (full, grid_only) = r?;
        sum = sum + full;
        dev = dev.max((full - target).abs());
        grid_max = grid_max.max(grid_only);
    }
    Ok(SupIdentity {
        mean_sup: sum / T::of_usize(omegas.len()),
        target,
        max_deviation: dev,
        grid_only_max: grid_max,
        samples: omegas.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{BoundsContext, SolverOptions};
    use crate::partition::{build_partition, PartitionOptions};

    fn density(n: usize, alpha: f64, p: f64) -> DensityG<f64> {
        let space = NormSpace::linf(n, 1.0).unwrap();
        let modulus = Modulus::power(alpha).unwrap();
        let phi = OrliczFunction::power(p).unwrap();
        let partition = build_partition(&space, &modulus, &PartitionOptions::default()).unwrap();
        let ctx = BoundsContext::new(&space, &modulus, &phi, &partition, SolverOptions::default()).unwrap();
        let report = ctx.total_bound().unwrap();
        build_density(&space, &modulus, &phi, &report).unwrap()
    }

    #[test]
    fn constant_density_on_the_line() {
        let d = density(1, 1.0, 2.0);
        let c = 0.5f64.sqrt() / 9.0;
        for e in [1e-6, 0.1, 0.5, 1.0] {
            assert!((d.g(e) - c).abs() < 1e-9 * c, "{}", d.g(e));
        }
        assert_eq!(d.g(1.5), 0.0);
        assert!((d.total_mass() - c).abs() < 1e-9 * c);
        assert!((d.antiderivative(0.25) - 0.25 * c).abs() < 1e-9 * c);
    }

    #[test]
    fn level_masses_match_constants() {
        let d = density(2, 0.5, 3.0);
        for k in 0..d.level_count() {
            let (_, _, s) = d.level(k);
            let want = s / d.k_const();
            assert!((d.level_mass_table(k) - want).abs() < 1e-8 * want, "{k} {} {want} {}", d.level_mass_table(k), d.level_mass_quadrature(k, 1e-11).unwrap());
            assert!((d.level_mass_quadrature(k, 1e-11).unwrap() - want).abs() < 1e-8 * want);
        }
    }

    #[test]
    fn table_interpolation_matches_quadrature() {
        let d = density(2, 2.0 / 3.0, 6.0);
        for &e in &[0.9, 0.3, 0.07, 1e-3, 1e-5] {
            let direct = integrate(|x| d.g(x), e, 1.0, &QuadOptions::relative(1e-12)).unwrap().value;
            assert!((d.upper_antiderivative(e) - direct).abs() < 1e-8 * d.total_mass(), "{e}");
        }
    }

    #[test]
    fn path_examples() {
        let d = density(2, 1.0, 3.0);
        let w = vec![0.3, -0.2];
        let path = d.path(&w).unwrap();
        assert_eq!(path.value(&[0.0, 0.0]).unwrap(), 0.0);
        let d0 = d.space().norm(&w);
        assert!((path.value(&w).unwrap() + d.antiderivative(d0)).abs() < 1e-12);
        let a = antipode(d.space(), &w);
        assert!((path.value(&a).unwrap() - d.upper_antiderivative(d0)).abs() < 1e-12);
        assert!(matches!(d.path(&[1.5, 0.0]), Err(Error::OutOfBall { .. })));
    }

    #[test]
    fn k2_inequality_pointwise() {
        let d = density(1, 0.5, 2.0);
        let phi = OrliczFunction::power(2.0).unwrap();
        for k in 0..d.level_count().min(10) {
            let (lo, hi, _) = d.level(k);
            for i in 1..=100 {
                let e = lo + (hi - lo) * i as f64 / 100.0;
                let lhs = phi.eval(d.g(e));
                let rhs = d.psi_argument_value(e) / d.k_const();
                assert!(lhs <= rhs * (1.0 + 1e-8), "{k} {e}");
            }
        }
    }

    #[test]
    fn sup_identity_with_extremizers() {
        let d = density(1, 1.0, 2.0);
        let rep = verify_sup_identity(&d, 64, 200, 7, 4).unwrap();
        assert!((rep.target - 0.5f64.sqrt() / 9.0).abs() < 1e-9);
        assert!(rep.holds(1e-8), "{rep:?}");
    }

    #[test]
    fn increment_condition_small_run() {
        let d = density(1, 1.0, 2.0);
        let rep = verify_increment_condition(&d, 10, 2000, 3, 4).unwrap();
        assert_eq!(rep.pairs.len(), 10);
        assert!(rep.holds(3.0));
        let again = verify_increment_condition(&d, 10, 2000, 3, 4).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn infinite_level_is_rejected() {
        let space = NormSpace::linf(2, 1.0).unwrap();
        let modulus = Modulus::identity();
        let phi = OrliczFunction::power(2.0).unwrap();
        let partition = build_partition(&space, &modulus, &PartitionOptions::default()).unwrap();
        let ctx = BoundsContext::new(&space, &modulus, &phi, &partition, SolverOptions::default()).unwrap();
        let report = ctx.total_bound().unwrap();
        assert!(matches!(build_density(&space, &modulus, &phi, &report), Err(Error::InfiniteLevel { level: 0 })));
    }
}
