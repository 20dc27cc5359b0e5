//! The decreasing scale sequence `(r_k)` and its halving/ratio-doubling labels.
//!
//! Starting from `r_0 = η(r)`, each step takes
//! `r_{k+1} = inf{ε ≥ 0 : r_k ≤ 2ε or ε/η⁻¹(ε) ≤ 2 r_k/η⁻¹(r_k)}`. Because `ε/η⁻¹(ε)`
//! is nonincreasing, the second condition holds on `[c_k, ∞)` where `c_k` solves the
//! equality, so `r_{k+1} = min(r_k/2, c_k)`. When `2 r_k/η⁻¹(r_k)` reaches `η′(0)` the
//! condition holds for every `ε > 0`, the infimum is zero and the sequence terminates.

use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geometry::{Modulus, NormSpace};
use crate::roots::{bisect, expand_down};
use crate::scalar::{log_grid, rel_diff, Scalar};

/// Which condition fixed `r_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepLabel {
    /// `r_k = 2 r_{k+1}` (the set `I`; ties land here).
    Halving,
    /// `r_{k+1}/η⁻¹(r_{k+1}) = 2 r_k/η⁻¹(r_k)` (the set `J`).
    RatioDoubling,
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepLabel::Halving => "I",
            StepLabel::RatioDoubling => "J",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PartitionOptions<T> {
    /// Maximum number of steps `r_k → r_{k+1}` (default 200).
    pub k_max: usize,
    /// Stop once `r_k` drops below this; `None` means `1e-15·r_0`.
    pub r_min: Option<T>,
    /// Relative bisection tolerance for `c_k` (default `1e-12`).
    pub rel_tol: T,
    /// Relative gap under which the two conditions count as tied (default `1e-10`).
    pub tie_tol: T,
}

impl<T: Scalar> Default for PartitionOptions<T> {
    fn default() -> Self {
        Self { k_max: 200, r_min: None, rel_tol: T::tol(1e-12), tie_tol: T::tol(1e-10) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    radii: Vec<T>,
    labels: Vec<StepLabel>,
    terminal_m: Option<usize>,
    truncated: bool,
}

impl<T: Scalar> Partition<T> {
    /// `r_0 > r_1 > … > r_L`; when terminal, `r_{L+1} = 0` is implied and not stored.
    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    /// `labels()[k]` classifies the step `r_k → r_{k+1}` for `k < L`.
    pub fn labels(&self) -> &[StepLabel] {
        &self.labels
    }

    /// The index `m` with `r_m > 0` and `r_{m+1} = 0`.
    pub fn terminal_m(&self) -> Option<usize> {
        self.terminal_m
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Number of levels `[r_{k+1}, r_k]` with `r_{k+1} > 0`.
    pub fn interior_levels(&self) -> usize {
        self.labels.len()
    }

    /// All levels, including the terminal level `[0, r_m]` when present.
    pub fn level_count(&self) -> usize {
        self.labels.len() + usize::from(self.terminal_m.is_some())
    }

    /// `(r_{k+1}, r_k)`; the lower end is zero on the terminal level.
    pub fn level_bounds(&self, k: usize) -> Option<(T, T)> {
        if k < self.labels.len() {
            Some((self.radii[k + 1], self.radii[k]))
        } else if Some(k) == self.terminal_m {
            Some((T::zero(), self.radii[k]))
        } else {
            None
        }
    }

    pub fn label(&self, k: usize) -> Option<StepLabel> {
        self.labels.get(k).copied()
    }

    pub fn is_terminal_level(&self, k: usize) -> bool {
        Some(k) == self.terminal_m
    }

    /// Writes `k,r_k,label` rows; the terminal radius is labelled `T`, a truncated tail `-`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,r_k,label")?;
        for (k, r) in self.radii.iter().enumerate() {
            let label = match self.labels.get(k) {
                Some(l) => l.to_string(),
                None if self.terminal_m == Some(k) => "T".to_string(),
                None => "-".to_string(),
            };
            writeln!(out, "{k},{:.16e},{label}", r.as_f64())?;
        }
        Ok(())
    }
}

/// Builds `(r_k)` for `T = B(0, r)` under the metric `η(‖·‖)`.
pub fn build_partition<T: Scalar>(space: &NormSpace<T>, modulus: &Modulus<T>, opts: &PartitionOptions<T>) -> Result<Partition<T>> {
    if opts.k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let r0 = modulus.eta(space.radius());
    check_ratio_monotone(modulus, r0)?;
    let r_min = opts.r_min.unwrap_or(r0 * T::lit(1e-15));
    if !(r_min > T::zero()) {
        return Err(Error::InvalidParameter("r_min must be positive".into()));
    }
    let two = T::lit(2.0);
    let d0 = modulus.derivative_at_zero();
    let mut radii = vec![r0];
    let mut labels = Vec::new();
    let mut terminal_m = None;
    let mut truncated = false;
    loop {
        let k = radii.len() - 1;
        if k == opts.k_max {
            truncated = true;
            break;
        }
        let rk = radii[k];
        let target = two * modulus.slope_ratio(rk);
        let half = rk / two;
        let at_half = modulus.slope_ratio(half);
        // Halving wins unless the ratio condition already holds at r_k/2.
        if at_half > target || rel_diff(at_half, target) <= opts.tie_tol {
            radii.push(half);
            labels.push(StepLabel::Halving);
        } else if d0.is_finite() && target >= d0 * (T::one() - opts.tie_tol) {
            terminal_m = Some(k);
            break;
        } else {
            let pred = |e: T| modulus.slope_ratio(e) <= target;
            let Some((lo, hi)) = expand_down(half, T::min_positive_value().sqrt(), pred) else {
                terminal_m = Some(k);
                break;
            };
            let (_, ck) = bisect(lo, hi, opts.rel_tol, pred);
            radii.push(ck);
            labels.push(StepLabel::RatioDoubling);
        }
        if radii[k + 1] < r_min {
            truncated = true;
            break;
        }
    }
    Ok(Partition { radii, labels, terminal_m, truncated })
}

/// `ε ↦ ε/η⁻¹(ε)` must be nonincreasing on `(0, r_0]`.
fn check_ratio_monotone<T: Scalar>(modulus: &Modulus<T>, r0: T) -> Result<()> {
    let grid = log_grid(r0 * T::lit(1e-12), r0, 64);
    let slack = T::one() + T::tol(1e-9);
    for w in grid.windows(2) {
        if modulus.slope_ratio(w[1]) > modulus.slope_ratio(w[0]) * slack {
            return Err(Error::NonConcaveModulus { at: w[1].as_f64() });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(r: f64) -> NormSpace<f64> {
        NormSpace::linf(1, r).unwrap()
    }

    /// Independent oracle: scan a fine log grid for the first ε where either condition holds.
    fn brute_next(m: &Modulus<f64>, rk: f64) -> f64 {
        let target = 2.0 * rk / m.eta_inv(rk);
        let n = 200_000;
        let mut best = rk;
        for i in 0..=n {
            let e = rk * (1e-6f64).powf(i as f64 / n as f64);
            if rk <= 2.0 * e || e / m.eta_inv(e) <= target {
                best = e;
            } else {
                break;
            }
        }
        best
    }

    #[test]
    fn identity_terminates_at_zero() {
        for r in [0.5, 1.0, 3.0] {
            let p = build_partition(&line(r), &Modulus::identity(), &PartitionOptions::default()).unwrap();
            assert_eq!(p.terminal_m(), Some(0));
            assert_eq!(p.radii(), &[r]);
            assert_eq!(p.level_bounds(0), Some((0.0, r)));
            assert!(!p.truncated());
        }
    }

    #[test]
    fn square_root_halves_with_ties_labelled_i() {
        let p = build_partition(&line(1.0), &Modulus::power(0.5).unwrap(), &PartitionOptions::default()).unwrap();
        assert!(p.truncated());
        for (k, r) in p.radii().iter().enumerate() {
            assert!(((r - 0.5f64.powi(k as i32)) / r).abs() < 1e-12);
        }
        assert!(p.labels().iter().all(|&l| l == StepLabel::Halving));
    }

    #[test]
    fn two_thirds_quarters_with_j_labels() {
        let m = Modulus::power(2.0 / 3.0).unwrap();
        let p = build_partition(&line(1.0), &m, &PartitionOptions::default()).unwrap();
        assert!(p.labels().iter().all(|&l| l == StepLabel::RatioDoubling));
        for (k, r) in p.radii().iter().enumerate() {
            assert!(((r - 0.25f64.powi(k as i32)) / r).abs() < 1e-10, "k={k}");
        }
        // Brute-force oracle for the first few steps.
        for k in 0..4 {
            let oracle = brute_next(&m, p.radii()[k]);
            assert!(((oracle - p.radii()[k + 1]) / oracle).abs() < 1e-4);
        }
    }

    #[test]
    fn k_max_truncates() {
        let opts = PartitionOptions { k_max: 5, ..Default::default() };
        let p = build_partition(&line(1.0), &Modulus::power(0.5).unwrap(), &opts).unwrap();
        assert!(p.truncated());
        assert_eq!(p.interior_levels(), 5);
        assert_eq!(p.radii().len(), 6);
    }

    #[test]
    fn capped_modulus_mixes_steps_then_terminates() {
        // η(x) = x on [0, 0.01], slope 1/20 beyond: one J step, one I step, then r_3 = 0.
        let m = Modulus::capped_linear(0.01, 0.05).unwrap();
        let p = build_partition(&line(1.0), &m, &PartitionOptions::default()).unwrap();
        assert_eq!(p.terminal_m(), Some(2));
        assert_eq!(p.labels(), &[StepLabel::RatioDoubling, StepLabel::Halving]);
        assert!((p.radii()[1] - 0.02261 / 1.38).abs() < 1e-12);
        for k in 0..p.interior_levels() {
            let oracle = brute_next(&m, p.radii()[k]);
            assert!(((oracle - p.radii()[k + 1]) / oracle).abs() < 1e-4, "k={k}");
        }
    }

    #[test]
    fn csv_rows() {
        let p = build_partition(&line(1.0), &Modulus::identity(), &PartitionOptions::default()).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,r_k,label\n0,1.0000000000000000e0,T\n");
    }
}
