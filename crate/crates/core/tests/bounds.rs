use orlicz_bounds::{build_partition, BoundsContext, LevelKind, Modulus, NormSpace, OrliczFunction, PartitionOptions, SolverOptions, StepLabel};

fn report(n: usize, r: f64, alpha: f64, p: f64) -> orlicz_bounds::BoundsReport<f64> {
    let space = NormSpace::linf(n, r).unwrap();
    let modulus = Modulus::power(alpha).unwrap();
    let phi = OrliczFunction::power(p).unwrap();
    let part = build_partition(&space, &modulus, &PartitionOptions::default()).unwrap();
    BoundsContext::new(&space, &modulus, &phi, &part, SolverOptions::default()).unwrap().total_bound().unwrap()
}

/// For power `η` and `φ` the level integral is `(1/q) c^{-q} r^{n(q−1)/α} ∫ ε^β dε`,
/// `β = (1 − n/α)(q − 1)`.
fn closed_form_level(n: usize, alpha: f64, p: f64, lo: f64, hi: f64) -> f64 {
    let q = p / (p - 1.0);
    let beta = (1.0 - n as f64 / alpha) * (q - 1.0);
    let integral = if (beta + 1.0).abs() < 1e-14 { (hi / lo).ln() } else { (hi.powf(beta + 1.0) - lo.powf(beta + 1.0)) / (beta + 1.0) };
    (integral / q).powf(1.0 / q)
}

#[test]
fn interior_levels_match_closed_form() {
    for (n, alpha, p) in [(1, 0.5, 3.0), (2, 2.0 / 3.0, 3.0), (3, 1.0 / 3.0, 1.5), (2, 0.5, 6.0)] {
        let rep = report(n, 1.0, alpha, p);
        for l in rep.levels.iter().filter(|l| l.kind != LevelKind::Terminal) {
            let want = closed_form_level(n, alpha, p, l.lower, l.upper);
            assert!((l.s - want).abs() <= 1e-8 * want, "n={n} a={alpha} p={p} k={}: {} vs {want}", l.k, l.s);
            assert!(l.residual.abs() <= 1e-8);
        }
    }
}

#[test]
fn terminal_constant_scales_with_radius() {
    // η = id: S_0 = r·(1/(qγ))^{1/q} with γ = 1 + (1 − n)(q − 1).
    for (n, p) in [(1, 2.0), (2, 3.0), (1, 6.0)] {
        let q: f64 = p / (p - 1.0);
        let gamma = 1.0 + (1.0 - n as f64) * (q - 1.0);
        for r in [0.5, 1.0, 2.0] {
            let s = report(n, r, 1.0, p).levels[0].s;
            let want = r * (1.0 / (q * gamma)).powf(1.0 / q);
            assert!((s - want).abs() <= 1e-8 * want, "n={n} p={p} r={r}: {s} vs {want}");
        }
    }
}

#[test]
fn halving_levels_follow_power_scaling() {
    let (n, alpha, p) = (1, 0.5, 3.0);
    let rep = report(n, 1.0, alpha, p);
    let rate = 2f64.powf(-(1.0 - n as f64 / (alpha * p)));
    for w in rep.levels.windows(2).take(40) {
        assert_eq!(w[0].kind, LevelKind::Step(StepLabel::Halving));
        assert!((w[1].s / w[0].s - rate).abs() <= 1e-7);
    }
    assert!(rep.finite && rep.truncated);
    let ratio = rep.tail_ratio.unwrap();
    assert!((ratio - rate).abs() <= 1e-9);
    assert!(rep.tail_bound > 0.0 && rep.tail_bound < 1e-3 * rep.sum);
}

#[test]
fn envelope_constant() {
    for n in 1..=3 {
        let rep = report(n, 1.0, 1.0, 6.0);
        assert_eq!(rep.lower_constant, 3.0 * (n as f64 + 2.0));
        assert!((rep.lower_bound - rep.sum / rep.lower_constant).abs() <= 1e-15);
    }
}

#[test]
fn csv_has_one_row_per_level() {
    let rep = report(2, 1.0, 2.0 / 3.0, 3.0);
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,r_k,label,S_k,residual,bracket_lo,bracket_hi"));
    assert_eq!(lines.count(), rep.levels.len());
    assert!(text.lines().nth(1).unwrap().split(',').nth(2) == Some("J"));
}
