use orlicz_bounds::extremal::antipode;
use orlicz_bounds::{build_density, build_partition, evaluate_path, verify_sup_identity, BoundsContext, DensityG, Modulus, NormSpace, OrliczFunction, PartitionOptions, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn density(n: usize, alpha: f64, p: f64) -> DensityG<f64> {
    let space = NormSpace::linf(n, 1.0).unwrap();
    let modulus = Modulus::power(alpha).unwrap();
    let phi = OrliczFunction::power(p).unwrap();
    let part = build_partition(&space, &modulus, &PartitionOptions::default()).unwrap();
    let ctx = BoundsContext::new(&space, &modulus, &phi, &part, SolverOptions::default()).unwrap();
    let rep = ctx.total_bound().unwrap();
    build_density(&space, &modulus, &phi, &rep).unwrap()
}

fn fixed_pair_estimate(d: &DensityG<f64>, count: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = vec![vec![-0.5], vec![0.5]];
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..count {
        let w = [rng.random_range(-1.0..1.0)];
        let x = evaluate_path(d, &w, &pts).unwrap();
        let v = (x[0] - x[1]).powi(2) / 2.0;
        s += v;
        s2 += v * v;
    }
    let m = s / count as f64;
    (m, ((s2 / count as f64 - m * m) / count as f64).sqrt())
}

#[test]
fn fixed_pair_on_the_line() {
    // g ≡ c = 1/(9√2) on (0, 1] and 0 beyond, so X(s) − X(t) = c(min(|ω − t|, 1) − min(|ω − s|, 1)),
    // E(·)² = 11/24 and the mean is c²·11/48 = 11/7776.
    let d = density(1, 1.0, 2.0);
    let exact = 11.0 / 7776.0;
    let (est, se) = fixed_pair_estimate(&d, 100_000, 1);
    assert!(est <= 1.0 + 3.0 * se);
    let (oracle, ose) = fixed_pair_estimate(&d, 10_000_000, 2);
    assert!((oracle - exact).abs() <= 4.0 * ose + 1e-12, "{oracle} {exact} {ose}");
    assert!((est - oracle).abs() <= 4.0 * (se + ose));
}

#[test]
fn grid_without_extremizers_never_exceeds_target() {
    for (n, alpha) in [(1, 0.5), (2, 1.0)] {
        let d = density(n, alpha, if n == 2 { 3.0 } else { 2.0 });
        let rep = verify_sup_identity(&d, 50, 100, 3, 2).unwrap();
        assert!(rep.grid_only_max <= rep.target * (1.0 + 1e-10));
        assert!(rep.max_deviation <= 1e-8 * rep.target);
    }
}

#[test]
fn path_identities_in_the_plane() {
    let d = density(2, 1.0, 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let w = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let d0 = d.space().norm(&w);
        let vals = evaluate_path(&d, &w, &[vec![0.0, 0.0], w.to_vec(), antipode(d.space(), &w)]).unwrap();
        assert_eq!(vals[0], 0.0);
        assert!((vals[1] + d.antiderivative(d0)).abs() <= 1e-12);
        assert!((vals[2] - vals[1] - d.total_mass()).abs() <= 1e-12);
    }
}

#[test]
fn density_vanishes_beyond_eta_r() {
    let d = density(1, 0.5, 3.0);
    assert_eq!(d.g(1.0 + 1e-12), 0.0);
    assert!(d.g(1.0) > 0.0);
    assert!((d.total_mass() - d.target()).abs() <= 1e-8 * d.target());
}
