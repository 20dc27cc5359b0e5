use orlicz_bounds::sobolev::{standard_corpus, SobolevEvaluator, SobolevOptions};
use orlicz_bounds::{NormSpace, OrliczFunction, TestFunction};

fn opts(grid: usize) -> SobolevOptions<f64> {
    SobolevOptions { grid_count: grid, mc_count: 20_000, seed: 4, shards: 4, ..Default::default() }
}

#[test]
fn holder_form_on_corpus() {
    for n in 1..=3 {
        for norm in [1.0, 2.0, f64::INFINITY] {
            let space = NormSpace::lp(n, norm, 1.0).unwrap();
            for f in standard_corpus::<f64>(n, 17) {
                let ev = SobolevEvaluator::new(&space, &f, opts(300)).unwrap();
                for p in [n as f64 + 1.0, 2.0 * n as f64, 5.0 * n as f64] {
                    if p <= n as f64 {
                        continue;
                    }
                    let h = ev.holder(p).unwrap();
                    assert!(h.holds(3.0), "n={n} l{norm} {:?} p={p}: {h:?}", f.family);
                }
            }
        }
    }
}

#[test]
fn large_exponent_approaches_lipschitz_ratio() {
    let space = NormSpace::lp(2, 2.0, 1.0).unwrap();
    let f = TestFunction::linear(vec![0.6, 0.8]);
    let h = SobolevEvaluator::new(&space, &f, opts(500)).unwrap().holder(50.0).unwrap();
    let lip = 1.0;
    assert!(h.max_ratio <= lip * 2f64.powf(2.0 / 50.0) + 1e-12);
    assert!(h.max_ratio >= 0.9 * lip);
    assert!(h.max_ratio <= h.bound_constant);
}

#[test]
fn refining_the_grid_never_lowers_lhs() {
    let space = NormSpace::lp(2, 1.0, 1.0).unwrap();
    for f in standard_corpus::<f64>(2, 5) {
        let mut prev = 0.0;
        for grid in [16, 64, 256, 1024] {
            let lhs = SobolevEvaluator::new(&space, &f, opts(grid)).unwrap().lhs();
            assert!(lhs >= prev);
            prev = lhs;
        }
    }
}

#[test]
fn grid_search_no_worse_than_unit_probe() {
    let space = NormSpace::lp(1, 2.0, 1.0).unwrap();
    let phi = OrliczFunction::power(2.5).unwrap().numeric();
    let psi = phi.conjugate().unwrap();
    let f = TestFunction::random_trig(1, 5, 3);
    let ev = SobolevEvaluator::new(&space, &f, opts(200)).unwrap();
    let (a, b) = ev.optimal_ab(&phi).unwrap();
    let best = ev.check(&phi, &psi, a, b).unwrap();
    let unit = ev.check(&phi, &psi, 1.0, 1.0).unwrap();
    assert!(best.rhs <= unit.rhs);
    assert!(best.holds(1e-6));
}

#[test]
fn quadratic_case_on_the_line_uses_square_root_radius() {
    let space = NormSpace::lp(1, 2.0, 0.36).unwrap();
    let phi = OrliczFunction::power(2.0).unwrap();
    let f = TestFunction::linear(vec![1.0]);
    let (a, _) = SobolevEvaluator::new(&space, &f, opts(50)).unwrap().optimal_ab(&phi).unwrap();
    assert!((a - 0.6).abs() <= 1e-15);
}
