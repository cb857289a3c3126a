use caputokit::fraccalc::*;
use caputokit::specfun::{gamma, mittag_leffler_real, relaxation_kernel, FracOrder};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

fn observed_rates(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn caputo_scheme_convergence_order() {
    for &alpha in &[0.3, 0.5, 0.8, 1.3, 1.5, 1.8] {
        for &beta in &[1.0f64, 2.0, 2.5] {
            let exact = caputo_power_exact(order(alpha), beta, 1.0).unwrap_or(0.0);
            let errs: Vec<f64> = [64, 128, 256, 512]
                .iter()
                .map(|&n| {
                    let g = TimeGrid::uniform(1.0, n).unwrap();
                    let slope = if beta == 1.0 { 1.0 } else { 0.0 };
                    let s = Signal::sample(&g, |t| t.powf(beta)).with_initial_slope(slope);
                    let d = caputo_derivative(order(alpha), &s).unwrap();
                    (d.values[n] - exact).abs()
                })
                .collect();
            if errs.iter().all(|&e| e < 1e-11) {
                // the scheme reproduces this power exactly
                continue;
            }
            let want = 2.0 - alpha - 0.2;
            for r in observed_rates(&errs) {
                assert!(r >= want, "alpha={alpha} beta={beta} errs={errs:?} rate={r}");
            }
        }
    }
}

#[test]
fn semigroup_property() {
    let g = TimeGrid::uniform(1.0, 512).unwrap();
    let s = Signal::sample(&g, |t| 1.0 + (3.0 * t).sin());
    for &(a, b) in &[(0.3, 0.7), (0.5, 0.5), (0.9, 0.6)] {
        let lhs = rl_integral(a, &rl_integral(b, &s).unwrap()).unwrap();
        let rhs = rl_integral(a + b, &s).unwrap();
        let err = lhs
            .values
            .iter()
            .zip(&rhs.values)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err < 5e-4, "({a},{b}) {err}");
    }
}

#[test]
fn semigroup_error_shrinks_with_refinement() {
    let err_at = |n: usize| {
        let g = TimeGrid::uniform(1.0, n).unwrap();
        let s = Signal::sample(&g, |t| (2.0 * t).cos());
        let lhs = rl_integral(0.3, &rl_integral(0.7, &s).unwrap()).unwrap();
        let rhs = rl_integral(1.0, &s).unwrap();
        (lhs.values[n] - rhs.values[n]).abs()
    };
    let (e1, e2) = (err_at(64), err_at(256));
    assert!(e2 < e1 / 3.0, "{e1} {e2}");
}

#[test]
fn integral_bounded_by_kernel_mass() {
    for &alpha in &[0.3, 0.8, 1.5] {
        let bound = 2f64.powf(alpha) / gamma(alpha + 1.0);
        let mut fitted = Vec::new();
        for &n in &[128usize, 512] {
            let g = TimeGrid::uniform(2.0, n).unwrap();
            let mut worst: f64 = 0.0;
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..20 {
                let (c0, c1, c2): (f64, f64, f64) =
                    (rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.0..6.0));
                let s = Signal::sample(&g, |t| c0 + (c1 * t).sin() * (c2 * t).cos());
                let i = rl_integral(alpha, &s).unwrap();
                for &p in &[1.0, 2.0, f64::INFINITY] {
                    let ratio = i.lp_norm(p) / s.lp_norm(p);
                    assert!(ratio <= bound * 1.01, "alpha={alpha} p={p} {ratio} > {bound}");
                    worst = worst.max(ratio);
                }
            }
            fitted.push(worst);
        }
        assert!((fitted[0] - fitted[1]).abs() < 0.05 * fitted[1], "{fitted:?}");
    }
}

#[test]
fn rl_derivative_inverts_rl_integral() {
    for &alpha in &[0.3, 0.6, 0.9] {
        let errs: Vec<f64> = [100usize, 200, 400, 800]
            .iter()
            .map(|&n| {
                let g = TimeGrid::uniform(1.0, n).unwrap();
                let s = Signal::sample(&g, |t| (2.0 * t).sin() + t * t);
                let back = rl_derivative(alpha, &rl_integral(alpha, &s).unwrap()).unwrap();
                (n / 10..=n).fold(0.0f64, |m, i| m.max((back.values[i] - s.values[i]).abs()))
            })
            .collect();
        eprintln!("{alpha} {errs:?} {:?}", observed_rates(&errs));
        for r in observed_rates(&errs) {
            assert!(r >= 2.0 - alpha - 0.2, "alpha={alpha} {errs:?}");
        }
    }
}

#[test]
fn caputo_and_riemann_liouville_differ_by_initial_term() {
    let g = TimeGrid::uniform(1.0, 128).unwrap();
    let s = Signal::sample(&g, |t| 1.0 + t);
    let alpha = 0.4;
    let c = caputo_derivative(order(alpha), &s).unwrap();
    let r = rl_derivative(alpha, &s).unwrap();
    for i in 1..=128 {
        let t = g.nodes[i];
        let gap = r.values[i] - t.powf(-alpha) / gamma(1.0 - alpha);
        assert!((c.values[i] - gap).abs() < 1e-12);
        let exact = gamma(2.0) / gamma(2.0 - alpha) * t.powf(1.0 - alpha);
        assert!((c.values[i] - exact).abs() < 1e-12);
    }
}

#[test]
fn relaxation_kernel_matches_grid_derivative() {
    let alpha = 0.7;
    let errs: Vec<f64> = [128usize, 256, 512, 1024]
        .iter()
        .map(|&n| {
            let g = TimeGrid::uniform(1.0, n).unwrap();
            let s = Signal::sample(&g, |t| mittag_leffler_real(alpha, 1.0, -t.powf(alpha)).unwrap());
            let d = rl_derivative(1.0 - alpha, &s).unwrap();
            (d.values[n] - relaxation_kernel(alpha, 1.0, 1.0).unwrap()).abs()
        })
        .collect();
    assert!(errs[3] < 1e-3, "{errs:?}");
    for r in observed_rates(&errs) {
        assert!(r > 0.5, "{errs:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_is_exact_on_linear_data(alpha in 0.1f64..1.9, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = TimeGrid::uniform(1.5, 48).unwrap();
        let s = Signal::sample(&g, |t| a + b * t);
        let i = rl_integral(alpha, &s).unwrap();
        for (v, &t) in i.values.iter().zip(&g.nodes) {
            let exact = a * t.powf(alpha) / gamma(alpha + 1.0) + b * t.powf(alpha + 1.0) / gamma(alpha + 2.0);
            prop_assert!((v - exact).abs() < 1e-12 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn integral_is_linear(alpha in 0.1f64..1.9, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = TimeGrid::uniform(1.0, 32).unwrap();
        let x: Vec<f64> = (0..33).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..33).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = rng.gen_range(-3.0..3.0);
        let w = RlIntegralWeights::new(alpha, &g).unwrap();
        let comb: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + c * b).collect();
        let (ix, iy, ic) = (w.apply(&x), w.apply(&y), w.apply(&comb));
        for k in 0..33 {
            prop_assert!((ic[k] - ix[k] - c * iy[k]).abs() < 1e-12);
        }
    }
}
