mod common;

use caputokit::specfun::*;
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn mittag_leffler_grid_against_oracles() {
    let mut worst = (0.0, 0.0, 0.0);
    for &alpha in &[0.3, 0.5, 0.8, 1.2, 1.5, 1.9] {
        for i in 0..=50 {
            let x = -20.0 + 0.5 * i as f64;
            let want = ml_oracle(alpha, x);
            let got = mittag_leffler_real(alpha, 1.0, x).unwrap();
            let e = rel_err(got, want);
            if e > worst.0 {
                worst = (e, alpha, x);
            }
            assert!(e < 1e-10, "alpha={alpha} x={x} got={got} want={want} rel={e}");
        }
    }
    eprintln!("worst relative error {:e} at alpha={} x={}", worst.0, worst.1, worst.2);
}

#[test]
fn half_order_matches_erfc_identity_at_minus_ten() {
    let want = ml_half_erfc(-10.0);
    let got = mittag_leffler_real(0.5, 1.0, -10.0).unwrap();
    assert!(rel_err(got, want) < 1e-9);
}

#[test]
fn integral_and_series_oracles_agree() {
    for &(a, x) in &[(0.8, 3.0), (0.8, 9.0), (0.6, 4.0), (0.3, 1.5)] {
        let s = ml_series_mpfr(a, 1.0, -x);
        let i = ml_negative_integral(a, x);
        assert!(rel_err(i, s) < 1e-12, "{a} {x}: {s} vs {i}");
    }
}

#[test]
fn two_parameter_values_against_series() {
    for &(a, b, x) in &[(0.7, 0.7, -3.0), (1.4, 1.4, -8.0), (0.6, 1.6, -15.0), (1.8, 2.8, -30.0)] {
        let want = ml_series_mpfr(a, b, x);
        let got = mittag_leffler_real(a, b, x).unwrap();
        assert!(rel_err(got, want) < 1e-9, "{a} {b} {x}: {got} vs {want}");
    }
}

#[test]
fn large_negative_arguments_decay_like_inverse() {
    for &a in &[0.4, 0.9, 1.3] {
        for &x in &[1e3, 1e5, 1e7] {
            let v = mittag_leffler_real(a, 1.0, -x).unwrap();
            let lead = 1.0 / (x * gamma(1.0 - a));
            assert!(rel_err(v, lead) < 10.0 / x.powf(a.min(1.0)), "{a} {x} {v} {lead}");
        }
    }
}

#[test]
fn relaxation_kernel_laplace_identity() {
    let (alpha, lambda) = (0.6, 3.0);
    for &s in &[0.5, 1.0, 2.0] {
        let num = laplace_numeric(|t| relaxation_kernel(alpha, lambda, t).unwrap(), s);
        let want = 1.0 / (s.powf(alpha) + lambda);
        assert!(rel_err(num, want) < 1e-6, "s={s}: {num} vs {want}");
    }
}

#[test]
fn stirling_consistency_on_rays() {
    for &r in &[20.0, 35.0, 50.0] {
        for &th in &[0.0, PI / 4.0, -PI / 4.0] {
            let z = Complex64::from_polar(r, th);
            let g = gamma_complex(z).unwrap();
            let st = (2.0 * PI).sqrt() * ((z - 0.5) * z.ln() - z).exp();
            assert!((g / st - 1.0).norm() < 0.01);
        }
    }
}

#[test]
fn vertical_decay() {
    for &a in &[0.3, 1.0, 2.5] {
        for &b in &[20.0f64, 40.0] {
            let g = gamma_complex(Complex64::new(a, b)).unwrap().norm();
            let model = (2.0 * PI).sqrt() * b.powf(a - 0.5) * (-PI * b / 2.0).exp();
            assert!((g / model - 1.0).abs() < 0.02, "{a} {b} {}", g / model);
        }
    }
}

#[test]
fn gamma_against_mpfr_on_real_axis() {
    for &x in &[0.1, 0.7, 3.3, 12.9, 29.5, -2.5, -17.3, -29.7] {
        let want = gamma_mpfr_real(x);
        let got = gamma_complex(Complex64::new(x, 0.0)).unwrap().re;
        assert!(rel_err(got, want) < 1e-12, "{x}: {got} vs {want}");
    }
}

#[test]
fn sector_boundedness_is_stable() {
    for &alpha in &[0.5f64, 1.5] {
        let sector = SectorSpec::midpoint(alpha).unwrap();
        let sup = |cap: f64| {
            let mut m: f64 = 0.0;
            for i in 0..=40 {
                let r = cap.powf(i as f64 / 40.0);
                for j in 0..=8 {
                    let half = PI - sector.eta;
                    let th = PI - half * (0.98 * (2.0 * j as f64 / 8.0 - 1.0));
                    let z = Complex64::from_polar(r, th);
                    assert!(sector.contains(z));
                    let v = mittag_leffler(MLQuery::new(alpha, 1.0, z).unwrap()).unwrap();
                    m = m.max((1.0 + r) * v.norm());
                }
            }
            m
        };
        let (a, b) = (sup(5e3), sup(1e4));
        assert!(a.is_finite() && ((b - a) / a).abs() < 0.05, "{alpha}: {a} {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn gamma_recurrence(re in -30.0f64..30.0, im in -50.0f64..50.0) {
        let z = Complex64::new(re, im);
        prop_assume!(pole_distance(z) > 1e-3 && pole_distance(z + 1.0) > 1e-3);
        let lhs = z * gamma_complex(z).unwrap();
        let rhs = gamma_complex(z + 1.0).unwrap();
        prop_assert!((lhs - rhs).norm() / rhs.norm() < 1e-12);
    }

    #[test]
    fn digamma_recurrence(re in -30.0f64..30.0, im in -50.0f64..50.0) {
        let z = Complex64::new(re, im);
        prop_assume!(pole_distance(z) > 1e-3);
        let lhs = digamma(z + 1.0).unwrap();
        let rhs = digamma(z).unwrap() + 1.0 / z;
        prop_assert!((lhs - rhs).norm() / lhs.norm().max(1.0) < 1e-10);
    }

    #[test]
    fn ml_strategies_agree_on_overlap(alpha in 0.3f64..1.95, x in 1.0f64..4.0) {
        let ctl = MlControl { tol: 1e-9, ..MlControl::default() };
        let z = Complex64::new(-x, 0.0);
        if let Some(s) = ml_series(alpha, 1.0, z, &ctl).unwrap() {
            let c = ml_contour(alpha, 1.0, z, &ctl).unwrap();
            prop_assert!((s - c).norm() / s.norm().max(1e-300) < 1e-9);
        }
    }
}
