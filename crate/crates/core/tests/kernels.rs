mod common;

use caputokit::kernels::*;
use caputokit::specfun::{gamma, mittag_leffler_real, rgamma};
use common::{gauss_panels, talbot_inverse};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn kernel_hfun(kind: KernelKind, alpha: f64, d: usize) -> HFunction {
    let c0 = match kind {
        KernelKind::P => 1.0,
        KernelKind::Q => alpha,
        KernelKind::K => 0.0,
    };
    HFunction::new(2, 0, vec![(c0, alpha)], vec![(d as f64 / 2.0, 1.0), (1.0, 1.0)]).unwrap()
}

/// Point at distance rho along the diagonal.
fn point(d: usize, rho: f64) -> Vec<f64> {
    vec![rho / (d as f64).sqrt(); d]
}

#[test]
fn mittag_leffler_as_h_function() {
    let alpha = 0.7;
    let h = HFunction::new(1, 1, vec![(0.0, 1.0)], vec![(0.0, 1.0), (0.0, alpha)]).unwrap();
    // poles of Gamma(z) on the left, of Gamma(1 - z) on the right
    let got = hfun_bromwich(&h, 0.5, &ContourSpec::new(-0.5)).unwrap();
    let want = mittag_leffler_real(alpha, 1.0, -0.5).unwrap();
    assert!(rel(got.value, want) < 1e-8, "{} {want}", got.value);
}

#[test]
fn one_dimensional_p_matches_inverse_laplace() {
    let alpha = 0.5;
    for &x in &[0.3f64, 1.0, 2.5] {
        for &t in &[0.5, 1.0, 2.0] {
            let lap = |s: Complex64| s.powf(alpha / 2.0 - 1.0) / 2.0 * (-s.powf(alpha / 2.0) * x).exp();
            let want = talbot_inverse(lap, t, 32);
            let r = x * x * t.powf(-alpha) / 4.0;
            let spec = ContourSpec::for_kernel(alpha, 1);
            let h = hfun_bromwich(&kernel_hfun(KernelKind::P, alpha, 1), r, &spec).unwrap();
            let via_h = h.value / (PI.sqrt() * x);
            assert!(rel(via_h, want) < 1e-7, "x={x} t={t}: {via_h} {want}");
            let direct = kernel_value(&KernelQuery::plain(KernelKind::P, alpha, t, &[x]).unwrap()).unwrap();
            assert!(rel(direct, want) < 1e-7, "x={x} t={t}: {direct} {want}");
        }
    }
}

#[test]
fn doubling_truncation_height_is_harmless() {
    let h = kernel_hfun(KernelKind::P, 0.8, 3);
    let spec = ContourSpec::for_kernel(0.8, 3);
    let auto = hfun_bromwich(&h, 0.7, &spec).unwrap();
    let mut doubled = spec.clone();
    doubled.tau_max = Some(2.0 * auto.tau_max);
    let wide = hfun_bromwich(&h, 0.7, &doubled).unwrap();
    assert!(rel(wide.value, auto.value) < spec.tol, "{} {}", wide.value, auto.value);
}

#[test]
fn contour_rejects_non_separating_line() {
    let h = kernel_hfun(KernelKind::P, 0.8, 3);
    assert!(hfun_bromwich(&h, 0.5, &ContourSpec::new(1.2)).is_err());
    let bad = HFunction::new(2, 0, vec![(1.0, 3.0)], vec![(0.5, 1.0), (1.0, 1.0)]);
    assert!(bad.is_err());
}

#[test]
fn residue_leading_term_and_contour_agreement() {
    let ctl = SeriesControl::default();
    let alpha = 0.5;
    let r = 0.1;
    let lead = gamma(0.5) * rgamma(1.0 - alpha) * r;
    assert!((lead - 0.1).abs() < 1e-15);
    let sum = residue_series_p(alpha, 0, 0, r, 3, &ctl).unwrap();
    // next poles sit at -3/2 and -2
    assert!((sum - lead).abs() < 5.0 * r.powf(1.5), "{sum}");
    let spec = ContourSpec::for_kernel(alpha, 3);
    let line = hfun_bromwich(&kernel_hfun(KernelKind::P, alpha, 3), r, &spec).unwrap();
    assert!(rel(sum, line.value) < 1e-8, "{sum} {}", line.value);
}

#[test]
fn residue_combination_cancels_leading_singular_terms() {
    let ctl = SeriesControl::default();
    for &(d, alpha) in &[(1usize, 0.6), (2, 0.6), (1, 1.4), (2, 1.4)] {
        for l in 1..=2usize {
            let mut comb_ratio = Vec::new();
            let mut single_ratio = Vec::new();
            for &r in &[1e-5, 1e-4, 1e-3] {
                let lower = residue_series_p(alpha, 0, l - 1, r, d, &ctl).unwrap();
                let upper = residue_series_p(alpha, 0, l, r, d, &ctl).unwrap();
                comb_ratio.push(((d as f64) * lower + 2.0 * upper).abs() / r);
                single_ratio.push(lower.abs() / r);
            }
            let spread = comb_ratio.iter().cloned().fold(0.0, f64::max)
                / comb_ratio.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread < 1.2, "d={d} a={alpha} l={l} {comb_ratio:?}");
            // without the combination the ratio keeps growing as r -> 0
            assert!(single_ratio[0] > 1.5 * single_ratio[2], "d={d} {single_ratio:?}");
        }
    }
}

#[test]
fn residue_p_bounded_by_small_r_envelope() {
    let ctl = SeriesControl::default();
    for d in 1..=3usize {
        for &alpha in &[0.5, 1.5] {
            let ratios: Vec<f64> = [1e-4, 1e-3, 1e-2]
                .iter()
                .map(|&r: &f64| {
                    let env = r
                        + if d == 2 { r * r.ln().abs() } else { 0.0 }
                        + if d == 1 { r.sqrt() } else { 0.0 };
                    residue_series_p(alpha, 0, 0, r, d, &ctl).unwrap().abs() / env
                })
                .collect();
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(hi < 2.0 * lo && hi.is_finite(), "d={d} a={alpha} {ratios:?}");
        }
    }
}

#[test]
fn residue_q_odd_dimension_leading_terms() {
    let ctl = SeriesControl::default();
    let alpha = 0.5;
    let d = 3.0;
    let lead = |r: f64| {
        -gamma(d / 2.0 - 2.0) * rgamma(-alpha) * r * r
            + gamma(1.0 - d / 2.0) * rgamma(alpha - alpha * d / 2.0) * r.powf(1.5)
    };
    let rem: Vec<f64> = [1e-3, 1e-2]
        .iter()
        .map(|&r: &f64| (residue_series_q(alpha, 0, 0, r, 3, &ctl).unwrap() - lead(r)).abs() / r.powf(2.5))
        .collect();
    assert!(rem[0] < 2.0 * rem[1] && rem[1] < 2.0 * rem[0], "{rem:?}");

    let sum = residue_series_q(alpha, 0, 0, 0.2, 3, &ctl).unwrap();
    let line = hfun_bromwich(&kernel_hfun(KernelKind::Q, alpha, 3), 0.2, &ContourSpec::for_kernel(alpha, 3)).unwrap();
    assert!(rel(sum, line.value) < 1e-8, "{sum} {}", line.value);
}

#[test]
fn residue_q_two_dimensions_linear_term() {
    // the pole at -1 loses an order against 1/Gamma(alpha + alpha z), whose
    // derivative there contributes the factor alpha
    let ctl = SeriesControl::default();
    for &alpha in &[0.4, 1.3] {
        let rem: Vec<f64> = [1e-4, 1e-3]
            .iter()
            .map(|&r: &f64| (residue_series_q(alpha, 0, 0, r, 2, &ctl).unwrap() - alpha * r).abs() / (r * r * r.ln().abs()))
            .collect();
        assert!(rem[0] < 2.0 * rem[1] && rem[1] < 2.0 * rem[0], "a={alpha} {rem:?}");
    }
}

#[test]
fn residue_q_combination_is_higher_order() {
    // for d = 1 the pole at -3/2 survives the combination
    let ctl = SeriesControl::default();
    for d in 1..=3usize {
        let alpha = 0.7;
        let ratio: Vec<f64> = [0.01, 0.1]
            .iter()
            .map(|&r: &f64| {
                let comb = d as f64 * residue_series_q(alpha, 0, 0, r, d, &ctl).unwrap()
                    + 2.0 * residue_series_q(alpha, 0, 1, r, d, &ctl).unwrap();
                let env = match d {
                    1 => r.powf(1.5),
                    2 => r * r + r * r * r.ln().abs(),
                    _ => r * r,
                };
                comb.abs() / env
            })
            .collect();
        assert!(ratio.iter().all(|v| *v < 10.0), "d={d} {ratio:?}");
    }
}

#[test]
fn series_and_contour_agree_on_overlap_band() {
    let ctl = SeriesControl::default();
    let derivs = [
        (0usize, SpatialDerivative::None),
        (0, SpatialDerivative::Gradient(0)),
        (0, SpatialDerivative::Hessian(0, 0)),
        (1, SpatialDerivative::None),
    ];
    let mut worst: f64 = 0.0;
    for &kind in &[KernelKind::P, KernelKind::Q] {
        for d in 1..=3usize {
            for &alpha in &[0.4, 0.8, 1.3, 1.7] {
                let spec = ContourSpec::for_kernel(alpha, d);
                for &big_r in &[0.5, 0.75, 1.0, 1.25, 1.5] {
                    let t: f64 = 0.8;
                    let rho = (big_r * t.powf(alpha)).sqrt();
                    let mut x = point(d, rho);
                    if d > 1 {
                        // off the diagonal so mixed terms are generic
                        x[0] *= 1.3;
                        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                        x.iter_mut().for_each(|v| *v *= rho / norm);
                    }
                    for &(n, sp) in &derivs {
                        let q = KernelQuery::new(kind, alpha, t, &x, n, sp).unwrap();
                        let s = kernel_eval_with(&q, Method::Series, &ctl, &spec).unwrap();
                        let c = kernel_eval_with(&q, Method::Contour, &ctl, &spec).unwrap();
                        let e = rel(c.value, s.value);
                        worst = worst.max(e);
                        assert!(
                            e < 1e-8,
                            "{} d={d} a={alpha} R={big_r} n={n} {sp:?}: {} {}",
                            kind.name(),
                            s.value,
                            c.value
                        );
                    }
                }
            }
        }
    }
    eprintln!("worst overlap disagreement {worst:e}");
}

#[test]
fn classical_order_is_heat_kernel() {
    for d in 1..=3usize {
        let x = point(d, 1.7);
        let t = 0.4;
        let v = kernel_value(&KernelQuery::plain(KernelKind::P, 1.0, t, &x).unwrap()).unwrap();
        let want = (4.0 * PI * t).powf(-(d as f64) / 2.0) * (-1.7f64.powi(2) / (4.0 * t)).exp();
        assert!(rel(v, want) < 1e-14);
    }
}

fn random_query_point(rng: &mut ChaCha8Rng) -> (f64, usize, f64, Vec<f64>) {
    let alpha = loop {
        let a = rng.gen_range(0.15..1.9);
        if (a - 1.0f64).abs() > 0.05 {
            break a;
        }
    };
    let d = rng.gen_range(1..=3usize);
    let t = rng.gen_range(0.1f64..4.0).powf(1.5);
    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    (alpha, d, t, x)
}

#[test]
fn scaling_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = [
        (0usize, SpatialDerivative::None, 0.0),
        (1, SpatialDerivative::None, 0.0),
        (0, SpatialDerivative::Gradient(0), -0.5),
    ];
    for &(n, sp, extra_alpha) in &cases {
        let mut done = 0;
        while done < 100 {
            let (alpha, d, t, x) = random_query_point(&mut rng);
            if x.iter().map(|v| v * v).sum::<f64>() < 1e-4 {
                continue;
            }
            let lhs = kernel_value(&KernelQuery::new(KernelKind::K, alpha, t, &x, n, sp).unwrap()).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| v * t.powf(-alpha / 2.0)).collect();
            let base = kernel_value(&KernelQuery::new(KernelKind::K, alpha, 1.0, &scaled, n, sp).unwrap()).unwrap();
            // extra_alpha carries the spatial part: -alpha/2 per x-derivative
            let power = -1.0 - n as f64 - alpha * d as f64 / 2.0 + extra_alpha * alpha;
            let rhs = t.powf(power) * base;
            if lhs == 0.0 && rhs == 0.0 {
                continue;
            }
            assert!(rel(lhs, rhs) < 1e-10, "n={n} {sp:?} a={alpha} t={t} x={x:?}: {lhs} {rhs}");
            done += 1;
        }
    }
}

/// int over R^d of the radial kernel f(rho) as a function of v = ln(rho^2 t^{-alpha} / 4).
fn radial_mass(kind: KernelKind, alpha: f64, d: usize, t: f64) -> f64 {
    let edges: Vec<f64> = (0..=70).map(|i| -62.0 + i as f64).collect();
    let area = 2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0);
    gauss_panels(&edges, 20, |v| {
        let rho = 2.0 * (0.5 * v).exp() * t.powf(alpha / 2.0);
        let value = kernel_value(&KernelQuery::plain(kind, alpha, t, &point(d, rho)).unwrap()).unwrap();
        // rho^{d-1} d rho = rho^d dv / 2
        area * value * rho.powi(d as i32) / 2.0
    })
}

#[test]
fn p_has_unit_mass() {
    for d in 1..=3usize {
        for &alpha in &[0.5, 1.5] {
            for &t in &[0.5, 1.0, 2.0] {
                let m = radial_mass(KernelKind::P, alpha, d, t);
                assert!((m - 1.0).abs() < 1e-8, "d={d} a={alpha} t={t}: {m}");
            }
        }
    }
}

#[test]
fn k_has_zero_mass() {
    for d in 1..=3usize {
        for &alpha in &[0.5, 1.5] {
            let m = radial_mass(KernelKind::K, alpha, d, 1.0);
            assert!(m.abs() < 1e-6, "d={d} a={alpha}: {m}");
        }
    }
}

#[test]
fn fourier_transform_in_one_dimension() {
    for &alpha in &[0.5, 1.5] {
        let edges: Vec<f64> = (0..=160).map(|i| i as f64 * 0.25).collect();
        let (xs, ws) = common::gauss_legendre(20);
        let mut samples = Vec::new();
        for e in edges.windows(2) {
            let (a, b) = (e[0], e[1]);
            for i in 0..20 {
                let x = 0.5 * (a + b) + 0.5 * (b - a) * xs[i];
                let p = kernel_value(&KernelQuery::plain(KernelKind::P, alpha, 1.0, &[x]).unwrap()).unwrap();
                samples.push((x, 0.5 * (b - a) * ws[i] * p));
            }
        }
        for &xi in &[0.5f64, 1.0, 2.0] {
            let ft: f64 = samples.iter().map(|&(x, w)| 2.0 * w * (x * xi).cos()).sum();
            let want = mittag_leffler_real(alpha, 1.0, -xi * xi).unwrap();
            assert!((ft - want).abs() < 1e-6, "a={alpha} xi={xi}: {ft} {want}");
        }
    }
}

#[test]
fn time_derivative_of_p_is_laplacian_of_q() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut done = 0;
    while done < 50 {
        let (alpha, _d, t, x) = random_query_point(&mut rng);
        let rho2: f64 = x.iter().map(|v| v * v).sum();
        if rho2 < 1e-3 {
            continue;
        }
        let k = kernel_value(&KernelQuery::plain(KernelKind::K, alpha, t, &x).unwrap()).unwrap();
        let pt = kernel_value(&KernelQuery::new(KernelKind::P, alpha, t, &x, 1, SpatialDerivative::None).unwrap()).unwrap();
        let lap = kernel_value(&KernelQuery::new(KernelKind::Q, alpha, t, &x, 0, SpatialDerivative::Laplacian).unwrap())
            .unwrap();
        let scale = k.abs().max(1e-200);
        assert!((k - lap).abs() < 1e-8 * scale, "a={alpha} t={t} x={x:?}: {k} {lap}");
        assert!((k - pt).abs() < 1e-8 * scale, "a={alpha} t={t} x={x:?}: {k} {pt}");
        done += 1;
    }
}

#[test]
fn laplacian_is_trace_of_hessian() {
    let x = [0.4, -0.9, 0.3];
    for &alpha in &[0.6, 1.4] {
        for &kind in &[KernelKind::P, KernelKind::Q] {
            let lap = kernel_value(&KernelQuery::new(kind, alpha, 0.7, &x, 0, SpatialDerivative::Laplacian).unwrap()).unwrap();
            let trace: f64 = (0..3)
                .map(|i| kernel_value(&KernelQuery::new(kind, alpha, 0.7, &x, 0, SpatialDerivative::Hessian(i, i)).unwrap()).unwrap())
                .sum();
            assert!(rel(trace, lap) < 1e-10);
        }
    }
}

#[test]
fn gradient_matches_finite_difference() {
    let x = [0.5, 0.8];
    let h = 1e-5;
    for &alpha in &[0.6, 1.4] {
        let g = kernel_value(&KernelQuery::new(KernelKind::P, alpha, 1.0, &x, 0, SpatialDerivative::Gradient(1)).unwrap()).unwrap();
        let f = |dy: f64| kernel_value(&KernelQuery::plain(KernelKind::P, alpha, 1.0, &[x[0], x[1] + dy]).unwrap()).unwrap();
        let fd = (f(h) - f(-h)) / (2.0 * h);
        assert!(rel(fd, g) < 1e-7, "{fd} {g}");
    }
}

#[test]
fn far_field_underflows_with_flag() {
    let q = KernelQuery::plain(KernelKind::P, 0.5, 1e-3, &[50.0]).unwrap();
    let v = kernel_eval(&q, &SeriesControl::default(), &ContourSpec::for_kernel(0.5, 1)).unwrap();
    assert_eq!(v.value, 0.0);
    assert!(v.underflow);
    assert_eq!(v.regime, Regime::Underflow);
}

#[test]
fn invalid_queries_are_rejected() {
    assert!(KernelQuery::plain(KernelKind::P, 0.5, 1.0, &[0.0, 0.0]).is_err());
    assert!(KernelQuery::plain(KernelKind::P, 0.5, -1.0, &[1.0]).is_err());
    assert!(KernelQuery::plain(KernelKind::P, 0.5, 1.0, &[1.0, 1.0, 1.0, 1.0]).is_err());
    assert!(KernelQuery::new(KernelKind::P, 0.5, 1.0, &[1.0], 3, SpatialDerivative::None).is_err());
    assert!(KernelQuery::new(KernelKind::P, 0.5, 1.0, &[1.0], 0, SpatialDerivative::Gradient(1)).is_err());
}

#[test]
fn envelope_formulas() {
    let alpha = 0.6;
    let sigma = decay_sigma(alpha);
    assert!(rel(sigma, 1.4 * 0.6f64.powf(0.6 / 1.4)) < 1e-15);
    let q = KernelQuery::plain(KernelKind::P, alpha, 1.0, &[0.05, 0.02]).unwrap();
    let big_r = q.big_r();
    let rho = q.radius();
    let want = rho.powi(-2) * (big_r + big_r * big_r.ln().abs());
    assert!(rel(envelope_bound(&q).unwrap(), want) < 1e-14);
    let q1 = KernelQuery::plain(KernelKind::Q, alpha, 1.0, &[0.1]).unwrap();
    assert!(envelope_bound(&q1).unwrap() >= 0.1f64.powi(-1) * q1.big_r().sqrt());
}

#[test]
fn kernels_within_fitted_envelopes() {
    // the ratio |kernel| / envelope stays bounded across six decades of R
    for &(kind, n, sp) in &[
        (KernelKind::P, 0usize, SpatialDerivative::None),
        (KernelKind::P, 1, SpatialDerivative::Gradient(0)),
        (KernelKind::Q, 0, SpatialDerivative::None),
        (KernelKind::Q, 1, SpatialDerivative::Hessian(0, 0)),
    ] {
        for d in 1..=3usize {
            for &alpha in &[0.5, 1.5] {
                let mut hi: f64 = 0.0;
                for i in 0..=60 {
                    let big_r = 10f64.powf(-3.0 + 0.1 * i as f64);
                    let q = KernelQuery::new(kind, alpha, 1.0, &point(d, big_r.sqrt()), n, sp).unwrap();
                    let v = kernel_value(&q).unwrap();
                    let env = envelope_bound(&q).unwrap();
                    hi = hi.max(v.abs() / env);
                }
                assert!(hi.is_finite() && hi < 1e3, "{} d={d} a={alpha} n={n} {sp:?}: {hi}", kind.name());
            }
        }
    }
}
