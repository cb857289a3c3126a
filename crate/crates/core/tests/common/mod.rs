//! Independent oracles for integration tests.  Nothing here calls the
//! evaluation paths under test; high-precision arithmetic comes from MPFR.

#![allow(dead_code)]

use rug::Float;
use std::f64::consts::PI;

/// Extended-precision power series for E_{alpha,beta}(x), x real.
pub fn ml_series_mpfr(alpha: f64, beta: f64, x: f64) -> f64 {
    // bits lost to cancellation: log2 of the largest term
    let lx = x.abs().ln();
    let mut peak: f64 = 0.0;
    let mut k_peak = 0usize;
    for k in 0..200_000usize {
        let v = k as f64 * lx - ln_gamma_f64(alpha * k as f64 + beta);
        if v > peak {
            peak = v;
            k_peak = k;
        }
        if k > 10 && v < peak - 200.0 {
            break;
        }
    }
    let lost = if x < 0.0 { peak / 2f64.ln() } else { 0.0 };
    let prec = 160 + lost.ceil() as u32 + 64;
    let a = Float::with_val(prec, alpha);
    let b = Float::with_val(prec, beta);
    let xf = Float::with_val(prec, x);
    let mut pow = Float::with_val(prec, 1);
    let mut sum = Float::with_val(prec, 0);
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 8));
    for k in 0..1_000_000usize {
        let arg = Float::with_val(prec, &a * (k as u32)) + &b;
        let g = arg.gamma();
        let term = Float::with_val(prec, &pow / &g);
        sum += &term;
        if k > k_peak + 2 {
            let rel = Float::with_val(prec, term.abs_ref()) / Float::with_val(prec, sum.abs_ref());
            if rel < eps {
                break;
            }
        }
        pow *= &xf;
    }
    sum.to_f64()
}

/// e^{x^2} erfc(-x) in extended precision; equals E_{1/2}(x).
pub fn ml_half_erfc(x: f64) -> f64 {
    let prec = 256;
    let xf = Float::with_val(prec, x);
    let sq = Float::with_val(prec, &xf * &xf);
    let neg = Float::with_val(prec, -&xf);
    (sq.exp() * neg.erfc()).to_f64()
}

/// E_alpha(-x) for 0 < alpha < 1 and x > 0 from the completely monotone
/// representation
///   (sin(alpha pi)/pi) int_0^inf r^{alpha-1} e^{-r x^{1/alpha}}
///                      / (r^{2alpha} + 2 r^alpha cos(alpha pi) + 1) dr,
/// integrated by the trapezoidal rule after r = e^v.
pub fn ml_negative_integral(alpha: f64, x: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0 && x > 0.0);
    let c = x.powf(1.0 / alpha);
    let (s, co) = ((alpha * PI).sin(), (alpha * PI).cos());
    let f = |v: f64| {
        let r = v.exp();
        let ra = (alpha * v).exp();
        ra * (-r * c).exp() / (ra * ra + 2.0 * ra * co + 1.0)
    };
    let h = 0.01;
    let lo = -(40.0 / alpha) - 5.0;
    let hi = (60.0 / c).ln() + 3.0;
    let n = ((hi - lo) / h).ceil() as usize;
    let mut acc = 0.0;
    for i in 0..=n {
        acc += f(lo + i as f64 * h);
    }
    acc * h * s / PI
}

/// Oracle dispatch for E_alpha(x) used by the accuracy checks.
pub fn ml_oracle(alpha: f64, x: f64) -> f64 {
    if alpha == 1.0 {
        return x.exp();
    }
    if alpha == 2.0 {
        return if x >= 0.0 { x.sqrt().cosh() } else { (-x).sqrt().cos() };
    }
    if alpha == 0.5 {
        return ml_half_erfc(x);
    }
    if alpha < 1.0 && x < 0.0 {
        return ml_negative_integral(alpha, -x);
    }
    ml_series_mpfr(alpha, 1.0, x)
}

/// log Gamma(x), x > 0, via Stirling with upward shift; used only to size
/// working precision.
pub fn ln_gamma_f64(x: f64) -> f64 {
    let mut shift = 0.0;
    let mut y = x;
    while y < 20.0 {
        shift += y.ln();
        y += 1.0;
    }
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * y) - 1.0 / (360.0 * y.powi(3))
        - shift
}

/// Extended-precision complex Gamma, returned as (re, im).
pub fn gamma_mpfr_real(x: f64) -> f64 {
    Float::with_val(200, x).gamma().to_f64()
}

/// Relative error helper.
pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        (got - want).abs() / want.abs()
    }
}

/// Numerical Laplace transform int_0^inf e^{-s t} g(t) dt for a g with an
/// integrable power singularity at 0, by tanh-sinh on (0, 1] and a
/// substitution t = 1/u on [1, inf).
pub fn laplace_numeric<G: Fn(f64) -> f64>(g: G, s: f64) -> f64 {
    let head = tanh_sinh(0.0, 1.0, 7, |t| (-s * t).exp() * g(t));
    let tail = tanh_sinh(0.0, 1.0, 7, |u| {
        let t = 1.0 / u;
        (-s * t).exp() * g(t) / (u * u)
    });
    head + tail
}

/// Stand-alone tanh-sinh rule on (a, b).
pub fn tanh_sinh<F: FnMut(f64) -> f64>(a: f64, b: f64, levels: u32, mut f: F) -> f64 {
    let h = 0.5f64.powi(levels as i32);
    let half = 0.5 * (b - a);
    let kmax = (4.5 / h) as i64;
    let mut sum = 0.0;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let s = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / s.cosh().powi(2);
        let x = if s >= 0.0 {
            b - 2.0 * half / ((2.0 * s).exp() + 1.0)
        } else {
            a + 2.0 * half / ((-2.0 * s).exp() + 1.0)
        };
        if w < 1e-300 || x <= a || x >= b {
            continue;
        }
        let v = f(x);
        if v.is_finite() {
            sum += w * v;
        }
    }
    sum * h * half
}

/// Fixed Talbot inversion of a Laplace transform F at time t
/// (Abate-Valko contour, M nodes).
pub fn talbot_inverse<F: Fn(num_complex::Complex64) -> num_complex::Complex64>(
    big_f: F,
    t: f64,
    m: usize,
) -> f64 {
    use num_complex::Complex64;
    let mf = m as f64;
    let r = 2.0 * mf / (5.0 * t);
    let mut acc = 0.5 * (big_f(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..m {
        let th = k as f64 * PI / mf;
        let cot = th.cos() / th.sin();
        let s = Complex64::new(r * th * cot, r * th);
        let sigma = th + (th * cot - 1.0) * cot;
        let w = (s * t).exp() * Complex64::new(1.0, sigma);
        acc += (w * big_f(s)).re;
    }
    acc * r / mf
}

/// Composite Gauss-Legendre with n points per panel on the given edges.
pub fn gauss_panels<F: FnMut(f64) -> f64>(edges: &[f64], n: usize, mut f: F) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut acc = 0.0;
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for i in 0..n {
            acc += half * w[i] * f(mid + half * x[i]);
        }
    }
    acc
}

/// Gauss-Legendre nodes and weights by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let q2 = ((2.0 * kf - 1.0) * x * q1 - (kf - 1.0) * q0) / kf;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                ws[i] = 2.0 / ((1.0 - x * x) * dq * dq);
                break;
            }
        }
        xs[i] = x;
    }
    (xs, ws)
}
