//! Gamma, reciprocal gamma and digamma for real and complex arguments.
//!
//! Complex arguments use the Lanczos approximation (g = 7, nine
//! coefficients) with reflection for Re z < 1/2; real arguments go through
//! libm.  Logarithmic forms are provided so that products of many
//! gamma factors on long vertical lines neither overflow nor underflow.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default exclusion radius around the poles 0, -1, -2, ...
pub const POLE_EPS: f64 = 1e-12;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// B_{2k} / (2k) for the digamma asymptotic series, k = 1..8
const DIGAMMA_ASY: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3_617.0 / 8_160.0,
];

/// sin(pi x) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    let r = if r > 0.5 {
        1.0 - r
    } else if r < -0.5 {
        -1.0 - r
    } else {
        r
    };
    (PI * r).sin()
}

/// cos(pi x) with exact zeros at the half integers.
pub fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

fn nearest_nonpositive_int(re: f64) -> Option<f64> {
    if re > 0.5 {
        None
    } else {
        Some(re.round().min(0.0))
    }
}

/// Distance from z to the closest pole of the gamma function.
pub fn pole_distance(z: Complex64) -> f64 {
    match nearest_nonpositive_int(z.re) {
        Some(k) => (z - k).norm(),
        None => f64::INFINITY,
    }
}

fn lanczos_sum(z: Complex64) -> Complex64 {
    // z is the shifted argument (Gamma(z + 1))
    let mut acc = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    acc
}

/// Complex sin(pi z) with the real part reduced first.
fn sin_pi_complex(z: Complex64) -> Complex64 {
    let x = z.re - 2.0 * (z.re / 2.0).round();
    let y = PI * z.im;
    Complex64::new(sin_pi(x) * y.cosh(), cos_pi(x) * y.sinh())
}

/// A branch of log sin(pi z), stable for large |Im z|.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let x = z.re - 2.0 * (z.re / 2.0).round();
    let zr = Complex64::new(x, z.im);
    let i = Complex64::i();
    if z.im > 1.0 {
        let w = PI * zr;
        let q = (2.0 * i * w).exp();
        -i * w - Complex64::new(2f64.ln(), -PI / 2.0) + (1.0 - q).ln()
    } else if z.im < -1.0 {
        let w = PI * zr;
        let q = (-2.0 * i * w).exp();
        i * w - Complex64::new(2f64.ln(), PI / 2.0) + (1.0 - q).ln()
    } else {
        sin_pi_complex(z).ln()
    }
}

/// A branch of log Gamma(z); exp of the result is Gamma(z).  No pole check.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_complex(1.0 - z)
    } else {
        let zm = z - 1.0;
        let t = zm + LANCZOS_G + 0.5;
        LN_SQRT_2PI + (zm + 0.5) * t.ln() - t + lanczos_sum(zm).ln()
    }
}

/// Gamma(z) for complex z, rejecting arguments within `eps` of a pole.
pub fn gamma_complex_eps(z: Complex64, eps: f64) -> Result<Complex64> {
    if pole_distance(z) < eps {
        return Err(Error::PoleProximity(z.re));
    }
    if z.im == 0.0 {
        return Ok(Complex64::new(gamma(z.re), 0.0));
    }
    Ok(ln_gamma_complex(z).exp())
}

/// Gamma(z) for complex z with the default pole exclusion radius.
pub fn gamma_complex(z: Complex64) -> Result<Complex64> {
    gamma_complex_eps(z, POLE_EPS)
}

/// log|Gamma(x)| for real x (pole arguments give +inf).
pub fn ln_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    libm::lgamma(x)
}

/// Gamma(x) for real x; poles give NaN-free infinities.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = sin_pi(x);
        if s == 0.0 {
            return f64::INFINITY;
        }
        PI / (s * gamma(1.0 - x))
    } else {
        libm::tgamma(x)
    }
}

/// 1/Gamma(x), an entire function: exactly zero at the nonpositive integers.
pub fn rgamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = sin_pi(x);
        if s == 0.0 {
            return 0.0;
        }
        s * gamma(1.0 - x) / PI
    } else if x > 170.0 {
        (-ln_gamma(x)).exp()
    } else {
        1.0 / gamma(x)
    }
}

/// Derivative of 1/Gamma at x.  Equals (-1)^k k! at x = -k.
pub fn rgamma_deriv(x: f64) -> f64 {
    if let Some(k) = nearest_nonpositive_int(x) {
        let eps = x - k;
        if eps.abs() < 1e-9 {
            let n = -k;
            let sign = if (n as i64) % 2 == 0 { 1.0 } else { -1.0 };
            let fact = gamma(n + 1.0);
            let psi = digamma_real(n + 1.0);
            return sign * fact * (1.0 - 2.0 * psi * eps);
        }
    }
    -digamma_real(x) * rgamma(x)
}

fn digamma_asymptotic(z: Complex64) -> Complex64 {
    let w = 1.0 / (z * z);
    let mut poly = Complex64::new(0.0, 0.0);
    for &c in DIGAMMA_ASY.iter().rev() {
        poly = poly * w + c;
    }
    z.ln() - 0.5 / z - poly * w
}

fn cot_pi(z: Complex64) -> Complex64 {
    let x = z.re - (z.re).round();
    let w = PI * Complex64::new(x, z.im);
    let i = Complex64::i();
    if z.im >= 0.0 {
        let q = (2.0 * i * w).exp();
        i * (q + 1.0) / (q - 1.0)
    } else {
        let p = (-2.0 * i * w).exp();
        i * (1.0 + p) / (1.0 - p)
    }
}

fn digamma_unchecked(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return digamma_unchecked(1.0 - z) - PI * cot_pi(z);
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 10.0 {
        shift += 1.0 / w;
        w += 1.0;
    }
    digamma_asymptotic(w) - shift
}

/// psi(z) = d/dz log Gamma(z) for complex z, rejecting arguments near poles.
pub fn digamma(z: Complex64) -> Result<Complex64> {
    if pole_distance(z) < POLE_EPS {
        return Err(Error::PoleProximity(z.re));
    }
    Ok(digamma_unchecked(z))
}

/// psi(x) for real x; poles give infinity.
pub fn digamma_real(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    if x < 0.5 {
        let t = x - x.round();
        return digamma_real(1.0 - x) - PI * cos_pi(t) / sin_pi(t);
    }
    let mut shift = 0.0;
    let mut w = x;
    while w < 10.0 {
        shift += 1.0 / w;
        w += 1.0;
    }
    let inv2 = 1.0 / (w * w);
    let mut poly = 0.0;
    for &c in DIGAMMA_ASY.iter().rev() {
        poly = poly * inv2 + c;
    }
    w.ln() - 0.5 / w - poly * inv2 - shift
}
