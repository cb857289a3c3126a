//! Fox H-functions with real parameters on a vertical Bromwich line.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::poly::Poly;
use crate::error::{Error, Result};
use crate::specfun::ln_gamma_complex;

/// Gamma(a + b z) appearing in a Mellin-Barnes integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFactor {
    pub a: f64,
    pub b: f64,
}

/// H^{mn}_{nu mu}[r | (c_i, gamma_i); (d_j, delta_j)] with real parameters and
/// positive gamma_i, delta_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HFunction {
    pub m: usize,
    pub n: usize,
    /// (c_i, gamma_i), i = 1..nu
    pub upper: Vec<(f64, f64)>,
    /// (d_j, delta_j), j = 1..mu
    pub lower: Vec<(f64, f64)>,
}

impl HFunction {
    pub fn new(m: usize, n: usize, upper: Vec<(f64, f64)>, lower: Vec<(f64, f64)>) -> Result<Self> {
        let h = HFunction { m, n, upper, lower };
        h.validate()?;
        Ok(h)
    }

    /// Gamma factors of the integrand as (numerator, denominator).
    pub fn factors(&self) -> (Vec<GammaFactor>, Vec<GammaFactor>) {
        let mut num = Vec::new();
        let mut den = Vec::new();
        for (j, &(d, delta)) in self.lower.iter().enumerate() {
            if j < self.m {
                num.push(GammaFactor { a: d, b: delta });
            } else {
                den.push(GammaFactor { a: 1.0 - d, b: -delta });
            }
        }
        for (i, &(c, gamma)) in self.upper.iter().enumerate() {
            if i < self.n {
                num.push(GammaFactor { a: 1.0 - c, b: -gamma });
            } else {
                den.push(GammaFactor { a: c, b: gamma });
            }
        }
        (num, den)
    }

    pub fn omega(&self) -> f64 {
        self.lower.iter().map(|p| p.1).sum::<f64>() - self.upper.iter().map(|p| p.1).sum::<f64>()
    }

    /// Sum of |b| over numerator factors minus the same over denominators.
    pub fn angular_excess(&self) -> f64 {
        let (num, den) = self.factors();
        num.iter().map(|f| f.b.abs()).sum::<f64>() - den.iter().map(|f| f.b.abs()).sum::<f64>()
    }

    /// Open interval of admissible line abscissas separating the left poles
    /// (from Gamma(d_j + delta_j z), j <= m) and the right poles (from
    /// Gamma(1 - c_i - gamma_i z), i <= n).
    pub fn separating_window(&self) -> (f64, f64) {
        let left = self.lower[..self.m]
            .iter()
            .map(|&(d, delta)| -d / delta)
            .fold(f64::NEG_INFINITY, f64::max);
        let right = self.upper[..self.n]
            .iter()
            .map(|&(c, gamma)| (1.0 - c) / gamma)
            .fold(f64::INFINITY, f64::min);
        (left, right)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m > self.lower.len() || self.n > self.upper.len() {
            return Err(Error::invalid("m/n", "index counts exceed parameter lists"));
        }
        if self
            .upper
            .iter()
            .chain(self.lower.iter())
            .any(|&(v, s)| !(s > 0.0) || !v.is_finite())
        {
            return Err(Error::invalid("parameters", "scale factors must be positive, shifts finite"));
        }
        if !(self.omega() > 0.0) {
            return Err(Error::invalid("parameters", "sum(delta) - sum(gamma) must be positive"));
        }
        if !(self.angular_excess() > 0.0) {
            return Err(Error::invalid("parameters", "second analyticity condition fails"));
        }
        let (lo, hi) = self.separating_window();
        if !(lo < hi) {
            return Err(Error::invalid("parameters", "left and right pole sets are not separated"));
        }
        Ok(())
    }

    /// Polynomial-in-tau growth exponent of |integrand| on Re z = x.
    pub fn growth_exponent(&self, x: f64) -> f64 {
        let (num, den) = self.factors();
        growth_exponent_factors(&num, &den, x)
    }
}

pub(crate) fn ln_theta_factors(num: &[GammaFactor], den: &[GammaFactor], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for f in num {
        acc += ln_gamma_complex(f.a + f.b * z);
    }
    for f in den {
        acc -= ln_gamma_complex(f.a + f.b * z);
    }
    acc
}

pub(crate) fn growth_exponent_factors(num: &[GammaFactor], den: &[GammaFactor], x: f64) -> f64 {
    num.iter().map(|f| f.a + f.b * x - 0.5).sum::<f64>()
        - den.iter().map(|f| f.a + f.b * x - 0.5).sum::<f64>()
}

/// Bromwich line and quadrature settings.  The line is Re z = -gamma;
/// `tau_max` and `step` are chosen adaptively when left as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub gamma: f64,
    pub tau_max: Option<f64>,
    pub step: Option<f64>,
    pub tol: f64,
    pub max_nodes: usize,
}

impl ContourSpec {
    pub fn new(gamma: f64) -> Self {
        ContourSpec {
            gamma,
            tau_max: None,
            step: None,
            tol: 1e-12,
            max_nodes: 400_000,
        }
    }

    /// Upper end of the admissible offset window for the kernels:
    /// min(1, (d-1)/4, 1/alpha) for d >= 2 and min(1/2, 1/alpha) for d = 1.
    pub fn kernel_window(alpha: f64, d: usize) -> f64 {
        if d == 1 {
            0.5f64.min(1.0 / alpha)
        } else {
            1.0f64.min((d as f64 - 1.0) / 4.0).min(1.0 / alpha)
        }
    }

    /// Offset at 0.9 of the window.
    pub fn for_kernel(alpha: f64, d: usize) -> Self {
        ContourSpec::new(0.9 * Self::kernel_window(alpha, d))
    }
}

/// Outcome of a line quadrature, including the resolved settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourReport {
    pub value: f64,
    pub abscissa: f64,
    pub tau_max: f64,
    pub step: f64,
    pub c1: f64,
    pub c2: f64,
    pub tail_estimate: f64,
    pub nodes: usize,
}

/// Line integral (1/2 pi i) int exp(ln_theta(z)) P(z) r^{-z} dz over
/// Re z = abscissa, returned as value = scaled * exp(log_scale) to survive
/// extreme magnitudes.
pub(crate) struct LineIntegral {
    pub scaled: f64,
    pub log_scale: f64,
    pub report: ContourReport,
}

pub(crate) struct LineSetup<'a> {
    pub ln_theta: &'a dyn Fn(Complex64) -> Complex64,
    pub poly: &'a Poly,
    pub ln_r: f64,
    pub abscissa: f64,
    pub c1: f64,
    pub c2: f64,
    pub tau_max: Option<f64>,
    pub step: Option<f64>,
    pub tol: f64,
    pub max_nodes: usize,
}

const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

pub(crate) fn integrate_line(s: &LineSetup) -> Result<LineIntegral> {
    let x0 = s.abscissa;
    let z0 = Complex64::new(x0, 0.0);
    let log_scale = ((s.ln_theta)(z0) - z0 * s.ln_r).re;
    // each node's exponent carries an absolute error of about eps times the
    // size of its terms, which far out on the real axis dominates
    let floor = ROUNDING_FLOOR.max(4.0 * f64::EPSILON * ((s.ln_theta)(z0).norm() + (x0 * s.ln_r).abs()));
    // integrand on tau >= 0 relative to exp(log_scale); conjugate symmetry
    // turns the full line into (1/pi) int_0^inf Re[...]
    let integrand = |tau: f64| -> (f64, f64) {
        let z = Complex64::new(x0, tau);
        let w = ((s.ln_theta)(z) - z * s.ln_r - log_scale).exp() * s.poly.eval_complex(z);
        if w.re.is_finite() {
            (w.re / PI, w.norm() / PI)
        } else {
            (0.0, 0.0)
        }
    };
    let c1 = s.c1 + s.poly.degree() as f64;
    let c2 = s.c2;
    if !(c2 > 0.0) {
        return Err(Error::invalid("contour", "integrand does not decay along the line"));
    }
    let tail_of = |tau: f64, mag: f64| {
        let rate = c2 - c1.max(0.0) / tau;
        if rate <= 0.25 * c2 {
            f64::INFINITY
        } else {
            mag / rate
        }
    };

    let mut h = s.step.unwrap_or(0.5);
    let mut tau_max = s.tau_max.unwrap_or_else(|| (12.0 / c2).max(2.0 * x0.abs() + 8.0));
    let mut nodes = 0usize;

    // running trapezoid sums on [0, count * h]; refinements only add nodes
    let mut count = (tau_max / h).ceil() as usize;
    let (f0, a0) = integrand(0.0);
    let (mut sum, mut abs_sum) = (0.5 * f0, 0.5 * a0);
    for k in 1..=count {
        let (f, a) = integrand(k as f64 * h);
        sum += f;
        abs_sum += a;
    }
    nodes += count + 1;
    let mut value = sum * h;
    let mut abs = abs_sum * h;
    let reference = |v: f64, a: f64| v.abs().max(1e-4 * a).max(f64::MIN_POSITIVE);
    // rounding in a sum of terms of total size a limits what can be resolved
    let target = |v: f64, a: f64| (0.1 * s.tol * reference(v, a)).max(floor * a);

    // truncation
    loop {
        let (_, mag) = integrand(tau_max);
        let tail = tail_of(tau_max, mag);
        if tail <= target(value, abs) {
            break;
        }
        if s.tau_max.is_some() {
            return Err(Error::TruncationBudget {
                what: "Bromwich line truncation",
                estimate: tail / reference(value, abs),
                tol: s.tol,
            });
        }
        tau_max *= 1.5;
        let new_count = (tau_max / h).ceil() as usize;
        if nodes + new_count - count > s.max_nodes {
            return Err(Error::NonConvergence {
                what: "Bromwich truncation height",
                budget: s.max_nodes,
            });
        }
        for k in count + 1..=new_count {
            let (f, a) = integrand(k as f64 * h);
            sum += f;
            abs_sum += a;
        }
        nodes += new_count - count;
        count = new_count;
        value = sum * h;
        abs = abs_sum * h;
    }

    // step refinement by halving: the new nodes are the odd multiples of h/2
    if s.step.is_none() {
        loop {
            let finer = h / 2.0;
            for k in 0..count {
                let (f, a) = integrand((2 * k + 1) as f64 * finer);
                sum += f;
                abs_sum += a;
            }
            nodes += count;
            count *= 2;
            h = finer;
            let refined = sum * h;
            let change = (refined - value).abs();
            value = refined;
            abs = abs_sum * h;
            if change <= target(value, abs) {
                break;
            }
            if nodes > s.max_nodes {
                return Err(Error::NonConvergence {
                    what: "Bromwich step refinement",
                    budget: s.max_nodes,
                });
            }
        }
    }
    tau_max = count as f64 * h;
    let (_, mag) = integrand(tau_max);
    Ok(LineIntegral {
        scaled: value,
        log_scale,
        report: ContourReport {
            value: value * log_scale.exp(),
            abscissa: x0,
            tau_max,
            step: h,
            c1,
            c2,
            tail_estimate: tail_of(tau_max, mag) * log_scale.exp(),
            nodes,
        },
    })
}

/// H(r) by trapezoidal quadrature on the line Re z = -spec.gamma.
pub fn hfun_bromwich(h: &HFunction, r: f64, spec: &ContourSpec) -> Result<ContourReport> {
    h.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", "must be positive and finite"));
    }
    let x0 = -spec.gamma;
    let (lo, hi) = h.separating_window();
    if !(x0 > lo && x0 < hi) {
        return Err(Error::invalid(
            "gamma",
            format!("line Re z = {x0} does not separate the poles ({lo}, {hi})"),
        ));
    }
    let (num, den) = h.factors();
    let ln_theta = |z: Complex64| ln_theta_factors(&num, &den, z);
    let one = Poly::one();
    let out = integrate_line(&LineSetup {
        ln_theta: &ln_theta,
        poly: &one,
        ln_r: r.ln(),
        abscissa: x0,
        c1: h.growth_exponent(x0),
        c2: 0.5 * PI * h.angular_excess(),
        tau_max: spec.tau_max,
        step: spec.step,
        tol: spec.tol,
        max_nodes: spec.max_nodes,
    })?;
    Ok(out.report)
}
