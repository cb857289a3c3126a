//! Two-parameter Mittag-Leffler function E_{a,b}(z).
//!
//! Switching rule:
//! 1. `|z| <= 5`: power series, accepted only if the largest term times the
//!    unit roundoff stays below the tolerance relative to the sum;
//! 2. real `z <= -12`: asymptotic expansion (algebraic series plus the
//!    exponentially small pole terms when a > 1), accepted only if the
//!    smallest term reaches the tolerance before the series starts to diverge;
//! 3. otherwise, or when 1 and 2 are rejected: inverse Laplace transform of
//!    s^{a-b}/(s^a - z) on an optimal parabolic contour (Garrappa 2015) plus
//!    residues at the poles lying outside it.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::gamma::{ln_gamma, rgamma};
use crate::error::{Error, Result};

const SERIES_RADIUS: f64 = 5.0;
const ASYMPTOTIC_RADIUS: f64 = 12.0;

/// Evaluation request for E_{alpha,beta}(z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLQuery {
    pub alpha: f64,
    pub beta: f64,
    pub z: Complex64,
}

impl MLQuery {
    pub fn new(alpha: f64, beta: f64, z: Complex64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be > 0, got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("must be > 0, got {beta}")));
        }
        Ok(MLQuery { alpha, beta, z })
    }

    pub fn real(alpha: f64, beta: f64, x: f64) -> Result<Self> {
        Self::new(alpha, beta, Complex64::new(x, 0.0))
    }
}

/// Budgets and tolerances for the evaluation strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlControl {
    /// relative tolerance for accepting series and asymptotic sums
    pub tol: f64,
    /// maximum number of series or asymptotic terms
    pub max_terms: usize,
    /// maximum number of contour nodes on each side of the real axis
    pub max_nodes: usize,
}

impl Default for MlControl {
    fn default() -> Self {
        MlControl {
            tol: 1e-13,
            max_terms: 20_000,
            max_nodes: 2_000,
        }
    }
}

/// Which strategy produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlStrategy {
    ClosedForm,
    Series,
    Asymptotic,
    Contour,
}

impl MlStrategy {
    pub fn name(self) -> &'static str {
        match self {
            MlStrategy::ClosedForm => "closed_form",
            MlStrategy::Series => "series",
            MlStrategy::Asymptotic => "asymptotic",
            MlStrategy::Contour => "contour",
        }
    }
}

/// E_{alpha,beta}(z) with default control.
pub fn mittag_leffler(q: MLQuery) -> Result<Complex64> {
    mittag_leffler_with(q, &MlControl::default()).map(|(v, _)| v)
}

/// E_{alpha,beta}(x) for real x, returning the real part.
pub fn mittag_leffler_real(alpha: f64, beta: f64, x: f64) -> Result<f64> {
    mittag_leffler(MLQuery::real(alpha, beta, x)?).map(|v| v.re)
}

/// E_{alpha,beta}(z) with explicit control; also reports the strategy used.
pub fn mittag_leffler_with(q: MLQuery, ctl: &MlControl) -> Result<(Complex64, MlStrategy)> {
    let MLQuery { alpha, beta, z } = q;
    if z.norm() == 0.0 {
        return Ok((Complex64::new(rgamma(beta), 0.0), MlStrategy::ClosedForm));
    }
    if beta == 1.0 && alpha == 1.0 {
        return Ok((z.exp(), MlStrategy::ClosedForm));
    }
    if beta == 1.0 && alpha == 2.0 {
        return Ok((z.sqrt().cosh(), MlStrategy::ClosedForm));
    }
    if z.norm() <= SERIES_RADIUS {
        if let Some(v) = series(alpha, beta, z, ctl)? {
            return Ok((v, MlStrategy::Series));
        }
    }
    if z.im == 0.0 && z.re <= -ASYMPTOTIC_RADIUS && alpha < 2.0 && alpha != 1.0 {
        if let Some(v) = asymptotic_negative_real(alpha, beta, z.re, ctl) {
            return Ok((Complex64::new(v, 0.0), MlStrategy::Asymptotic));
        }
    }
    let v = contour(alpha, beta, z, ctl)?;
    Ok((v, MlStrategy::Contour))
}

/// Power series evaluation.  Returns `None` when cancellation makes the
/// sum untrustworthy at the requested tolerance.
pub fn series(alpha: f64, beta: f64, z: Complex64, ctl: &MlControl) -> Result<Option<Complex64>> {
    let real = z.im == 0.0;
    let lnz = if real {
        Complex64::new(z.re.abs().ln(), 0.0)
    } else {
        z.ln()
    };
    let negative = real && z.re < 0.0;
    let mut sum = Complex64::new(rgamma(beta), 0.0);
    // Neumaier compensation, real and imaginary parts separately
    let mut carry = Complex64::new(0.0, 0.0);
    let mut abs_sum = sum.norm();
    let mut small_run = 0;
    for k in 1..ctl.max_terms {
        let kf = k as f64;
        let a = alpha * kf + beta;
        let term = if real && a < 170.0 && kf * lnz.re.abs() < 700.0 {
            // direct product keeps the per-term error at a few ulps
            Complex64::new(z.re.powi(k as i32) * rgamma(a), 0.0)
        } else if real {
            let mag = (kf * lnz.re - ln_gamma(a)).exp();
            let sign = if negative && k % 2 == 1 { -1.0 } else { 1.0 };
            Complex64::new(sign * mag, 0.0)
        } else {
            (kf * lnz - ln_gamma(a)).exp()
        };
        let tn = term.norm();
        let next = sum + term;
        carry.re += neumaier_carry(sum.re, term.re, next.re);
        carry.im += neumaier_carry(sum.im, term.im, next.im);
        sum = next;
        abs_sum += tn;
        // terms decrease monotonically once alpha*k + beta exceeds |z|^{1/alpha}
        if tn <= f64::EPSILON * 1e-3 * sum.norm() && a > z.norm().powf(1.0 / alpha) + 1.0 {
            small_run += 1;
            if small_run >= 3 {
                let total = sum + carry;
                // each term carries a few ulps from the power and 1/Gamma
                let loss = 8.0 * f64::EPSILON * abs_sum / total.norm();
                return Ok(if loss <= ctl.tol { Some(total) } else { None });
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "Mittag-Leffler power series",
        budget: ctl.max_terms,
    })
}

fn neumaier_carry(acc: f64, term: f64, next: f64) -> f64 {
    if acc.abs() >= term.abs() {
        (acc - next) + term
    } else {
        (term - next) + acc
    }
}

/// Asymptotic expansion on the negative real axis, x <= -ASYMPTOTIC_RADIUS.
/// Returns `None` if the divergent tail is reached before the tolerance.
pub fn asymptotic_negative_real(alpha: f64, beta: f64, x: f64, ctl: &MlControl) -> Option<f64> {
    let r = -x;
    // pole contributions (1/alpha) Z^{1-beta} e^{Z}, Z = r^{1/alpha} e^{+-i pi/alpha}
    let mut exp_part = 0.0;
    if alpha > 1.0 {
        let zz = Complex64::from_polar(r.powf(1.0 / alpha), PI / alpha);
        let c = (zz.ln() * (1.0 - beta) + zz).exp() / alpha;
        exp_part = 2.0 * c.re;
    }
    let mut alg = 0.0;
    let mut last = f64::INFINITY;
    let lnr = r.ln();
    for n in 1..ctl.max_terms {
        let nf = n as f64;
        let arg = beta - alpha * nf;
        let rg = rgamma(arg);
        // |1/Gamma(arg)| <= Gamma(1 - arg)/pi for arg < 1; the majorant keeps
        // accidental zeros of 1/Gamma from ending the sum early
        let bound = if arg < 1.0 {
            (ln_gamma(1.0 - arg) - PI.ln() - nf * lnr).exp()
        } else {
            rg.abs() * (-nf * lnr).exp()
        };
        // -z^{-n} / Gamma(beta - alpha n), z = -r
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        let term = sign * rg * (-nf * lnr).exp();
        alg += term;
        let total = (exp_part + alg).abs().max(f64::MIN_POSITIVE);
        if bound <= 0.1 * ctl.tol * total && n > 1 {
            return Some(exp_part + alg);
        }
        if bound > last {
            return None;
        }
        last = bound;
    }
    None
}

// Optimal parabolic contour parameters for a region bounded by two
// singularity levels.
fn optimal_param_rb(
    t: f64,
    phi_j: f64,
    phi_j1: f64,
    pj: f64,
    qj: f64,
    log_epsilon: f64,
) -> (f64, f64, f64) {
    let log_eps = f64::EPSILON.ln();
    let fac = 1.01;
    let f_max = (log_epsilon - log_eps).exp();
    let sq_phi_j = phi_j.sqrt();
    let threshold = 2.0 * ((log_epsilon - log_eps) / t).sqrt();
    let sq_phi_j1 = phi_j1.sqrt().min(threshold - sq_phi_j);

    let (sq_phibar_j, sq_phibar_j1, f_bar, adm) = if pj < 1e-14 && qj < 1e-14 {
        (sq_phi_j, sq_phi_j1, 1.0, true)
    } else if pj < 1e-14 {
        let f_min = if sq_phi_j > 0.0 {
            fac * (sq_phi_j / (sq_phi_j1 - sq_phi_j)).powf(qj)
        } else {
            fac
        };
        if f_min < f_max {
            let f_bar = f_min + f_min / f_max * (f_max - f_min);
            let fq = f_bar.powf(-1.0 / qj);
            let b1 = (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq);
            (sq_phi_j, b1, f_bar, true)
        } else {
            (0.0, 0.0, 1.0, false)
        }
    } else if qj < 1e-14 {
        let f_min = fac * (sq_phi_j1 / (sq_phi_j1 - sq_phi_j)).powf(pj);
        if f_min < f_max {
            let f_bar = f_min + f_min / f_max * (f_max - f_min);
            let fp = f_bar.powf(-1.0 / pj);
            let b0 = (2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp);
            (b0, sq_phi_j1, f_bar, true)
        } else {
            (0.0, 0.0, 1.0, false)
        }
    } else {
        let f_min = fac * (sq_phi_j + sq_phi_j1) / (sq_phi_j1 - sq_phi_j).powf(pj.max(qj));
        if f_min < f_max {
            let f_min = f_min.max(1.5);
            let f_bar = f_min + f_min / f_max * (f_max - f_min);
            let fp = f_bar.powf(-1.0 / pj);
            let fq = f_bar.powf(-1.0 / qj);
            let w = -phi_j1 * t / log_epsilon;
            let den = 2.0 + w - (1.0 + w) * fp + fq;
            let b0 = ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den;
            let b1 = (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den;
            (b0, b1, f_bar, true)
        } else {
            (0.0, 0.0, 1.0, false)
        }
    };
    if !adm {
        return (0.0, 0.0, f64::INFINITY);
    }
    let log_epsilon = log_epsilon - f_bar.ln();
    let w = -sq_phibar_j1 * sq_phibar_j1 * t / log_epsilon;
    let mu = (((1.0 + w) * sq_phibar_j + sq_phibar_j1) / (2.0 + w)).powi(2);
    let h = -2.0 * PI / log_epsilon * (sq_phibar_j1 - sq_phibar_j)
        / ((1.0 + w) * sq_phibar_j + sq_phibar_j1);
    let n = ((1.0 - log_epsilon / t / mu).sqrt() / h).ceil();
    (mu, h, n)
}

// Optimal parabolic contour parameters for the unbounded right region.
fn optimal_param_ru(t: f64, phi_j: f64, pj: f64, log_epsilon: f64) -> (f64, f64, f64) {
    let sq_phi_j = phi_j.sqrt();
    let mut phibar_j = if phi_j > 0.0 { phi_j * 1.01 } else { 0.01 };
    let mut sq_phibar_j = phibar_j.sqrt();
    let (f_min, f_max, f_tar) = (1.0f64, 10.0f64, 5.0f64);
    let mut n;
    let mut a;
    let mut sq_mu;
    let mut guard = 0;
    loop {
        let phi_t = phibar_j * t;
        let log_eps_phi_t = log_epsilon / phi_t;
        n = (phi_t / PI * (1.0 - 1.5 * log_eps_phi_t + (1.0 - 2.0 * log_eps_phi_t).sqrt())).ceil();
        a = PI * n / phi_t;
        sq_mu = sq_phibar_j * (4.0 - a).abs() / (7.0 - (1.0 + 12.0 * a).sqrt()).abs();
        let fbar = ((sq_phibar_j - sq_phi_j) / sq_mu).powf(-pj);
        let stop = pj < 1e-14 || (f_min < fbar && fbar < f_max);
        guard += 1;
        if stop || guard > 100 {
            break;
        }
        sq_phibar_j = f_tar.powf(-1.0 / pj) * sq_mu + sq_phi_j;
        phibar_j = sq_phibar_j * sq_phibar_j;
    }
    let mut mu = sq_mu * sq_mu;
    let mut h = (-3.0 * a - 2.0 + 2.0 * (1.0 + 12.0 * a).sqrt()) / (4.0 - a) / n;
    let log_eps = f64::EPSILON.ln();
    let threshold = (log_epsilon - log_eps) / t;
    if mu > threshold {
        let qq = if pj.abs() < 1e-14 {
            0.0
        } else {
            f_tar.powf(-1.0 / pj) * mu.sqrt()
        };
        let phibar = (qq + phi_j.sqrt()).powi(2);
        if phibar < threshold {
            let w = (log_eps / (log_eps - log_epsilon)).sqrt();
            let u = (-phibar * t / log_eps).sqrt();
            mu = threshold;
            n = (w * log_epsilon / 2.0 / PI / (u * w - 1.0)).ceil();
            h = (log_eps / (log_eps - log_epsilon)).sqrt() / n;
        } else {
            n = f64::INFINITY;
            h = 0.0;
        }
    }
    (mu, h, n)
}

/// Laplace-inversion evaluation valid for every complex z.
pub fn contour(alpha: f64, beta: f64, z: Complex64, ctl: &MlControl) -> Result<Complex64> {
    let t = 1.0;
    let mut log_epsilon = 1e-15f64.ln();
    let theta = z.arg();
    let kmin = (-alpha / 2.0 - theta / (2.0 * PI)).ceil() as i64;
    let kmax = (alpha / 2.0 - theta / (2.0 * PI)).floor() as i64;
    let absz = z.norm();
    let mut stars: Vec<(f64, Complex64)> = (kmin..=kmax)
        .map(|k| {
            let s = Complex64::from_polar(
                absz.powf(1.0 / alpha),
                (theta + 2.0 * PI * k as f64) / alpha,
            );
            ((s.re + s.norm()) / 2.0, s)
        })
        .filter(|(phi, _)| *phi > 1e-15)
        .collect();
    stars.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut s_star = vec![Complex64::new(0.0, 0.0)];
    let mut phi = vec![0.0];
    for (p, s) in &stars {
        s_star.push(*s);
        phi.push(*p);
    }
    let j1 = s_star.len();
    phi.push(f64::INFINITY);
    let mut p = vec![(-2.0 * (alpha - beta + 1.0)).max(0.0)];
    p.extend(std::iter::repeat(1.0).take(j1 - 1));
    let mut qv = vec![1.0; j1 - 1];
    qv.push(f64::INFINITY);
    let log_eps = f64::EPSILON.ln();

    let (mu, h, n, idx) = loop {
        let admissible: Vec<usize> = (0..j1)
            .filter(|&j| phi[j] < (log_epsilon - log_eps) / t && phi[j] < phi[j + 1])
            .collect();
        let mut best = (0.0, 0.0, f64::INFINITY, 0usize);
        for &j in &admissible {
            let (m, hh, nn) = if j < j1 - 1 {
                optimal_param_rb(t, phi[j], phi[j + 1], p[j], qv[j], log_epsilon)
            } else {
                optimal_param_ru(t, phi[j], p[j], log_epsilon)
            };
            if nn < best.2 {
                best = (m, hh, nn, j);
            }
        }
        if best.2 <= ctl.max_nodes as f64 {
            break best;
        }
        if log_epsilon > 1e-6f64.ln() {
            return Err(Error::NonConvergence {
                what: "Mittag-Leffler contour",
                budget: ctl.max_nodes,
            });
        }
        log_epsilon += 10f64.ln();
    };

    let n = n as i64;
    let i = Complex64::i();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in -n..=n {
        let u = h * k as f64;
        let s = mu * (i * u + 1.0).powi(2);
        let ds = mu * (-2.0 * u + 2.0 * i);
        let ln_s = s.ln();
        let f = ((alpha - beta) * ln_s).exp() / ((alpha * ln_s).exp() - z) * ds;
        acc += (s * t).exp() * f;
    }
    let integral = acc * h / (2.0 * PI * i);
    let mut residues = Complex64::new(0.0, 0.0);
    for s in &s_star[idx + 1..] {
        residues += ((1.0 - beta) * s.ln() + s * t).exp() / alpha;
    }
    let mut v = integral + residues;
    if z.im == 0.0 {
        v = Complex64::new(v.re, 0.0);
    }
    Ok(v)
}

/// Relaxation kernel t^{alpha-1} E_{alpha,alpha}(-lambda t^alpha), whose
/// Laplace transform is 1/(s^alpha + lambda).
pub fn relaxation_kernel(alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0,2), got {alpha}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda", format!("must be >= 0, got {lambda}")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("must be > 0, got {t}")));
    }
    if alpha == 1.0 {
        return Ok((-lambda * t).exp());
    }
    if lambda == 0.0 {
        return Ok(t.powf(alpha - 1.0) * rgamma(alpha));
    }
    let e = mittag_leffler_real(alpha, alpha, -lambda * t.powf(alpha))?;
    Ok(t.powf(alpha - 1.0) * e)
}

/// Time integral of the relaxation kernel: int_0^t H = t^alpha E_{alpha,alpha+1}(-lambda t^alpha).
pub fn relaxation_integral(alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        return Ok(if lambda == 0.0 {
            t
        } else {
            -(-lambda * t).exp_m1() / lambda
        });
    }
    let e = mittag_leffler_real(alpha, alpha + 1.0, -lambda * t.powf(alpha))?;
    Ok(t.powf(alpha) * e)
}
