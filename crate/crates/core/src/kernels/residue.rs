//! Residue sums for Theta(z) = Gamma(d/2 + z) Gamma(1 + z) / Gamma(c0 + alpha z)
//! times a polynomial P(z), i.e. the H^{20}_{12}-type integrals behind p, q
//! and K and all their derivatives.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::poly::Poly;
use crate::error::{Error, Result};
use crate::specfun::{digamma_real, gamma, ln_gamma, rgamma, rgamma_deriv};

/// Truncation control for residue sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub tol: f64,
    /// R-interval on which series and contour are both evaluated in tests.
    pub overlap_band: (f64, f64),
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            max_terms: 400,
            tol: 1e-14,
            overlap_band: (0.5, 1.5),
        }
    }
}

/// A pole of Theta with its order after structural cancellations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Pole {
    /// z0 = -1 - j from Gamma(1 + z); Gamma(d/2 + z0) regular
    FromUnitFactor { j: usize },
    /// z0 = -d/2 - j from Gamma(d/2 + z); Gamma(1 + z0) regular (odd d)
    FromHalfFactor { j: usize },
    /// even d: z0 = -d/2 - j = -1 - j1, both factors singular
    Double { j: usize, j1: usize },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MellinKernel {
    pub d: usize,
    pub alpha: f64,
    pub c0: f64,
}

// relative rounding loss beyond which a residue sum is rejected
const CANCELLATION_LIMIT: f64 = 1e-6;

fn factorial_sign(j: usize) -> f64 {
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    sign * rgamma(j as f64 + 1.0)
}

// upper bound of |1/Gamma(x)|, blind to accidental zeros
fn rgamma_majorant(x: f64) -> f64 {
    if x >= 1.0 {
        rgamma(x).abs()
    } else {
        (ln_gamma(1.0 - x) - PI.ln()).exp()
    }
}

fn rgamma_deriv_majorant(x: f64) -> f64 {
    if x >= 1.0 {
        rgamma_deriv(x).abs()
    } else {
        (ln_gamma(1.0 - x)).exp() * (1.0 + digamma_real(1.0 - x).abs() / PI)
    }
}

impl MellinKernel {
    pub fn pole_sequence(&self, count: usize) -> Vec<(f64, Pole)> {
        let half = self.d as f64 / 2.0;
        let mut out = Vec::with_capacity(count);
        if self.d % 2 == 1 {
            let (mut ja, mut jb) = (0usize, 0usize);
            while out.len() < count {
                let za = -1.0 - ja as f64;
                let zb = -half - jb as f64;
                if za > zb {
                    out.push((za, Pole::FromUnitFactor { j: ja }));
                    ja += 1;
                } else {
                    out.push((zb, Pole::FromHalfFactor { j: jb }));
                    jb += 1;
                }
            }
        } else {
            let shift = self.d / 2 - 1;
            for j1 in 0..count {
                let z0 = -1.0 - j1 as f64;
                if j1 < shift {
                    out.push((z0, Pole::FromUnitFactor { j: j1 }));
                } else {
                    out.push((z0, Pole::Double { j: j1 - shift, j1 }));
                }
            }
        }
        out
    }

    /// Residue of Theta P r^{-z} at a pole, with a majorant of its size
    /// that ignores accidental zeros of 1/Gamma.
    pub fn residue(&self, pole: Pole, z0: f64, poly: &Poly, ln_r: f64) -> (f64, f64) {
        let half = self.d as f64 / 2.0;
        let x = self.c0 + self.alpha * z0;
        let g = rgamma(x);
        let gb = rgamma_majorant(x);
        let rz = (-z0 * ln_r).exp();
        let pv = poly.eval(z0);
        let pb = poly.abs_bound(z0);
        match pole {
            Pole::FromUnitFactor { j } => {
                let c = factorial_sign(j) * gamma(half + z0);
                (c * g * pv * rz, c.abs() * gb * pb * rz)
            }
            Pole::FromHalfFactor { j } => {
                let c = factorial_sign(j) * gamma(1.0 + z0);
                (c * g * pv * rz, c.abs() * gb * pb * rz)
            }
            Pole::Double { j, j1 } => {
                let c = factorial_sign(j) * factorial_sign(j1);
                let dc = c * (digamma_real(j as f64 + 1.0) + digamma_real(j1 as f64 + 1.0));
                let dg = self.alpha * rgamma_deriv(x);
                let dp = poly.deriv_at(z0);
                let value = (dc * g * pv + c * dg * pv + c * g * dp - c * g * pv * ln_r) * rz;
                let dgb = self.alpha * rgamma_deriv_majorant(x);
                let bound = ((dc.abs() + c.abs() * ln_r.abs()) * gb * pb
                    + c.abs() * dgb * pb
                    + c.abs() * gb * poly.abs_bound(z0) * (poly.degree() as f64))
                    * rz;
                (value, bound)
            }
        }
    }

    /// Sum of all residues of Theta P r^{-z}, i.e. the line integral for
    /// moderate r.
    pub fn residue_sum(&self, poly: &Poly, r: f64, ctl: &SeriesControl) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::invalid("r", "must be positive"));
        }
        let ln_r = r.ln();
        let poles = self.pole_sequence(ctl.max_terms);
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut quiet = 0;
        let mut last_bound = f64::INFINITY;
        for (i, &(z0, pole)) in poles.iter().enumerate() {
            let (v, bound) = self.residue(pole, z0, poly, ln_r);
            sum += v;
            abs_sum += v.abs();
            if bound <= ctl.tol * sum.abs() && bound <= last_bound && i > 2 {
                quiet += 1;
                if quiet >= 3 {
                    let loss = 16.0 * f64::EPSILON * abs_sum / sum.abs();
                    if loss > CANCELLATION_LIMIT {
                        return Err(Error::TruncationBudget {
                            what: "residue series cancellation",
                            estimate: loss,
                            tol: CANCELLATION_LIMIT,
                        });
                    }
                    return Ok(sum);
                }
            } else {
                quiet = 0;
            }
            if bound.is_finite() {
                last_bound = bound;
            }
            if bound == 0.0 && i > 8 && sum == 0.0 {
                return Ok(0.0);
            }
        }
        Err(Error::NonConvergence {
            what: "residue series",
            budget: ctl.max_terms,
        })
    }
}

fn theta_poly(k: usize, l: usize) -> Poly {
    Poly::monomial(k + l)
}

/// H^p_{k,l}: residue sum of Gamma(d/2+z)Gamma(1+z)z^{k+l}/Gamma(1+alpha z)
/// times r^{-z}.  `r` is the H-function argument, R/4 for the kernels.
pub fn residue_series_p(alpha: f64, k: usize, l: usize, r: f64, d: usize, ctl: &SeriesControl) -> Result<f64> {
    check_dim(d)?;
    MellinKernel { d, alpha, c0: 1.0 }.residue_sum(&theta_poly(k, l), r, ctl)
}

/// H^q_{k,l}: as `residue_series_p` with Gamma(alpha + alpha z) below.
pub fn residue_series_q(alpha: f64, k: usize, l: usize, r: f64, d: usize, ctl: &SeriesControl) -> Result<f64> {
    check_dim(d)?;
    MellinKernel { d, alpha, c0: alpha }.residue_sum(&theta_poly(k, l), r, ctl)
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::invalid("d", "dimension must be 1, 2 or 3"))
    }
}
