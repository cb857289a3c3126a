//! Special functions: complex gamma and digamma, Mittag-Leffler functions and
//! the relaxation kernel used by every solver.

mod gamma;
mod mittag_leffler;

pub use gamma::{
    cos_pi, digamma, digamma_real, gamma, gamma_complex, gamma_complex_eps, ln_gamma,
    ln_gamma_complex, pole_distance, rgamma, rgamma_deriv, sin_pi, EULER_GAMMA, POLE_EPS,
};
pub use mittag_leffler::{
    asymptotic_negative_real, contour as ml_contour, mittag_leffler, mittag_leffler_real,
    mittag_leffler_with, relaxation_integral, relaxation_kernel, series as ml_series, MLQuery,
    MlControl, MlStrategy,
};

use crate::error::{Error, Result};

/// Fractional order alpha in (0, 2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 2.0 {
            Ok(FracOrder(alpha))
        } else {
            Err(Error::invalid(
                "alpha",
                format!("must lie in the open interval (0,2), got {alpha}"),
            ))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// alpha == 1 is routed to classical closed forms.
    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }
}

/// Sector |pi - Arg z| < pi - eta with alpha pi / 2 < eta < min(pi, alpha pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorSpec {
    pub eta: f64,
}

impl SectorSpec {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        let lo = alpha * std::f64::consts::PI / 2.0;
        let hi = std::f64::consts::PI.min(alpha * std::f64::consts::PI);
        if eta > lo && eta < hi {
            Ok(SectorSpec { eta })
        } else {
            Err(Error::invalid(
                "eta",
                format!("must lie in ({lo}, {hi}) for alpha = {alpha}, got {eta}"),
            ))
        }
    }

    /// Midpoint of the admissible window.
    pub fn midpoint(alpha: f64) -> Result<Self> {
        let lo = alpha * std::f64::consts::PI / 2.0;
        let hi = std::f64::consts::PI.min(alpha * std::f64::consts::PI);
        Self::new(alpha, 0.5 * (lo + hi))
    }

    pub fn contains(&self, z: num_complex::Complex64) -> bool {
        (std::f64::consts::PI - z.arg().abs()) < std::f64::consts::PI - self.eta
    }
}
