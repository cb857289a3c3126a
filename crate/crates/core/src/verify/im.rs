//! I_M(tau, xi) = int_0^M e^{-i tau t} d/dt E_alpha(-t^alpha xi^2) dt.
//!
//! After integration by parts,
//! I_M = i tau int_0^M e^{-i tau t} (E(t) - 1) dt + e^{-i tau M} (E(M) - 1)
//! with E(t) = E_alpha(-t^alpha xi^2). Subtracting 1 from E inside the
//! integral is what makes xi = 0 vanish identically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{params, EstimateReport};
use crate::error::{Error, Result};
use crate::quad::{linspace, GaussLegendre};
use crate::specfun::{mittag_leffler_real, FracOrder};

const ORDER: usize = 12;
/// largest phase |tau| h swept by one Gauss panel
const PHASE_PER_PANEL: f64 = 2.0;
const GRADED_PANELS: i32 = 40;
const MAX_NODES: usize = 4_000_000;
const DRIFT_LIMIT: f64 = 0.01;

/// Probe grid: sup over taus x xis at M and 2M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImGrid {
    pub taus: Vec<f64>,
    pub xis: Vec<f64>,
    pub m: f64,
}

impl ImGrid {
    /// tau in [-50, 50], xi in [0, 10], M = 64.
    pub fn standard() -> Self {
        ImGrid {
            taus: linspace(-50.0, 50.0, 41),
            xis: linspace(0.0, 10.0, 11),
            m: 64.0,
        }
    }
}

/// Gauss nodes on [0, m]: geometric panels towards t = 0, where E(t) - 1
/// behaves like t^alpha, then uniform panels of width `width`.
fn nodes(m: f64, width: f64) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(ORDER);
    let first = width.min(m);
    let mut edges: Vec<f64> = (0..=GRADED_PANELS).rev().map(|k| first * 2f64.powi(-k)).collect();
    edges.insert(0, 0.0);
    let count = ((m - first) / width).ceil() as usize;
    let step = if count > 0 { (m - first) / count as f64 } else { 0.0 };
    for k in 1..=count {
        edges.push(first + k as f64 * step);
    }
    edges
        .windows(2)
        .flat_map(|e| gl.mapped(e[0], e[1]).collect::<Vec<_>>())
        .collect()
}

fn tabulate(alpha: f64, xi: f64, ts: &[(f64, f64)]) -> Result<Vec<f64>> {
    let lambda = xi * xi;
    ts.iter()
        .map(|&(t, _)| {
            if lambda == 0.0 {
                Ok(0.0)
            } else {
                Ok(mittag_leffler_real(alpha, 1.0, -lambda * t.powf(alpha))? - 1.0)
            }
        })
        .collect()
}

fn assemble(tau: f64, ts: &[(f64, f64)], em1: &[f64], end_em1: f64, m: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (&(t, w), &e) in ts.iter().zip(em1) {
        acc += w * e * Complex64::from_polar(1.0, -tau * t);
    }
    Complex64::new(0.0, tau) * acc + Complex64::from_polar(1.0, -tau * m) * end_em1
}

/// I_M(tau, xi) at one point.
pub fn im_value(alpha: f64, m: f64, tau: f64, xi: f64) -> Result<Complex64> {
    FracOrder::new(alpha)?;
    if !(m > 0.0) {
        return Err(Error::invalid("M", format!("must be positive, got {m}")));
    }
    let width = (PHASE_PER_PANEL / tau.abs().max(1e-300)).min(1.0);
    if (m / width) as usize * ORDER > MAX_NODES {
        return Err(Error::Budget {
            what: "oscillatory quadrature nodes",
            limit: MAX_NODES,
        });
    }
    let ts = nodes(m, width);
    let em1 = tabulate(alpha, xi, &ts)?;
    let end = tabulate(alpha, xi, &[(m, 0.0)])?[0];
    Ok(assemble(tau, &ts, &em1, end, m))
}

/// sup |I_M| over the grid at M and at 2M. Points whose phase per panel
/// would exceed the node budget are skipped and counted in the report.
pub fn im_probe(alpha: f64, grid: &ImGrid) -> Result<EstimateReport> {
    FracOrder::new(alpha)?;
    if !(grid.m > 0.0) {
        return Err(Error::invalid("M", format!("must be positive, got {}", grid.m)));
    }
    let m2 = 2.0 * grid.m;
    let tau_max = grid.taus.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let budget_width = m2 * ORDER as f64 / MAX_NODES as f64;
    let width = (PHASE_PER_PANEL / tau_max.max(1e-300)).min(1.0).max(budget_width);
    let mut unresolved = 0usize;
    let mut sup = [0.0f64; 2];
    for (level, &m) in [grid.m, m2].iter().enumerate() {
        let ts = nodes(m, width);
        for &xi in &grid.xis {
            let em1 = tabulate(alpha, xi, &ts)?;
            let end = tabulate(alpha, xi, &[(m, 0.0)])?[0];
            for &tau in &grid.taus {
                if tau.abs() * width > PHASE_PER_PANEL * (1.0 + 1e-12) {
                    unresolved += 1;
                    continue;
                }
                sup[level] = sup[level].max(assemble(tau, &ts, &em1, end, m).norm());
            }
        }
    }
    Ok(EstimateReport::from_levels(
        "im_sup",
        "sup over the tau x xi grid; M doubled",
        params([
            ("alpha", alpha),
            ("M", grid.m),
            ("taus", grid.taus.len() as f64),
            ("xis", grid.xis.len() as f64),
            ("unresolved", unresolved as f64),
        ]),
        sup[0],
        sup[1],
        DRIFT_LIMIT,
    ))
}
