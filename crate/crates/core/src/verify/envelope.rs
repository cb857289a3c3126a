use serde::{Deserialize, Serialize};

use super::{params, EstimateReport};
use crate::error::{Error, Result};
use crate::kernels::{envelope_bound, kernel_value, KernelKind, KernelQuery, SpatialDerivative};

const DRIFT_LIMIT: f64 = 0.10;

/// Which side of R = 1 the fit covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeSide {
    /// R in [1e-4, 1]
    Small,
    /// R in [1, 400]
    Large,
}

impl EnvelopeSide {
    fn range(self) -> (f64, f64) {
        match self {
            EnvelopeSide::Small => (-4.0, 0.0),
            EnvelopeSide::Large => (0.0, 400f64.log10()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvelopeSide::Small => "small_r",
            EnvelopeSide::Large => "large_r",
        }
    }
}

/// Ratios |kernel| / envelope on `points` log-spaced values of R. Times
/// wander through [10^{-1/2}, 10^{1/2}] as a smooth function of log R, so a
/// grid with 2 points - 1 nodes contains the coarse one.
fn ratios(
    kind: KernelKind,
    alpha: f64,
    d: usize,
    n: usize,
    spatial: SpatialDerivative,
    side: EnvelopeSide,
    points: usize,
) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::invalid("points", "need at least two grid points"));
    }
    let (lo, hi) = side.range();
    let dir: Vec<f64> = [1.0, 0.6, 0.3][..d].to_vec();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    (0..points)
        .map(|i| {
            let u = i as f64 / (points - 1) as f64;
            let big_r = 10f64.powf(lo + (hi - lo) * u);
            let t = 10f64.powf(0.5 * (7.0 * u).sin());
            let rho = (big_r * t.powf(alpha)).sqrt();
            let x: Vec<f64> = dir.iter().map(|v| rho * v / norm).collect();
            let q = KernelQuery::new(kind, alpha, t, &x, n, spatial)?;
            let env = envelope_bound(&q)?;
            let v = kernel_value(&q)?;
            Ok(if v == 0.0 { 0.0 } else { v.abs() / env })
        })
        .collect()
}

/// Fitted constant N = max |kernel| / envelope over a log-grid.
pub fn envelope_ratio_max(
    kind: KernelKind,
    alpha: f64,
    d: usize,
    n: usize,
    spatial: SpatialDerivative,
    side: EnvelopeSide,
    points: usize,
) -> Result<f64> {
    Ok(ratios(kind, alpha, d, n, spatial, side, points)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Envelope constant on `points` queries and on the 2x refined grid.
pub fn envelope_probe(
    kind: KernelKind,
    alpha: f64,
    d: usize,
    n: usize,
    spatial: SpatialDerivative,
    side: EnvelopeSide,
    points: usize,
) -> Result<EstimateReport> {
    let fine = ratios(kind, alpha, d, n, spatial, side, 2 * points - 1)?;
    let coarse = fine.iter().step_by(2).fold(0.0f64, |a, &b| a.max(b));
    let top = fine.iter().fold(0.0f64, |a, &b| a.max(b));
    let m = spatial.order();
    Ok(EstimateReport::from_levels(
        format!("envelope_{}_{}_n{n}_m{m}", kind.name(), side.name()),
        "log-grid in R; grid refined 2x",
        params([("alpha", alpha), ("d", d as f64), ("n", n as f64), ("m", m as f64), ("points", points as f64)]),
        coarse,
        top,
        DRIFT_LIMIT,
    ))
}
