use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{solve_fd_variable, CoefficientField, SpaceTimeField};
use crate::error::{Error, Result};
use crate::specfun::FracOrder;
use crate::verify::mixed_norm;

/// Maps a whole field u to the forcing f(t, x, u) on the same grids.
pub type NonlinearFn = Arc<dyn Fn(&SpaceTimeField) -> SpaceTimeField + Send + Sync>;

/// Caller-supplied nonlinearity with its declared continuity budget
/// |f(u) - f(v)| <= epsilon |u - v|_{H^2} + k_epsilon |u - v|.
#[derive(Clone)]
pub struct NonlinearSpec {
    pub evaluator: NonlinearFn,
    pub epsilon: f64,
    pub k_epsilon: f64,
}

impl fmt::Debug for NonlinearSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearSpec")
            .field("epsilon", &self.epsilon)
            .field("k_epsilon", &self.k_epsilon)
            .finish_non_exhaustive()
    }
}

impl NonlinearSpec {
    pub fn new(evaluator: NonlinearFn, epsilon: f64, k_epsilon: f64) -> Self {
        NonlinearSpec {
            evaluator,
            epsilon,
            k_epsilon,
        }
    }

    /// A forcing that ignores u.
    pub fn fixed(f: SpaceTimeField) -> Self {
        NonlinearSpec::new(Arc::new(move |_| f.clone()), 0.0, 0.0)
    }

    pub fn eval(&self, u: &SpaceTimeField) -> Result<SpaceTimeField> {
        let out = (self.evaluator)(u);
        if !out.same_grids(u) {
            return Err(Error::invalid("nonlinearity", "evaluator changed the grids"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    pub max_iterations: usize,
    pub tol: f64,
    /// exponents of the mixed norm used to measure successive differences
    pub p: f64,
    pub q: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            max_iterations: 50,
            tol: 1e-10,
            p: 2.0,
            q: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub solution: SpaceTimeField,
    /// linear solves after the initial one
    pub iterations: usize,
    /// mixed norm of u_{k+1} - u_k
    pub differences: Vec<f64>,
    /// differences[k+1] / differences[k]
    pub ratios: Vec<f64>,
}

/// Iterates u_{k+1} = L^{-1}(f0 + f(u_k)) from u_0 = L^{-1}(f0 + f(0)),
/// with L the finite-difference operator of `coeffs`.
pub fn solve_quasilinear_picard(
    alpha: FracOrder,
    coeffs: &CoefficientField,
    f0: &SpaceTimeField,
    spec: &NonlinearSpec,
    config: &PicardConfig,
) -> Result<PicardOutcome> {
    if config.max_iterations == 0 || !(config.tol > 0.0) {
        return Err(Error::invalid("picard", "need a positive iteration cap and tolerance"));
    }
    let linear = |u: &SpaceTimeField| -> Result<SpaceTimeField> {
        let rhs = f0.combine(1.0, &spec.eval(u)?, 1.0)?;
        solve_fd_variable(alpha, coeffs, &rhs)
    };
    let mut u = linear(&SpaceTimeField::zeros(&f0.time, &f0.space))?;
    let scale = mixed_norm(&u, config.p, config.q)?.max(f64::MIN_POSITIVE);
    let mut differences = Vec::new();
    let mut ratios = Vec::new();
    for it in 1..=config.max_iterations {
        let next = linear(&u)?;
        let diff = mixed_norm(&next.combine(1.0, &u, -1.0)?, config.p, config.q)?;
        if let Some(&prev) = differences.last() {
            if prev > 0.0 {
                ratios.push(diff / prev);
            }
        }
        differences.push(diff);
        u = next;
        if diff <= config.tol * scale {
            return Ok(PicardOutcome {
                solution: u,
                iterations: it,
                differences,
                ratios,
            });
        }
        if !diff.is_finite() {
            break;
        }
    }
    Err(Error::PicardDivergence {
        iterations: differences.len(),
        ratios,
    })
}
