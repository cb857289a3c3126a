//! Fractional integrals and derivatives on uniform time grids.
//!
//! Weights come from product integration against the piecewise-linear
//! interpolant of the samples, so every operator is exact on
//! piecewise-linear data up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{gamma, rgamma, FracOrder};

/// Uniform time grid 0 = t_0 < ... < t_n = horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub n_steps: usize,
    pub nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive and finite"));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be positive"));
        }
        let h = horizon / n_steps as f64;
        let mut nodes: Vec<f64> = (0..=n_steps).map(|i| i as f64 * h).collect();
        nodes[n_steps] = horizon;
        Ok(TimeGrid {
            horizon,
            n_steps,
            nodes,
        })
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Samples on a time grid with the initial data a Caputo derivative needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub initial_value: Option<f64>,
    pub initial_slope: Option<f64>,
}

impl Signal {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("{} samples for {} nodes", values.len(), grid.len()),
            ));
        }
        Ok(Signal {
            grid,
            values,
            initial_value: None,
            initial_slope: None,
        })
    }

    /// Samples f at the nodes and records f(0).
    pub fn sample<F: Fn(f64) -> f64>(grid: &TimeGrid, f: F) -> Self {
        let values: Vec<f64> = grid.nodes.iter().map(|&t| f(t)).collect();
        Signal {
            grid: grid.clone(),
            initial_value: Some(values[0]),
            values,
            initial_slope: None,
        }
    }

    pub fn with_initial_value(mut self, v: f64) -> Self {
        self.initial_value = Some(v);
        self
    }

    pub fn with_initial_slope(mut self, v: f64) -> Self {
        self.initial_slope = Some(v);
        self
    }

    /// Discrete L_p norm (p = inf allowed) by the trapezoidal rule, with the
    /// node t = 0 left out.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_open(&self.values, self.grid.step(), p)
    }
}

/// Discrete L_p norm of uniformly spaced samples, skipping index 0.
pub fn lp_norm_open(values: &[f64], h: f64, p: f64) -> f64 {
    let tail = &values[1.min(values.len())..];
    if p.is_infinite() {
        return tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let n = tail.len();
    let sum: f64 = tail
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i + 1 == n { 0.5 } else { 1.0 };
            w * v.abs().powf(p)
        })
        .sum();
    (sum * h).powf(1.0 / p)
}

// (k+1)^p - 2 k^p + (k-1)^p for k >= 1 without cancellation at large k.
fn second_diff_pow(k: usize, p: f64) -> f64 {
    let kf = k as f64;
    if k < 8 {
        return (kf + 1.0).powf(p) - 2.0 * kf.powf(p) + (kf - 1.0).powf(p);
    }
    // k^p * 2 * sum_{m even >= 2} C(p, m) k^{-m}
    let u = 1.0 / kf;
    let mut binom = 1.0;
    let mut acc = 0.0;
    let mut upow = 1.0;
    for m in 1..60 {
        binom *= (p - (m as f64) + 1.0) / m as f64;
        upow *= u;
        if m % 2 == 0 {
            let term = binom * upow;
            acc += term;
            if term.abs() <= 1e-18 * acc.abs() {
                break;
            }
        }
    }
    2.0 * kf.powf(p) * acc
}

// (n-1)^p - (n-p) n^{p-1}, the end weight of product integration.
fn end_weight(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    if n < 8 {
        return (nf - 1.0).powf(p) - (nf - p) * nf.powf(p - 1.0);
    }
    // n^p [ (1-u)^p - 1 + p u ], u = 1/n
    let u = 1.0 / nf;
    let mut binom = p;
    let mut acc = 0.0;
    let mut upow = -u;
    for m in 2..60 {
        binom *= (p - (m as f64) + 1.0) / m as f64;
        upow *= -u;
        let term = binom * upow;
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() {
            break;
        }
    }
    nf.powf(p) * acc
}

// (k+1)^q - k^q, q in (0, 1].
fn first_diff_pow(k: usize, q: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    kf.powf(q) * (q * (1.0 / kf).ln_1p()).exp_m1()
}

/// Product-integration weights for the Riemann-Liouville integral of order
/// alpha on a uniform grid, built once and applied to many signals.
#[derive(Debug, Clone)]
pub struct RlIntegralWeights {
    pub alpha: f64,
    pub step: f64,
    scale: f64,
    // inner[k] multiplies s_{n-k} for 1 <= n-k <= n-1; inner[0] = 1 is the
    // weight of s_n
    inner: Vec<f64>,
    // end[n] multiplies s_0 at target n
    end: Vec<f64>,
}

impl RlIntegralWeights {
    pub fn new(alpha: f64, grid: &TimeGrid) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", "fractional integral order must be positive"));
        }
        let n = grid.n_steps;
        let p = alpha + 1.0;
        let h = grid.step();
        let mut inner = vec![1.0; n + 1];
        for (k, w) in inner.iter_mut().enumerate().skip(1) {
            *w = second_diff_pow(k, p);
        }
        let mut end = vec![0.0; n + 1];
        for (m, w) in end.iter_mut().enumerate().skip(1) {
            *w = end_weight(m, p);
        }
        Ok(RlIntegralWeights {
            alpha,
            step: h,
            scale: h.powf(alpha) * rgamma(alpha + 2.0),
            inner,
            end,
        })
    }

    /// Value of I^alpha s at node `n`.
    pub fn at(&self, values: &[f64], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let mut acc = self.end[n] * values[0];
        for j in 1..=n {
            acc += self.inner[n - j] * values[j];
        }
        self.scale * acc
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        (0..values.len()).map(|n| self.at(values, n)).collect()
    }

    /// Weight of s_n itself in the value at node n.
    pub fn diagonal(&self) -> f64 {
        self.scale
    }
}

/// Weights of the L1 formula: int_{t_j}^{t_{j+1}} k_{1-beta}(t_n - s) ds
/// = h^{1-beta} b_{n-j-1} / Gamma(2-beta), beta in (0, 1].
#[derive(Debug, Clone)]
pub struct L1Weights {
    pub order: f64,
    scale: f64,
    diffs: Vec<f64>,
}

impl L1Weights {
    pub fn new(order: f64, step: f64, n_steps: usize) -> Result<Self> {
        if !(order > 0.0 && order <= 1.0) {
            return Err(Error::invalid("order", "L1 weights need an order in (0, 1]"));
        }
        let q = 1.0 - order;
        let diffs = (0..n_steps.max(1)).map(|k| first_diff_pow(k, q)).collect();
        Ok(L1Weights {
            order,
            scale: step.powf(-order) * rgamma(2.0 - order),
            diffs,
        })
    }

    /// sum_{j<n} b_{n-j-1} (v_{j+1} - v_j), scaled; `v` must hold n+1 values.
    pub fn apply_at(&self, v: &[f64], n: usize) -> f64 {
        let mut acc = 0.0;
        for j in 0..n {
            acc += self.diffs[n - j - 1] * (v[j + 1] - v[j]);
        }
        self.scale * acc
    }

    /// Scaled weight b_k of the increment k steps behind the target.
    pub fn weight(&self, k: usize) -> f64 {
        self.scale * self.diffs[k]
    }

    /// The weight of v_n in `apply_at(v, n)`.
    pub fn diagonal(&self) -> f64 {
        self.scale
    }
}

/// Riemann-Liouville integral I^alpha s on the grid.
pub fn rl_integral(alpha: f64, s: &Signal) -> Result<Signal> {
    let w = RlIntegralWeights::new(alpha, &s.grid)?;
    let values = w.apply(&s.values);
    Ok(Signal {
        grid: s.grid.clone(),
        values,
        initial_value: Some(0.0),
        initial_slope: None,
    })
}

/// Caputo derivative on the grid.
///
/// 0 < alpha < 1: L1 formula with s(0) replaced by the recorded initial value.
/// 1 < alpha < 2: the L1 formula of order alpha - 1 applied to the velocity,
/// which is the initial slope at t = 0, central differences inside and a
/// three-point one-sided difference at the target node.
/// alpha = 1: backward first differences.
pub fn caputo_derivative(alpha: FracOrder, s: &Signal) -> Result<Signal> {
    let a = alpha.get();
    let grid = &s.grid;
    let n = grid.n_steps;
    let h = grid.step();
    let mut out = vec![0.0; n + 1];
    if a == 1.0 {
        for i in 1..=n {
            out[i] = (s.values[i] - s.values[i - 1]) / h;
        }
        out[0] = match s.initial_slope {
            Some(v) => v,
            None => (s.values[1] - s.values[0]) / h,
        };
    } else if a < 1.0 {
        let u0 = s
            .initial_value
            .ok_or(Error::MissingInitialData("initial value for 0 < alpha < 1"))?;
        let w = L1Weights::new(a, h, n)?;
        let mut v = s.values.clone();
        v[0] = u0;
        for (i, o) in out.iter_mut().enumerate().skip(1) {
            *o = w.apply_at(&v, i);
        }
    } else {
        let u0 = s
            .initial_value
            .ok_or(Error::MissingInitialData("initial value for 1 < alpha < 2"))?;
        let u1 = s
            .initial_slope
            .ok_or(Error::MissingInitialData("initial slope for 1 < alpha < 2"))?;
        if n < 2 {
            return Err(Error::invalid("n_steps", "need at least two steps for 1 < alpha < 2"));
        }
        let w = L1Weights::new(a - 1.0, h, n)?;
        let mut u = s.values.clone();
        u[0] = u0;
        let mut vel = vec![0.0; n + 1];
        vel[0] = u1;
        for i in 1..n {
            vel[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        }
        for (i, o) in out.iter_mut().enumerate().skip(1) {
            let saved = vel[i];
            vel[i] = if i >= 2 {
                (3.0 * u[i] - 4.0 * u[i - 1] + u[i - 2]) / (2.0 * h)
            } else {
                // quadratic through u(0), u'(0), u(t_1)
                2.0 * (u[1] - u[0]) / h - u1
            };
            *o = w.apply_at(&vel, i);
            vel[i] = saved;
        }
    }
    Ok(Signal {
        grid: grid.clone(),
        values: out,
        initial_value: None,
        initial_slope: None,
    })
}

/// Riemann-Liouville derivative D^alpha s = d/dt I^{1-alpha} s, 0 < alpha < 1,
/// differentiating the product-integrated integral exactly:
/// s(0) t^{-alpha}/Gamma(1-alpha) plus the L1 sum.  The node t = 0 is
/// singular and is returned as NaN.
pub fn rl_derivative(alpha: f64, s: &Signal) -> Result<Signal> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", "Riemann-Liouville derivative needs 0 < alpha < 1"));
    }
    let grid = &s.grid;
    let n = grid.n_steps;
    let w = L1Weights::new(alpha, grid.step(), n)?;
    let c = rgamma(1.0 - alpha);
    let mut out = vec![f64::NAN; n + 1];
    for (i, o) in out.iter_mut().enumerate().skip(1) {
        *o = s.values[0] * grid.nodes[i].powf(-alpha) * c + w.apply_at(&s.values, i);
    }
    Ok(Signal {
        grid: grid.clone(),
        values: out,
        initial_value: None,
        initial_slope: None,
    })
}

/// Closed form of the Caputo derivative of t^beta:
/// Gamma(beta+1)/Gamma(beta+1-alpha) t^{beta-alpha}, for beta >= alpha.
pub fn caputo_power_exact(alpha: FracOrder, beta: f64, t: f64) -> Result<f64> {
    let a = alpha.get();
    if beta < a {
        return Err(Error::invalid("beta", "power rule needs beta >= alpha"));
    }
    if t <= 0.0 {
        return Err(Error::invalid("t", "must be positive"));
    }
    Ok(gamma(beta + 1.0) * rgamma(beta + 1.0 - a) * t.powf(beta - a))
}
