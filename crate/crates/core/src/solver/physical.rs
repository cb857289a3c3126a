//! Direct space-time quadrature of u = int int q(t-s, x-y) f(s,y) dy ds in
//! one dimension, used as an oracle for the spectral solver.
//!
//! The forcing is read through its trigonometric interpolant in space and
//! piecewise linearly in time. The y-integral runs over the whole line, which
//! is the same as summing all periodic images of the box. Self-similarity
//! q(t, x) = t^{alpha/2 - 1} q(1, x t^{-alpha/2}) lets q(1, .) be tabulated once.

use rayon::prelude::*;
use std::f64::consts::PI;

use super::SpaceTimeField;
use crate::error::{Error, Result};
use crate::kernels::{kernel_eval, ContourSpec, KernelKind, KernelQuery, SeriesControl};
use crate::quad::GaussLegendre;
use crate::specfun::FracOrder;

pub const MAX_POINTS: usize = 128;
pub const MAX_STEPS: usize = 256;
const PANEL: f64 = 0.25;
const MAX_REACH: f64 = 400.0;
const TAIL: f64 = 1e-16;

/// Oracle solve of d^alpha_t u = u_xx + f on a periodic interval.
pub fn solve_physical_convolution(alpha: FracOrder, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let space = &f.space;
    if space.d != 1 {
        return Err(Error::Budget {
            what: "physical convolution dimension",
            limit: 1,
        });
    }
    let npts = space.points[0];
    if npts > MAX_POINTS {
        return Err(Error::Budget {
            what: "physical convolution space points",
            limit: MAX_POINTS,
        });
    }
    if f.time.n_steps > MAX_STEPS {
        return Err(Error::Budget {
            what: "physical convolution time steps",
            limit: MAX_STEPS,
        });
    }
    let a = alpha.get();
    let profile = SimilarityProfile::new(a)?;
    let length = space.lengths[0];
    let hx = space.spacing(0);
    let ht = f.time.step();
    let n = f.time.n_steps;

    let spatial = |tau: f64| -> Vec<f64> { profile.smeared(tau.powf(a / 2.0), npts, hx, length) };

    let gl_near = GaussLegendre::new(24);
    let gl = GaussLegendre::new(10);
    // rising[k]: part of the hat centred at k h on ((k-1)h, kh);
    // falling[k]: part on (kh, (k+1)h)
    let intervals: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rise = vec![0.0; npts];
            let mut fall = vec![0.0; npts];
            if k == 0 {
                // tau = h v^{2/alpha} removes the tau^{alpha-1} singularity
                let pre = 2.0 / a * ht.powf(a);
                for (v, w) in gl_near.mapped(0.0, 1.0) {
                    let s = v.powf(2.0 / a);
                    let j = spatial(ht * s);
                    for m in 0..npts {
                        rise[m] += pre * w * v * s * j[m];
                        fall[m] += pre * w * v * (1.0 - s) * j[m];
                    }
                }
            } else {
                let lo = k as f64 * ht;
                let hi = lo + ht;
                for (tau, w) in gl.mapped(lo, hi) {
                    let j = spatial(tau);
                    let g = tau.powf(a - 1.0);
                    let s = (tau - lo) / ht;
                    for m in 0..npts {
                        rise[m] += w * g * s * j[m];
                        fall[m] += w * g * (1.0 - s) * j[m];
                    }
                }
            }
            (rise, fall)
        })
        .collect();
    let hat = |k: usize| -> Vec<f64> {
        let mut w = intervals[k].1.clone();
        if k > 0 {
            for (x, r) in w.iter_mut().zip(&intervals[k - 1].0) {
                *x += r;
            }
        }
        w
    };
    let hats: Vec<Vec<f64>> = (0..n).map(hat).collect();

    let mut out = SpaceTimeField::zeros(&f.time, space);
    let rows: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|step| {
            let mut u = vec![0.0; npts];
            let mut add = |kernel: &[f64], src: &[f64]| {
                for (i, ui) in u.iter_mut().enumerate() {
                    for (l, fl) in src.iter().enumerate() {
                        *ui += kernel[(i + npts - l) % npts] * fl;
                    }
                }
            };
            for (k, kernel) in hats.iter().enumerate().take(step) {
                add(kernel, f.slice(step - k));
            }
            add(&intervals[step - 1].0, f.slice(0));
            u
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        out.slice_mut(i + 1).copy_from_slice(&row);
    }
    Ok(out)
}

/// q(1, w) tabulated at Gauss nodes on [0, W], with W where it has decayed.
struct SimilarityProfile {
    nodes: Vec<f64>,
    weighted: Vec<f64>,
}

impl SimilarityProfile {
    fn new(alpha: f64) -> Result<Self> {
        let gl = GaussLegendre::new(8);
        let ctl = SeriesControl::default();
        let spec = ContourSpec::for_kernel(alpha, 1);
        let mut nodes = Vec::new();
        let mut weighted = Vec::new();
        let mut peak = 0.0f64;
        let mut lo = 0.0;
        loop {
            let hi = lo + PANEL;
            let mut panel_max = 0.0f64;
            for (w, g) in gl.mapped(lo, hi) {
                let q = KernelQuery::plain(KernelKind::Q, alpha, 1.0, &[w])?;
                let v = kernel_eval(&q, &ctl, &spec)?.value;
                panel_max = panel_max.max(v.abs());
                nodes.push(w);
                weighted.push(g * v);
            }
            peak = peak.max(panel_max);
            lo = hi;
            if panel_max <= TAIL * peak {
                break;
            }
            if lo >= MAX_REACH {
                return Err(Error::Budget {
                    what: "similarity profile reach",
                    limit: MAX_REACH as usize,
                });
            }
        }
        Ok(SimilarityProfile { nodes, weighted })
    }

    /// J[m] = int_0^inf q(1,w) [psi(w c - m h) + psi(w c + m h)] dw at time
    /// scale c = tau^{alpha/2}; the full spatial kernel is tau^{alpha-1} J.
    fn smeared(&self, c: f64, npts: usize, hx: f64, length: f64) -> Vec<f64> {
        (0..npts)
            .map(|m| {
                let shift = m as f64 * hx;
                self.nodes
                    .iter()
                    .zip(&self.weighted)
                    .map(|(&w, &g)| g * (cardinal(w * c - shift, npts, length) + cardinal(w * c + shift, npts, length)))
                    .sum()
            })
            .collect()
    }
}

/// Periodic cardinal function of the N-point trigonometric interpolant
/// (Nyquist mode halved): 1 at 0 and 0 at the other nodes.
fn cardinal(z: f64, npts: usize, length: f64) -> f64 {
    let theta = 2.0 * PI * z / length;
    let half = 0.5 * theta;
    let nf = npts as f64;
    if half.sin().abs() > 1e-6 {
        (nf * half).sin() * half.cos() / half.sin() / nf
    } else {
        let mut s = 1.0 + (nf * half).cos();
        for k in 1..npts / 2 {
            s += 2.0 * (k as f64 * theta).cos();
        }
        s / nf
    }
}
