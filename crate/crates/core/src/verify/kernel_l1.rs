//! L1 bounds for the kernel K = dp/dt away from the singular set.
//!
//! With K(s, y) = s^{-1-alpha d/2} K(1, s^{-alpha/2} y) each left-hand side
//! collapses to a one-parameter integral of the radial profile K(1, r):
//!
//! far field   (2/alpha) int_{rho0}^inf A(rho)/rho drho, rho0 = eta (t-a)^{-alpha/2},
//!             A(rho) = int_{|z|>=rho} |K(1,z)| dz, against (t-a) eta^{-2/alpha};
//! time shift  int_0^rho F(1+v)/v dv, rho = (t-tau)/(tau-a),
//!             F(l) = int |l^{-1-alpha d/2} K(1, l^{-alpha/2} z) - K(1,z)| dz, against rho;
//! space shift (2/alpha) int_0^{w0} D(w)/w dw, w0 = |x| (t-a)^{-alpha/2},
//!             D(w) = int |K(1, z+w) - K(1, z)| dz, against w0.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{params, EstimateReport};
use crate::error::{Error, Result};
use crate::kernels::{kernel_eval, ContourSpec, KernelKind, KernelQuery, SeriesControl};
use crate::quad::GaussLegendre;

const TAIL: f64 = 1e-16;
const MAX_REACH: f64 = 400.0;
const DRIFT_LIMIT: f64 = 0.10;

/// g(r) = r^{d-1} k(1, r) for a radial kernel, interpolated on Chebyshev
/// panels of fixed width out to the radius where it has decayed.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub d: usize,
    pub width: f64,
    pub reach: f64,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(kind: KernelKind, alpha: f64, d: usize, per_panel: usize, width: f64) -> Result<Self> {
        if per_panel < 2 || !(width > 0.0) {
            return Err(Error::invalid("profile", "need at least two nodes per panel and a positive width"));
        }
        let n = per_panel;
        // Chebyshev points of the first kind keep r = 0 out of the table
        let nodes: Vec<f64> = (0..n)
            .map(|j| -(PI * (2 * j + 1) as f64 / (2 * n) as f64).cos())
            .collect();
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let s = (PI * (2 * j + 1) as f64 / (2 * n) as f64).sin();
                if j % 2 == 0 { s } else { -s }
            })
            .collect();
        let ctl = SeriesControl::default();
        let spec = ContourSpec::for_kernel(alpha, d);
        let mut values = Vec::new();
        let mut peak = 0.0f64;
        let mut lo = 0.0;
        loop {
            let mut panel_max = 0.0f64;
            for &x in &nodes {
                let r = lo + 0.5 * width * (x + 1.0);
                let mut point = vec![0.0; d];
                point[0] = r;
                let q = KernelQuery::plain(kind, alpha, 1.0, &point)?;
                let g = r.powi(d as i32 - 1) * kernel_eval(&q, &ctl, &spec)?.value;
                panel_max = panel_max.max(g.abs());
                values.push(g);
            }
            peak = peak.max(panel_max);
            lo += width;
            if panel_max <= TAIL * peak && lo > 1.0 {
                break;
            }
            if lo >= MAX_REACH {
                return Err(Error::Budget {
                    what: "radial profile reach",
                    limit: MAX_REACH as usize,
                });
            }
        }
        Ok(RadialProfile {
            d,
            width,
            reach: lo,
            nodes,
            bary,
            values,
        })
    }

    /// r^{d-1} k(1, r); zero beyond the reach.
    pub fn weighted(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.reach {
            return 0.0;
        }
        let n = self.nodes.len();
        let k = ((r / self.width) as usize).min(self.values.len() / n - 1);
        let x = 2.0 * (r - k as f64 * self.width) / self.width - 1.0;
        let vals = &self.values[k * n..(k + 1) * n];
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..n {
            let dx = x - self.nodes[j];
            if dx == 0.0 {
                return vals[j];
            }
            let c = self.bary[j] / dx;
            num += c * vals[j];
            den += c;
        }
        num / den
    }

    /// k(1, r) itself.
    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        self.weighted(r) / r.powi(self.d as i32 - 1)
    }

    /// Surface measure of the unit sphere in R^d.
    pub fn sphere(&self) -> f64 {
        match self.d {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        }
    }
}

/// Admissible sample tuples for the three inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Samples {
    /// (t, a, eta) with t > a, eta > 0
    pub far_field: Vec<(f64, f64, f64)>,
    /// (t, tau, a) with t > tau > a
    pub time_shift: Vec<(f64, f64, f64)>,
    /// (t, a, |x|) with t > a
    pub space_shift: Vec<(f64, f64, f64)>,
}

impl L1Samples {
    /// Log-uniform tuples from a seeded stream.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut logu = |lo: f64, hi: f64| 10f64.powf(rng.gen_range(lo..hi));
        let mut far_field = Vec::with_capacity(n);
        let mut time_shift = Vec::with_capacity(n);
        let mut space_shift = Vec::with_capacity(n);
        for _ in 0..n {
            let a = 0.0;
            far_field.push((a + logu(-2.0, 1.5), a, logu(-2.0, 1.0)));
            let tau = a + logu(-2.0, 1.0);
            time_shift.push((tau + (tau - a) * logu(-3.0, 2.0), tau, a));
            space_shift.push((a + logu(-2.0, 1.0), a, logu(-2.0, 1.0)));
        }
        L1Samples {
            far_field,
            time_shift,
            space_shift,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.far_field.iter().any(|&(t, a, eta)| !(t > a && eta > 0.0)) {
            return Err(Error::invalid("far_field", "need t > a and eta > 0"));
        }
        if self.time_shift.iter().any(|&(t, tau, a)| !(t > tau && tau > a)) {
            return Err(Error::invalid("time_shift", "need t > tau > a"));
        }
        if self.space_shift.iter().any(|&(t, a, x)| !(t > a && x >= 0.0)) {
            return Err(Error::invalid("space_shift", "need t > a and |x| >= 0"));
        }
        Ok(())
    }
}

/// Quadrature of the three left-hand sides at one Gauss order.
#[derive(Debug, Clone)]
pub struct KernelL1Probe<'a> {
    pub alpha: f64,
    profile: &'a RadialProfile,
    gl: GaussLegendre,
    /// omega_d int_{edge_k}^{reach} |g|
    tails: Vec<f64>,
}

/// int_a^b |f| with the panel split at the sign changes of f seen on the
/// Gauss nodes, each located by bisection.
fn abs_integral(gl: &GaussLegendre, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut xs = vec![a];
    xs.extend(gl.mapped(a, b).map(|(x, _)| x));
    xs.push(b);
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut cuts = vec![a];
    for i in 0..xs.len() - 1 {
        if vals[i] * vals[i + 1] < 0.0 {
            let (mut lo, mut hi, mut flo) = (xs[i], xs[i + 1], vals[i]);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm * flo > 0.0 {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
    }
    cuts.push(b);
    cuts.windows(2)
        .map(|c| gl.mapped(c[0], c[1]).map(|(x, w)| w * f(x).abs()).sum::<f64>())
        .sum()
}

impl<'a> KernelL1Probe<'a> {
    pub fn new(alpha: f64, profile: &'a RadialProfile, order: usize) -> Self {
        let gl = GaussLegendre::new(order);
        let panels = (profile.reach / profile.width).round() as usize;
        let mut tails = vec![0.0; panels + 1];
        for k in (0..panels).rev() {
            let lo = k as f64 * profile.width;
            let m = abs_integral(&gl, lo, lo + profile.width, |r| profile.weighted(r));
            tails[k] = tails[k + 1] + profile.sphere() * m;
        }
        KernelL1Probe {
            alpha,
            profile,
            gl,
            tails,
        }
    }

    /// int |f| over [lo, hi] on panels of at most `width`.
    fn panels(&self, lo: f64, hi: f64, width: f64, f: impl Fn(f64) -> f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let count = ((hi - lo) / width).ceil().max(1.0) as usize;
        let step = (hi - lo) / count as f64;
        (0..count)
            .map(|k| {
                let a = lo + k as f64 * step;
                abs_integral(&self.gl, a, a + step, &f)
            })
            .sum()
    }

    /// int over [lo, hi] on panels [x, x + min(x, cap)] grading towards lo;
    /// from lo = 0 the first panel is [0, 1e-3 min(cap, hi)].
    fn graded(&self, lo: f64, hi: f64, cap: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut edges = vec![lo];
        let mut x = if lo > 0.0 { lo } else { 1e-3 * cap.min(hi) };
        if lo == 0.0 {
            edges.push(x);
        }
        while x < hi {
            x = (x + x.min(cap)).min(hi);
            edges.push(x);
        }
        edges
            .windows(2)
            .map(|e| self.gl.mapped(e[0], e[1]).map(|(v, w)| w * f(v)).sum::<f64>())
            .sum()
    }

    /// A(rho) = int_{|z| >= rho} |K(1, z)| dz.
    pub fn tail_mass(&self, rho: f64) -> f64 {
        let p = self.profile;
        if rho >= p.reach {
            return 0.0;
        }
        let k = (rho / p.width) as usize;
        let edge = (k + 1) as f64 * p.width;
        let part = abs_integral(&self.gl, rho, edge, |r| p.weighted(r));
        p.sphere() * part + self.tails[k + 1]
    }

    /// F(l) = int |l^{-1-alpha d/2} K(1, l^{-alpha/2} z) - K(1, z)| dz, l >= 1.
    pub fn scale_difference(&self, lambda: f64) -> f64 {
        let p = self.profile;
        let a = self.alpha;
        let d = p.d as f64;
        let mu = lambda.powf(-a / 2.0);
        let pref = lambda.powf(-1.0 - a * d / 2.0) / mu.powf(d - 1.0);
        let inner = self.panels(0.0, p.reach, p.width, |r| pref * p.weighted(mu * r) - p.weighted(r));
        let outer = self.panels(p.reach, p.reach / mu, p.width / mu, |r| pref * p.weighted(mu * r));
        p.sphere() * (inner + outer)
    }

    /// D(w) = int |K(1, z + w) - K(1, z)| dz in one dimension.
    pub fn shift_difference(&self, w: f64) -> Result<f64> {
        let p = self.profile;
        if p.d != 1 {
            return Err(Error::Budget {
                what: "space-shift quadrature dimension",
                limit: 1,
            });
        }
        let w = w.abs();
        let mut cuts = vec![-p.reach - w, -p.reach, -w, 0.0, p.reach - w, p.reach];
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        Ok(cuts
            .windows(2)
            .map(|c| self.panels(c[0], c[1], p.width, |z| p.weighted(z + w) - p.weighted(z)))
            .sum())
    }

    pub fn far_field_lhs(&self, t: f64, a: f64, eta: f64) -> f64 {
        let rho0 = eta * (t - a).powf(-self.alpha / 2.0);
        if rho0 >= self.profile.reach {
            return 0.0;
        }
        2.0 / self.alpha * self.graded(rho0, self.profile.reach, 0.5, |rho| self.tail_mass(rho) / rho)
    }

    pub fn far_field_rhs(&self, t: f64, a: f64, eta: f64) -> f64 {
        (t - a) * eta.powf(-2.0 / self.alpha)
    }

    pub fn time_shift_lhs(&self, t: f64, tau: f64, a: f64) -> f64 {
        let rho = (t - tau) / (tau - a);
        self.graded(0.0, rho, f64::INFINITY, |v| self.scale_difference(1.0 + v) / v)
    }

    pub fn time_shift_rhs(&self, t: f64, tau: f64, a: f64) -> f64 {
        (t - tau) / (tau - a)
    }

    pub fn space_shift_lhs(&self, t: f64, a: f64, x: f64) -> Result<f64> {
        let w0 = x.abs() * (t - a).powf(-self.alpha / 2.0);
        let mut err = None;
        let v = self.graded(0.0, w0, 1.0, |w| match self.shift_difference(w) {
            Ok(v) => v / w,
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
        err.map_or(Ok(2.0 / self.alpha * v), Err)
    }

    pub fn space_shift_rhs(&self, t: f64, a: f64, x: f64) -> f64 {
        x.abs() * (t - a).powf(-self.alpha / 2.0)
    }

    /// Smallest N with LHS <= N RHS over each sample family.
    pub fn fit(&self, samples: &L1Samples) -> Result<[f64; 3]> {
        let ratio = |l: f64, r: f64| if l == 0.0 { 0.0 } else { l / r };
        let far = samples
            .far_field
            .iter()
            .map(|&(t, a, e)| ratio(self.far_field_lhs(t, a, e), self.far_field_rhs(t, a, e)))
            .fold(0.0, f64::max);
        let time = samples
            .time_shift
            .iter()
            .map(|&(t, s, a)| ratio(self.time_shift_lhs(t, s, a), self.time_shift_rhs(t, s, a)))
            .fold(0.0, f64::max);
        let mut space = 0.0f64;
        for &(t, a, x) in &samples.space_shift {
            space = space.max(ratio(self.space_shift_lhs(t, a, x)?, self.space_shift_rhs(t, a, x)));
        }
        Ok([far, time, space])
    }
}

/// Fitted constants of the far-field, time-shift and space-shift L1 bounds
/// for K, with drift under doubling of every Gauss order.
pub fn kernel_l1_bounds(alpha: f64, d: usize, samples: &L1Samples) -> Result<[EstimateReport; 3]> {
    crate::specfun::FracOrder::new(alpha)?;
    if d != 1 {
        return Err(Error::Budget {
            what: "kernel L1 probe dimension",
            limit: 1,
        });
    }
    samples.validate()?;
    let profile = RadialProfile::new(KernelKind::K, alpha, d, 16, 0.25)?;
    let coarse = KernelL1Probe::new(alpha, &profile, 8).fit(samples)?;
    let fine = KernelL1Probe::new(alpha, &profile, 16).fit(samples)?;
    let ids = ["kernel_l1_far_field", "kernel_l1_time_shift", "kernel_l1_space_shift"];
    let counts = [samples.far_field.len(), samples.time_shift.len(), samples.space_shift.len()];
    let mut reports = Vec::with_capacity(3);
    for k in 0..3 {
        reports.push(EstimateReport::from_levels(
            ids[k],
            "K(1,.) profile on 16-point Chebyshev panels; Gauss order 8 vs 16",
            params([("alpha", alpha), ("d", d as f64), ("samples", counts[k] as f64)]),
            coarse[k],
            fine[k],
            DRIFT_LIMIT,
        ));
    }
    Ok(reports.try_into().expect("three reports"))
}
