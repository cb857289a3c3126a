//! Fundamental kernels p, q, K of the time-fractional diffusion-wave
//! equation and their space-time derivatives.
//!
//! Every kernel derivative has the form
//!   pi^{-d/2} |x|^{-d} t^{b0 - n} (1/2 pi i) int Theta(z) P(z) r^{-z} dz,
//! with r = |x|^2 t^{-alpha} / 4 and
//!   Theta(z) = Gamma(d/2 + z) Gamma(1 + z) / Gamma(c0 + alpha z),
//! where (b0, c0) is (0, 1) for p, (alpha - 1, alpha) for q and (-1, 0) for
//! K = dp/dt.  Time derivatives multiply P by the falling factorial of
//! b0 + alpha z; spatial derivatives act on |x|^{-d-2z}.

pub mod hfun;
pub mod poly;
pub mod residue;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use hfun::{hfun_bromwich, ContourReport, ContourSpec, GammaFactor, HFunction};
pub use poly::Poly;
pub use residue::{residue_series_p, residue_series_q, SeriesControl};

use crate::error::{Error, Result};
use crate::specfun::{digamma_real, FracOrder};
use hfun::{integrate_line, LineSetup};
use residue::{check_dim, MellinKernel, Pole};

/// Which fundamental kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    P,
    Q,
    K,
}

impl KernelKind {
    /// (b0, c0): power of t in front and shift of the denominator Gamma.
    fn mellin_shifts(self, alpha: f64) -> (f64, f64) {
        match self {
            KernelKind::P => (0.0, 1.0),
            KernelKind::Q => (alpha - 1.0, alpha),
            KernelKind::K => (-1.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::P => "p",
            KernelKind::Q => "q",
            KernelKind::K => "K",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" | "P" => Ok(KernelKind::P),
            "q" | "Q" => Ok(KernelKind::Q),
            "k" | "K" => Ok(KernelKind::K),
            _ => Err(Error::invalid("kind", format!("unknown kernel `{s}`"))),
        }
    }
}

/// Spatial derivative applied to the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialDerivative {
    None,
    /// d/dx_i
    Gradient(usize),
    /// d^2/dx_i dx_j
    Hessian(usize, usize),
    Laplacian,
}

impl SpatialDerivative {
    pub fn order(self) -> usize {
        match self {
            SpatialDerivative::None => 0,
            SpatialDerivative::Gradient(_) => 1,
            SpatialDerivative::Hessian(..) | SpatialDerivative::Laplacian => 2,
        }
    }
}

/// A request for d_t^n D_x^m of p, q or K at (t, x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelQuery {
    pub alpha: FracOrder,
    pub t: f64,
    pub x: Vec<f64>,
    pub n: usize,
    pub spatial: SpatialDerivative,
    pub kind: KernelKind,
}

impl KernelQuery {
    pub fn new(
        kind: KernelKind,
        alpha: f64,
        t: f64,
        x: &[f64],
        n: usize,
        spatial: SpatialDerivative,
    ) -> Result<Self> {
        let q = KernelQuery {
            alpha: FracOrder::new(alpha)?,
            t,
            x: x.to_vec(),
            n,
            spatial,
            kind,
        };
        q.validate()?;
        Ok(q)
    }

    /// The undifferentiated kernel.
    pub fn plain(kind: KernelKind, alpha: f64, t: f64, x: &[f64]) -> Result<Self> {
        KernelQuery::new(kind, alpha, t, x, 0, SpatialDerivative::None)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d())?;
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::invalid("t", "must be positive"));
        }
        if !(self.radius() > 0.0) || self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("x", "must be a finite nonzero point"));
        }
        if self.n > 2 {
            return Err(Error::invalid("n", "time derivatives up to order 2 are supported"));
        }
        let d = self.d();
        match self.spatial {
            SpatialDerivative::Gradient(i) if i >= d => Err(Error::invalid("axis", "out of range")),
            SpatialDerivative::Hessian(i, j) if i >= d || j >= d => {
                Err(Error::invalid("axis", "out of range"))
            }
            _ => Ok(()),
        }
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.spatial.order()
    }

    pub fn radius(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// R = t^{-alpha} |x|^2.
    pub fn big_r(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>() * self.t.powf(-self.alpha.get())
    }

    /// Mellin polynomial of the requested derivative, including the
    /// geometric factors of the spatial derivative.
    pub fn mellin_poly(&self) -> Poly {
        let a = self.alpha.get();
        let (b0, _) = self.kind.mellin_shifts(a);
        let mut p = Poly::one();
        for i in 0..self.n {
            p = p.mul(&Poly::linear(b0 - i as f64, a));
        }
        let d = self.d() as f64;
        let rho2 = self.radius().powi(2);
        // s = -d - 2z is the exponent of |x| in |x|^{-d} r^{-z}
        let s = Poly::linear(-d, -2.0);
        let space = match self.spatial {
            SpatialDerivative::None => Poly::one(),
            SpatialDerivative::Gradient(i) => s.scale(self.x[i] / rho2),
            SpatialDerivative::Hessian(i, j) => {
                let delta = if i == j { 1.0 } else { 0.0 };
                let second = s.mul(&Poly::linear(-d - 2.0, -2.0));
                s.scale(delta / rho2)
                    .add(&second.scale(self.x[i] * self.x[j] / (rho2 * rho2)))
            }
            SpatialDerivative::Laplacian => s.mul(&Poly::linear(-2.0, -2.0)).scale(1.0 / rho2),
        };
        p.mul(&space)
    }

    fn log_prefactor(&self) -> f64 {
        let a = self.alpha.get();
        let (b0, _) = self.kind.mellin_shifts(a);
        let d = self.d() as f64;
        -0.5 * d * PI.ln() - d * self.radius().ln() + (b0 - self.n as f64) * self.t.ln()
    }
}

/// Evaluation route taken for a kernel value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ClosedForm,
    Series,
    Contour,
    Underflow,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::ClosedForm => "closed_form",
            Regime::Series => "series",
            Regime::Contour => "contour",
            Regime::Underflow => "underflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub big_r: f64,
    pub regime: Regime,
    pub underflow: bool,
}

/// Forced or automatic route selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Series,
    Contour,
}

/// R at which the automatic dispatch switches from residues to the contour.
pub const SERIES_EDGE: f64 = 1.0;
const UNDERFLOW: f64 = 1e-300;

/// d_t^n D_x^m of the requested kernel with automatic dispatch.
pub fn kernel_eval(q: &KernelQuery, ctl: &SeriesControl, spec: &ContourSpec) -> Result<KernelValue> {
    kernel_eval_with(q, Method::Auto, ctl, spec)
}

/// Kernel value with default controls.
pub fn kernel_value(q: &KernelQuery) -> Result<f64> {
    let spec = ContourSpec::for_kernel(q.alpha.get(), q.d());
    Ok(kernel_eval(q, &SeriesControl::default(), &spec)?.value)
}

pub fn kernel_eval_with(
    q: &KernelQuery,
    method: Method,
    ctl: &SeriesControl,
    spec: &ContourSpec,
) -> Result<KernelValue> {
    q.validate()?;
    let a = q.alpha.get();
    let d = q.d();
    let big_r = q.big_r();
    let r = big_r / 4.0;
    let poly = q.mellin_poly();
    let log_pref = q.log_prefactor();
    let finish = |value: f64, regime: Regime| {
        if regime == Regime::Underflow || (value != 0.0 && value.abs() < UNDERFLOW) {
            KernelValue {
                value: 0.0,
                big_r,
                regime: Regime::Underflow,
                underflow: true,
            }
        } else {
            KernelValue {
                value,
                big_r,
                regime,
                underflow: false,
            }
        }
    };

    if q.alpha.is_classical() {
        let mult = if q.kind == KernelKind::K {
            poly.mul(&Poly::monomial(1))
        } else {
            poly
        };
        let (log_mag, factor) = heat_moment(&mult, d as f64 / 2.0, r);
        let value = factor * (log_mag + log_pref).exp();
        return Ok(finish(value, Regime::ClosedForm));
    }

    let (_, c0) = q.kind.mellin_shifts(a);
    let mk = MellinKernel { d, alpha: a, c0 };
    let use_series = match method {
        Method::Series => true,
        Method::Contour => false,
        Method::Auto => big_r <= SERIES_EDGE,
    };
    if use_series {
        let sum = mk.residue_sum(&poly, r, ctl)?;
        return Ok(finish(sum * log_pref.exp(), Regime::Series));
    }

    let window = ContourSpec::kernel_window(a, d);
    if !(spec.gamma > 0.0 && spec.gamma < window) {
        return Err(Error::invalid(
            "gamma",
            format!("contour offset must lie in (0, {window})"),
        ));
    }
    let saddle = saddle_abscissa(&mk, r);
    let abscissa = saddle.unwrap_or(-spec.gamma);
    let num = [
        GammaFactor { a: d as f64 / 2.0, b: 1.0 },
        GammaFactor { a: 1.0, b: 1.0 },
    ];
    let den = [GammaFactor { a: c0, b: a }];
    let ln_theta = |z: Complex64| hfun::ln_theta_factors(&num, &den, z);
    // the whole value underflows when the integrand does at the saddle
    if let Some(c) = saddle {
        let z0 = Complex64::new(c, 0.0);
        let log_peak = (ln_theta(z0) - z0 * r.ln()).re + log_pref + poly.abs_bound(c).ln();
        if log_peak < UNDERFLOW.ln() - 20.0 {
            return Ok(finish(0.0, Regime::Underflow));
        }
    }
    let out = integrate_line(&LineSetup {
        ln_theta: &ln_theta,
        poly: &poly,
        ln_r: r.ln(),
        abscissa,
        c1: hfun::growth_exponent_factors(&num, &den, abscissa),
        c2: 0.5 * PI * (2.0 - a),
        tau_max: spec.tau_max,
        step: spec.step,
        tol: spec.tol,
        max_nodes: spec.max_nodes,
    })?;
    let value = out.scaled * (out.log_scale + log_pref).exp();
    Ok(finish(value, Regime::Contour))
}

// Beyond the series range the integrand along Re z = -gamma is huge compared
// with the exponentially small result; moving the line right to the real
// saddle of Theta(z) r^{-z} keeps the quadrature well conditioned.  All poles
// lie to the left, so any abscissa >= -gamma gives the same integral.
fn saddle_abscissa(mk: &MellinKernel, r: f64) -> Option<f64> {
    let half = mk.d as f64 / 2.0;
    let slope = |c: f64| {
        digamma_real(half + c) + digamma_real(1.0 + c) - mk.alpha * digamma_real(mk.c0 + mk.alpha * c)
            - r.ln()
    };
    // the slope may change sign twice (a local maximum near the origin when
    // c0 = 0); the saddle wanted is the last crossing from below
    let mut c = 0.25;
    while slope(c) >= 0.0 {
        c *= 2.0;
        if c > 1e15 {
            return None;
        }
    }
    let mut lo = c;
    let mut hi = 2.0 * c;
    while slope(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            // still descending: the integrand at the cap bounds the value
            // and has long underflowed
            return Some(hi);
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

// For alpha = 1, (1/2 pi i) int Gamma(a + z) P(z) r^{-z} dz = P(theta)[r^a e^{-r}]
// with theta = -r d/dr.  Returns (log of r^a e^{-r}, polynomial factor Q(r)).
fn heat_moment(poly: &Poly, a: f64, r: f64) -> (f64, f64) {
    // theta maps e^{-r} r^a Q(r) to e^{-r} r^a (r Q - a Q - r Q')
    let mut q = vec![1.0];
    let mut acc = vec![0.0; poly.0.len() + 1];
    for (i, &c) in poly.0.iter().enumerate() {
        if i > 0 {
            let mut next = vec![0.0; q.len() + 1];
            for (k, &qk) in q.iter().enumerate() {
                next[k + 1] += qk;
                next[k] -= (a + k as f64) * qk;
            }
            q = next;
        }
        for (k, &qk) in q.iter().enumerate() {
            acc[k] += c * qk;
        }
    }
    let factor = acc.iter().rev().fold(0.0, |s, &c| s * r + c);
    (a * r.ln() - r, factor)
}

/// Pole bookkeeping for a kernel integrand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleStructure {
    pub simple_poles: Vec<f64>,
    pub double_poles: Vec<f64>,
    /// smallest -Re of a simple pole with nonzero residue
    pub rho_s: f64,
    /// smallest -Re of a pole of order >= 2
    pub rho_c: f64,
    /// order of that pole (0 when there is none)
    pub n_c: usize,
}

impl PoleStructure {
    /// The first `count` poles of Gamma(d/2+z)Gamma(1+z)/Gamma(c0+alpha z)
    /// after removing those cancelled by zeros of 1/Gamma.
    pub fn for_kernel(kind: KernelKind, alpha: f64, d: usize, count: usize) -> Result<Self> {
        check_dim(d)?;
        let (_, c0) = kind.mellin_shifts(alpha);
        let mk = MellinKernel { d, alpha, c0 };
        let mut simple = Vec::new();
        let mut double = Vec::new();
        for (z0, pole) in mk.pole_sequence(count) {
            let x = c0 + alpha * z0;
            let zero_below = x <= 0.0 && x == x.round();
            match pole {
                Pole::Double { .. } if zero_below => simple.push(z0),
                Pole::Double { .. } => double.push(z0),
                _ if zero_below => {}
                _ => simple.push(z0),
            }
        }
        let rho_s = simple.iter().map(|z| -z).fold(f64::INFINITY, f64::min);
        let rho_c = double.iter().map(|z| -z).fold(f64::INFINITY, f64::min);
        let n_c = if double.is_empty() { 0 } else { 2 };
        Ok(PoleStructure {
            simple_poles: simple,
            double_poles: double,
            rho_s,
            rho_c,
            n_c,
        })
    }
}

/// Large-argument data of an H^{mu 0}_{nu mu} function:
/// |H(r)| <= N r^{(Lambda + 1/2)/omega} exp(-omega eta^{-1/omega} r^{1/omega}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticEnvelope {
    pub lambda: f64,
    pub omega: f64,
    pub eta_const: f64,
    /// omega eta^{-1/omega}
    pub sigma: f64,
}

impl AsymptoticEnvelope {
    pub fn from_hfunction(h: &HFunction) -> Self {
        let sum_d: f64 = h.lower.iter().map(|p| p.0).sum();
        let sum_c: f64 = h.upper.iter().map(|p| p.0).sum();
        let lambda = sum_d - sum_c + (h.upper.len() as f64 - h.lower.len() as f64) / 2.0;
        let omega = h.omega();
        let eta = h.lower.iter().map(|p| p.1.powf(p.1)).product::<f64>()
            * h.upper.iter().map(|p| p.1.powf(-p.1)).product::<f64>();
        AsymptoticEnvelope {
            lambda,
            omega,
            eta_const: eta,
            sigma: omega * eta.powf(-1.0 / omega),
        }
    }

    pub fn for_kernel(kind: KernelKind, alpha: f64, d: usize) -> Self {
        let (_, c0) = kind.mellin_shifts(alpha);
        let h = HFunction {
            m: 2,
            n: 0,
            upper: vec![(c0, alpha)],
            lower: vec![(d as f64 / 2.0, 1.0), (1.0, 1.0)],
        };
        AsymptoticEnvelope::from_hfunction(&h)
    }

    pub fn bound(&self, r: f64) -> f64 {
        r.powf((self.lambda + 0.5) / self.omega) * (-self.sigma * r.powf(1.0 / self.omega)).exp()
    }
}

/// sigma = (2 - alpha) alpha^{alpha/(2-alpha)}.
pub fn decay_sigma(alpha: f64) -> f64 {
    (2.0 - alpha) * alpha.powf(alpha / (2.0 - alpha))
}

/// Envelope expression (without its constant) bounding |d_t^n D_x^m kernel|.
///
/// R >= 1: t^{-alpha(d+m)/2 - n} exp(-s R^{1/(2-alpha)}) (times t^{alpha-1}
/// for q), with s = (sigma/2) 4^{-1/(2-alpha)}, the rate obtained from the
/// H-function bound in its argument R/4.
/// R <= 1: |x|^{-d-m} t^{-n} (R + R|ln R| 1_{d=2,m=0} + R^{1/2} 1_{d=1,m=0})
/// for p; for q, |x|^{-d-m} t^{-n+alpha-1} (R^2 + R^2|ln R| 1_{d=2}
/// + R^{3/2} 1_{d=1, m>=1}) plus |x|^{-d} t^{-n+alpha-1} (R^{1/2} 1_{d=1}
/// + R 1_{d=2} + R^{3/2} 1_{d=3} + R^2|ln R| 1_{d=4}) 1_{m=0}.
/// K = dp/dt uses the p envelope with n + 1.
pub fn envelope_bound(q: &KernelQuery) -> Result<f64> {
    q.validate()?;
    let a = q.alpha.get();
    let d = q.d();
    let df = d as f64;
    let m = q.m();
    let mf = m as f64;
    let (kind, n) = match q.kind {
        KernelKind::K => (KernelKind::P, q.n + 1),
        k => (k, q.n),
    };
    let nf = n as f64;
    let t = q.t;
    let big_r = q.big_r();
    let rho = q.radius();
    let extra = if kind == KernelKind::Q { a - 1.0 } else { 0.0 };
    if big_r >= 1.0 {
        let rate = 0.5 * decay_sigma(a) * 4f64.powf(-1.0 / (2.0 - a));
        return Ok(t.powf(-a * (df + mf) / 2.0 - nf + extra) * (-rate * big_r.powf(1.0 / (2.0 - a))).exp());
    }
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let lnr = big_r.ln().abs();
    Ok(match kind {
        KernelKind::P => {
            rho.powf(-df - mf)
                * t.powf(-nf)
                * (big_r
                    + big_r * lnr * ind(d == 2 && m == 0)
                    + big_r.sqrt() * ind(d == 1 && m == 0))
        }
        _ => {
            let r2 = big_r * big_r;
            let main = rho.powf(-df - mf)
                * t.powf(-nf + extra)
                * (r2 + r2 * lnr * ind(d == 2) + big_r.powf(1.5) * ind(d == 1 && m >= 1));
            let low = rho.powf(-df)
                * t.powf(-nf + extra)
                * (big_r.sqrt() * ind(d == 1)
                    + big_r * ind(d == 2)
                    + big_r.powf(1.5) * ind(d == 3)
                    + r2 * lnr * ind(d == 4))
                * ind(m == 0);
            main + low
        }
    })
}
