use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bmo_seminorm, mixed_norm, params, space_norm, BandLimitedForcing, EstimateReport, ParabolicCylinder};
use crate::error::{Error, Result};
use crate::fraccalc::{caputo_derivative, RlIntegralWeights, Signal, TimeGrid};
use crate::solver::{apply_operator_g, solve_spectral_constant, spectral_derivative, SpaceGrid, SpaceTimeField};
use crate::specfun::{gamma, FracOrder};

const START_DIVISOR: usize = 8;

/// Grid and ensemble of the operator and a priori probes. The refined level
/// doubles both the space points and the time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlpSettings {
    pub d: usize,
    pub length: f64,
    pub horizon: f64,
    pub points: usize,
    pub steps: usize,
    pub terms: usize,
    pub max_mode: usize,
    /// cylinder time half-widths as fractions of the horizon
    pub cylinder_scales: Vec<f64>,
    pub centres_per_axis: usize,
    pub seed: u64,
}

impl Default for GlpSettings {
    fn default() -> Self {
        GlpSettings {
            d: 1,
            length: 2.0 * PI,
            horizon: 1.0,
            points: 32,
            steps: 32,
            terms: 4,
            max_mode: 3,
            cylinder_scales: vec![0.25, 0.125, 0.0625],
            centres_per_axis: 4,
            seed: 7,
        }
    }
}

impl GlpSettings {
    fn grids(&self, level: usize) -> Result<(TimeGrid, SpaceGrid)> {
        let k = 1usize << level;
        Ok((
            TimeGrid::uniform(self.horizon, self.steps * k)?,
            SpaceGrid::cube(self.d, self.length, self.points * k)?,
        ))
    }

    fn ensemble(&self, n: usize) -> Vec<BandLimitedForcing> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let lengths = vec![self.length; self.d];
        (0..n)
            .map(|_| BandLimitedForcing::random(&mut rng, &lengths, self.horizon, self.terms, self.max_mode))
            .collect()
    }

    fn cylinders(&self, alpha: f64, time: &TimeGrid, space: &SpaceGrid) -> Result<Vec<ParabolicCylinder>> {
        let widths: Vec<f64> = self.cylinder_scales.iter().map(|s| s * self.horizon).collect();
        ParabolicCylinder::lattice(alpha, time, space, &widths, self.centres_per_axis)
    }
}

/// (|Gf|_{L_q(L_p)} / |f|_{L_q(L_p)}, |Gf|_BMO / |f|_inf), with 0 for f = 0.
pub fn operator_ratios(
    alpha: FracOrder,
    f: &SpaceTimeField,
    p: f64,
    q: f64,
    cylinders: &[ParabolicCylinder],
) -> Result<(f64, f64)> {
    let gf = apply_operator_g(alpha, f)?;
    let nf = mixed_norm(f, p, q)?;
    let lp = if nf == 0.0 { 0.0 } else { mixed_norm(&gf, p, q)? / nf };
    let sup = f.max_abs();
    let bmo = if sup == 0.0 { 0.0 } else { bmo_seminorm(&gf, cylinders)? / sup };
    Ok((lp, bmo))
}

/// Largest L_q(L_p) and BMO ratios of the operator G over a seeded
/// band-limited ensemble, at the base grid and after one refinement.
pub fn glp_estimate_probe(
    alpha: f64,
    p: f64,
    q: f64,
    n_samples: usize,
    settings: &GlpSettings,
) -> Result<[EstimateReport; 2]> {
    let order = FracOrder::new(alpha)?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "need at least one sample"));
    }
    let ensemble = settings.ensemble(n_samples);
    let mut maxima = [[0.0f64; 2]; 2];
    for (level, best) in maxima.iter_mut().enumerate() {
        let (time, space) = settings.grids(level)?;
        let cylinders = settings.cylinders(alpha, &time, &space)?;
        for g in &ensemble {
            let (lp, bmo) = operator_ratios(order, &g.sample(&time, &space), p, q, &cylinders)?;
            best[0] = best[0].max(lp);
            best[1] = best[1].max(bmo);
        }
    }
    let info = params([
        ("alpha", alpha),
        ("p", p),
        ("q", q),
        ("d", settings.d as f64),
        ("samples", n_samples as f64),
        ("points", settings.points as f64),
        ("steps", settings.steps as f64),
    ]);
    Ok([
        EstimateReport::from_levels(
            format!("glp_ratio_p{p}_q{q}"),
            "band-limited forcings; grid doubled in x and t",
            info.clone(),
            maxima[0][0],
            maxima[1][0],
            0.10,
        ),
        EstimateReport::from_levels(
            "bmo_ratio",
            "band-limited forcings; cylinder lattice at three scales; grid doubled in x and t",
            info,
            maxima[0][1],
            maxima[1][1],
            0.10,
        ),
    ])
}

/// Caputo derivative of every space point of a field with zero data.
fn caputo_field(alpha: FracOrder, u: &SpaceTimeField) -> Result<SpaceTimeField> {
    let n = u.space.len();
    let mut out = SpaceTimeField::zeros(&u.time, &u.space);
    for j in 0..n {
        let values: Vec<f64> = (0..u.n_times()).map(|i| u.slice(i)[j]).collect();
        let s = Signal::new(u.time.clone(), values)?.with_initial_value(0.0).with_initial_slope(0.0);
        let d = caputo_derivative(alpha, &s)?;
        for (i, v) in d.values.iter().enumerate() {
            out.slice_mut(i)[j] = *v;
        }
    }
    Ok(out)
}

/// Smallest N with |u(t)|_p <= N int_0^t (t-s)^{alpha-1} |d^alpha u(s)|_p ds
/// over the grid times t >= T/8, the derivative taken by the Caputo scheme
/// and the integral by product integration. Earlier times are skipped: on
/// the first steps the piecewise-linear reading of |d^alpha u|, which
/// behaves like a fractional power of s, sets the ratio at every grid size.
/// A zero field gives 0.
pub fn duhamel_constant(u: &SpaceTimeField, alpha: FracOrder, p: f64) -> Result<f64> {
    let cell = u.space.cell_volume();
    let du = caputo_field(alpha, u)?;
    let g: Vec<f64> = (0..u.n_times()).map(|i| space_norm(du.slice(i), cell, p)).collect();
    let weights = RlIntegralWeights::new(alpha.get(), &u.time)?;
    let scale = gamma(alpha.get());
    let mut best = 0.0f64;
    let first = (u.time.n_steps / START_DIVISOR).max(1);
    for i in first..u.n_times() {
        let lhs = space_norm(u.slice(i), cell, p);
        let rhs = scale * weights.at(&g, i);
        if lhs == 0.0 {
            continue;
        }
        best = best.max(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY });
    }
    Ok(best)
}

fn every_other_step(u: &SpaceTimeField) -> Result<SpaceTimeField> {
    if u.time.n_steps % 2 != 0 || u.time.n_steps < 4 {
        return Err(Error::invalid("n_steps", "need an even number of at least four steps"));
    }
    let time = TimeGrid::uniform(u.time.horizon, u.time.n_steps / 2)?;
    let mut values = Vec::with_capacity(time.len() * u.space.len());
    for i in 0..time.len() {
        values.extend_from_slice(u.slice(2 * i));
    }
    SpaceTimeField::new(&time, &u.space, values)
}

/// Duhamel constant on the field's grid and on every other time step.
pub fn duhamel_check(u: &SpaceTimeField, alpha: FracOrder, p: f64) -> Result<EstimateReport> {
    let fine = duhamel_constant(u, alpha, p)?;
    let coarse = duhamel_constant(&every_other_step(u)?, alpha, p)?;
    Ok(EstimateReport::from_levels(
        "duhamel",
        "grid times of one field; every other step vs all steps",
        params([("alpha", alpha.get()), ("p", p), ("steps", u.time.n_steps as f64)]),
        coarse,
        fine,
        0.10,
    ))
}

/// Largest Duhamel constant over spectral solutions of a seeded ensemble,
/// on the settings' time grid and on every other step of it.
pub fn duhamel_probe(alpha: f64, p: f64, n_samples: usize, settings: &GlpSettings) -> Result<EstimateReport> {
    let order = FracOrder::new(alpha)?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "need at least one sample"));
    }
    let (time, space) = settings.grids(0)?;
    let mut best = [0.0f64; 2];
    for g in settings.ensemble(n_samples) {
        let u = solve_spectral_constant(order, &g.sample(&time, &space))?;
        best[0] = best[0].max(duhamel_constant(&every_other_step(&u)?, order, p)?);
        best[1] = best[1].max(duhamel_constant(&u, order, p)?);
    }
    Ok(EstimateReport::from_levels(
        "duhamel",
        "spectral solutions of band-limited forcings; every other step vs all steps",
        params([
            ("alpha", alpha),
            ("p", p),
            ("d", settings.d as f64),
            ("steps", settings.steps as f64),
            ("samples", n_samples as f64),
        ]),
        best[0],
        best[1],
        0.10,
    ))
}

/// |u|_{H^{alpha,2}_{q,p}} = (int |u|_{H^2_p}^q)^{1/q} + |d^alpha u|_{L_q(L_p)},
/// with |v|_{H^2_p} = |v|_p + sum_i |v_i|_p + sum_{i<=j} |v_ij|_p from
/// spectral derivatives.
pub fn h_alpha_norm(alpha: FracOrder, u: &SpaceTimeField, p: f64, q: f64) -> Result<f64> {
    let space = &u.space;
    let d = space.d;
    let cell = space.cell_volume();
    let h = u.time.step();
    let mut orders = Vec::new();
    for i in 0..d {
        let mut o = vec![0; d];
        o[i] = 1;
        orders.push(o);
        for j in i..d {
            let mut o = vec![0; d];
            o[i] += 1;
            o[j] += 1;
            orders.push(o);
        }
    }
    let mut acc = 0.0;
    for i in 1..u.n_times() {
        let slice = u.slice(i);
        let mut norm = space_norm(slice, cell, p);
        for o in &orders {
            norm += space_norm(&spectral_derivative(space, slice, o)?, cell, p);
        }
        acc += h * norm.powf(q);
    }
    Ok(acc.powf(1.0 / q) + mixed_norm(&caputo_field(alpha, u)?, p, q)?)
}

/// Largest |u|_{H^{alpha,2}} / |f|_{L_q(L_p)} over spectral solutions of a
/// seeded ensemble, before and after one grid refinement.
pub fn apriori_probe(alpha: f64, p: f64, q: f64, n_samples: usize, settings: &GlpSettings) -> Result<EstimateReport> {
    let order = FracOrder::new(alpha)?;
    let ensemble = settings.ensemble(n_samples);
    let mut best = [0.0f64; 2];
    for (level, b) in best.iter_mut().enumerate() {
        let (time, space) = settings.grids(level)?;
        for g in &ensemble {
            let f = g.sample(&time, &space);
            let nf = mixed_norm(&f, p, q)?;
            if nf == 0.0 {
                continue;
            }
            let u = solve_spectral_constant(order, &f)?;
            *b = b.max(h_alpha_norm(order, &u, p, q)? / nf);
        }
    }
    Ok(EstimateReport::from_levels(
        format!("apriori_p{p}_q{q}"),
        "spectral solutions of band-limited forcings; grid doubled in x and t",
        params([
            ("alpha", alpha),
            ("p", p),
            ("q", q),
            ("d", settings.d as f64),
            ("samples", n_samples as f64),
        ]),
        best[0],
        best[1],
        0.15,
    ))
}
