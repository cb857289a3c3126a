//! Fourier-side Duhamel solver: u^(t, xi) = int_0^t H_{alpha,|xi|^2}(t-s) f^(s, xi) ds.

use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;

use super::fft::FftNd;
use super::{CoefficientField, SpaceGrid, SpaceTimeField};
use crate::error::{Error, Result};
use crate::fraccalc::TimeGrid;
use crate::specfun::{mittag_leffler_real, relaxation_integral, FracOrder};

/// Relative size of boundary values tolerated by [`apply_operator_g`].
pub const SUPPORT_TOL: f64 = 1e-10;

/// Product-integration weights against the relaxation kernel for a
/// piecewise-linear density: u_n = sum_{k<n} hat[k] f_{n-k} + end[n] f_0.
pub(crate) struct DuhamelWeights {
    pub hat: Vec<f64>,
    pub end: Vec<f64>,
}

impl DuhamelWeights {
    pub fn new(alpha: f64, lambda: f64, grid: &TimeGrid) -> Result<Self> {
        let n = grid.n_steps;
        let h = grid.step();
        let mut h1 = vec![0.0; n + 2];
        let mut h2 = vec![0.0; n + 2];
        for k in 1..n + 2 {
            let t = k as f64 * h;
            h1[k] = relaxation_integral(alpha, lambda, t)?;
            h2[k] = second_primitive(alpha, lambda, t)?;
        }
        let mut hat = vec![0.0; n + 1];
        hat[0] = h2[1] / h;
        for k in 1..=n {
            hat[k] = (h2[k + 1] - 2.0 * h2[k] + h2[k - 1]) / h;
        }
        let mut end = vec![0.0; n + 1];
        for k in 1..=n {
            end[k] = h1[k] - (h2[k] - h2[k - 1]) / h;
        }
        Ok(DuhamelWeights { hat, end })
    }

    pub fn apply(&self, f: &[Complex64], n: usize) -> Complex64 {
        let mut acc = self.end[n] * f[0];
        for k in 0..n {
            acc += self.hat[k] * f[n - k];
        }
        acc
    }
}

/// t^{alpha+1} E_{alpha,alpha+2}(-lambda t^alpha), the second time primitive
/// of the relaxation kernel.
fn second_primitive(alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        if lambda == 0.0 {
            return Ok(0.5 * t * t);
        }
        let x = lambda * t;
        // (x - 1 + e^{-x}) / lambda^2, with a series for small x
        let v = if x < 1e-3 {
            x * x * (0.5 - x / 6.0 + x * x / 24.0)
        } else {
            x - 1.0 + (-x).exp()
        };
        return Ok(v / (lambda * lambda));
    }
    let e = mittag_leffler_real(alpha, alpha + 2.0, -lambda * t.powf(alpha))?;
    Ok(t.powf(alpha + 1.0) * e)
}

/// Solves d^alpha_t u = Delta u + f with zero initial data.
pub fn solve_spectral_constant(alpha: FracOrder, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    spectral_duhamel(alpha.get(), f, |_| 1.0)
}

/// Spectral solve for a coefficient field that must be the plain Laplacian.
pub fn solve_spectral_with(alpha: FracOrder, coeffs: &CoefficientField, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    if coeffs.d != f.space.d || !coeffs.is_plain_laplacian(&f.time, &f.space) {
        return Err(Error::invalid(
            "coefficients",
            "the spectral solver needs a = identity and b = c = 0; use the finite-difference solver",
        ));
    }
    solve_spectral_constant(alpha, f)
}

/// The operator G f = Delta (q * f), computed mode by mode as -|xi|^2 times
/// the Duhamel integral. The forcing must vanish on the faces x_i = 0 of the
/// box, so that its periodic extension is a compactly supported function on
/// one period.
pub fn apply_operator_g(alpha: FracOrder, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    check_support(f)?;
    spectral_duhamel(alpha.get(), f, |lambda| -lambda)
}

fn check_support(f: &SpaceTimeField) -> Result<()> {
    let scale = f.max_abs();
    if !scale.is_finite() {
        return Err(Error::Domain("forcing is not finite".into()));
    }
    let space = &f.space;
    for i in 0..f.n_times() {
        let row = f.slice(i);
        for (j, v) in row.iter().enumerate() {
            let on_face = space.multi_index(j).contains(&0);
            if on_face && v.abs() > SUPPORT_TOL * scale {
                return Err(Error::Domain(format!(
                    "forcing is {v:e} on the box boundary at t = {}, x = {:?}",
                    f.time.nodes[i],
                    space.coords(j)
                )));
            }
        }
    }
    Ok(())
}

fn spectral_duhamel<M>(alpha: f64, f: &SpaceTimeField, multiplier: M) -> Result<SpaceTimeField>
where
    M: Fn(f64) -> f64 + Sync,
{
    FracOrder::new(alpha)?;
    let space = &f.space;
    let grid = &f.time;
    let npts = space.len();
    let nt = f.n_times();
    let fft = FftNd::new(&space.points);

    let modes_by_time: Vec<Vec<Complex64>> = (0..nt).into_par_iter().map(|i| fft.forward_real(f.slice(i))).collect();
    // transpose to mode-major for the time convolution
    let mut series = vec![Complex64::new(0.0, 0.0); npts * nt];
    for (i, row) in modes_by_time.iter().enumerate() {
        for (m, v) in row.iter().enumerate() {
            series[m * nt + i] = *v;
        }
    }
    drop(modes_by_time);

    let symbol = space.symbol_laplacian();
    let mut distinct: HashMap<u64, usize> = HashMap::new();
    let mut lambdas = Vec::new();
    let mode_class: Vec<usize> = symbol
        .iter()
        .map(|&l| {
            *distinct.entry(l.to_bits()).or_insert_with(|| {
                lambdas.push(l);
                lambdas.len() - 1
            })
        })
        .collect();
    let weights: Vec<DuhamelWeights> = lambdas
        .par_iter()
        .map(|&l| DuhamelWeights::new(alpha, l, grid))
        .collect::<Result<_>>()?;

    series
        .par_chunks_mut(nt)
        .enumerate()
        .for_each(|(m, s)| {
            let w = &weights[mode_class[m]];
            let scale = multiplier(symbol[m]);
            let input = s.to_vec();
            s[0] = Complex64::new(0.0, 0.0);
            for n in 1..nt {
                s[n] = scale * w.apply(&input, n);
            }
        });

    let mut out = SpaceTimeField::zeros(grid, space);
    let rows: Vec<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let modes: Vec<Complex64> = (0..npts).map(|m| series[m * nt + i]).collect();
            fft.inverse_real(modes)
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate().skip(1) {
        out.slice_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

/// Mixed partial derivative of a periodic slice; `orders[i]` is the order
/// along axis i. Odd derivatives drop the Nyquist bin.
pub fn spectral_derivative(space: &SpaceGrid, values: &[f64], orders: &[usize]) -> Result<Vec<f64>> {
    if values.len() != space.len() || orders.len() != space.d {
        return Err(Error::invalid("values", "shape does not match the space grid"));
    }
    let fft = FftNd::new(&space.points);
    let mut modes = fft.forward_real(values);
    for (flat, v) in modes.iter_mut().enumerate() {
        let idx = space.multi_index(flat);
        let mut factor = Complex64::new(1.0, 0.0);
        for (axis, &order) in orders.iter().enumerate() {
            if order == 0 {
                continue;
            }
            let nyquist = idx[axis] == space.points[axis] / 2;
            if nyquist && order % 2 == 1 {
                factor = Complex64::new(0.0, 0.0);
                break;
            }
            let k = space.wavenumber(axis, idx[axis]);
            factor *= Complex64::new(0.0, k).powu(order as u32);
        }
        *v *= factor;
    }
    Ok(fft.inverse_real(modes))
}

/// Spectral Laplacian of a periodic slice.
pub fn spectral_laplacian(space: &SpaceGrid, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != space.len() {
        return Err(Error::invalid("values", "shape does not match the space grid"));
    }
    let fft = FftNd::new(&space.points);
    let symbol = space.symbol_laplacian();
    let modes = fft.forward_real(values).into_iter().zip(&symbol).map(|(v, l)| -l * v).collect();
    Ok(fft.inverse_real(modes))
}
