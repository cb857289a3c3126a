//! Solvers for d^alpha_t u = a^{ij} u_{x^i x^j} + b^i u_{x^i} + c u + f(u)
//! with zero initial data on periodic boxes.
//!
//! Values of a forcing field at t = 0 are read as right limits f(0+).

mod coefficients;
mod fd;
mod fft;
mod physical;
mod picard;
mod spectral;

pub use coefficients::{CoefficientField, CoefficientFn, CoefficientPoint};
pub use fd::{fd_residual, solve_fd_variable};
pub use physical::solve_physical_convolution;
pub use picard::{solve_quasilinear_picard, NonlinearFn, NonlinearSpec, PicardConfig, PicardOutcome};
pub use spectral::{
    apply_operator_g, solve_spectral_constant, solve_spectral_with, spectral_derivative,
    spectral_laplacian,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fraccalc::TimeGrid;

/// Uniform periodic grid on prod_i [0, L_i).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub d: usize,
    pub lengths: Vec<f64>,
    pub points: Vec<usize>,
    pub periodic: bool,
}

impl SpaceGrid {
    /// Upper bound on the number of grid points.
    pub const MAX_POINTS: usize = 1 << 22;

    pub fn new(lengths: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let d = lengths.len();
        if !(1..=3).contains(&d) || points.len() != d {
            return Err(Error::invalid("d", "dimension must be 1, 2 or 3 with one size per axis"));
        }
        if lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::invalid("box_length", "must be positive"));
        }
        if points.iter().any(|&n| n < 4 || !n.is_power_of_two()) {
            return Err(Error::invalid("points", "must be a power of two, at least 4"));
        }
        if points.iter().product::<usize>() > Self::MAX_POINTS {
            return Err(Error::Budget {
                what: "space grid",
                limit: Self::MAX_POINTS,
            });
        }
        Ok(SpaceGrid {
            d,
            lengths,
            points,
            periodic: true,
        })
    }

    /// Same length and point count on every axis.
    pub fn cube(d: usize, length: f64, points: usize) -> Result<Self> {
        SpaceGrid::new(vec![length; d], vec![points; d])
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.d).map(|i| self.spacing(i)).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Row-major strides, last axis fastest.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.d];
        for i in (0..self.d.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.points[i + 1];
        }
        s
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for i in (0..self.d).rev() {
            idx[i] = flat % self.points[i];
            flat /= self.points[i];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.points)
            .fold(0, |acc, (&i, &n)| acc * n + i % n)
    }

    /// Flat index of the neighbour `shift` steps away along `axis`.
    pub fn neighbour(&self, flat: usize, axis: usize, shift: isize) -> usize {
        let mut idx = self.multi_index(flat);
        let n = self.points[axis] as isize;
        idx[axis] = (idx[axis] as isize + shift).rem_euclid(n) as usize;
        self.flat_index(&idx)
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(i, &k)| k as f64 * self.spacing(i))
            .collect()
    }

    /// Angular wavenumber of FFT bin k on `axis`; the Nyquist bin is
    /// reported as +N/2.
    pub fn wavenumber(&self, axis: usize, k: usize) -> f64 {
        let n = self.points[axis];
        let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        2.0 * PI * signed / self.lengths[axis]
    }

    /// |xi|^2 of every FFT bin, in flat order.
    pub fn symbol_laplacian(&self) -> Vec<f64> {
        (0..self.len())
            .map(|flat| {
                self.multi_index(flat)
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| self.wavenumber(i, k).powi(2))
                    .sum()
            })
            .collect()
    }

    /// Twice as many points per axis.
    pub fn refined(&self) -> Result<Self> {
        SpaceGrid::new(self.lengths.clone(), self.points.iter().map(|n| 2 * n).collect())
    }
}

/// Samples u(t_i, x_j), stored time-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub time: TimeGrid,
    pub space: SpaceGrid,
    pub values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(time: &TimeGrid, space: &SpaceGrid) -> Self {
        SpaceTimeField {
            values: vec![0.0; time.len() * space.len()],
            time: time.clone(),
            space: space.clone(),
        }
    }

    pub fn from_fn<F>(time: &TimeGrid, space: &SpaceGrid, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Sync,
    {
        let npts = space.len();
        let coords: Vec<Vec<f64>> = (0..npts).map(|j| space.coords(j)).collect();
        let mut values = vec![0.0; time.len() * npts];
        values
            .par_chunks_mut(npts)
            .zip(time.nodes.par_iter())
            .for_each(|(row, &t)| {
                for (v, x) in row.iter_mut().zip(&coords) {
                    *v = f(t, x);
                }
            });
        SpaceTimeField {
            time: time.clone(),
            space: space.clone(),
            values,
        }
    }

    pub fn new(time: &TimeGrid, space: &SpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != time.len() * space.len() {
            return Err(Error::invalid("values", "length does not match the grids"));
        }
        Ok(SpaceTimeField {
            time: time.clone(),
            space: space.clone(),
            values,
        })
    }

    pub fn n_times(&self) -> usize {
        self.time.len()
    }

    pub fn slice(&self, i: usize) -> &[f64] {
        let n = self.space.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn slice_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.space.len();
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn same_grids(&self, other: &SpaceTimeField) -> bool {
        self.time == other.time && self.space == other.space
    }

    fn check_grids(&self, other: &SpaceTimeField) -> Result<()> {
        if self.same_grids(other) {
            Ok(())
        } else {
            Err(Error::invalid("field", "grids differ"))
        }
    }

    /// a * self + b * other.
    pub fn combine(&self, a: f64, other: &SpaceTimeField, b: f64) -> Result<SpaceTimeField> {
        self.check_grids(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(SpaceTimeField {
            time: self.time.clone(),
            space: self.space.clone(),
            values,
        })
    }

    pub fn scaled(&self, a: f64) -> SpaceTimeField {
        SpaceTimeField {
            time: self.time.clone(),
            space: self.space.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SpaceTimeField) -> Result<f64> {
        self.check_grids(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
    }

    /// Shift by `steps` time nodes towards later times, filling with zeros.
    pub fn time_shifted(&self, steps: usize) -> SpaceTimeField {
        let n = self.space.len();
        let nt = self.n_times();
        let mut values = vec![0.0; self.values.len()];
        for i in steps..nt {
            values[i * n..(i + 1) * n].copy_from_slice(&self.values[(i - steps) * n..(i - steps + 1) * n]);
        }
        SpaceTimeField {
            time: self.time.clone(),
            space: self.space.clone(),
            values,
        }
    }
}
