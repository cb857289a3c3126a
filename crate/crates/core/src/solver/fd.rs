//! Implicit finite-difference stepping for variable coefficients.
//!
//! Time: L1 weights for alpha < 1, backward Euler at alpha = 1, and L1 on
//! second differences for alpha > 1 with the ghost value u_{-1} = u_1 that
//! encodes u_t(0) = 0. Space: centred second-order differences with the
//! coefficients frozen at the new time level.

use rayon::prelude::*;

use super::{CoefficientField, SpaceGrid, SpaceTimeField};
use crate::error::{Error, Result};
use crate::fraccalc::{L1Weights, TimeGrid};
use crate::specfun::FracOrder;

const KRYLOV_TOL: f64 = 1e-13;
const KRYLOV_MAX_ITER: usize = 4000;

/// Solves d^alpha_t u = a^{ij} u_{ij} + b^i u_i + c u + f with zero initial
/// data (and zero initial slope for alpha > 1).
pub fn solve_fd_variable(alpha: FracOrder, coeffs: &CoefficientField, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    coeffs.check_on(&f.time, &f.space)?;
    let scheme = CaputoScheme::new(alpha.get(), &f.time)?;
    let space = &f.space;
    let mut u = SpaceTimeField::zeros(&f.time, space);
    for n in 1..f.n_times() {
        let t = f.time.nodes[n];
        let op = SpatialOperator::assemble(coeffs, t, space);
        let history = scheme.history(&u, n);
        let rhs: Vec<f64> = f.slice(n).iter().zip(&history).map(|(fv, hv)| fv - hv).collect();
        let diag = scheme.diagonal(n);
        let guess = u.slice(n - 1).to_vec();
        let next = op.solve_shifted(diag, &rhs, guess)?;
        u.slice_mut(n).copy_from_slice(&next);
    }
    Ok(u)
}

/// Discrete residual D^alpha u - L u - f at every node, using the same time
/// weights and spatial stencil as [`solve_fd_variable`]; node 0 is zero.
pub fn fd_residual(
    alpha: FracOrder,
    coeffs: &CoefficientField,
    u: &SpaceTimeField,
    f: &SpaceTimeField,
) -> Result<SpaceTimeField> {
    if !u.same_grids(f) {
        return Err(Error::invalid("field", "grids differ"));
    }
    let scheme = CaputoScheme::new(alpha.get(), &u.time)?;
    let mut out = SpaceTimeField::zeros(&u.time, &u.space);
    for n in 1..u.n_times() {
        let op = SpatialOperator::assemble(coeffs, u.time.nodes[n], &u.space);
        let history = scheme.history(u, n);
        let diag = scheme.diagonal(n);
        let lu = op.apply(u.slice(n));
        let row: Vec<f64> = (0..u.space.len())
            .map(|j| diag * u.slice(n)[j] + history[j] - lu[j] - f.slice(n)[j])
            .collect();
        out.slice_mut(n).copy_from_slice(&row);
    }
    Ok(out)
}

/// Discrete Caputo derivative written as diagonal(n) u_n + history(n).
pub(crate) enum CaputoScheme {
    L1(L1Weights),
    BackwardEuler(f64),
    /// weights of the L1 formula of order alpha - 1, applied to second
    /// differences divided by h
    Second { w: L1Weights, inv_h: f64 },
}

impl CaputoScheme {
    pub fn new(alpha: f64, grid: &TimeGrid) -> Result<Self> {
        let h = grid.step();
        let n = grid.n_steps;
        Ok(if alpha < 1.0 {
            CaputoScheme::L1(L1Weights::new(alpha, h, n)?)
        } else if alpha == 1.0 {
            CaputoScheme::BackwardEuler(1.0 / h)
        } else {
            CaputoScheme::Second {
                w: L1Weights::new(alpha - 1.0, h, n)?,
                inv_h: 1.0 / h,
            }
        })
    }

    pub fn diagonal(&self, n: usize) -> f64 {
        match self {
            CaputoScheme::L1(w) => w.weight(0),
            CaputoScheme::BackwardEuler(inv_h) => *inv_h,
            CaputoScheme::Second { w, inv_h } => {
                let first = if n == 1 { 2.0 } else { 1.0 };
                first * w.weight(0) * inv_h
            }
        }
    }

    /// The derivative at node n with u_n replaced by zero.
    pub fn history(&self, u: &SpaceTimeField, n: usize) -> Vec<f64> {
        let npts = u.space.len();
        let at = |i: usize, j: usize| u.values[i * npts + j];
        (0..npts)
            .into_par_iter()
            .map(|j| match self {
                CaputoScheme::L1(w) => {
                    let mut acc = -w.weight(0) * at(n - 1, j);
                    for k in 1..n {
                        acc += w.weight(k) * (at(n - k, j) - at(n - k - 1, j));
                    }
                    acc
                }
                CaputoScheme::BackwardEuler(inv_h) => -inv_h * at(n - 1, j),
                CaputoScheme::Second { w, inv_h } => {
                    // second difference ending at node i, with the ghost u_{-1} = u_1
                    let second = |i: usize| {
                        if i == 1 {
                            2.0 * (at(1, j) - at(0, j))
                        } else {
                            at(i, j) - 2.0 * at(i - 1, j) + at(i - 2, j)
                        }
                    };
                    let mut acc = if n == 1 {
                        -2.0 * w.weight(0) * at(0, j)
                    } else {
                        w.weight(0) * (-2.0 * at(n - 1, j) + at(n - 2, j))
                    };
                    for k in 1..n {
                        acc += w.weight(k) * second(n - k);
                    }
                    acc * inv_h
                }
            })
            .collect()
    }
}

/// Sparse matrix of the discrete operator a^{ij} d_ij + b^i d_i + c.
pub(crate) struct SpatialOperator {
    d: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SpatialOperator {
    pub fn assemble(coeffs: &CoefficientField, t: f64, space: &SpaceGrid) -> Self {
        let d = space.d;
        let h: Vec<f64> = (0..d).map(|i| space.spacing(i)).collect();
        let rows: Vec<Vec<(usize, f64)>> = (0..space.len())
            .into_par_iter()
            .map(|j| {
                let p = coeffs.at(t, &space.coords(j));
                let mut entries = vec![(j, p.c)];
                for i in 0..d {
                    let aii = p.a[i * d + i] / (h[i] * h[i]);
                    let bi = p.b[i] / (2.0 * h[i]);
                    entries.push((space.neighbour(j, i, 1), aii + bi));
                    entries.push((space.neighbour(j, i, -1), aii - bi));
                    entries[0].1 -= 2.0 * aii;
                    for k in i + 1..d {
                        // 2 a_ik u_ik with the four-point cross stencil
                        let w = 2.0 * p.a[i * d + k] / (4.0 * h[i] * h[k]);
                        if w == 0.0 {
                            continue;
                        }
                        for (si, sk, sign) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                            let nb = space.neighbour(space.neighbour(j, i, si), k, sk);
                            entries.push((nb, sign * w));
                        }
                    }
                }
                entries.sort_by_key(|e| e.0);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
                for (c, v) in entries {
                    match merged.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => merged.push((c, v)),
                    }
                }
                merged
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SpatialOperator { d, row_ptr, cols, vals }
    }

    fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .into_par_iter()
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|e| self.vals[e] * x[self.cols[e]]).sum())
            .collect()
    }

    fn entry(&self, r: usize, c: usize) -> f64 {
        (self.row_ptr[r]..self.row_ptr[r + 1])
            .find(|&e| self.cols[e] == c)
            .map_or(0.0, |e| self.vals[e])
    }

    /// Solves (shift I - L) x = rhs.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64], guess: Vec<f64>) -> Result<Vec<f64>> {
        if self.d == 1 {
            let n = self.n();
            let lower: Vec<f64> = (0..n).map(|r| -self.entry(r, (r + n - 1) % n)).collect();
            let diag: Vec<f64> = (0..n).map(|r| shift - self.entry(r, r)).collect();
            let upper: Vec<f64> = (0..n).map(|r| -self.entry(r, (r + 1) % n)).collect();
            cyclic_tridiagonal(&lower, &diag, &upper, rhs)
        } else {
            self.bicgstab(shift, rhs, guess)
        }
    }

    fn shifted_apply(&self, shift: f64, x: &[f64]) -> Vec<f64> {
        self.apply(x).iter().zip(x).map(|(lx, xi)| shift * xi - lx).collect()
    }

    fn bicgstab(&self, shift: f64, b: &[f64], mut x: Vec<f64>) -> Result<Vec<f64>> {
        let n = self.n();
        let inv_diag: Vec<f64> = (0..n).map(|r| 1.0 / (shift - self.entry(r, r))).collect();
        let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, b)| a * b).collect() };
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.par_iter().zip(b).map(|(x, y)| x * y).sum() };
        let b_norm = dot(b, b).sqrt();
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let ax = self.shifted_apply(shift, &x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let r0 = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        for _ in 0..KRYLOV_MAX_ITER {
            if dot(&r, &r).sqrt() <= KRYLOV_TOL * b_norm {
                return Ok(x);
            }
            let rho_new = dot(&r0, &r);
            if rho_new == 0.0 || omega == 0.0 {
                return Err(Error::LinearSolve("BiCGSTAB breakdown".into()));
            }
            let beta = rho_new / rho * alpha / omega;
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            let ph = precond(&p);
            v = self.shifted_apply(shift, &ph);
            alpha = rho / dot(&r0, &v);
            let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
            if dot(&s, &s).sqrt() <= KRYLOV_TOL * b_norm {
                for i in 0..n {
                    x[i] += alpha * ph[i];
                }
                return Ok(x);
            }
            let sh = precond(&s);
            let tv = self.shifted_apply(shift, &sh);
            omega = dot(&tv, &s) / dot(&tv, &tv);
            for i in 0..n {
                x[i] += alpha * ph[i] + omega * sh[i];
                r[i] = s[i] - omega * tv[i];
            }
        }
        Err(Error::LinearSolve(format!(
            "BiCGSTAB did not reach {KRYLOV_TOL:e} in {KRYLOV_MAX_ITER} iterations"
        )))
    }
}

/// Solves the periodic tridiagonal system lower[i] x[i-1] + diag[i] x[i]
/// + upper[i] x[i+1] = rhs[i] by Sherman-Morrison.
fn cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let corner_lo = upper[n - 1];
    let corner_hi = lower[0];
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= corner_lo * corner_hi / gamma;
    let x = thomas(lower, &b, upper, rhs)?;
    let mut e = vec![0.0; n];
    e[0] = gamma;
    e[n - 1] = corner_lo;
    let z = thomas(lower, &b, upper, &e)?;
    let num = x[0] + corner_hi * x[n - 1] / gamma;
    let den = 1.0 + z[0] + corner_hi * z[n - 1] / gamma;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::LinearSolve("singular periodic tridiagonal system".into()));
    }
    let fact = num / den;
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::LinearSolve("zero pivot".into()));
    }
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::LinearSolve("zero pivot".into()));
        }
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i + 1] * x[i + 1];
    }
    Ok(x)
}
