use std::fmt;
use std::sync::Arc;

use super::SpaceGrid;
use crate::error::{Error, Result};
use crate::fraccalc::TimeGrid;

/// Coefficients at one space-time point; `a` is d x d row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPoint {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

pub type CoefficientFn = Arc<dyn Fn(f64, &[f64]) -> CoefficientPoint + Send + Sync>;

/// Piecewise-in-time coefficients: piece k is active on (T_{k-1}, T_k].
#[derive(Clone)]
pub struct CoefficientField {
    pub d: usize,
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<CoefficientFn>,
    /// ellipticity constant delta
    pub delta: f64,
    /// bound K on the coefficients and the upper ellipticity constant
    pub k_bound: f64,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("d", &self.d)
            .field("breakpoints", &self.breakpoints)
            .field("pieces", &self.pieces.len())
            .field("delta", &self.delta)
            .field("k_bound", &self.k_bound)
            .finish()
    }
}

impl CoefficientField {
    pub fn new(d: usize, breakpoints: Vec<f64>, pieces: Vec<CoefficientFn>, delta: f64, k_bound: f64) -> Result<Self> {
        if breakpoints.len() != pieces.len() + 1 || pieces.is_empty() {
            return Err(Error::invalid("breakpoints", "need one more breakpoint than pieces"));
        }
        if breakpoints[0] != 0.0 || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("breakpoints", "must start at 0 and increase"));
        }
        if !(delta > 0.0 && k_bound >= delta) {
            return Err(Error::invalid("delta", "need 0 < delta <= K"));
        }
        Ok(CoefficientField {
            d,
            breakpoints,
            pieces,
            delta,
            k_bound,
        })
    }

    /// Constant coefficients on [0, horizon].
    pub fn constant(d: usize, horizon: f64, a: Vec<f64>, b: Vec<f64>, c: f64, delta: f64, k_bound: f64) -> Result<Self> {
        if a.len() != d * d || b.len() != d {
            return Err(Error::invalid("a", "shape does not match the dimension"));
        }
        let point = CoefficientPoint { a, b, c };
        let f: CoefficientFn = Arc::new(move |_, _| point.clone());
        CoefficientField::new(d, vec![0.0, horizon], vec![f], delta, k_bound)
    }

    /// a = identity, b = 0, c = 0.
    pub fn laplacian(d: usize, horizon: f64) -> Self {
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            a[i * d + i] = 1.0;
        }
        CoefficientField::constant(d, horizon, a, vec![0.0; d], 0.0, 1.0, 1.0)
            .expect("identity coefficients are valid")
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Index of the piece active at time t (t = 0 belongs to the first).
    pub fn piece_index(&self, t: f64) -> usize {
        let k = self.breakpoints[1..].partition_point(|&b| b < t);
        k.min(self.pieces.len() - 1)
    }

    pub fn at(&self, t: f64, x: &[f64]) -> CoefficientPoint {
        (self.pieces[self.piece_index(t)])(t, x)
    }

    /// Sampled check of symmetry, ellipticity and the bound K at every grid
    /// node, plus alignment of the breakpoints with the time grid.
    pub fn check_on(&self, time: &TimeGrid, space: &SpaceGrid) -> Result<()> {
        if space.d != self.d {
            return Err(Error::invalid("coefficients", "dimension differs from the space grid"));
        }
        if self.horizon() < time.horizon * (1.0 - 1e-12) {
            return Err(Error::invalid("breakpoints", "coefficients end before the time horizon"));
        }
        let h = time.step();
        for &b in &self.breakpoints {
            if b <= time.horizon && ((b / h).round() * h - b).abs() > 1e-9 * h.max(b) {
                return Err(Error::invalid("breakpoints", format!("{b} is not a time grid node")));
            }
        }
        let d = self.d;
        for &t in &time.nodes[1..] {
            for j in 0..space.len() {
                let x = space.coords(j);
                let p = self.at(t, &x);
                if p.a.len() != d * d || p.b.len() != d {
                    return Err(Error::invalid("coefficients", "evaluator returned the wrong shape"));
                }
                let tol = 1e-12 * self.k_bound;
                for i in 0..d {
                    for k in 0..d {
                        if (p.a[i * d + k] - p.a[k * d + i]).abs() > tol {
                            return Err(Error::Ellipticity(format!("a is not symmetric at t={t}, x={x:?}")));
                        }
                    }
                }
                let (lo, hi) = symmetric_eigen_bounds(&p.a, d);
                if lo < self.delta * (1.0 - 1e-12) || hi > self.k_bound * (1.0 + 1e-12) {
                    return Err(Error::Ellipticity(format!(
                        "eigenvalues [{lo}, {hi}] leave [{}, {}] at t={t}, x={x:?}",
                        self.delta, self.k_bound
                    )));
                }
                let worst = p.a.iter().chain(&p.b).chain(std::iter::once(&p.c)).fold(0.0f64, |m, v| m.max(v.abs()));
                if worst > self.k_bound * (1.0 + 1e-12) || !worst.is_finite() {
                    return Err(Error::Ellipticity(format!("coefficient size {worst} exceeds K at t={t}")));
                }
            }
        }
        Ok(())
    }

    /// True when every sampled point has a = identity, b = 0, c = 0.
    pub fn is_plain_laplacian(&self, time: &TimeGrid, space: &SpaceGrid) -> bool {
        let d = self.d;
        time.nodes.iter().all(|&t| {
            (0..space.len()).all(|j| {
                let p = self.at(t, &space.coords(j));
                let a_ok = (0..d * d).all(|k| p.a[k] == if k % (d + 1) == 0 { 1.0 } else { 0.0 });
                a_ok && p.b.iter().all(|&v| v == 0.0) && p.c == 0.0
            })
        })
    }
}

/// Smallest and largest eigenvalue of a symmetric d x d matrix (cyclic
/// Jacobi rotations).
pub(crate) fn symmetric_eigen_bounds(a: &[f64], d: usize) -> (f64, f64) {
    let mut m = a.to_vec();
    for _ in 0..50 {
        let mut off = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                off += m[p * d + q].powi(2);
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * d + q] - m[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..d).map(|i| m[i * d + i]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_bounds() {
        let (lo, hi) = symmetric_eigen_bounds(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0];
        let (lo, hi) = symmetric_eigen_bounds(&a, 3);
        // trace and determinant pin the spectrum down well enough
        assert!(lo > 0.8 && lo < 1.0 && hi > 4.4 && hi < 4.8, "{lo} {hi}");
    }

    #[test]
    fn piece_lookup_is_left_open() {
        let one: CoefficientFn = Arc::new(|_, _| CoefficientPoint { a: vec![1.0], b: vec![0.0], c: 0.0 });
        let two: CoefficientFn = Arc::new(|_, _| CoefficientPoint { a: vec![2.0], b: vec![0.0], c: 0.0 });
        let f = CoefficientField::new(1, vec![0.0, 0.5, 1.0], vec![one, two], 1.0, 2.0).unwrap();
        assert_eq!(f.piece_index(0.0), 0);
        assert_eq!(f.piece_index(0.5), 0);
        assert_eq!(f.piece_index(0.5 + 1e-12), 1);
        assert_eq!(f.piece_index(1.0), 1);
    }
}
