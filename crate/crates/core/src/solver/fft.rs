//! Multi-dimensional complex FFT on row-major arrays.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform including the 1/N normalisation.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let total = data.len();
        let mut stride = 1;
        for axis in (0..self.shape.len()).rev() {
            let n = self.shape[axis];
            if stride == 1 {
                plans[axis].process(data);
            } else {
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for outer in (0..total).step_by(n * stride) {
                    for inner in 0..stride {
                        for (k, b) in buf.iter_mut().enumerate() {
                            *b = data[outer + inner + k * stride];
                        }
                        plans[axis].process(&mut buf);
                        for (k, b) in buf.iter().enumerate() {
                            data[outer + inner + k * stride] = *b;
                        }
                    }
                }
            }
            stride *= n;
        }
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut c);
        c
    }

    pub fn inverse_real(&self, mut modes: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut modes);
        modes.into_iter().map(|c| c.re).collect()
    }
}
