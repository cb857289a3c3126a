//! Numerical toolkit for the Caputo time-fractional diffusion-wave equation
//! `d^alpha_t u = a^{ij} u_{x^i x^j} + b^i u_{x^i} + c u + f(u)`, alpha in (0,2).

pub mod error;
pub mod fraccalc;
pub mod kernels;
pub mod quad;
pub mod specfun;
pub mod solver;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
