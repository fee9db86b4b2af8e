//! Fractional differential equation solvers.
//!
//! Systems `D^{β_i} X_i = f_i(t, X)` with Caputo derivatives are integrated
//! on a uniform grid by a predictor-corrector scheme or by a modified
//! Newton-Raphson scheme, both built on product-integration weights. History
//! sums can be evaluated directly or by block FFT convolution.

pub mod conv;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod matrix;
pub mod par;
pub mod problem;
pub mod solver;
pub mod special;
pub mod weights;
pub mod zoo;

pub use conv::{ConvMode, ConvPlan};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use problem::{validate_problem, Diagnostics, FdeProblem, Method, Solution, SolverConfig};
pub use solver::{solve, solve_nr, solve_pc};
