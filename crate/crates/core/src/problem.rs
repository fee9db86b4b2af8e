//! Problem and solution data model shared by both solvers.
//!
//! An [`FdeProblem`] describes `D^{β_i} X_i = f_i(t, X)` for `i = 1..M` with
//! Caputo derivatives starting at `t0`. For `M > 1` every order must lie in
//! `(0, 1]`; a scalar equation may have any positive order, in which case the
//! initial-value table carries `ceil(β)` rows (row `j` holds `X^{(j)}(t0)`).

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Right-hand side `F(t, X, params)`, returning a vector of length `M`.
pub type RhsFn<P> = dyn Fn(f64, &[f64], &P) -> Result<Vec<f64>> + Send + Sync;

/// Jacobian `∂F/∂X (t, X, params)` as an `M×M` matrix.
pub type JacobianFn<P> = dyn Fn(f64, &[f64], &P) -> Result<Matrix> + Send + Sync;

/// An initial-value problem with Caputo fractional derivatives.
///
/// `params` is handed to the callbacks untouched; the library never looks at
/// it.
pub struct FdeProblem<P = ()> {
    rhs: Arc<RhsFn<P>>,
    jacobian: Option<Arc<JacobianFn<P>>>,
    t_span: (f64, f64),
    x0: Matrix,
    beta: Vec<f64>,
    params: P,
}

impl<P: Clone> Clone for FdeProblem<P> {
    fn clone(&self) -> Self {
        Self {
            rhs: Arc::clone(&self.rhs),
            jacobian: self.jacobian.clone(),
            t_span: self.t_span,
            x0: self.x0.clone(),
            beta: self.beta.clone(),
            params: self.params.clone(),
        }
    }
}

impl<P> fmt::Debug for FdeProblem<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdeProblem")
            .field("t_span", &self.t_span)
            .field("x0", &self.x0)
            .field("beta", &self.beta)
            .field("has_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl<P> FdeProblem<P> {
    pub fn new<F>(rhs: F, t_span: (f64, f64), x0: Matrix, beta: Vec<f64>, params: P) -> Self
    where
        F: Fn(f64, &[f64], &P) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            rhs: Arc::new(rhs),
            jacobian: None,
            t_span,
            x0,
            beta,
            params,
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(f64, &[f64], &P) -> Result<Matrix> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn without_jacobian(mut self) -> Self {
        self.jacobian = None;
        self
    }

    pub fn with_t_span(mut self, t_span: (f64, f64)) -> Self {
        self.t_span = t_span;
        self
    }

    pub fn with_beta(mut self, beta: Vec<f64>) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_x0(mut self, x0: Matrix) -> Self {
        self.x0 = x0;
        self
    }

    pub fn t_span(&self) -> (f64, f64) {
        self.t_span
    }

    pub fn x0(&self) -> &Matrix {
        &self.x0
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn params(&self) -> &P {
        &self.params
    }

    /// System dimension `M`.
    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// Number of initial-value rows required by the orders, `ceil(max β)`.
    pub fn initial_rows(&self) -> usize {
        let max = self.beta.iter().copied().fold(0.0, f64::max);
        (max.ceil() as usize).max(1)
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Evaluates the right-hand side and checks its length.
    pub fn eval_rhs(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let f = (self.rhs)(t, x, &self.params)?;
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.len(),
            });
        }
        Ok(f)
    }

    /// Evaluates the Jacobian, if one was supplied.
    pub fn eval_jacobian(&self, t: f64, x: &[f64]) -> Result<Matrix> {
        let jac = self.jacobian.as_ref().ok_or(Error::MissingJacobian)?;
        let j = jac(t, x, &self.params)?;
        let m = self.dim();
        if j.rows() != m || j.cols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: if j.rows() != m { j.rows() } else { j.cols() },
            });
        }
        Ok(j)
    }

    /// Checks every structural invariant; see [`validate_problem`].
    pub fn validate(self) -> Result<Self> {
        validate_problem(self)
    }

    /// Same checks as [`validate_problem`], by reference.
    pub fn check(&self) -> Result<()> {
        let (t0, t_end) = self.t_span;
        if !(t0.is_finite() && t_end.is_finite() && t0 < t_end) {
            return Err(Error::BadSpan { t0, t_end });
        }
        let m = self.dim();
        if m == 0 {
            return Err(Error::UnsupportedOrder("empty order vector".into()));
        }
        if let Some(b) = self.beta.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::UnsupportedOrder(format!("order {b} is not positive")));
        }
        if m > 1 {
            if let Some(b) = self.beta.iter().find(|b| **b > 1.0) {
                return Err(Error::UnsupportedOrder(format!(
                    "order {b} > 1 is only supported for scalar equations"
                )));
            }
        }
        let rows = self.initial_rows();
        if self.x0.rows() != rows {
            return Err(Error::BadInitialShape {
                expected: rows,
                got: self.x0.rows(),
            });
        }
        if self.x0.cols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: self.x0.cols(),
            });
        }
        self.eval_rhs(t0, self.x0.row(0))?;
        Ok(())
    }
}

/// Returns the problem unchanged when it is well formed.
///
/// Checks, in order: the time span, the orders (positive; at most one for
/// systems), the shape of the initial-value table, and the length of the
/// right-hand side evaluated at `(t0, X0)`.
pub fn validate_problem<P>(problem: FdeProblem<P>) -> Result<FdeProblem<P>> {
    problem.check()?;
    Ok(problem)
}

/// Step size, correction count, tolerance and iteration cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub h: f64,
    pub nc: usize,
    pub tol: f64,
    pub itmax: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h: 2f64.powi(-6),
            nc: 2,
            tol: 1e-6,
            itmax: 100,
        }
    }
}

impl SolverConfig {
    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_nc(mut self, nc: usize) -> Self {
        self.nc = nc;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_itmax(mut self, itmax: usize) -> Self {
        self.itmax = itmax;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::BadConfig(format!("step size {} must be > 0", self.h)));
        }
        if self.nc == 0 {
            return Err(Error::BadConfig("nc must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::BadConfig(format!("tol {} must be > 0", self.tol)));
        }
        if self.itmax == 0 {
            return Err(Error::BadConfig("itmax must be >= 1".into()));
        }
        Ok(())
    }
}

/// Number of steps `N` and the uniform grid `t_r = t0 + r·h`, `r = 0..=N`.
///
/// The grid stops at the last point not beyond `T`; no shortened final step
/// is taken.
pub fn grid_points(t_span: (f64, f64), h: f64) -> Result<(usize, Vec<f64>)> {
    let (t0, t_end) = t_span;
    if !(t0.is_finite() && t_end.is_finite() && t0 < t_end) {
        return Err(Error::BadSpan { t0, t_end });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BadConfig(format!("step size {h} must be > 0")));
    }
    let ratio = (t_end - t0) / h;
    let n = (ratio + 1e-9 * ratio.max(1.0)).floor() as usize;
    let grid = (0..=n)
        .map(|r| (t0 + r as f64 * h).min(t_end))
        .collect();
    Ok((n, grid))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Predictor-corrector.
    Pc,
    /// Modified Newton-Raphson.
    Nr,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pc => "PC",
            Method::Nr => "NR",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pc" => Ok(Method::Pc),
            "nr" => Ok(Method::Nr),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub method: Method,
    /// Corrections (PC) or Newton updates (NR) summed over all steps.
    pub iterations: usize,
    /// NR steps that stopped at `itmax` without meeting `tol`.
    pub max_iteration_steps: usize,
    pub wall_time: Duration,
    /// `T - t_N`; nonzero when `h` does not divide the span.
    pub end_gap: f64,
}

/// Uniform grid plus the `(N+1) × M` trajectory.
#[derive(Debug, Clone)]
pub struct Solution {
    pub t: Vec<f64>,
    pub x: Matrix,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn steps(&self) -> usize {
        self.t.len() - 1
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.x.column(i)
    }

    pub fn last(&self) -> &[f64] {
        self.x.row(self.x.rows() - 1)
    }
}
