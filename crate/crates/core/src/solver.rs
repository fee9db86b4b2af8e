//! Predictor-corrector and modified Newton-Raphson time stepping.
//!
//! Both schemes discretize the Volterra form
//! `X(t) = T(t) + Γ(β)⁻¹ ∫ (t − τ)^{β−1} F(τ, X(τ)) dτ` on a uniform grid
//! with product-integration weights. Step `n` splits the trapezoidal
//! corrector into the known history
//! `Ψ = T(t_n) + h^β ⊙ (c_n ⊙ f_0 + Σ_{j=1}^{n−1} d_{n−j} ⊙ f_j)`
//! and the implicit part `a0 ⊙ F(t_n, X_n)`.
//!
//! The PC scheme predicts with the rectangular rule and applies fixed-point
//! corrections. The NR scheme solves `X = Ψ + a0 ⊙ F(t_n, X)` by Newton
//! iteration with a Jacobian frozen at the start of the step.

use std::time::Instant;

use crate::conv::{ConvPlan, HistoryConv};
use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::matrix::{norm_inf, Matrix};
use crate::problem::{grid_points, Diagnostics, FdeProblem, Method, Solution, SolverConfig};
use crate::weights::{taylor_term, PiWeights};

/// Corrections up to this count run unconditionally; above it the count is a
/// cap and `tol` decides.
pub const FIXED_CORRECTIONS: usize = 10;

/// Result of [`newton_iterate`].
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// False when `itmax` was reached without meeting `tol`.
    pub converged: bool,
}

/// Solves `X = psi + a0 ⊙ F(X)` by modified Newton iteration.
///
/// `lu` factors `I − diag(a0)·J`, with `J` evaluated at `x_init`. Stops when
/// the infinity norm of an update drops below `tol`, or after `itmax`
/// updates.
pub fn newton_iterate<F>(
    psi: &[f64],
    a0: &[f64],
    mut f_eval: F,
    lu: &Lu,
    x_init: &[f64],
    tol: f64,
    itmax: usize,
) -> Result<NewtonOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x_init.to_vec();
    let mut residual = vec![0.0; x.len()];
    for it in 0..itmax {
        let f = f_eval(&x)?;
        for i in 0..x.len() {
            residual[i] = x[i] - psi[i] - a0[i] * f[i];
        }
        if it == 0 && residual.iter().all(|&r| r == 0.0) {
            return Ok(NewtonOutcome {
                x,
                iterations: 0,
                converged: true,
            });
        }
        let delta = lu.solve(&residual)?;
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi -= di;
        }
        if norm_inf(&delta) < tol {
            return Ok(NewtonOutcome {
                x,
                iterations: it + 1,
                converged: true,
            });
        }
    }
    Ok(NewtonOutcome {
        x,
        iterations: itmax,
        converged: false,
    })
}

/// `I − diag(a0)·J`, factored.
pub fn newton_matrix(a0: &[f64], jacobian: &Matrix) -> Result<Lu> {
    let m = a0.len();
    let mut a = Matrix::identity(m);
    for r in 0..m {
        for c in 0..m {
            a[(r, c)] -= a0[r] * jacobian[(r, c)];
        }
    }
    Lu::factor(&a)
}

/// Runs the requested method.
pub fn solve<P>(
    problem: &FdeProblem<P>,
    method: Method,
    config: &SolverConfig,
    plan: &mut ConvPlan,
) -> Result<Solution> {
    match method {
        Method::Pc => solve_pc(problem, config, plan),
        Method::Nr => solve_nr(problem, config, plan),
    }
}

/// Shared per-solve state: grid, weights and the trajectory so far.
struct Stepper<'a, P> {
    problem: &'a FdeProblem<P>,
    grid: Vec<f64>,
    weights: PiWeights,
    x: Matrix,
    f0: Vec<f64>,
    m: usize,
}

impl<'a, P> Stepper<'a, P> {
    fn new(problem: &'a FdeProblem<P>, config: &SolverConfig) -> Result<Self> {
        problem.check()?;
        config.validate()?;
        let (n, grid) = grid_points(problem.t_span(), config.h)?;
        let m = problem.dim();
        let weights = PiWeights::new(problem.beta(), config.h, n.max(1))?;
        let mut x = Matrix::zeros(n + 1, m);
        x.row_mut(0).copy_from_slice(problem.x0().row(0));
        let f0 = problem.eval_rhs(grid[0], x.row(0))?;
        check_finite(&f0, 0, "right-hand side at the initial value")?;
        Ok(Self {
            problem,
            grid,
            weights,
            x,
            f0,
            m,
        })
    }

    fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    /// `Ψ` at step `n` given the corrector-history stream.
    fn psi(&self, plan: &mut ConvPlan, corr: &HistoryConv, n: usize) -> Result<Vec<f64>> {
        let mut psi = taylor_term(self.problem.x0(), self.grid[0], self.grid[n]);
        let mut hist = vec![0.0; self.m];
        if n >= 2 {
            corr.sum(plan, n, n - 1, &mut hist)?;
        }
        let w = &self.weights;
        for i in 0..self.m {
            psi[i] += w.h_pow_beta[i] * (w.c[i][n] * self.f0[i] + hist[i]);
        }
        Ok(psi)
    }

    fn finish(self, method: Method, iterations: usize, max_iteration_steps: usize, started: Instant) -> Solution {
        let end_gap = self.problem.t_span().1 - self.grid[self.grid.len() - 1];
        Solution {
            t: self.grid,
            x: self.x,
            diagnostics: Diagnostics {
                method,
                iterations,
                max_iteration_steps,
                wall_time: started.elapsed(),
                end_gap,
            },
        }
    }
}

/// Right-hand side during stepping; domain errors mean the iterate left the
/// model's valid region and are reported as divergence at `step`.
fn rhs_at<P>(problem: &FdeProblem<P>, t: f64, x: &[f64], step: usize) -> Result<Vec<f64>> {
    problem.eval_rhs(t, x).map_err(|e| match e {
        Error::Domain(reason) => Error::Diverged { step, reason },
        other => other,
    })
}

fn check_finite(v: &[f64], step: usize, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged {
            step,
            reason: format!("non-finite {what}"),
        })
    }
}

/// Predictor-corrector solve.
///
/// With `config.nc ≤ 10` exactly `nc` corrections are applied per step;
/// above that, corrections stop once successive iterates differ by less than
/// `config.tol` in the infinity norm, with `nc` as the cap. Any Jacobian on
/// the problem is ignored.
pub fn solve_pc<P>(problem: &FdeProblem<P>, config: &SolverConfig, plan: &mut ConvPlan) -> Result<Solution> {
    let started = Instant::now();
    let mut st = Stepper::new(problem, config)?;
    let n_steps = st.steps();
    let m = st.m;
    let mut pred = HistoryConv::new(plan, &st.weights.b, m, n_steps.max(1))?;
    let mut corr = HistoryConv::new(plan, &st.weights.d, m, n_steps.max(1))?;
    let mut f_prev = st.f0.clone();
    let mut conv = vec![0.0; m];
    let mut iterations = 0;

    for n in 1..=n_steps {
        let t = st.grid[n];
        // rectangular predictor over f_0..f_{n−1}
        pred.push(plan, &f_prev)?;
        pred.sum(plan, n, n, &mut conv)?;
        let mut x = taylor_term(problem.x0(), st.grid[0], t);
        for i in 0..m {
            x[i] += st.weights.h_pow_beta[i] * conv[i];
        }
        check_finite(&x, n, "predictor")?;

        let psi = st.psi(plan, &corr, n)?;
        for _ in 0..config.nc {
            let f = rhs_at(problem, t, &x, n)?;
            let mut change = 0.0f64;
            for i in 0..m {
                let next = psi[i] + st.weights.a0[i] * f[i];
                change = change.max((next - x[i]).abs());
                x[i] = next;
            }
            iterations += 1;
            check_finite(&x, n, "corrector")?;
            if config.nc > FIXED_CORRECTIONS && change < config.tol {
                break;
            }
        }

        let f = rhs_at(problem, t, &x, n)?;
        check_finite(&f, n, "right-hand side")?;
        st.x.row_mut(n).copy_from_slice(&x);
        if n < n_steps {
            corr.push(plan, &f)?;
        }
        f_prev = f;
    }
    drop(pred);
    drop(corr);
    Ok(st.finish(Method::Pc, iterations, 0, started))
}

/// Modified Newton-Raphson solve; requires a Jacobian on the problem.
///
/// Each step starts from the previous grid value, evaluates and factors the
/// Newton matrix once, then iterates to `config.tol`. Steps that reach
/// `config.itmax` first keep their last iterate and are counted in
/// [`Diagnostics::max_iteration_steps`].
pub fn solve_nr<P>(problem: &FdeProblem<P>, config: &SolverConfig, plan: &mut ConvPlan) -> Result<Solution> {
    let started = Instant::now();
    if !problem.has_jacobian() {
        return Err(Error::MissingJacobian);
    }
    let mut st = Stepper::new(problem, config)?;
    let n_steps = st.steps();
    let m = st.m;
    let mut corr = HistoryConv::new(plan, &st.weights.d, m, n_steps.max(1))?;
    let mut iterations = 0;
    let mut capped = 0;

    for n in 1..=n_steps {
        let t = st.grid[n];
        let psi = st.psi(plan, &corr, n)?;
        let x_init = st.x.row(n - 1).to_vec();
        let jac = problem.eval_jacobian(t, &x_init)?;
        if !jac.all_finite() {
            return Err(Error::Diverged {
                step: n,
                reason: "non-finite Jacobian".into(),
            });
        }
        let lu = newton_matrix(&st.weights.a0, &jac)?;
        let out = newton_iterate(
            &psi,
            &st.weights.a0,
            |x| rhs_at(problem, t, x, n),
            &lu,
            &x_init,
            config.tol,
            config.itmax,
        )?;
        iterations += out.iterations;
        if !out.converged {
            capped += 1;
        }
        check_finite(&out.x, n, "Newton iterate")?;
        let f = rhs_at(problem, t, &out.x, n)?;
        check_finite(&f, n, "right-hand side")?;
        st.x.row_mut(n).copy_from_slice(&out.x);
        if n < n_steps {
            corr.push(plan, &f)?;
        }
    }
    drop(corr);
    Ok(st.finish(Method::Nr, iterations, capped, started))
}
