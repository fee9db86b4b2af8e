//! Built-in models with Jacobians, exact solutions where known, and default
//! settings.
//!
//! Every model takes its parameters as a flat `Vec<f64>` so that callers
//! (the CLI in particular) can override them uniformly. The layout of each
//! vector is given by [`ModelSpec::param_names`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{FdeProblem, JacobianFn, RhsFn, SolverConfig};
use crate::special::{gamma, mittag_leffler};

/// Problems built from the zoo carry their parameters as a plain vector.
pub type ModelProblem = FdeProblem<Vec<f64>>;

type ExactFn = dyn Fn(f64, &ModelProblem) -> Result<Vec<f64>> + Send + Sync;

/// Names accepted by [`model_by_name`].
pub const MODEL_NAMES: [&str; 7] = ["nonstiff", "stiff", "harmonic", "sir", "lv3", "glv", "covid"];

#[derive(Clone)]
pub struct ModelSpec {
    pub name: &'static str,
    pub components: Vec<String>,
    pub param_names: Vec<String>,
    pub default_params: Vec<f64>,
    pub default_x0: Matrix,
    pub default_beta: Vec<f64>,
    pub default_t_span: (f64, f64),
    /// Correction count and tolerance suited to the model.
    pub default_config: SolverConfig,
    /// Index of a parameter that must mirror the (scalar) order.
    pub order_param: Option<usize>,
    rhs: Arc<RhsFn<Vec<f64>>>,
    jacobian: Option<Arc<JacobianFn<Vec<f64>>>>,
    exact: Option<Arc<ExactFn>>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("default_params", &self.default_params)
            .field("default_beta", &self.default_beta)
            .field("default_t_span", &self.default_t_span)
            .finish()
    }
}

/// Optional replacements for a model's defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub params: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub t_span: Option<(f64, f64)>,
    pub x0: Option<Matrix>,
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        self.default_beta.len()
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// The problem with every default in place.
    pub fn problem(&self) -> ModelProblem {
        self.build(self.default_params.clone(), self.default_beta.clone(), self.default_t_span, self.default_x0.clone())
    }

    /// The problem with the given overrides applied.
    ///
    /// A scalar order override is broadcast to every component. When the
    /// model's right-hand side depends on the order itself, the mirrored
    /// parameter follows the order unless parameters are given explicitly.
    pub fn problem_with(&self, o: &Overrides) -> Result<ModelProblem> {
        let m = self.dim();
        let beta = match &o.beta {
            Some(b) if b.len() == 1 && m > 1 => vec![b[0]; m],
            Some(b) if b.len() == m => b.clone(),
            Some(b) => {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: b.len(),
                })
            }
            None => self.default_beta.clone(),
        };
        let params = match &o.params {
            Some(p) if p.len() == self.default_params.len() => p.clone(),
            Some(p) => {
                return Err(Error::BadParams(format!(
                    "{} expects {} parameters ({}), got {}",
                    self.name,
                    self.default_params.len(),
                    self.param_names.join(","),
                    p.len()
                )))
            }
            None => {
                let mut p = self.default_params.clone();
                if let (Some(i), Some(_)) = (self.order_param, &o.beta) {
                    p[i] = beta[0];
                }
                p
            }
        };
        let mut x0 = o.x0.clone().unwrap_or_else(|| self.default_x0.clone());
        // higher orders need more initial rows; missing derivatives are zero
        let rows = (beta.iter().copied().fold(0.0, f64::max).ceil() as usize).max(1);
        if o.x0.is_none() && x0.rows() != rows {
            let mut grown = Matrix::zeros(rows, m);
            for r in 0..rows.min(x0.rows()) {
                grown.row_mut(r).copy_from_slice(x0.row(r));
            }
            x0 = grown;
        }
        Ok(self.build(params, beta, o.t_span.unwrap_or(self.default_t_span), x0))
    }

    fn build(&self, params: Vec<f64>, beta: Vec<f64>, t_span: (f64, f64), x0: Matrix) -> ModelProblem {
        let rhs = Arc::clone(&self.rhs);
        let mut p = FdeProblem::new(move |t, x, par: &Vec<f64>| rhs(t, x, par), t_span, x0, beta, params);
        if let Some(j) = &self.jacobian {
            let j = Arc::clone(j);
            p = p.with_jacobian(move |t, x, par: &Vec<f64>| j(t, x, par));
        }
        p
    }

    /// Exact solution of `problem` at `t`.
    pub fn exact(&self, t: f64, problem: &ModelProblem) -> Result<Vec<f64>> {
        match &self.exact {
            Some(f) => f(t, problem),
            None => Err(Error::NoExactSolution(self.name.to_string())),
        }
    }

    /// Default solver settings at step `h`.
    pub fn config(&self, h: f64) -> SolverConfig {
        self.default_config.with_h(h)
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn default_config(nc: usize, tol: f64) -> SolverConfig {
    SolverConfig::default().with_nc(nc).with_tol(tol)
}

/// Looks a model up by name with its default settings.
pub fn model_by_name(name: &str) -> Result<ModelSpec> {
    match name {
        "nonstiff" => Ok(nonstiff_model()),
        "stiff" => Ok(stiff_linear_model(-10.0)),
        "harmonic" => Ok(harmonic_model(16.0, 4.0)),
        "sir" => Ok(sir_model()),
        "lv3" => Ok(lv3_model()),
        "glv" => Ok(glv_microbial_model(3)),
        "covid" => Ok(covid_model(CovidParams::default())),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// `D^β X = 40320/Γ(9−β) t^{8−β} − 3 Γ(5+β/2)/Γ(5−β/2) t^{4−β/2}
/// + 9/4 Γ(β+1) + (3/2 t^{β/2} − t⁴)³ − X^{3/2}`, with exact solution
/// `t⁸ − 3t^{4+β/2} + 9/4 t^β`.
///
/// The order is also parameter 0.
pub fn nonstiff_model() -> ModelSpec {
    let rhs = |t: f64, x: &[f64], p: &Vec<f64>| -> Result<Vec<f64>> {
        let b = p[0];
        if x[0] < 0.0 {
            return Err(Error::Domain(format!("X = {} < 0 raised to the power 3/2", x[0])));
        }
        let forcing = 40320.0 / gamma(9.0 - b)? * t.powf(8.0 - b)
            - 3.0 * gamma(5.0 + b / 2.0)? / gamma(5.0 - b / 2.0)? * t.powf(4.0 - b / 2.0)
            + 2.25 * gamma(b + 1.0)?
            + (1.5 * t.powf(b / 2.0) - t.powi(4)).powi(3);
        Ok(vec![forcing - x[0].powf(1.5)])
    };
    let jac = |_t: f64, x: &[f64], _p: &Vec<f64>| -> Result<Matrix> {
        Ok(Matrix::scalar(-1.5 * x[0].max(0.0).sqrt()))
    };
    let exact = |t: f64, p: &ModelProblem| -> Result<Vec<f64>> {
        let b = p.beta()[0];
        let s = t - p.t_span().0;
        Ok(vec![s.powi(8) - 3.0 * s.powf(4.0 + b / 2.0) + 2.25 * s.powf(b)])
    };
    ModelSpec {
        name: "nonstiff",
        components: names("x", 1),
        param_names: strings(&["beta"]),
        default_params: vec![0.5],
        default_x0: Matrix::scalar(0.0),
        default_beta: vec![0.5],
        default_t_span: (0.0, 1.0),
        default_config: default_config(2, 1e-6),
        order_param: Some(0),
        rhs: Arc::new(rhs),
        jacobian: Some(Arc::new(jac)),
        exact: Some(Arc::new(exact)),
    }
}

/// `D^β X = λX`, exact solution `X0 · E_β(λ (t − t0)^β)`.
pub fn stiff_linear_model(lambda: f64) -> ModelSpec {
    let rhs = |_t: f64, x: &[f64], p: &Vec<f64>| -> Result<Vec<f64>> { Ok(vec![p[0] * x[0]]) };
    let jac = |_t: f64, _x: &[f64], p: &Vec<f64>| -> Result<Matrix> { Ok(Matrix::scalar(p[0])) };
    let exact = |t: f64, p: &ModelProblem| -> Result<Vec<f64>> {
        let b = p.beta()[0];
        let z = p.params()[0] * (t - p.t_span().0).powf(b);
        Ok(vec![p.x0()[(0, 0)] * mittag_leffler(b, z)?])
    };
    ModelSpec {
        name: "stiff",
        components: names("x", 1),
        param_names: strings(&["lambda"]),
        default_params: vec![lambda],
        default_x0: Matrix::scalar(1.0),
        default_beta: vec![0.8],
        default_t_span: (0.0, 5.0),
        default_config: default_config(4, 1e-8),
        order_param: None,
        rhs: Arc::new(rhs),
        jacobian: Some(Arc::new(jac)),
        exact: Some(Arc::new(exact)),
    }
}

/// `D^β X = −(k/m) X`; for `β = 2` the exact solution is
/// `X(0) cos ωt + X'(0)/ω sin ωt` with `ω = √(k/m)`.
pub fn harmonic_model(k: f64, m_mass: f64) -> ModelSpec {
    let rhs = |_t: f64, x: &[f64], p: &Vec<f64>| -> Result<Vec<f64>> { Ok(vec![-p[0] / p[1] * x[0]]) };
    let jac = |_t: f64, _x: &[f64], p: &Vec<f64>| -> Result<Matrix> { Ok(Matrix::scalar(-p[0] / p[1])) };
    let exact = |t: f64, p: &ModelProblem| -> Result<Vec<f64>> {
        if p.beta()[0] != 2.0 {
            return Err(Error::NoExactSolution(format!(
                "harmonic has a closed form only at order 2, not {}",
                p.beta()[0]
            )));
        }
        let w = (p.params()[0] / p.params()[1]).sqrt();
        let s = t - p.t_span().0;
        Ok(vec![p.x0()[(0, 0)] * (w * s).cos() + p.x0()[(1, 0)] / w * (w * s).sin()])
    };
    ModelSpec {
        name: "harmonic",
        components: names("x", 1),
        param_names: strings(&["k", "m"]),
        default_params: vec![k, m_mass],
        default_x0: Matrix::from_rows(&[[1.0], [1.0]]),
        default_beta: vec![2.0],
        default_t_span: (0.0, 10.0),
        default_config: default_config(2, 1e-6),
        order_param: None,
        rhs: Arc::new(rhs),
        jacobian: Some(Arc::new(jac)),
        exact: Some(Arc::new(exact)),
    }
}

/// Fractional SIR: `S' = −βIS`, `I' = βIS − γI`, `R' = γI`.
pub fn sir_model() -> ModelSpec {
    let rhs = |_t: f64, x: &[f64], p: &Vec<f64>| -> Result<Vec<f64>> {
        let (b, g) = (p[0], p[1]);
        let (s, i) = (x[0], x[1]);
        Ok(vec![-b * s * i, b * s * i - g * i, g * i])
    };
    let jac = |_t: f64, x: &[f64], p: &Vec<f64>| -> Result<Matrix> {
        let (b, g) = (p[0], p[1]);
        let (s, i) = (x[0], x[1]);
        Ok(Matrix::from_rows(&[
            [-b * i, -b * s, 0.0],
            [b * i, b * s - g, 0.0],
            [0.0, g, 0.0],
        ]))
    };
    ModelSpec {
        name: "sir",
        components: strings(&["S", "I", "R"]),
        param_names: strings(&["beta", "gamma"]),
        default_params: vec![0.4, 0.04],
        default_x0: Matrix::row_vector(&[0.9, 0.1, 0.0]),
        default_beta: vec![0.9, 0.6, 0.7],
        default_t_span: (0.0, 100.0),
        default_config: default_config(2, 1e-8),
        order_param: None,
        rhs: Arc::new(rhs),
        jacobian: Some(Arc::new(jac)),
        exact: None,
    }
}

/// Three-species Lotka-Volterra:
/// `X1' = X1(a1 − a2X1 − X2 − X3)`, `X2' = X2(1 − a3 + a4X1)`,
/// `X3' = X3(1 − a5 + a6X1 + a7X2)`.
pub fn lv3_model() -> ModelSpec {
    let rhs = |_t: f64, x: &[f64], a: &Vec<f64>| -> Result<Vec<f64>> {
        Ok(vec![
            x[0] * (a[0] - a[1] * x[0] - x[1] - x[2]),
            x[1] * (1.0 - a[2] + a[3] * x[0]),
            x[2] * (1.0 - a[4] + a[5] * x[0] + a[6] * x[1]),
        ])
    };
    let jac = |_t: f64, x: &[f64], a: &Vec<f64>| -> Result<Matrix> {
        Ok(Matrix::from_rows(&[
            [a[0] - 2.0 * a[1] * x[0] - x[1] - x[2], -x[0], -x[0]],
            [a[3] * x[1], 1.0 - a[2] + a[3] * x[0], 0.0],
            [a[5] * x[2], a[6] * x[2], 1.0 - a[4] + a[5] * x[0] + a[6] * x[1]],
        ]))
    };
    ModelSpec {
        name: "lv3",
        components: names("x", 3),
        param_names: strings(&["a1", "a2", "a3", "a4", "a5", "a6", "a7"]),
        default_params: vec![3.0, 3.0, 3.0, 5.0, 3.0, 3.0, 3.0],
        default_x0: Matrix::row_vector(&[1.0, 1.0, 1.0]),
        default_beta: vec![1.0, 0.9, 0.7],
        default_t_span: (0.0, 60.0),
        default_config: default_config(4, 1e-8),
        order_param: None,
        rhs: Arc::new(rhs),
        jacobian: Some(Arc::new(jac)),
        exact: None,
    }
}

/// A growth-rate replacement active on `start ≤ t < end`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlvPulse {
    pub start: f64,
    pub end: f64,
    pub growth: Vec<f64>,
}

/// Parameters of the generalized Lotka-Volterra community model.
#[derive(Debug, Clone, PartialEq)]
pub struct GlvParams {
    pub growth: Vec<f64>,
    pub death: Vec<f64>,
    /// `K[i][k]`, row-major `N×N`; the diagonal is unused.
    pub inhibition: Vec<f64>,
    pub hill: f64,
}

impl GlvParams {
    pub fn species(&self) -> usize {
        self.growth.len()
    }

    /// Flat layout: growth, death, inhibition, Hill coefficient.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.growth.clone();
        v.extend(&self.death);
        v.extend(&self.inhibition);
        v.push(self.hill);
        v
    }

    pub fn from_slice(n: usize, p: &[f64]) -> Result<Self> {
        if p.len() != 2 * n + n * n + 1 {
            return Err(Error::BadParams(format!(
                "glv with {n} species needs {} parameters, got {}",
                2 * n + n * n + 1,
                p.len()
            )));
        }
        Ok(Self {
            growth: p[..n].to_vec(),
            death: p[n..2 * n].to_vec(),
            inhibition: p[2 * n..2 * n + n * n].to_vec(),
            hill: p[2 * n + n * n],
        })
    }
}

/// Default pulse: blue growth 1 → 0.5 and gray growth 1.05 → 2 on
/// `[GLV_PULSE.0, GLV_PULSE.1)`.
pub const GLV_PULSE: (f64, f64) = (20.0, 30.0);

/// Community model `X_i' = X_i (b_i f_i − k_i X_i)` with Hill-type
/// inhibition `f_i = Π_{k≠i} K_ik^n / (K_ik^n + X_k^n)`.
///
/// For three species the defaults carry the standard pulse perturbation;
/// other sizes start unperturbed with unit growth rates.
pub fn glv_microbial_model(n_species: usize) -> ModelSpec {
    let n = n_species.max(1);
    let growth = if n == 3 { vec![1.0, 0.95, 1.05] } else { vec![1.0; n] };
    let params = GlvParams {
        growth,
        death: vec![1.0; n],
        inhibition: (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 0.1 }).collect(),
        hill: 2.0,
    };
    let pulses = if n == 3 {
        vec![GlvPulse {
            start: GLV_PULSE.0,
            end: GLV_PULSE.1,
            growth: vec![0.5, 0.95, 2.0],
        }]
    } else {
        Vec::new()
    };
    let mut x0 = vec![0.01; n];
    x0[0] = 0.99;
    glv_model_with(params, pulses, x0, vec![0.9; n], (0.0, 50.0))
}

/// Community model with explicit parameters and pulse schedule.
pub fn glv_model_with(
    params: GlvParams,
    pulses: Vec<GlvPulse>,
    x0: Vec<f64>,
    beta: Vec<f64>,
    t_span: (f64, f64),
) -> ModelSpec {
    let n = params.species();
    let pulses = Arc::new(pulses);
    let growth_at = {
        let pulses = Arc::clone(&pulses);
        move |t: f64, base: &[f64]| -> Vec<f64> {
            pulses
                .iter()
                .find(|p| t >= p.start && t < p.end)
                .map_or_else(|| base.to_vec(), |p| p.growth.clone())
        }
    };
    let growth_rhs = growth_at.clone();
    let rhs = move |t: f64, x: &[f64], p: &Vec<f64>| -> Result<Vec<f64>> {
        let gp = GlvParams::from_slice(n, p)?;
        let b = growth_rhs(t, &gp.growth);
        let f = inhibition(&gp, x);
        Ok((0..n).map(|i| x[i] * (b[i] * f[i] - gp.death[i] * x[i])).collect())
    };
    let jac = move |t: f64, x: &[f64], p: &Vec<f64>| -> Result<Matrix> {
        let gp = GlvParams::from_slice(n, p)?;
        let b = growth_at(t, &gp.growth);
        let f = inhibition(&gp, x);
        let mut j = Matrix::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                j[(i, k)] = if i == k {
                    b[i] * f[i] - 2.0 * gp.death[i] * x[i]
                } else {
                    let kn = gp.inhibition[i * n + k].powf(gp.hill);
                    let xn = x[k].powf(gp.hill);
                    // ∂f_i/∂X_k = −f_i · n X_k^{n−1} / (K^n + X_k^n)
                    let df = -f[i] * gp.hill * x[k].powf(gp.hill - 1.0) / (kn + xn);
                    x[i] * b[i] * df
                };
            }
        }
        Ok(j)
    };
    ModelSpec {
        name: "glv",
        components: names("x", n),
        param_names: (1..=n)
            .map(|i| format!("b{i}"))
            .chain((1..=n).map(|i| format!("k{i}")))
            .chain((0..n * n).map(|k| format!("K{}{}", k / n + 1, k % n + 1)))
            .chain(std::iter::once("n".to_string()))
            .collect(),
        default_params: params.to_vec(),
        default_x0: Matrix::row_vector(&x0),
        default_beta: beta,
        default_t_span: t_span,
        default_config: default_config(2, 1e-8),
        order_param: None,
        rhs: Arc::new(rhs),
        jacobian: Some(Arc::new(jac)),
        exact: None,
    }
}

fn inhibition(p: &GlvParams, x: &[f64]) -> Vec<f64> {
    let n = p.species();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&k| k != i)
                .map(|k| {
                    let kn = p.inhibition[i * n + k].powf(p.hill);
                    kn / (kn + x[k].powf(p.hill))
                })
                .product()
        })
        .collect()
}

/// Rates of the eight-compartment epidemic model with super-spreaders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovidParams {
    /// Transmission coefficient from infected individuals.
    pub beta_inf: f64,
    /// Relative transmissibility of hospitalized patients.
    pub l: f64,
    /// Transmission coefficient of super-spreaders.
    pub beta_prime: f64,
    /// Rate at which exposed become infectious.
    pub kappa: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub gamma_a: f64,
    pub gamma_i: f64,
    pub gamma_r: f64,
    pub delta_i: f64,
    pub delta_p: f64,
    pub delta_h: f64,
    pub n_pop: f64,
}

impl Default for CovidParams {
    fn default() -> Self {
        Self {
            beta_inf: 2.55,
            l: 1.56,
            beta_prime: 7.65,
            kappa: 0.25,
            rho1: 0.58,
            rho2: 0.001,
            gamma_a: 0.94,
            gamma_i: 0.27,
            gamma_r: 0.5,
            delta_i: 1.0 / 23.0,
            delta_p: 1.0 / 23.0,
            delta_h: 1.0 / 23.0,
            n_pop: 47e6,
        }
    }
}

pub const COVID_PARAM_NAMES: [&str; 13] = [
    "beta", "l", "beta_prime", "kappa", "rho1", "rho2", "gamma_a", "gamma_i", "gamma_r", "delta_i", "delta_p",
    "delta_h", "N",
];

impl CovidParams {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.beta_inf,
            self.l,
            self.beta_prime,
            self.kappa,
            self.rho1,
            self.rho2,
            self.gamma_a,
            self.gamma_i,
            self.gamma_r,
            self.delta_i,
            self.delta_p,
            self.delta_h,
            self.n_pop,
        ]
    }

    pub fn from_slice(p: &[f64]) -> Result<Self> {
        if p.len() != 13 {
            return Err(Error::BadParams(format!("covid needs 13 parameters, got {}", p.len())));
        }
        let c = Self {
            beta_inf: p[0],
            l: p[1],
            beta_prime: p[2],
            kappa: p[3],
            rho1: p[4],
            rho2: p[5],
            gamma_a: p[6],
            gamma_i: p[7],
            gamma_r: p[8],
            delta_i: p[9],
            delta_p: p[10],
            delta_h: p[11],
            n_pop: p[12],
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_vec().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::BadParams("covid parameters must be finite and nonnegative".into()));
        }
        if self.rho1 + self.rho2 > 1.0 {
            return Err(Error::BadParams(format!(
                "rho1 + rho2 = {} exceeds 1",
                self.rho1 + self.rho2
            )));
        }
        if self.n_pop == 0.0 {
            return Err(Error::BadParams("population must be positive".into()));
        }
        Ok(())
    }
}

fn covid_rhs(x: &[f64], c: &CovidParams) -> Vec<f64> {
    let [s, e, i, p, _a, h, _r, _f] = [x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]];
    let force = (c.beta_inf * i + c.l * c.beta_inf * h + c.beta_prime * p) / c.n_pop * s;
    vec![
        -force,
        force - c.kappa * e,
        c.kappa * c.rho1 * e - (c.gamma_a + c.gamma_i) * i - c.delta_i * i,
        c.kappa * c.rho2 * e - (c.gamma_a + c.gamma_i) * p - c.delta_p * p,
        c.kappa * (1.0 - c.rho1 - c.rho2) * e,
        c.gamma_a * (i + p) - c.gamma_r * h - c.delta_h * h,
        c.gamma_i * (i + p) + c.gamma_r * h,
        c.delta_i * i + c.delta_p * p + c.delta_h * h,
    ]
}

fn covid_jacobian(x: &[f64], c: &CovidParams) -> Matrix {
    let (s, i, p, h) = (x[0], x[2], x[3], x[5]);
    let nn = c.n_pop;
    let lambda = (c.beta_inf * i + c.l * c.beta_inf * h + c.beta_prime * p) / nn;
    let mut j = Matrix::zeros(8, 8);
    // S row; the E row mirrors it
    let ds = [(0, -lambda), (2, -c.beta_inf * s / nn), (3, -c.beta_prime * s / nn), (5, -c.l * c.beta_inf * s / nn)];
    for &(col, v) in &ds {
        j[(0, col)] = v;
        j[(1, col)] = -v;
    }
    j[(1, 1)] = -c.kappa;
    j[(2, 1)] = c.kappa * c.rho1;
    j[(2, 2)] = -(c.gamma_a + c.gamma_i + c.delta_i);
    j[(3, 1)] = c.kappa * c.rho2;
    j[(3, 3)] = -(c.gamma_a + c.gamma_i + c.delta_p);
    j[(4, 1)] = c.kappa * (1.0 - c.rho1 - c.rho2);
    j[(5, 2)] = c.gamma_a;
    j[(5, 3)] = c.gamma_a;
    j[(5, 5)] = -(c.gamma_r + c.delta_h);
    j[(6, 2)] = c.gamma_i;
    j[(6, 3)] = c.gamma_i;
    j[(6, 5)] = c.gamma_r;
    j[(7, 2)] = c.delta_i;
    j[(7, 3)] = c.delta_p;
    j[(7, 5)] = c.delta_h;
    j
}

/// Eight-compartment epidemic model `S, E, I, P, A, H, R, F` with
/// super-spreaders. The total `Σ X` is conserved for commensurate orders.
pub fn covid_model(params: CovidParams) -> ModelSpec {
    let rhs = |_t: f64, x: &[f64], p: &Vec<f64>| -> Result<Vec<f64>> { Ok(covid_rhs(x, &CovidParams::from_slice(p)?)) };
    let jac = |_t: f64, x: &[f64], p: &Vec<f64>| -> Result<Matrix> {
        Ok(covid_jacobian(x, &CovidParams::from_slice(p)?))
    };
    let n = params.n_pop;
    ModelSpec {
        name: "covid",
        components: strings(&["S", "E", "I", "P", "A", "H", "R", "F"]),
        param_names: strings(&COVID_PARAM_NAMES),
        default_params: params.to_vec(),
        default_x0: Matrix::row_vector(&[n - 6.0, 0.0, 1.0, 5.0, 0.0, 0.0, 0.0, 0.0]),
        default_beta: vec![0.85; 8],
        default_t_span: (0.0, 120.0),
        default_config: default_config(2, 1e-8),
        order_param: None,
        rhs: Arc::new(rhs),
        jacobian: Some(Arc::new(jac)),
        exact: None,
    }
}

/// Root mean square deviation `√(Σ (ŷ − y)² / n)`.
pub fn rmsd(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 0 });
    }
    let ss: f64 = y.iter().zip(y_hat).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok((ss / y.len() as f64).sqrt())
}
