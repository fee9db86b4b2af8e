//! Product-integration quadrature weights.
//!
//! With `h` the step and `β` the order, the rectangular rule gives the
//! predictor weights `b_r`, and the trapezoidal rule gives the convolution
//! weights `d_r` together with the separate first-node weight `c_n`. All of
//! them are stated here without the `h^β` factor.

use crate::error::Result;
use crate::matrix::Matrix;
use crate::special::gamma;

/// `b_r = ((r+1)^β − r^β) / Γ(β+1)` for `r = 0..n`.
pub fn predictor_weights(beta: f64, n: usize) -> Result<Vec<f64>> {
    let g = gamma(beta + 1.0)?;
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0f64;
    for r in 0..n {
        let next = ((r + 1) as f64).powf(beta);
        out.push((next - prev) / g);
        prev = next;
    }
    Ok(out)
}

/// `d_0 = 1/Γ(β+2)` and `d_r = ((r−1)^{β+1} − 2r^{β+1} + (r+1)^{β+1}) / Γ(β+2)`.
pub fn corrector_weights(beta: f64, n: usize) -> Result<Vec<f64>> {
    let g = gamma(beta + 2.0)?;
    let p = beta + 1.0;
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    out.push(1.0 / g);
    let (mut lo, mut mid) = (0.0f64, 1.0f64);
    for r in 1..n {
        let hi = ((r + 1) as f64).powf(p);
        out.push((lo - 2.0 * mid + hi) / g);
        lo = mid;
        mid = hi;
    }
    Ok(out)
}

/// `c_n = ((n−1)^{β+1} − n^β (n − β − 1)) / Γ(β+2)`, the weight of `f(X_0)`
/// in the corrector at step `n ≥ 1`.
pub fn first_corrector_weight(beta: f64, n: usize) -> Result<f64> {
    debug_assert!(n >= 1);
    let g = gamma(beta + 2.0)?;
    Ok(first_weight_unscaled(beta, n) / g)
}

fn first_weight_unscaled(beta: f64, n: usize) -> f64 {
    let nf = n as f64;
    (nf - 1.0).powf(beta + 1.0) - nf.powf(beta) * (nf - beta - 1.0)
}

/// `T_{m−1}[X; t0](t) = Σ_k (t − t0)^k / k! · X^{(k)}(t0)` for every component.
pub fn taylor_term(x0: &Matrix, t0: f64, t: f64) -> Vec<f64> {
    let mut out = x0.row(0).to_vec();
    let dt = t - t0;
    let mut factor = 1.0;
    for k in 1..x0.rows() {
        factor *= dt / k as f64;
        for (o, v) in out.iter_mut().zip(x0.row(k)) {
            *o += factor * v;
        }
    }
    out
}

/// Weight tables for every component of a system, precomputed for `N` steps.
#[derive(Debug, Clone)]
pub struct PiWeights {
    /// `b[i][r]`, `r = 0..N`.
    pub b: Vec<Vec<f64>>,
    /// `d[i][r]`, `r = 0..N`.
    pub d: Vec<Vec<f64>>,
    /// `c[i][n]` for `n = 1..=N`; index 0 is unused and holds 0.
    pub c: Vec<Vec<f64>>,
    /// `a0[i] = h^{β_i} d[i][0]`.
    pub a0: Vec<f64>,
    pub h_pow_beta: Vec<f64>,
}

impl PiWeights {
    pub fn new(beta: &[f64], h: f64, n: usize) -> Result<Self> {
        let mut w = Self {
            b: Vec::with_capacity(beta.len()),
            d: Vec::with_capacity(beta.len()),
            c: Vec::with_capacity(beta.len()),
            a0: Vec::with_capacity(beta.len()),
            h_pow_beta: Vec::with_capacity(beta.len()),
        };
        for &bi in beta {
            let b = predictor_weights(bi, n)?;
            let d = corrector_weights(bi, n.max(1))?;
            let g = gamma(bi + 2.0)?;
            let c = std::iter::once(0.0)
                .chain((1..=n).map(|k| first_weight_unscaled(bi, k) / g))
                .collect();
            let hb = h.powf(bi);
            w.a0.push(hb * d[0]);
            w.h_pow_beta.push(hb);
            w.b.push(b);
            w.d.push(d);
            w.c.push(c);
        }
        Ok(w)
    }

    pub fn dim(&self) -> usize {
        self.a0.len()
    }
}
