//! History convolution sums `Y_q = Σ_j w_{q−j} s_j`.
//!
//! Two evaluation strategies share one interface:
//!
//! * [`ConvMode::Direct`] sums every term, `O(n²)` over a whole solve.
//! * [`ConvMode::FftPartitioned`] splits the history into power-of-two
//!   blocks. The first `r` targets are summed directly. Whenever the source
//!   count reaches a multiple `e` of `r`, the block `(e − L, e]` is convolved
//!   in the frequency domain against the targets `(e, e + L]`, where
//!   `L = r · 2^v` and `2^v` is the largest power of two dividing `e / r`.
//!   This reproduces the doubling schedule `Y_1^r`, `Y_1^{2r}`,
//!   `Y_{2r}^{3r}`, `Y_1^{4r}`, … and leaves fewer than `r` trailing terms
//!   per target to be summed directly, for `O(n log² n)` total work.
//!
//! Weight tables are per dimension: a slice of `M` kernels, or a single
//! kernel shared by every dimension.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Blocks at least this long are transformed dimension-parallel.
#[cfg(feature = "parallel")]
const PARALLEL_BLOCK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConvMode {
    Direct,
    FftPartitioned,
}

impl std::str::FromStr for ConvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" | "fft" => Ok(ConvMode::FftPartitioned),
            "off" | "direct" => Ok(ConvMode::Direct),
            other => Err(Error::Parse(format!("unknown convolution mode `{other}`"))),
        }
    }
}

/// Scalar work done by a plan, for scaling checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounter {
    /// Multiply-adds in direct sums.
    pub direct_madds: u64,
    /// `S·log2(S)` per transform of length `S`, plus `S` per spectrum product.
    pub fft_ops: u64,
    pub transforms: u64,
}

impl WorkCounter {
    pub fn total(&self) -> u64 {
        self.direct_madds + self.fft_ops
    }
}

/// Evaluation strategy plus the FFT planner shared by the streams of one
/// solve.
pub struct ConvPlan {
    mode: ConvMode,
    base_block: usize,
    max_transform_len: usize,
    planner: FftPlanner<f64>,
    work: WorkCounter,
}

impl fmt::Debug for ConvPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvPlan")
            .field("mode", &self.mode)
            .field("base_block", &self.base_block)
            .field("max_transform_len", &self.max_transform_len)
            .field("work", &self.work)
            .finish()
    }
}

impl Default for ConvPlan {
    fn default() -> Self {
        Self::new(ConvMode::FftPartitioned)
    }
}

impl ConvPlan {
    pub fn new(mode: ConvMode) -> Self {
        Self {
            mode,
            base_block: 16,
            max_transform_len: 1 << 26,
            planner: FftPlanner::new(),
            work: WorkCounter::default(),
        }
    }

    pub fn direct() -> Self {
        Self::new(ConvMode::Direct)
    }

    pub fn with_base_block(mut self, r: usize) -> Result<Self> {
        if r < 2 || !r.is_power_of_two() {
            return Err(Error::BadConfig(format!("base block {r} must be a power of two >= 2")));
        }
        self.base_block = r;
        Ok(self)
    }

    pub fn with_max_transform_len(mut self, len: usize) -> Self {
        self.max_transform_len = len;
        self
    }

    pub fn mode(&self) -> ConvMode {
        self.mode
    }

    pub fn base_block(&self) -> usize {
        self.base_block
    }

    pub fn work(&self) -> WorkCounter {
        self.work
    }

    pub fn reset_work(&mut self) {
        self.work = WorkCounter::default();
    }

    fn transforms(&mut self, len: usize) -> Result<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)> {
        if len > self.max_transform_len {
            return Err(Error::Plan {
                len,
                max: self.max_transform_len,
            });
        }
        Ok((
            self.planner.plan_fft_forward(len),
            self.planner.plan_fft_inverse(len),
        ))
    }

    fn count_transform(&mut self, len: usize, count: u64) {
        let lg = len.trailing_zeros() as u64;
        self.work.fft_ops += count * (len as u64 * lg.max(1));
        self.work.transforms += count;
    }

    /// Contribution of one block of sources to a range of targets through a
    /// single zero-padded transform.
    ///
    /// Row `k` of `f_block` is source `block.0 + k`. The result has one row
    /// per target `q` in `targets` holding `Σ_{j ∈ block} w[q − j] s_j`, with
    /// negative lags contributing nothing.
    pub fn fft_block_contribution(
        &mut self,
        weights: &[Vec<f64>],
        f_block: &Matrix,
        block: (usize, usize),
        targets: (usize, usize),
    ) -> Result<Matrix> {
        let (a, b) = block;
        let (c, d) = targets;
        if a > b || c > d {
            return Err(Error::Index(format!("empty range {block:?} or {targets:?}")));
        }
        let ls = b - a + 1;
        if f_block.rows() != ls {
            return Err(Error::Index(format!(
                "block {block:?} needs {ls} rows, got {}",
                f_block.rows()
            )));
        }
        let m = f_block.cols();
        check_weights(weights, m)?;
        // lags run from c − b to d − a; the kernel slice starts at c − b
        let lk = (d - c) + ls;
        let size = lk.next_power_of_two().max(2);
        let (fwd, inv) = self.transforms(size)?;
        let offset = c as isize - b as isize;
        let mut out = Matrix::zeros(d - c + 1, m);
        for i in 0..m {
            let w = kernel(weights, i);
            let mut kern: Vec<Complex<f64>> = (0..size)
                .map(|k| {
                    let lag = offset + k as isize;
                    let v = if k < lk && lag >= 0 {
                        w.get(lag as usize).copied().unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    Complex::new(v, 0.0)
                })
                .collect();
            fwd.process(&mut kern);
            let mut src: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); size];
            for k in 0..ls {
                src[k].re = f_block[(k, i)];
            }
            fwd.process(&mut src);
            for (s, k) in src.iter_mut().zip(&kern) {
                *s *= k;
            }
            inv.process(&mut src);
            let scale = 1.0 / size as f64;
            for (row, q) in (c..=d).enumerate() {
                // Y_q sits at output index (q − c) + (b − a)
                out[(row, i)] = src[q - c + ls - 1].re * scale;
            }
        }
        self.count_transform(size, 3 * m as u64);
        self.work.fft_ops += (size * m) as u64;
        Ok(out)
    }
}

fn kernel(weights: &[Vec<f64>], i: usize) -> &[f64] {
    if weights.len() == 1 {
        &weights[0]
    } else {
        &weights[i]
    }
}

fn check_weights(weights: &[Vec<f64>], m: usize) -> Result<()> {
    if weights.len() == 1 || weights.len() == m {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: m,
            got: weights.len(),
        })
    }
}

/// `Σ_{j=lo}^{hi} w[n − j] f_history[j]` for every component.
pub fn direct_history_sum(
    weights: &[Vec<f64>],
    f_history: &Matrix,
    n: usize,
    lo: usize,
    hi: usize,
) -> Result<Vec<f64>> {
    if lo > hi || hi > n {
        return Err(Error::Index(format!("window [{lo}, {hi}] invalid for n = {n}")));
    }
    if hi >= f_history.rows() {
        return Err(Error::Index(format!(
            "history has {} rows, window needs row {hi}",
            f_history.rows()
        )));
    }
    let m = f_history.cols();
    check_weights(weights, m)?;
    let mut out = vec![0.0; m];
    for (i, o) in out.iter_mut().enumerate() {
        let w = kernel(weights, i);
        if n - lo >= w.len() {
            return Err(Error::Index(format!(
                "lag {} outside weight table of length {}",
                n - lo,
                w.len()
            )));
        }
        let mut s = 0.0;
        for j in lo..=hi {
            s += w[n - j] * f_history[(j, i)];
        }
        *o = s;
    }
    Ok(out)
}

/// `Σ_{j=lo}^{hi} w[n − j] f_history[j]`, evaluated with the plan's strategy.
///
/// In FFT mode the sources are streamed through a [`HistoryConv`], so the
/// result is exactly what a solver would see at that step.
pub fn history_sum(
    plan: &mut ConvPlan,
    weights: &[Vec<f64>],
    f_history: &Matrix,
    n: usize,
    lo: usize,
    hi: usize,
) -> Result<Vec<f64>> {
    if lo > hi || hi > n || hi >= f_history.rows() {
        return Err(Error::Index(format!("window [{lo}, {hi}] invalid for n = {n}")));
    }
    let m = f_history.cols();
    // source k ↔ history row lo − 1 + k, target q = n − lo + 1
    let q = n - lo + 1;
    let upto = hi - lo + 1;
    let mut conv = HistoryConv::new(plan, weights, m, q)?;
    for j in lo..=hi {
        conv.push(plan, f_history.row(j))?;
    }
    let mut out = vec![0.0; m];
    conv.sum(plan, q, upto, &mut out)?;
    Ok(out)
}

/// Streaming convolution `Y_q = Σ_{j=1}^{upto} w[q − j] s_j` over sources
/// appended one at a time.
///
/// Sources are 1-based. In FFT mode, completed blocks are pushed into an
/// accumulator indexed by target as soon as they close, so a query only has
/// to add the short direct tail.
pub struct HistoryConv<'w> {
    weights: &'w [Vec<f64>],
    mode: ConvMode,
    r: usize,
    m: usize,
    max_target: usize,
    /// Source `j` occupies `sources[(j−1)·m .. j·m]`.
    sources: Vec<f64>,
    /// `acc[q·m + i]`: block contributions already folded in for target `q`.
    acc: Vec<f64>,
    /// Kernel spectra keyed by (dimension, block length).
    spectra: HashMap<(usize, usize), Arc<Vec<Complex<f64>>>>,
}

impl<'w> HistoryConv<'w> {
    /// A stream for targets up to `max_target`.
    pub fn new(plan: &ConvPlan, weights: &'w [Vec<f64>], m: usize, max_target: usize) -> Result<Self> {
        check_weights(weights, m)?;
        for i in 0..m {
            if kernel(weights, i).len() < max_target {
                return Err(Error::Index(format!(
                    "weight table of length {} cannot reach target {max_target}",
                    kernel(weights, i).len()
                )));
            }
        }
        let acc = match plan.mode {
            ConvMode::Direct => Vec::new(),
            ConvMode::FftPartitioned => vec![0.0; (max_target + 1) * m],
        };
        Ok(Self {
            weights,
            mode: plan.mode,
            r: plan.base_block,
            m,
            max_target,
            sources: Vec::with_capacity((max_target + 1) * m),
            acc,
            spectra: HashMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.sources.len() / self.m.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Appends the next source and closes any block that ends with it.
    pub fn push(&mut self, plan: &mut ConvPlan, source: &[f64]) -> Result<()> {
        if source.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: source.len(),
            });
        }
        self.sources.extend_from_slice(source);
        let e = self.len();
        if self.mode == ConvMode::FftPartitioned && e % self.r == 0 && e < self.max_target {
            let k = e / self.r;
            let block = self.r << k.trailing_zeros();
            self.close_block(plan, e, block)?;
        }
        Ok(())
    }

    /// Sources `(e − len, e]` against targets `(e, e + len]`.
    fn close_block(&mut self, plan: &mut ConvPlan, e: usize, len: usize) -> Result<()> {
        let size = 2 * len;
        let (fwd, inv) = plan.transforms(size)?;
        let last_target = (e + len).min(self.max_target);
        let m = self.m;
        let mut missing = Vec::new();
        for i in 0..m {
            if !self.spectra.contains_key(&(i, len)) {
                missing.push(i);
            }
        }
        for i in missing {
            let w = kernel(self.weights, i);
            let mut kern: Vec<Complex<f64>> = (0..size)
                .map(|k| Complex::new(w.get(k).copied().unwrap_or(0.0), 0.0))
                .collect();
            fwd.process(&mut kern);
            plan.count_transform(size, 1);
            self.spectra.insert((i, len), Arc::new(kern));
        }

        let start = e - len;
        let sources = &self.sources;
        let spectra = &self.spectra;
        let one_dim = |i: usize| -> Vec<f64> {
            let mut buf = vec![Complex::new(0.0, 0.0); size];
            for (k, slot) in buf.iter_mut().take(len).enumerate() {
                slot.re = sources[(start + k) * m + i];
            }
            fwd.process(&mut buf);
            for (s, k) in buf.iter_mut().zip(spectra[&(i, len)].iter()) {
                *s *= k;
            }
            inv.process(&mut buf);
            let scale = 1.0 / size as f64;
            // target e + t (t = 1..=len) sits at output index len − 1 + t
            (1..=last_target - e).map(|t| buf[len - 1 + t].re * scale).collect()
        };

        #[cfg(feature = "parallel")]
        let parts: Vec<Vec<f64>> = if len >= PARALLEL_BLOCK && m > 1 {
            use rayon::prelude::*;
            (0..m).into_par_iter().map(one_dim).collect()
        } else {
            (0..m).map(one_dim).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<Vec<f64>> = (0..m).map(one_dim).collect();

        for (i, part) in parts.iter().enumerate() {
            for (t, v) in part.iter().enumerate() {
                self.acc[(e + 1 + t) * m + i] += v;
            }
        }
        plan.count_transform(size, 2 * m as u64);
        plan.work.fft_ops += (size * m) as u64;
        Ok(())
    }

    /// Writes `Σ_{j=1}^{upto} w[q − j] s_j` into `out`.
    pub fn sum(&self, plan: &mut ConvPlan, q: usize, upto: usize, out: &mut [f64]) -> Result<()> {
        if q == 0 || q > self.max_target || upto > q || upto > self.len() {
            return Err(Error::Index(format!(
                "target {q} up to source {upto} unavailable ({} sources, max target {})",
                self.len(),
                self.max_target
            )));
        }
        let m = self.m;
        let first = match self.mode {
            ConvMode::Direct => {
                out.iter_mut().for_each(|o| *o = 0.0);
                1
            }
            ConvMode::FftPartitioned => {
                let covered = (q - 1) / self.r * self.r;
                if upto < covered {
                    return Err(Error::Index(format!(
                        "target {q} needs sources through {covered}, only {upto} requested"
                    )));
                }
                out.copy_from_slice(&self.acc[q * m..(q + 1) * m]);
                covered + 1
            }
        };
        for (i, o) in out.iter_mut().enumerate() {
            let w = kernel(self.weights, i);
            let mut s = 0.0;
            for j in first..=upto {
                s += w[q - j] * self.sources[(j - 1) * m + i];
            }
            *o += s;
        }
        if upto >= first {
            plan.work.direct_madds += ((upto + 1 - first) * m) as u64;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column(values: &[f64]) -> Matrix {
        Matrix::from_vec(values.len(), 1, values.to_vec())
    }

    fn random_history(rng: &mut ChaCha8Rng, rows: usize, m: usize) -> Matrix {
        Matrix::from_vec(rows, m, (0..rows * m).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn random_weights(rng: &mut ChaCha8Rng, len: usize, m: usize) -> Vec<Vec<f64>> {
        (0..m).map(|_| (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn direct_examples() {
        let f = column(&[0.0, 2.0, 3.0, 4.0]);
        assert_eq!(direct_history_sum(&[vec![1.0; 3]], &f, 3, 1, 3).unwrap(), vec![9.0]);
        let f = column(&[0.0, 1.0, 1.0, 1.0]);
        assert_eq!(direct_history_sum(&[vec![3.0, 2.0, 1.0]], &f, 3, 1, 3).unwrap(), vec![6.0]);
        let zeros = Matrix::zeros(5, 2);
        assert_eq!(
            direct_history_sum(&[vec![0.5, 0.3, 0.2, 0.1, 0.1]], &zeros, 4, 0, 4).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn direct_window_errors() {
        let f = column(&[1.0, 1.0, 1.0]);
        let w = [vec![1.0; 3]];
        assert!(matches!(direct_history_sum(&w, &f, 2, 2, 1), Err(Error::Index(_))));
        assert!(matches!(direct_history_sum(&w, &f, 2, 0, 3), Err(Error::Index(_))));
        assert!(matches!(direct_history_sum(&w, &f, 5, 0, 2), Err(Error::Index(_))));
    }

    #[test]
    fn block_of_zeros_gives_zeros() {
        let mut plan = ConvPlan::default();
        let out = plan
            .fft_block_contribution(&[vec![1.0; 64]], &Matrix::zeros(16, 2), (1, 16), (17, 32))
            .unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delta_kernel_copies_the_block() {
        let mut plan = ConvPlan::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let block = random_history(&mut rng, 16, 3);
        let mut w = vec![0.0; 64];
        w[0] = 1.0;
        let out = plan.fft_block_contribution(&[w], &block, (5, 20), (5, 20)).unwrap();
        for (a, b) in out.as_slice().iter().zip(block.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn block_matches_direct() {
        let mut plan = ConvPlan::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(a, len, c, tlen) in &[(1usize, 16usize, 17usize, 16usize), (33, 16, 49, 16), (1, 32, 33, 32), (3, 5, 9, 11)] {
            let m = 2;
            let history = random_history(&mut rng, c + tlen + 1, m);
            let weights = random_weights(&mut rng, c + tlen + 1, m);
            let block = Matrix::from_rows(&(a..a + len).map(|j| history.row(j).to_vec()).collect::<Vec<_>>());
            let out = plan
                .fft_block_contribution(&weights, &block, (a, a + len - 1), (c, c + tlen - 1))
                .unwrap();
            for (row, q) in (c..c + tlen).enumerate() {
                let d = direct_history_sum(&weights, &history, q, a, a + len - 1).unwrap();
                for i in 0..m {
                    assert!((out[(row, i)] - d[i]).abs() <= 1e-13, "q={q} i={i}");
                }
            }
        }
    }

    #[test]
    fn block_respects_plan_limit() {
        let mut plan = ConvPlan::default().with_max_transform_len(32);
        let r = plan.fft_block_contribution(&[vec![1.0; 128]], &Matrix::zeros(32, 1), (1, 32), (33, 64));
        assert!(matches!(r, Err(Error::Plan { len: 64, max: 32 })));
    }

    #[test]
    fn short_histories_are_bitwise_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let history = random_history(&mut rng, 20, 3);
        let weights = random_weights(&mut rng, 20, 3);
        for n in 1..=16 {
            let mut fft = ConvPlan::default();
            let mut direct = ConvPlan::direct();
            let a = history_sum(&mut fft, &weights, &history, n, 1, n).unwrap();
            let b = history_sum(&mut direct, &weights, &history, n, 1, n).unwrap();
            let c = direct_history_sum(&weights, &history, n, 1, n).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn history_sum_matches_direct_at_40() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let history = random_history(&mut rng, 41, 2);
        let weights = random_weights(&mut rng, 41, 2);
        let mut plan = ConvPlan::default();
        // predictor-style window 0..n−1 with lag n−1−j
        let a = history_sum(&mut plan, &weights, &history, 39, 0, 39).unwrap();
        let b = direct_history_sum(&weights, &history, 39, 0, 39).unwrap();
        // corrector-style window 1..n−1 with lag n−j
        let c = history_sum(&mut plan, &weights, &history, 40, 1, 39).unwrap();
        let d = direct_history_sum(&weights, &history, 40, 1, 39).unwrap();
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() < 1e-12);
            assert!((c[i] - d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn streaming_matches_direct_for_every_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 700;
        let m = 3;
        let history = random_history(&mut rng, n + 1, m);
        let weights = random_weights(&mut rng, n + 1, m);
        let mut plan = ConvPlan::default().with_base_block(4).unwrap();
        let mut conv = HistoryConv::new(&plan, &weights, m, n).unwrap();
        let mut out = vec![0.0; m];
        for q in 1..=n {
            conv.push(&mut plan, history.row(q)).unwrap();
            // sources 1..q known; query both the full and the q−1 window
            conv.sum(&mut plan, q, q, &mut out).unwrap();
            let d = direct_history_sum(&weights, &history, q, 1, q).unwrap();
            let scale = d.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            for i in 0..m {
                assert!((out[i] - d[i]).abs() <= 1e-12 * scale, "q={q}");
            }
            if q > 1 {
                conv.sum(&mut plan, q, q - 1, &mut out).unwrap();
                let d = direct_history_sum(&weights, &history, q, 1, q - 1).unwrap();
                for i in 0..m {
                    assert!((out[i] - d[i]).abs() <= 1e-12 * scale, "q={q}");
                }
            }
        }
    }

    #[test]
    fn repeated_evaluation_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let history = random_history(&mut rng, 300, 2);
        let weights = random_weights(&mut rng, 300, 2);
        let a = history_sum(&mut ConvPlan::default(), &weights, &history, 299, 1, 299).unwrap();
        let b = history_sum(&mut ConvPlan::default(), &weights, &history, 299, 1, 299).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn base_block_must_be_power_of_two() {
        assert!(ConvPlan::default().with_base_block(12).is_err());
        assert!(ConvPlan::default().with_base_block(1).is_err());
        assert_eq!(ConvPlan::default().with_base_block(32).unwrap().base_block(), 32);
    }

    #[test]
    fn sum_rejects_unavailable_sources() {
        let w = [vec![1.0; 10]];
        let mut plan = ConvPlan::default();
        let mut conv = HistoryConv::new(&plan, &w, 1, 8).unwrap();
        conv.push(&mut plan, &[1.0]).unwrap();
        let mut out = [0.0];
        assert!(conv.sum(&mut plan, 3, 2, &mut out).is_err());
        assert!(conv.sum(&mut plan, 9, 1, &mut out).is_err());
        assert!(conv.push(&mut plan, &[1.0, 2.0]).is_err());
    }
}
