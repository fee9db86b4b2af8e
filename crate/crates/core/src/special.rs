//! Gamma and Mittag-Leffler functions.
//!
//! The Mittag-Leffler function `E_β(z) = Σ_k z^k / Γ(βk + 1)` is only used as
//! an exact-solution oracle, so it is evaluated by brute-force summation of
//! its Taylor series in arbitrary precision. For large negative `z` the terms
//! grow to many orders of magnitude above the result before they cancel; in
//! double precision nothing would survive. The reciprocal gamma coefficients
//! depend only on `β`, so they are computed once (Spouge's approximation at
//! twice the working precision) and cached.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

/// Bits of relative size below which a series term no longer matters
/// (`2^-133 ≈ 1e-40`).
const TERM_CUTOFF_BITS: i64 = 133;

/// Γ(x) for real `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma is only defined here for x > 0, got {x}")));
    }
    Ok(libm::tgamma(x))
}

/// Working precision and term cap of the Mittag-Leffler series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MlSeriesConfig {
    pub digits: u32,
    pub max_terms: usize,
}

impl Default for MlSeriesConfig {
    fn default() -> Self {
        Self {
            digits: 200,
            max_terms: 10_000,
        }
    }
}

impl MlSeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.digits < 50 {
            return Err(Error::BadConfig(format!(
                "Mittag-Leffler working precision must be >= 50 digits, got {}",
                self.digits
            )));
        }
        if self.max_terms < 1000 {
            return Err(Error::BadConfig(format!(
                "Mittag-Leffler term cap must be >= 1000, got {}",
                self.max_terms
            )));
        }
        Ok(())
    }

    fn bits(&self) -> usize {
        let bits = (f64::from(self.digits) * std::f64::consts::LOG2_10).ceil() as usize + 64;
        bits.div_ceil(64) * 64
    }
}

/// `E_β(z)` with the default configuration.
///
/// Coefficient tables are shared process-wide per `β`, so repeated calls with
/// the same order are cheap.
pub fn mittag_leffler(beta: f64, z: f64) -> Result<f64> {
    mittag_leffler_with(beta, z, MlSeriesConfig::default())
}

pub fn mittag_leffler_with(beta: f64, z: f64, config: MlSeriesConfig) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, MlSeriesConfig), Arc<MittagLeffler>>>> =
        OnceLock::new();
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("Mittag-Leffler order must be > 0, got {beta}")));
    }
    config.validate()?;
    let evaluator = {
        let mut cache = CACHE
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        Arc::clone(
            cache
                .entry((beta.to_bits(), config))
                .or_insert_with(|| Arc::new(MittagLeffler::new_unchecked(beta, config))),
        )
    };
    evaluator.eval(z)
}

/// Evaluator for `E_β` at a fixed order, caching `1/Γ(βk+1)`.
///
/// Sums run at the cheapest precision tier whose headroom covers the
/// cancellation; the configured precision is the last resort.
pub struct MittagLeffler {
    beta: f64,
    config: MlSeriesConfig,
    tiers: Vec<Tier>,
}

struct Tier {
    bits: usize,
    state: Mutex<MlState>,
}

/// Bits a tier must keep after cancellation before its sum is trusted.
const TIER_HEADROOM_BITS: i64 = 53 + 64;

const TIER_BITS: [usize; 2] = [256, 512];

struct MlState {
    consts: Consts,
    spouge: Option<Spouge>,
    /// `1/Γ(βk + 1)` for `k = 0..coeffs.len()`.
    coeffs: Vec<BigFloat>,
}

enum SeriesOutcome {
    Sum { value: f64, lost_bits: i64 },
    Unsettled,
}

impl std::fmt::Debug for MittagLeffler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MittagLeffler")
            .field("beta", &self.beta)
            .field("config", &self.config)
            .finish()
    }
}

impl MittagLeffler {
    pub fn new(beta: f64, config: MlSeriesConfig) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("Mittag-Leffler order must be > 0, got {beta}")));
        }
        config.validate()?;
        Ok(Self::new_unchecked(beta, config))
    }

    fn new_unchecked(beta: f64, config: MlSeriesConfig) -> Self {
        let top = config.bits();
        let tiers = TIER_BITS
            .iter()
            .copied()
            .filter(|&b| b < top)
            .chain(std::iter::once(top))
            .map(|bits| Tier {
                bits,
                state: Mutex::new(MlState {
                    consts: Consts::new().expect("astro-float constants cache"),
                    spouge: None,
                    coeffs: Vec::new(),
                }),
            })
            .collect();
        Self { beta, config, tiers }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain(format!("Mittag-Leffler argument {z} is not finite")));
        }
        if z == 0.0 {
            return Ok(1.0);
        }
        // the largest term is roughly e^{|z|^{1/β}} while the sum stays O(1)
        let expected_loss = if z < 0.0 {
            z.abs().powf(1.0 / self.beta) * std::f64::consts::LOG2_E
        } else {
            0.0
        };
        let last = self.tiers.len() - 1;
        for (i, tier) in self.tiers.iter().enumerate() {
            let p = tier.bits as i64;
            if i < last && expected_loss + TIER_HEADROOM_BITS as f64 > p as f64 {
                continue;
            }
            match self.sum_series(tier, z)? {
                SeriesOutcome::Sum { value, lost_bits } => {
                    if i < last && p - lost_bits < TIER_HEADROOM_BITS {
                        continue;
                    }
                    if lost_bits > p - 64 {
                        return Err(Error::Convergence(format!(
                            "E_{}({z}) lost all significant digits at {} working digits",
                            self.beta, self.config.digits
                        )));
                    }
                    return Ok(value);
                }
                SeriesOutcome::Unsettled if i < last => continue,
                SeriesOutcome::Unsettled => break,
            }
        }
        Err(Error::Convergence(format!(
            "E_{}({z}) did not settle within {} terms",
            self.beta, self.config.max_terms
        )))
    }

    fn sum_series(&self, tier: &Tier, z: f64) -> Result<SeriesOutcome> {
        let p = tier.bits;
        let mut state = tier.state.lock().unwrap_or_else(|e| e.into_inner());
        let zb = BigFloat::from_f64(z, p);
        let mut zpow = BigFloat::from_f64(1.0, p);
        let mut sum = BigFloat::from_f64(0.0, p);
        let mut max_term_exp = i64::MIN;
        let mut prev_term_exp = i64::MAX;
        let mut quiet = 0;
        for k in 0..self.config.max_terms {
            let coeff = state.coeff(k, self.beta, p)?;
            let term = zpow.mul(&coeff, p, RM);
            sum = sum.add(&term, p, RM);
            let term_exp = exponent_of(&term);
            max_term_exp = max_term_exp.max(term_exp);
            let sum_exp = exponent_of(&sum);
            let negligible = term.is_zero() || term_exp < sum_exp - TERM_CUTOFF_BITS;
            if negligible && term_exp <= prev_term_exp {
                quiet += 1;
                if quiet >= 2 {
                    return Ok(SeriesOutcome::Sum {
                        value: to_f64(&sum),
                        lost_bits: max_term_exp - sum_exp,
                    });
                }
            } else {
                quiet = 0;
            }
            prev_term_exp = term_exp;
            zpow = zpow.mul(&zb, p, RM);
        }
        Ok(SeriesOutcome::Unsettled)
    }
}

impl MlState {
    fn coeff(&mut self, k: usize, beta: f64, p: usize) -> Result<BigFloat> {
        while self.coeffs.len() <= k {
            let j = self.coeffs.len();
            let spouge = self.spouge.get_or_insert_with(|| Spouge::new(p, &mut self.consts));
            let x = BigFloat::from_f64(beta, p)
                .mul(&BigFloat::from_u64(j as u64, p), p, RM)
                .add(&BigFloat::from_f64(1.0, p), p, RM);
            let rg = spouge.recip_gamma(&x, &mut self.consts);
            if rg.is_nan() {
                return Err(Error::Convergence(format!("1/Γ({}) overflowed", beta * j as f64 + 1.0)));
            }
            self.coeffs.push(rg);
        }
        Ok(self.coeffs[k].clone())
    }
}

/// Spouge's approximation
/// `Γ(z+1) = (z+a)^{z+1/2} e^{-(z+a)} [c_0 + Σ_{k=1}^{a-1} c_k / (z+k)]`,
/// with relative error below `a^{-1/2} (2π)^{-(a+1/2)}`.
struct Spouge {
    /// Target precision in bits.
    p: usize,
    /// Internal precision; the coefficients alternate and cancel heavily.
    wp: usize,
    a: usize,
    c: Vec<BigFloat>,
}

impl Spouge {
    fn new(p: usize, cc: &mut Consts) -> Self {
        // (2π)^{-a} < 2^{-p}  ⇔  a > p·ln2/ln(2π)
        let a = (p as f64 * std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI).ln()).ceil() as usize + 2;
        let wp = (2 * p + 128).div_ceil(64) * 64;
        let two_pi = cc.pi(wp, RM).mul(&BigFloat::from_u64(2, wp), wp, RM);
        let mut c = Vec::with_capacity(a);
        c.push(two_pi.sqrt(wp, RM));
        let half = BigFloat::from_f64(0.5, wp);
        let mut factorial = BigFloat::from_u64(1, wp);
        for k in 1..a {
            if k > 1 {
                factorial = factorial.mul(&BigFloat::from_u64((k - 1) as u64, wp), wp, RM);
            }
            let base = BigFloat::from_u64((a - k) as u64, wp);
            let expo = BigFloat::from_u64(k as u64, wp).sub(&half, wp, RM);
            let pw = base.pow(&expo, wp, RM, cc);
            let e = BigFloat::from_u64((a - k) as u64, wp).exp(wp, RM, cc);
            let mut ck = pw.mul(&e, wp, RM).div(&factorial, wp, RM);
            if k % 2 == 0 {
                ck = ck.neg();
            }
            c.push(ck);
        }
        Self { p, wp, a, c }
    }

    /// `1/Γ(x)` for `x ≥ 1`.
    fn recip_gamma(&self, x: &BigFloat, cc: &mut Consts) -> BigFloat {
        let wp = self.wp;
        let one = BigFloat::from_u64(1, wp);
        let z = x.sub(&one, wp, RM);
        let mut series = self.c[0].clone();
        for (k, ck) in self.c.iter().enumerate().skip(1) {
            let denom = z.add(&BigFloat::from_u64(k as u64, wp), wp, RM);
            series = series.add(&ck.div(&denom, wp, RM), wp, RM);
        }
        let za = z.add(&BigFloat::from_u64(self.a as u64, wp), wp, RM);
        let zh = z.add(&BigFloat::from_f64(0.5, wp), wp, RM);
        // log of the prefactor: (z+1/2) ln(z+a) - (z+a)
        let log_pref = zh.mul(&za.ln(wp, RM, cc), wp, RM).sub(&za, wp, RM);
        let inv = log_pref.neg().exp(wp, RM, cc).div(&series, wp, RM);
        let mut out = inv;
        out.set_precision(self.p, RM).ok();
        out
    }
}

fn exponent_of(x: &BigFloat) -> i64 {
    if x.is_zero() {
        i64::MIN / 2
    } else {
        x.exponent().map_or(i64::MIN / 2, i64::from)
    }
}

/// Rounds a big float to the nearest `f64` (via its leading 64-bit word).
fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exp, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let Some(&top) = words.last() else {
        return 0.0;
    };
    // value = 0.top... × 2^exp
    let mut v = top as f64;
    let mut e = exp as i64 - 64;
    while e > 0 {
        let s = e.min(1000);
        v *= 2f64.powi(s as i32);
        e -= s;
    }
    while e < 0 {
        let s = (-e).min(1000);
        v *= 2f64.powi(-(s as i32));
        e += s;
    }
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}
