//! Norm evaluations and the ratio objective.
//!
//! For `0 < p < 1` the "ℓp norm" is only a quasi-norm; every function here
//! works with the p-th power `Σ|x_i|^p` directly, which is what the ratio
//! objective consumes.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this ℓ2 norm a vector is treated as the origin by [`ratio_objective`].
pub const ZERO_VECTOR_FLOOR: f64 = 1e-300;

/// Exponent pair `(p, q)` of the ratio `‖x‖_p^p / ‖x‖_q^p`.
///
/// Valid pairs satisfy `0 < p ≤ 1` and `q > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRatioParams")]
pub struct RatioParams {
    p: f64,
    q: f64,
}

#[derive(Deserialize)]
struct RawRatioParams {
    p: f64,
    q: f64,
}

impl TryFrom<RawRatioParams> for RatioParams {
    type Error = Error;

    fn try_from(raw: RawRatioParams) -> Result<Self> {
        RatioParams::new(raw.p, raw.q)
    }
}

impl RatioParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "numerator exponent p must lie in (0, 1], got {p}"
            )));
        }
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "denominator exponent q must be a finite value > 1, got {q}"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Upper end `n^{1 - p/q}` of the ratio range on `R^n`.
    pub fn ratio_upper_bound(&self, n: usize) -> f64 {
        (n as f64).powf(1.0 - self.p / self.q)
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("entry {i} is {}", x[i]))),
        None => Ok(()),
    }
}

/// `Σ_i |x_i|^p`, the p-th power of the ℓp (quasi-)norm.
pub fn lp_norm_pow(x: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "exponent must be positive, got {p}"
        )));
    }
    check_finite(x)?;
    Ok(lp_norm_pow_unchecked(x, p))
}

pub(crate) fn lp_norm_pow_unchecked(x: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    x.iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs().powf(p))
        .sum()
}

/// `‖x‖_q` for `q ≥ 1`, scaled by the max entry to avoid overflow.
pub(crate) fn lq_norm(x: &[f64], q: f64) -> f64 {
    let scale = linf_norm(x);
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = x
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| (v.abs() / scale).powf(q))
        .sum();
    scale * s.powf(1.0 / q)
}

pub(crate) fn linf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub(crate) fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Numerator and denominator of the ratio at `x`: `(‖x‖_p^p, ‖x‖_q^p)`.
pub(crate) fn ratio_parts(x: &[f64], params: RatioParams) -> (f64, f64) {
    let num = lp_norm_pow_unchecked(x, params.p);
    let den = lq_norm(x, params.q).powf(params.p);
    (num, den)
}

/// The scale-invariant objective `‖x‖_p^p / ‖x‖_q^p`.
///
/// Values lie in `[1, n^{1-p/q}]` for every nonzero `x`.
pub fn ratio_objective(x: &[f64], params: RatioParams) -> Result<f64> {
    check_finite(x)?;
    if l2_norm(x) < ZERO_VECTOR_FLOOR {
        return Err(Error::Domain(
            "ratio objective is undefined at the zero vector".into(),
        ));
    }
    let (num, den) = ratio_parts(x, params);
    Ok(num / den)
}

/// Splits `x` into its `k` largest-magnitude entries and the remainder.
///
/// Ties in magnitude go to the lowest index. `head + tail == x` holds
/// entrywise and exactly, since each entry lands in exactly one part.
pub fn best_k_split(x: &[f64], k: usize) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "split size k must lie in [1, {n}], got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps lower indices first among equal magnitudes
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    let mut head = DVector::zeros(n);
    let mut tail = DVector::from_column_slice(x);
    for &i in &order[..k] {
        head[i] = x[i];
        tail[i] = 0.0;
    }
    Ok((head, tail))
}
