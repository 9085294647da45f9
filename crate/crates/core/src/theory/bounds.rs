use serde::{Deserialize, Serialize};

use super::block::{t6_constants, t6rip_constants, T6Constants, T6RipConstants};
use super::zero::fpq_zero;
use super::TheoryInput;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewThreshold {
    pub z0: f64,
    pub psi: f64,
    pub t2: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZhuThreshold {
    pub z0: f64,
    pub t1: f64,
    pub delta: f64,
}

/// All guarantee quantities for one input. Bounds whose hypotheses fail, or
/// whose inputs are missing, are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub z0: f64,
    pub psi: f64,
    pub t1: f64,
    pub t2: f64,
    pub delta_new: f64,
    pub delta_zhu: f64,
    pub b_o: Option<f64>,
    pub b_z: Option<f64>,
    pub t6: Option<T6Constants>,
    pub t6rip: Option<T6RipConstants>,
}

fn min_q2(q: f64) -> f64 {
    q.min(2.0)
}

fn psi_of(input: &TheoryInput, z0: f64) -> f64 {
    let (p, q) = (input.params.p(), input.params.q());
    input.beta.powf(p) * (1.0 + z0.powf(p)) + (input.k as f64).powf((q - p) / q)
}

pub fn ric_threshold_new(input: &TheoryInput) -> Result<NewThreshold> {
    let z0 = fpq_zero(input)?.z0;
    let (p, q) = (input.params.p(), input.params.q());
    let psi = psi_of(input, z0);
    let e = 2.0 / min_q2(q) - (2.0 * q + 2.0 - 2.0 * p) / q;
    let t2 = (input.k as f64).powf(e) * psi * psi;
    Ok(NewThreshold {
        z0,
        psi,
        t2,
        delta: 1.0 / (1.0 + t2).sqrt(),
    })
}

pub fn ric_threshold_zhu(input: &TheoryInput) -> Result<ZhuThreshold> {
    let z0 = fpq_zero(input)?.z0;
    let (p, q) = (input.params.p(), input.params.q());
    let k = input.k as f64;
    let e = 2.0 / min_q2(q) - (2.0 - 2.0 * p) / q;
    let inner = input.beta * (1.0 + z0) * k.powf(-1.0 / p) + k.powf(-1.0 / q);
    let t1 = 3f64.powf(2.0 - 2.0 * p) * k.powf(e) * inner.powf(2.0 * p);
    Ok(ZhuThreshold {
        z0,
        t1,
        delta: 1.0 / (1.0 + t1).sqrt(),
    })
}

// both error bounds share this numerator
fn numerator(input: &TheoryInput, psi: f64, delta: f64) -> f64 {
    let (p, q) = (input.params.p(), input.params.q());
    let e = 1.0 / min_q2(q) - (2.0 - p + q) / (2.0 * q);
    2.0 * input.epsilon * (1.0 + delta).sqrt() * (1.0 + (input.k as f64).powf(e) * psi.sqrt())
}

fn bound(input: &TheoryInput, psi: f64, t: f64, threshold: f64, which: &str) -> Result<f64> {
    let delta = input.require("delta_2k", input.delta_2k)?;
    if delta >= threshold {
        return Err(Error::NotApplicable(format!(
            "delta_2k = {delta} is not below the {which} threshold {threshold}"
        )));
    }
    Ok(numerator(input, psi, delta) / (1.0 - delta * (1.0 + t).sqrt()))
}

/// Error bound under the RIC threshold of [`ric_threshold_new`].
pub fn error_bound_new(input: &TheoryInput) -> Result<f64> {
    let th = ric_threshold_new(input)?;
    bound(input, th.psi, th.t2, th.delta, "new")
}

/// Error bound under the RIC threshold of [`ric_threshold_zhu`].
pub fn error_bound_zhu(input: &TheoryInput) -> Result<f64> {
    let new = ric_threshold_new(input)?;
    let zhu = ric_threshold_zhu(input)?;
    bound(input, new.psi, zhu.t1, zhu.delta, "Zhu")
}

fn applicable(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NotApplicable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn bound_report(input: &TheoryInput) -> Result<BoundReport> {
    let new = ric_threshold_new(input)?;
    let zhu = ric_threshold_zhu(input)?;
    let (b_o, b_z) = if input.delta_2k.is_some() {
        (
            applicable(bound(input, new.psi, new.t2, new.delta, "new"))?,
            applicable(bound(input, new.psi, zhu.t1, zhu.delta, "Zhu"))?,
        )
    } else {
        (None, None)
    };
    let t6 = match (input.delta_k, input.theta_kt) {
        (Some(_), Some(_)) => Some(t6_constants(input)?),
        _ => None,
    };
    let t6rip = match (input.delta_k, input.delta_kt) {
        (Some(_), Some(_)) => Some(t6rip_constants(input)?),
        _ => None,
    };
    Ok(BoundReport {
        z0: new.z0,
        psi: new.psi,
        t1: zhu.t1,
        t2: new.t2,
        delta_new: new.delta,
        delta_zhu: zhu.delta,
        b_o,
        b_z,
        t6,
        t6rip,
    })
}
