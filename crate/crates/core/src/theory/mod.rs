//! Recovery-guarantee calculators.
//!
//! Everything here is a pure function of a [`TheoryInput`] or of a small
//! matrix. Hypotheses that fail are reported through flags or `Option`s on the
//! report types, so a parameter sweep can record where each guarantee applies.

mod block;
mod bounds;
mod gnrc;
mod nullspace;
mod ric;
mod sweep;
mod zero;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::RatioParams;

pub use block::{t6_constants, t6rip_constants, T6Constants, T6RipConstants};
pub use bounds::{
    bound_report, error_bound_new, error_bound_zhu, ric_threshold_new, ric_threshold_zhu,
    BoundReport, NewThreshold, ZhuThreshold,
};
pub use gnrc::{gnrc, local_optimality_mu_threshold, uniform_gnrc_bound, uniform_gnrc_root};
pub use nullspace::{
    check_uniform_recovery_condition, nullspace_ratio_estimate, uniform_recovery_threshold,
    NullspaceEstimate, RecoveryCondition, DEFAULT_RESTARTS,
};
pub use ric::{exact_ric, ENUMERATION_LIMIT};
pub use sweep::{sweep, write_sweep_csv, BetaName, BetaSpec, TheoryGrid, TheoryRow, SWEEP_HEADER};
pub use zero::{fpq, fpq_zero, ZeroPointResult};

/// Parameters of the recovery guarantees.
///
/// `beta` bounds the norm ratio `‖x‖_p / ‖x‖_q` of the signal. The RIC and
/// ROC fields are only needed by the calculators that consume them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryInput {
    pub params: RatioParams,
    pub k: usize,
    /// Block size of the (k, t) guarantees.
    #[serde(default = "one")]
    pub t: usize,
    pub beta: f64,
    #[serde(default)]
    pub delta_2k: Option<f64>,
    #[serde(default)]
    pub delta_k: Option<f64>,
    /// RIC of order k + t.
    #[serde(default)]
    pub delta_kt: Option<f64>,
    /// Restricted orthogonality constant of order (k, t).
    #[serde(default)]
    pub theta_kt: Option<f64>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub n: Option<usize>,
}

fn one() -> usize {
    1
}

/// The largest ratio `‖x‖_p/‖x‖_q` a k-sparse vector can have, `k^{1/p - 1/q}`.
pub fn worst_case_beta(params: RatioParams, k: usize) -> f64 {
    (k as f64).powf(1.0 / params.p() - 1.0 / params.q())
}

impl TheoryInput {
    pub fn new(params: RatioParams, k: usize, beta: f64) -> Result<Self> {
        let input = Self {
            params,
            k,
            t: 1,
            beta,
            delta_2k: None,
            delta_k: None,
            delta_kt: None,
            theta_kt: None,
            epsilon: 0.0,
            n: None,
        };
        input.validate()?;
        Ok(input)
    }

    /// Input with `beta` at the k-sparse worst case.
    pub fn worst_case(params: RatioParams, k: usize) -> Result<Self> {
        Self::new(params, k, worst_case_beta(params, k))
    }

    pub fn with_t(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_delta_2k(mut self, delta: f64) -> Self {
        self.delta_2k = Some(delta);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Sets δ_k, δ_{k+t} and θ_{k,t}.
    pub fn with_block(mut self, delta_k: f64, delta_kt: f64, theta_kt: f64) -> Self {
        self.delta_k = Some(delta_k);
        self.delta_kt = Some(delta_kt);
        self.theta_kt = Some(theta_kt);
        self
    }

    /// Uses δ_{k+t} in place of the (untractable) ROC, which it dominates.
    pub fn with_theta_from_ric(mut self) -> Self {
        self.theta_kt = self.delta_kt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.t == 0 {
            return Err(Error::InvalidParameter("k and t must be at least 1".into()));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        for (name, v) in [
            ("delta_2k", self.delta_2k),
            ("delta_k", self.delta_k),
            ("delta_kt", self.delta_kt),
        ] {
            if let Some(d) = v {
                if !(0.0..1.0).contains(&d) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must lie in [0, 1), got {d}"
                    )));
                }
            }
        }
        if let Some(theta) = self.theta_kt {
            if !(theta >= 0.0) || !theta.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "theta_kt must be >= 0, got {theta}"
                )));
            }
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if let Some(n) = self.n {
            if n < self.k {
                return Err(Error::InvalidParameter(format!(
                    "n = {n} is smaller than k = {}",
                    self.k
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn require(&self, name: &str, v: Option<f64>) -> Result<f64> {
        v.ok_or_else(|| Error::InvalidParameter(format!("{name} is required for this bound")))
    }
}
