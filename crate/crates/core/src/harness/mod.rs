//! Monte Carlo recovery experiments: plans, per-trial records, outcome
//! classification, aggregation and result files.

mod output;
mod run;

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::datagen::MatrixSpec;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::norms::{ratio_objective, RatioParams};
use crate::solver::{initializers, solvers, DlpaConfig};

pub use output::{
    read_trial_csv, write_aggregate_json, write_heatmap_csv, write_outputs, write_trial_csv,
    AGGREGATE_FILE, HEATMAP_FILE, HEATMAP_HEADER, TRIAL_FILE, TRIAL_HEADER,
};
pub use run::{
    aggregate, heatmap, run_experiment, trial_seed, CellAggregate, ExperimentResult, HeatmapCell,
};

/// Cap standing in for +∞ dB when the recovery is exact.
pub const SNR_CAP_DB: f64 = 400.0;

/// Environment variable that replaces a plan's base seed.
pub const SEED_ENV: &str = "RATIO_SPARSE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    ModelFailure,
    AlgorithmFailure,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::ModelFailure => "model_failure",
            Outcome::AlgorithmFailure => "algorithm_failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "success" => Some(Outcome::Success),
            "model_failure" => Some(Outcome::ModelFailure),
            "algorithm_failure" => Some(Outcome::AlgorithmFailure),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Signal settings shared by every cell; `n` comes from the matrix and `k`
/// from the sparsity grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalTemplate {
    pub mag_low: f64,
    pub mag_high: f64,
    #[serde(default)]
    pub min_separation: usize,
}

fn default_success_tol() -> f64 {
    1e-3
}

fn default_feas_rel_tol() -> f64 {
    1e-6
}

fn default_time_limit() -> f64 {
    30.0
}

fn default_solver() -> String {
    "dlpa".into()
}

fn default_initializer() -> String {
    "l1-baseline".into()
}

/// A grid of (p, q, k) cells with a fixed number of seeded trials each.
///
/// The (p, q) list is either `param_grid` or the product `p_grid × q_grid`.
/// Instances depend only on `(base_seed, k, trial)`, so every (p, q) sees the
/// same problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub name: String,
    /// The seed field is ignored; each trial draws its own.
    pub matrix: MatrixSpec,
    pub signal: SignalTemplate,
    pub sparsity_grid: Vec<usize>,
    #[serde(default)]
    pub param_grid: Vec<RatioParams>,
    #[serde(default)]
    pub p_grid: Vec<f64>,
    #[serde(default)]
    pub q_grid: Vec<f64>,
    pub trials_per_cell: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_success_tol")]
    pub success_tol: f64,
    /// Feasibility gate of the outcome classes, relative to `1 + ‖b‖₂`.
    #[serde(default = "default_feas_rel_tol")]
    pub feas_rel_tol: f64,
    #[serde(default)]
    pub solver_config: DlpaConfig,
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default = "default_initializer")]
    pub initializer: String,
    /// Wall-clock budget per solve; expiry counts as an algorithm failure.
    #[serde(default = "default_time_limit")]
    pub trial_time_limit_secs: f64,
    /// Store measured times in `wall_ms`. Off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    /// The (p, q) pairs in run order.
    pub fn params(&self) -> Result<Vec<RatioParams>> {
        if !self.param_grid.is_empty() {
            return Ok(self.param_grid.clone());
        }
        let mut out = Vec::with_capacity(self.p_grid.len() * self.q_grid.len());
        for &p in &self.p_grid {
            for &q in &self.q_grid {
                out.push(RatioParams::new(p, q)?);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        self.matrix.validate()?;
        let has_pair_list = !self.param_grid.is_empty();
        let has_product = !self.p_grid.is_empty() || !self.q_grid.is_empty();
        if has_pair_list && has_product {
            return Err(Error::InvalidParameter(
                "give either param_grid or p_grid/q_grid, not both".into(),
            ));
        }
        if self.params()?.is_empty() {
            return Err(Error::InvalidParameter("the (p, q) grid is empty".into()));
        }
        if self.sparsity_grid.is_empty() {
            return Err(Error::InvalidParameter("sparsity_grid is empty".into()));
        }
        if let Some(&k) = self
            .sparsity_grid
            .iter()
            .find(|&&k| k == 0 || k > self.matrix.n)
        {
            return Err(Error::InvalidParameter(format!(
                "sparsity {k} outside 1..={}",
                self.matrix.n
            )));
        }
        if self.trials_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "trials_per_cell must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("success_tol", self.success_tol),
            ("feas_rel_tol", self.feas_rel_tol),
            ("trial_time_limit_secs", self.trial_time_limit_secs),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.signal.mag_low > 0.0 && self.signal.mag_low <= self.signal.mag_high) {
            return Err(Error::InvalidParameter(format!(
                "signal magnitudes need 0 < low <= high, got [{}, {}]",
                self.signal.mag_low, self.signal.mag_high
            )));
        }
        self.solver_config.validate()?;
        solvers().get(&self.solver)?;
        initializers().get(&self.initializer)?;
        Ok(())
    }

    /// Replaces the base seed with `RATIO_SPARSE_SEED` when it is set.
    pub fn apply_seed_override(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.base_seed = v.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!(
                    "{SEED_ENV} must be an unsigned integer, got `{v}`"
                ))
            })?;
        }
        Ok(())
    }
}

/// One solve of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub p: f64,
    pub q: f64,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub rel_error: f64,
    pub snr_db: f64,
    pub alpha_final: f64,
    pub outer_iters: usize,
    pub wall_ms: f64,
    /// Why a trial failed without an estimate (solver error, panic, timeout).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// `20 log10(‖x*‖ / ‖x̂ − x*‖)`, capped at [`SNR_CAP_DB`].
pub fn snr_db(x_hat: &[f64], x_star: &[f64]) -> Result<f64> {
    if x_hat.len() != x_star.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has length {}, truth {}",
            x_hat.len(),
            x_star.len()
        )));
    }
    let norm = x_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Domain("SNR of a zero ground truth".into()));
    }
    let err = x_hat
        .iter()
        .zip(x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if err == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((20.0 * (norm / err).log10()).min(SNR_CAP_DB))
}

pub fn relative_error(x_hat: &[f64], x_star: &[f64]) -> f64 {
    let norm = x_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    let err = x_hat
        .iter()
        .zip(x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    err / norm
}

/// Success when the relative error is below `success_tol`. Otherwise a model
/// failure if the estimate is feasible and has a lower ratio than the truth,
/// else an algorithm failure.
pub fn classify_outcome(
    x_hat: &[f64],
    instance: &ProblemInstance,
    params: RatioParams,
    success_tol: f64,
    feas_tol: f64,
) -> Result<Outcome> {
    let truth = instance.ground_truth().ok_or_else(|| {
        Error::InvalidParameter(format!("instance {} has no ground truth", instance.id()))
    })?;
    if x_hat.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has length {}, truth {}",
            x_hat.len(),
            truth.len()
        )));
    }
    if relative_error(x_hat, truth.as_slice()) < success_tol {
        return Ok(Outcome::Success);
    }
    let xh = DVector::from_column_slice(x_hat);
    if !(instance.residual_norm(&xh) <= feas_tol) {
        return Ok(Outcome::AlgorithmFailure);
    }
    let ours = ratio_objective(x_hat, params).unwrap_or(f64::INFINITY);
    let theirs = ratio_objective(truth.as_slice(), params)?;
    Ok(if ours < theirs {
        Outcome::ModelFailure
    } else {
        Outcome::AlgorithmFailure
    })
}
