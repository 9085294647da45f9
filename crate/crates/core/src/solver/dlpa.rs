//! Prox-linear Dinkelbach method for `min ‖x‖_p^p / ‖x‖_q^p  s.t.  Ax = b`.
//!
//! Each outer step linearizes the denominator `s(x) = ‖x‖_q^p` at the
//! current point, solves the proximal subproblem with the inner ADMM, and
//! resets the Dinkelbach parameter α to the ratio at the new point. A step is
//! accepted only if its gap `Δ_k = α_k s(x⁺) − ‖x⁺‖_p^p` is nonnegative, so the
//! ratio trace never increases; otherwise β is doubled and the step re-solved
//! (adaptive mode) or the step is rejected.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::admm::{run_admm, InnerPick, InnerSettings, FEAS_SCALE};
use super::{baseline, DlpaConfig, SolveContext};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::norms::{lq_norm, ratio_parts, RatioParams};
use crate::prox::{penalty_for, Penalty};

/// Iterates whose norm exceeds this multiple of the initial norm are flagged.
const GROWTH_FLAG: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GapTol,
    StepTol,
    MaxIter,
    TimeLimit,
}

/// One accepted (or rejected) outer step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub alpha: f64,
    pub delta: f64,
    pub step_norm: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub beta: f64,
    pub x_norm: f64,
    pub residual: f64,
    pub rejected: bool,
    pub pick: InnerPick,
}

/// Inner ADMM variables carried between outer iterations.
#[derive(Debug, Clone)]
pub struct InnerState {
    pub y: DVector<f64>,
    pub u: DVector<f64>,
    pub rho: f64,
}

/// Running state of the outer loop.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: DVector<f64>,
    pub alpha: f64,
    pub delta: f64,
    pub k: usize,
    pub beta: f64,
    pub inner: InnerState,
    pub history: Vec<IterationRecord>,
    x_prev: Option<DVector<f64>>,
    initial_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub x_hat: Vec<f64>,
    pub alpha_final: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Residual proxy, measured on the normalized problem.
    pub stationarity_residual: f64,
    /// `α^(0), α^(1), …` including the starting ratio.
    pub alpha_trace: Vec<f64>,
    pub history: Vec<IterationRecord>,
    /// Largest `‖A x − b‖₂` over all reported iterates.
    pub max_residual: f64,
    pub growth_flag: bool,
}

/// `c = α ∇s(x)` with `s(x) = ‖x‖_q^p`, i.e.
/// `α p ‖x‖_q^{p−q} sign(x) ⊙ |x|^{q−1}`; zero coordinates map to zero.
pub fn linearization_coefficient(x: &[f64], alpha: f64, params: RatioParams) -> DVector<f64> {
    let (p, q) = (params.p(), params.q());
    let norm = lq_norm(x, q);
    // ‖x‖_q^{p−q} |x_i|^{q−1} = ‖x‖_q^{p−1} (|x_i|/‖x‖_q)^{q−1}, safe for large entries
    let scale = alpha * p * norm.powf(p - 1.0);
    DVector::from_iterator(
        x.len(),
        x.iter().map(|&v| {
            if v == 0.0 {
                0.0
            } else {
                scale * (v.abs() / norm).powf(q - 1.0) * v.signum()
            }
        }),
    )
}

struct Outer<'a> {
    ctx: &'a SolveContext<'a>,
    params: RatioParams,
    config: &'a DlpaConfig,
    penalty: Box<dyn Penalty>,
    deadline: Option<Instant>,
    feas_tol: f64,
}

enum StepOutcome {
    Continue,
    Stop(StopReason),
}

impl Outer<'_> {
    fn start(&self, x0: DVector<f64>) -> Result<SolverState> {
        let residual = self.ctx.original.residual_norm(&x0);
        let tolerance = self.ctx.original.feasibility_tolerance(1e-8);
        if !(residual <= tolerance) {
            return Err(Error::Infeasible {
                residual,
                tolerance,
            });
        }
        let x0 = self.ctx.to_work(&x0);
        let (num, den) = ratio_parts(x0.as_slice(), self.params);
        let alpha = num / den;
        if !alpha.is_finite() {
            return Err(Error::NonFinite("ratio at the initial point".into()));
        }
        let n = x0.len();
        Ok(SolverState {
            inner: InnerState {
                y: x0.clone(),
                u: DVector::zeros(n),
                rho: self.config.rho0,
            },
            initial_norm: x0.norm(),
            x: x0,
            alpha,
            delta: f64::NAN,
            k: 0,
            beta: self.config.beta_prox,
            history: Vec::new(),
            x_prev: None,
        })
    }

    fn step(&self, state: &mut SolverState) -> Result<StepOutcome> {
        let c = linearization_coefficient(state.x.as_slice(), state.alpha, self.params);
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linearization coefficient".into()));
        }
        let mut inner_iterations = 0;
        let (candidate, delta, inner_converged, rejected, pick) = loop {
            let settings = InnerSettings {
                beta: state.beta,
                rho0: self.config.rho0,
                rho_growth: self.config.rho_growth,
                rho_max: self.config.rho_max,
                balance: false,
                max_iter: self.config.inner_max,
                tol: self.config.inner_tol,
                feas_tol: self.feas_tol,
                deadline: self.deadline,
            };
            let out = run_admm(
                &self.ctx.instance,
                &self.ctx.projector,
                self.penalty.as_ref(),
                self.params.p(),
                &state.x,
                &c,
                &settings,
            );
            inner_iterations += out.iterations;
            state.inner = InnerState {
                y: out.y.clone(),
                u: out.u.clone(),
                rho: out.rho,
            };
            let (num, den) = ratio_parts(out.x.as_slice(), self.params);
            let delta = state.alpha * den - num;
            if !delta.is_finite() {
                return Err(Error::NonFinite("objective at the inner solution".into()));
            }
            let accepted =
                out.pick != InnerPick::Anchor && delta >= 0.0 && num / den <= state.alpha;
            if accepted {
                break (out.x, delta, out.converged, false, out.pick);
            }
            // an anchor pick means ADMM found nothing feasible and better, a
            // larger beta only shrinks the step further
            let can_backtrack = self.config.adaptive_beta
                && out.pick != InnerPick::Anchor
                && state.beta * 2.0 <= self.config.beta_max
                && !out.timed_out;
            if can_backtrack {
                state.beta *= 2.0;
                continue;
            }
            // monotone safeguard: stay put with a zero gap
            log::trace!(
                "step rejected: pick {:?}, delta {delta:e}, beta {:e}",
                out.pick,
                state.beta
            );
            break (state.x.clone(), 0.0, out.converged, true, out.pick);
        };

        let step_norm = (&candidate - &state.x).norm();
        let prev_norm = state.x.norm();
        let (num, den) = ratio_parts(candidate.as_slice(), self.params);
        let residual = self
            .ctx
            .original
            .residual_norm(&self.ctx.to_original(&candidate));
        state.x_prev = Some(std::mem::replace(&mut state.x, candidate));
        state.alpha = if rejected { state.alpha } else { num / den };
        state.delta = delta;
        state.k += 1;
        state.history.push(IterationRecord {
            alpha: state.alpha,
            delta,
            step_norm,
            inner_iterations,
            inner_converged,
            beta: state.beta,
            x_norm: state.x.norm() * self.ctx.scale,
            residual,
            rejected,
            pick,
        });

        if step_norm / prev_norm < self.config.outer_tol {
            return Ok(StepOutcome::Stop(StopReason::StepTol));
        }
        if delta.abs() < self.config.outer_tol {
            return Ok(StepOutcome::Stop(StopReason::GapTol));
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(StepOutcome::Stop(StopReason::TimeLimit));
        }
        Ok(StepOutcome::Continue)
    }

    fn finish(
        &self,
        state: SolverState,
        stop_reason: StopReason,
        alpha0: f64,
        x0_residual: f64,
    ) -> SolveResult {
        let stationarity_residual = match &state.x_prev {
            Some(prev) => {
                let step = (&state.x - prev).norm();
                if step == 0.0 {
                    0.0
                } else {
                    let g1 = linearization_coefficient(state.x.as_slice(), 1.0, self.params);
                    let g0 = linearization_coefficient(prev.as_slice(), 1.0, self.params);
                    let lipschitz = (g1 - g0).norm() / step;
                    (state.beta + state.alpha * lipschitz) * step
                }
            }
            None => 0.0,
        };
        let mut alpha_trace = Vec::with_capacity(state.history.len() + 1);
        alpha_trace.push(alpha0);
        alpha_trace.extend(state.history.iter().map(|r| r.alpha));
        let max_residual = state
            .history
            .iter()
            .map(|r| r.residual)
            .fold(x0_residual, f64::max);
        let growth_flag = state
            .history
            .iter()
            .any(|r| r.x_norm > GROWTH_FLAG * state.initial_norm * self.ctx.scale);
        if growth_flag {
            log::warn!("iterate norm grew by more than {GROWTH_FLAG:e}; iterates may be unbounded");
        }
        SolveResult {
            x_hat: self.ctx.to_original(&state.x).as_slice().to_vec(),
            alpha_final: state.alpha,
            iterations: state.k,
            converged: matches!(stop_reason, StopReason::GapTol | StopReason::StepTol),
            stop_reason,
            stationarity_residual,
            alpha_trace,
            history: state.history,
            max_residual,
            growth_flag,
        }
    }
}

/// Runs the outer loop from `x0`, or from the ℓ1 baseline (falling back to the
/// minimum-norm point) when no start is given.
pub fn dlpa_solve_in(
    ctx: &SolveContext<'_>,
    params: RatioParams,
    config: &DlpaConfig,
    x0: Option<&DVector<f64>>,
) -> Result<SolveResult> {
    config.validate()?;
    let started = Instant::now();
    let deadline = config
        .time_limit_secs
        .map(|s| started + Duration::from_secs_f64(s));
    let instance = ctx.original;
    let outer = Outer {
        ctx,
        params,
        config,
        penalty: penalty_for(params.p())?,
        deadline,
        feas_tol: ctx.feas_tol(FEAS_SCALE),
    };
    let x0 = match x0 {
        Some(x) => {
            if x.len() != instance.n() {
                return Err(Error::DimensionMismatch(format!(
                    "initial point has length {}, expected {}",
                    x.len(),
                    instance.n()
                )));
            }
            x.clone()
        }
        None => ctx.to_original(&baseline::initial_point(ctx, config)),
    };
    let x0_residual = instance.residual_norm(&x0);
    let mut state = outer.start(x0)?;
    let alpha0 = state.alpha;
    let mut stop = StopReason::MaxIter;
    while state.k < config.outer_max {
        if let StepOutcome::Stop(reason) = outer.step(&mut state)? {
            stop = reason;
            break;
        }
    }
    Ok(outer.finish(state, stop, alpha0, x0_residual))
}

/// Convenience wrapper that builds the projector for `instance`.
pub fn dlpa_solve(
    instance: &ProblemInstance,
    params: RatioParams,
    config: &DlpaConfig,
    x0: Option<&DVector<f64>>,
) -> Result<SolveResult> {
    let ctx = SolveContext::new(instance)?;
    dlpa_solve_in(&ctx, params, config, x0)
}
