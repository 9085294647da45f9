//! Ratio minimization solvers and the ℓ1 initializer, selectable by name.

mod admm;
mod baseline;
mod config;
mod dlpa;

use nalgebra::DVector;

pub use admm::{InnerOutcome, InnerPick};
pub use baseline::{l1_baseline_run, l1_baseline_solve, BaselineOutcome};
pub use config::DlpaConfig;
pub use dlpa::{
    dlpa_solve, dlpa_solve_in, linearization_coefficient, InnerState, IterationRecord, SolveResult,
    SolverState, StopReason,
};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
pub use crate::linalg::min_norm_feasible;
use crate::linalg::AffineProjector;
use crate::norms::{ratio_objective, RatioParams};
use crate::prox::penalty_for;
use crate::registry::Registry;

/// Working units put the minimum-norm feasible point at norm
/// `WORK_SCALE·√(m/n)`. For a random sensing matrix that is roughly a signal
/// of norm `WORK_SCALE`. The prox thresholds and penalty schedule were tuned
/// at this scale.
pub const WORK_SCALE: f64 = 24.0;

/// An instance prepared for solving.
///
/// The solvers work on a copy with `b` rescaled (see [`WORK_SCALE`]) so
/// that their step sizes and tolerances do not depend on the units of the
/// signal. The ratio objective is scale invariant and the
/// feasible set scales linearly, so results map back by one multiplication.
#[derive(Debug, Clone)]
pub struct SolveContext<'a> {
    pub original: &'a ProblemInstance,
    /// Normalized copy the solvers iterate on.
    pub instance: ProblemInstance,
    /// Projector onto the normalized feasible set.
    pub projector: AffineProjector,
    /// Original units per normalized unit.
    pub scale: f64,
}

impl<'a> SolveContext<'a> {
    pub fn new(original: &'a ProblemInstance) -> Result<Self> {
        let projector = AffineProjector::new(original)?;
        let target = WORK_SCALE * (original.m() as f64 / original.n() as f64).sqrt();
        let scale = projector.min_norm_point().norm() / target;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!(
                "instance {} has no nonzero least-squares point",
                original.id()
            )));
        }
        let instance = ProblemInstance::new(
            original.a().clone(),
            original.b() / scale,
            original.ground_truth().map(|x| x / scale),
            original.noise_radius() / scale,
            original.id(),
        )?;
        Ok(Self {
            original,
            instance,
            projector: projector.rescaled(1.0 / scale),
            scale,
        })
    }

    /// Feasibility bound in normalized units matching
    /// `rel · (1 + ‖b‖₂)` in original units.
    pub(crate) fn feas_tol(&self, rel: f64) -> f64 {
        self.original.feasibility_tolerance(rel) / self.scale
    }

    pub(crate) fn to_work(&self, x: &DVector<f64>) -> DVector<f64> {
        x / self.scale
    }

    pub(crate) fn to_original(&self, x: &DVector<f64>) -> DVector<f64> {
        x * self.scale
    }
}

/// Approximate minimizer of the linearized proximal subproblem
/// `‖x‖_p^p − ⟨c, x⟩ + (β/2)‖x − x_k‖²` over `Ax = b`, never worse than `x_k`.
pub fn inner_admm_solve(
    instance: &ProblemInstance,
    params: RatioParams,
    x_k: &DVector<f64>,
    c_k: &DVector<f64>,
    config: &DlpaConfig,
) -> Result<InnerOutcome> {
    config.validate()?;
    let n = instance.n();
    if x_k.len() != n || c_k.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "x_k and c_k must have length {n}"
        )));
    }
    if c_k.iter().chain(x_k.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("inner solver input".into()));
    }
    let projector = AffineProjector::new(instance)?;
    let penalty = penalty_for(params.p())?;
    let settings = admm::InnerSettings {
        beta: config.beta_prox,
        rho0: config.rho0,
        rho_growth: config.rho_growth,
        rho_max: config.rho_max,
        balance: false,
        max_iter: config.inner_max,
        tol: config.inner_tol,
        feas_tol: instance.feasibility_tolerance(admm::FEAS_SCALE),
        deadline: None,
    };
    Ok(admm::run_admm(
        instance,
        &projector,
        penalty.as_ref(),
        params.p(),
        x_k,
        c_k,
        &settings,
    ))
}

/// A recovery method selectable at runtime.
pub trait RecoverySolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(
        &self,
        ctx: &SolveContext<'_>,
        params: RatioParams,
        config: &DlpaConfig,
        x0: Option<&DVector<f64>>,
    ) -> Result<SolveResult>;
}

/// Produces a feasible starting point.
pub trait Initializer: Send + Sync {
    fn name(&self) -> &'static str;

    fn initial_point(&self, ctx: &SolveContext<'_>, config: &DlpaConfig) -> Result<DVector<f64>>;
}

#[derive(Debug, Default)]
pub struct Dlpa;

impl RecoverySolver for Dlpa {
    fn name(&self) -> &'static str {
        "dlpa"
    }

    fn solve(
        &self,
        ctx: &SolveContext<'_>,
        params: RatioParams,
        config: &DlpaConfig,
        x0: Option<&DVector<f64>>,
    ) -> Result<SolveResult> {
        dlpa_solve_in(ctx, params, config, x0)
    }
}

/// Plain basis pursuit; `params` only affects the reported ratio.
#[derive(Debug, Default)]
pub struct L1Baseline;

impl RecoverySolver for L1Baseline {
    fn name(&self) -> &'static str {
        "l1-baseline"
    }

    fn solve(
        &self,
        ctx: &SolveContext<'_>,
        params: RatioParams,
        config: &DlpaConfig,
        _x0: Option<&DVector<f64>>,
    ) -> Result<SolveResult> {
        config.validate()?;
        let out = baseline::run_baseline(ctx, config);
        let x = ctx.to_original(if out.converged {
            &out.x
        } else {
            ctx.projector.min_norm_point()
        });
        let alpha = ratio_objective(x.as_slice(), params)?;
        Ok(SolveResult {
            max_residual: ctx.original.residual_norm(&x),
            x_hat: x.as_slice().to_vec(),
            alpha_final: alpha,
            iterations: 1,
            converged: out.converged,
            stop_reason: if out.converged {
                StopReason::StepTol
            } else {
                StopReason::MaxIter
            },
            stationarity_residual: 0.0,
            alpha_trace: vec![alpha],
            history: Vec::new(),
            growth_flag: false,
        })
    }
}

impl Initializer for L1Baseline {
    fn name(&self) -> &'static str {
        "l1-baseline"
    }

    fn initial_point(&self, ctx: &SolveContext<'_>, config: &DlpaConfig) -> Result<DVector<f64>> {
        Ok(ctx.to_original(&baseline::initial_point(ctx, config)))
    }
}

#[derive(Debug, Default)]
pub struct MinNorm;

impl Initializer for MinNorm {
    fn name(&self) -> &'static str {
        "min-norm"
    }

    fn initial_point(&self, ctx: &SolveContext<'_>, _config: &DlpaConfig) -> Result<DVector<f64>> {
        Ok(ctx.to_original(ctx.projector.min_norm_point()))
    }
}

pub fn solvers() -> Registry<dyn RecoverySolver> {
    let mut r: Registry<dyn RecoverySolver> = Registry::new("solver");
    r.register("dlpa", || Box::new(Dlpa) as Box<dyn RecoverySolver>);
    r.register("l1-baseline", || {
        Box::new(L1Baseline) as Box<dyn RecoverySolver>
    });
    r
}

pub fn initializers() -> Registry<dyn Initializer> {
    let mut r: Registry<dyn Initializer> = Registry::new("initializer");
    r.register("l1-baseline", || {
        Box::new(L1Baseline) as Box<dyn Initializer>
    });
    r.register("min-norm", || Box::new(MinNorm) as Box<dyn Initializer>);
    r
}
