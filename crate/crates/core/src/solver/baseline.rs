//! ℓ1 basis pursuit `min ‖x‖₁ s.t. Ax = b` on the inner ADMM with `c = 0`,
//! `β = 0` and soft thresholding. Used to initialize the ratio solver.

use nalgebra::DVector;

use super::admm::{run_admm, InnerSettings, FEAS_SCALE};
use super::{DlpaConfig, SolveContext};
use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::prox::L1Penalty;

/// Outcome of the baseline, including whether the ADMM converged.
#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn run_baseline(ctx: &SolveContext<'_>, config: &DlpaConfig) -> BaselineOutcome {
    let instance = &ctx.instance;
    let start = ctx.projector.min_norm_point().clone();
    let zero = DVector::zeros(instance.n());
    // basis pursuit is scale equivariant: iterating at norm `w` with ρ/w and
    // tolerances times `w` is the unit-norm run scaled by `w`
    let w = start.norm();
    let settings = InnerSettings {
        beta: 0.0,
        rho0: config.rho0 / w,
        rho_growth: config.rho_growth,
        rho_max: config.rho_max / w,
        balance: true,
        max_iter: config.baseline_max,
        tol: config.baseline_tol * w,
        feas_tol: ctx.feas_tol(FEAS_SCALE),
        deadline: None,
    };
    let out = run_admm(
        instance,
        &ctx.projector,
        &L1Penalty,
        1.0,
        &start,
        &zero,
        &settings,
    );
    BaselineOutcome {
        x: out.x,
        iterations: out.iterations,
        converged: out.converged,
    }
}

/// Baseline output, or the minimum-norm point when the ADMM did not converge,
/// in normalized units.
pub(crate) fn initial_point(ctx: &SolveContext<'_>, config: &DlpaConfig) -> DVector<f64> {
    let out = run_baseline(ctx, config);
    if out.converged {
        out.x
    } else {
        log::debug!(
            "l1 baseline did not converge in {} iterations; using the minimum-norm point",
            out.iterations
        );
        ctx.projector.min_norm_point().clone()
    }
}

/// Raw baseline run in original units, without the fallback.
pub fn l1_baseline_run(instance: &ProblemInstance, config: &DlpaConfig) -> Result<BaselineOutcome> {
    config.validate()?;
    let ctx = SolveContext::new(instance)?;
    let mut out = run_baseline(&ctx, config);
    out.x = ctx.to_original(&out.x);
    Ok(out)
}

/// Approximate basis-pursuit solution of `instance`.
pub fn l1_baseline_solve(instance: &ProblemInstance, config: &DlpaConfig) -> Result<DVector<f64>> {
    config.validate()?;
    let ctx = SolveContext::new(instance)?;
    Ok(ctx.to_original(&initial_point(&ctx, config)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_matrix, MatrixSpec};
    use nalgebra::DMatrix;

    #[test]
    fn identity_returns_b() {
        let b = DVector::from_vec(vec![3.0, -1.0, 0.25]);
        let inst =
            ProblemInstance::new(DMatrix::identity(3, 3), b.clone(), None, 0.0, "eye").unwrap();
        let x = l1_baseline_solve(&inst, &DlpaConfig::default()).unwrap();
        assert!((x - b).norm() < 1e-9);
    }

    #[test]
    fn segment_has_unit_l1_objective() {
        let inst = ProblemInstance::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_element(1, 2.0),
            None,
            0.0,
            "seg",
        )
        .unwrap();
        let x = l1_baseline_solve(&inst, &DlpaConfig::default()).unwrap();
        assert!((x.abs().sum() - 2.0).abs() < 1e-6, "{x}");
        assert!((x.sum() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn planted_one_sparse_is_exact() {
        let a = gen_matrix(&MatrixSpec::gaussian(8, 16, 0.0, 3)).unwrap();
        let mut x_star = DVector::zeros(16);
        x_star[9] = -4.0;
        let b = &a * &x_star;
        let inst = ProblemInstance::new(a, b, None, 0.0, "bp").unwrap();
        let x = l1_baseline_solve(&inst, &DlpaConfig::default()).unwrap();
        assert!((x - &x_star).norm() / x_star.norm() < 1e-4);
    }

    #[test]
    fn objective_close_to_reference_run() {
        let a = gen_matrix(&MatrixSpec::gaussian(10, 30, 0.5, 8)).unwrap();
        let x_star = DVector::from_fn(30, |i, _| if i % 6 == 1 { (i as f64).sqrt() } else { 0.0 });
        let b = &a * &x_star;
        let inst = ProblemInstance::new(a, b, None, 0.0, "ref").unwrap();
        let cfg = DlpaConfig::default();
        let reference = DlpaConfig {
            baseline_max: 200_000,
            baseline_tol: 1e-10,
            ..cfg.clone()
        };
        let out = l1_baseline_run(&inst, &cfg).unwrap();
        let refx = l1_baseline_run(&inst, &reference).unwrap();
        assert!(
            out.converged && refx.converged,
            "{} {} / {} {}",
            out.converged,
            out.iterations,
            refx.converged,
            refx.iterations
        );
        let (f, f_ref) = (out.x.abs().sum(), refx.x.abs().sum());
        assert!((f - f_ref).abs() <= 1e-4 * f_ref, "{f} vs {f_ref}");
        assert!(inst.residual_norm(&out.x) <= 1e-8 * (1.0 + inst.b().norm()));
    }
}
