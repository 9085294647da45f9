use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datagen::stream_rng;
use crate::error::{Error, Result};
use crate::linalg::kernel_basis;
use crate::norms::RatioParams;

pub const DEFAULT_RESTARTS: usize = 64;
const ITERATIONS: usize = 100;
const SEED: u64 = 0x6e75_6c6c;

/// Upper estimate of `inf ‖h‖_p/‖h‖_q` over the nonzero kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullspaceEstimate {
    pub estimate: f64,
    /// True only for a one-dimensional kernel, where the value is exact.
    pub certified: bool,
    pub kernel_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryCondition {
    SatisfiedCertified,
    Violated,
    Inconclusive,
}

fn ratio(h: &DVector<f64>, p: f64, q: f64) -> f64 {
    let inf = h.amax();
    let (mut sp, mut sq) = (0.0, 0.0);
    for v in h.iter() {
        let a = v.abs() / inf;
        if a > 0.0 {
            sp += a.powf(p);
            sq += a.powf(q);
        }
    }
    sp.powf(1.0 / p) / sq.powf(1.0 / q)
}

// gradient of ‖h‖_p/‖h‖_q in h; zero entries get a zero subgradient
fn ratio_gradient(h: &DVector<f64>, p: f64, q: f64) -> DVector<f64> {
    let lp = h.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let lq = h.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q);
    h.map(|v| {
        if v == 0.0 {
            return 0.0;
        }
        let a = v.abs();
        let dp = lp.powf(1.0 - p) * a.powf(p - 1.0);
        let dq = lq.powf(1.0 - q) * a.powf(q - 1.0);
        v.signum() * (dp / lq - lp * dq / (lq * lq))
    })
}

fn local_descent(basis: &DMatrix<f64>, mut w: DVector<f64>, p: f64, q: f64) -> f64 {
    w.normalize_mut();
    let mut h = basis * &w;
    let mut f = ratio(&h, p, q);
    let mut step = 0.1;
    for _ in 0..ITERATIONS {
        let g = basis.transpose() * ratio_gradient(&h, p, q);
        let g = &g - &w * w.dot(&g);
        if !(g.norm() > 0.0) || !g.iter().all(|v| v.is_finite()) {
            break;
        }
        step *= 2.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand = (&w - &g * step).normalize();
            let hc = basis * &cand;
            let fc = ratio(&hc, p, q);
            if fc < f {
                w = cand;
                h = hc;
                f = fc;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    f
}

/// Multi-start projected gradient estimate of the kernel's smallest
/// `‖h‖_p/‖h‖_q`. Every evaluated point is feasible, so the result never
/// underestimates the infimum.
pub fn nullspace_ratio_estimate(
    a: &DMatrix<f64>,
    params: RatioParams,
    restarts: usize,
) -> Result<NullspaceEstimate> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    let basis = kernel_basis(a);
    let d = basis.ncols();
    if d == 0 {
        return Err(Error::Domain("the matrix has a trivial kernel".into()));
    }
    let (p, q) = (params.p(), params.q());
    if d == 1 {
        return Ok(NullspaceEstimate {
            estimate: ratio(&basis.column(0).into_owned(), p, q),
            certified: true,
            kernel_dim: 1,
        });
    }
    let mut rng = stream_rng(SEED, 0);
    let mut best = f64::INFINITY;
    for _ in 0..restarts.max(1) {
        let w = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        best = best.min(local_descent(&basis, w, p, q));
    }
    Ok(NullspaceEstimate {
        estimate: best,
        certified: false,
        kernel_dim: d,
    })
}

/// `3^{1/p} s^{1/p - 1/q}`.
pub fn uniform_recovery_threshold(params: RatioParams, s: usize) -> f64 {
    let (p, q) = (params.p(), params.q());
    3f64.powf(1.0 / p) * (s as f64).powf(1.0 / p - 1.0 / q)
}

/// Compares the kernel estimate with the uniform s-sparse recovery threshold.
pub fn check_uniform_recovery_condition(
    a: &DMatrix<f64>,
    params: RatioParams,
    s: usize,
) -> Result<RecoveryCondition> {
    if s == 0 {
        return Err(Error::InvalidParameter("s must be at least 1".into()));
    }
    let est = nullspace_ratio_estimate(a, params, DEFAULT_RESTARTS)?;
    let threshold = uniform_recovery_threshold(params, s);
    Ok(if est.estimate <= threshold {
        RecoveryCondition::Violated
    } else if est.certified {
        RecoveryCondition::SatisfiedCertified
    } else {
        RecoveryCondition::Inconclusive
    })
}
