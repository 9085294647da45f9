//! Inner ADMM for the linearized proximal subproblem
//!
//! ```text
//! min_x  ‖x‖_p^p − ⟨c, x⟩ + (β/2)‖x − x_k‖²   s.t.  A x = b
//! ```
//!
//! split as `x = y` with the ℓp term on `y` and the affine constraint,
//! linear and proximal terms on `x`. The x-update is an orthogonal affine
//! projection, the y-update a separable proximal map, and the multiplier
//! takes a plain ascent step. ρ grows geometrically up to a cap.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::instance::ProblemInstance;
use crate::linalg::{support_least_squares, AffineProjector};
use crate::norms::lp_norm_pow_unchecked;
use crate::prox::Penalty;

/// Candidate points must satisfy `‖Ax − b‖ ≤ FEAS_SCALE · (1 + ‖b‖)` in the
/// caller's units.
pub(crate) const FEAS_SCALE: f64 = 1e-9;

const BALANCE_EVERY: usize = 20;

#[derive(Debug, Clone, Copy)]
pub(crate) struct InnerSettings {
    pub beta: f64,
    pub rho0: f64,
    pub rho_growth: f64,
    pub rho_max: f64,
    /// Residual balancing instead of geometric growth.
    pub balance: bool,
    pub max_iter: usize,
    pub tol: f64,
    /// Residual bound `‖Ax − b‖₂` a candidate must meet.
    pub feas_tol: f64,
    pub deadline: Option<Instant>,
}

/// Where the returned point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerPick {
    /// The last x-iterate.
    Iterate,
    /// Least-squares refit on the support of the last y-iterate.
    SupportRefit,
    /// Nothing beat the anchor point.
    Anchor,
}

#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub u: DVector<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    pub timed_out: bool,
    pub objective: f64,
    pub pick: InnerPick,
}

/// `‖x‖_p^p − ⟨c, x⟩ + (β/2)‖x − anchor‖²`.
pub(crate) fn subproblem_objective(
    x: &DVector<f64>,
    p: f64,
    c: &DVector<f64>,
    beta: f64,
    anchor: &DVector<f64>,
) -> f64 {
    let prox_term = if beta > 0.0 {
        0.5 * beta * (x - anchor).norm_squared()
    } else {
        0.0
    };
    lp_norm_pow_unchecked(x.as_slice(), p) - c.dot(x) + prox_term
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_admm(
    instance: &ProblemInstance,
    projector: &AffineProjector,
    penalty: &dyn Penalty,
    p: f64,
    anchor: &DVector<f64>,
    c: &DVector<f64>,
    settings: &InnerSettings,
) -> InnerOutcome {
    let n = anchor.len();
    let beta = settings.beta;
    let mut y = anchor.clone();
    let mut u = DVector::zeros(n);
    let mut rho = settings.rho0;
    let mut x = anchor.clone();
    let mut psi = DVector::zeros(n);
    let mut coeff = DVector::zeros(projector.rank());
    let mut t = DVector::zeros(n);
    let mut y_prev = DVector::zeros(n);
    let threshold = settings.tol * (n as f64).sqrt();
    // β x_k + c is constant over the inner loop
    let fixed = anchor * beta + c;

    let mut converged = false;
    let mut timed_out = false;
    let mut iterations = 0;
    while iterations < settings.max_iter {
        iterations += 1;
        let inv = 1.0 / (rho + beta);
        for i in 0..n {
            psi[i] = (rho * y[i] + fixed[i] - u[i]) * inv;
        }
        projector.project_into(&psi, &mut coeff, &mut x);

        std::mem::swap(&mut y_prev, &mut y);
        for i in 0..n {
            t[i] = x[i] + u[i] / rho;
        }
        penalty.prox_vec(t.as_slice(), rho, y.as_mut_slice());

        let mut primal = 0.0;
        let mut change = 0.0;
        for i in 0..n {
            let r = x[i] - y[i];
            u[i] += rho * r;
            primal += r * r;
            let d = y[i] - y_prev[i];
            change += d * d;
        }
        let dual = rho * change.sqrt();
        if primal.sqrt() < threshold && dual < threshold {
            converged = true;
            break;
        }
        if settings.deadline.is_some_and(|d| Instant::now() >= d) {
            timed_out = true;
            break;
        }
        rho = if settings.balance {
            // adapting every step can cycle forever, so adapt sparsely and
            // hold ρ fixed for the second half of the budget
            let primal = primal.sqrt();
            if iterations % BALANCE_EVERY != 0 || 2 * iterations > settings.max_iter {
                rho
            } else if primal > 10.0 * dual {
                (rho * 2.0).min(settings.rho_max)
            } else if dual > 10.0 * primal {
                rho / 2.0
            } else {
                rho
            }
        } else {
            (rho * settings.rho_growth).min(settings.rho_max)
        };
    }

    // pick the best feasible candidate, never worse than the anchor
    let tol = settings.feas_tol;
    let mut best = (
        subproblem_objective(anchor, p, c, beta, anchor),
        InnerPick::Anchor,
        anchor.clone(),
    );
    if instance.residual_norm(&x) <= tol {
        let f = subproblem_objective(&x, p, c, beta, anchor);
        if f < best.0 {
            best = (f, InnerPick::Iterate, x.clone());
        }
    }
    let support: Vec<usize> = (0..n).filter(|&i| y[i] != 0.0).collect();
    let mut supports = vec![support.clone()];
    // the prox cannot produce entries below its threshold, so also try the
    // largest entries of x with a little slack
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()));
    // plus a size-m support, which always admits a feasible refit when
    // those columns are independent
    let sizes = [0usize, 1, 2, 4]
        .iter()
        .map(|e| support.len() + e)
        .filter(|&s| s > 0 && s <= instance.m())
        .chain(std::iter::once(instance.m().min(n)));
    for size in sizes {
        let mut s: Vec<usize> = order[..size].to_vec();
        s.sort_unstable();
        if !supports.contains(&s) {
            supports.push(s);
        }
    }
    for s in &supports {
        if let Some(refit) = support_least_squares(instance, s, &x, tol) {
            let f = subproblem_objective(&refit, p, c, beta, anchor);
            if f < best.0 {
                best = (f, InnerPick::SupportRefit, refit);
            }
        }
    }
    InnerOutcome {
        x: best.2,
        y,
        u,
        rho,
        iterations,
        converged,
        timed_out,
        objective: best.0,
        pick: best.1,
    }
}
