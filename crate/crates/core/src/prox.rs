//! Scalar proximal maps of `|y|^p`.
//!
//! For `p = 1` this is soft thresholding. For `0 < p < 1` the global
//! minimizer of `|y|^p + (ρ/2)(y − t)²` is given by generalized soft
//! thresholding (GST): zero inside a closed-form threshold `τ`, and outside
//! it the largest root of `h(z) = p z^{p−1}/ρ + z = |t|`, which lies in
//! `(β_p, |t|)` where `h` is increasing and convex.

use crate::error::{Error, Result};

pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 50;

/// Parameters of the GST map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GstParams {
    p: f64,
    rho: f64,
    newton_tol: f64,
    newton_max_iter: usize,
}

impl GstParams {
    pub fn new(p: f64, rho: f64) -> Result<Self> {
        Self::with_newton(p, rho, DEFAULT_NEWTON_TOL, DEFAULT_NEWTON_MAX_ITER)
    }

    pub fn with_newton(p: f64, rho: f64, newton_tol: f64, newton_max_iter: usize) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (0, 1], got {p}"
            )));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho must be positive, got {rho}"
            )));
        }
        if !(newton_tol > 0.0) || newton_max_iter == 0 {
            return Err(Error::InvalidParameter(
                "Newton settings must be positive".into(),
            ));
        }
        Ok(Self {
            p,
            rho,
            newton_tol,
            newton_max_iter,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Left end `β_p = [2(1−p)/ρ]^{1/(2−p)}` of the nonzero branch.
    pub fn branch_start(&self) -> f64 {
        (2.0 * (1.0 - self.p) / self.rho).powf(1.0 / (2.0 - self.p))
    }
}

/// Threshold `τ = β_p + p β_p^{p−1}/ρ` below which GST returns zero.
///
/// As `p → 1⁻` this tends to the soft threshold `1/ρ`; at `p = 1` itself
/// `β_p = 0` and the formula is singular, so callers use [`soft_threshold`].
pub fn gst_threshold(params: &GstParams) -> Result<f64> {
    if params.p >= 1.0 {
        return Err(Error::Domain(
            "GST threshold is defined for p < 1; use soft thresholding at p = 1".into(),
        ));
    }
    Ok(threshold_unchecked(params))
}

fn threshold_unchecked(params: &GstParams) -> f64 {
    let bp = params.branch_start();
    bp + params.p * bp.powf(params.p - 1.0) / params.rho
}

/// How [`gst_apply_checked`] obtained its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GstStatus {
    /// Input inside the threshold.
    Thresholded,
    /// Newton converged.
    Newton,
    /// Newton stalled; bisection on `[β_p, |t|]` finished the job.
    Bisection,
    /// The bracket was invalid; zero was returned.
    Failed,
}

/// `sign(t)·max(|t| − λ, 0)`.
pub fn soft_threshold(t: f64, lambda: f64) -> f64 {
    let mag = t.abs() - lambda;
    if mag > 0.0 {
        mag.copysign(t)
    } else {
        0.0
    }
}

/// Global minimizer of `|y|^p + (ρ/2)(y − t)²`.
pub fn gst_apply(t: f64, params: &GstParams) -> f64 {
    gst_apply_checked(t, params).0
}

/// [`gst_apply`] plus the path taken.
pub fn gst_apply_checked(t: f64, params: &GstParams) -> (f64, GstStatus) {
    if params.p >= 1.0 {
        let y = soft_threshold(t, 1.0 / params.rho);
        let status = if y == 0.0 {
            GstStatus::Thresholded
        } else {
            GstStatus::Newton
        };
        return (y, status);
    }
    let target = t.abs();
    // at |t| = τ both candidates tie; zero wins
    if !(target > threshold_unchecked(params)) {
        return (0.0, GstStatus::Thresholded);
    }
    let (p, rho) = (params.p, params.rho);
    let h = |z: f64| p * z.powf(p - 1.0) / rho + z;
    let dh = |z: f64| 1.0 - p * (1.0 - p) * z.powf(p - 2.0) / rho;

    let mut lo = params.branch_start();
    let mut hi = target;
    if !(lo < hi) || !(h(lo) <= target) {
        return (0.0, GstStatus::Failed);
    }

    let mut z = target;
    for _ in 0..params.newton_max_iter {
        let r = h(z) - target;
        if r.abs() <= params.newton_tol * (1.0 + target) {
            return (z.copysign(t), GstStatus::Newton);
        }
        if r > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let step = z - r / dh(z);
        z = if step > lo && step < hi && step.is_finite() {
            step
        } else {
            0.5 * (lo + hi)
        };
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    (0.5 * (lo + hi) * t.signum(), GstStatus::Bisection)
}

/// Objective of the scalar problem; useful for oracles.
pub fn scalar_objective(y: f64, t: f64, p: f64, rho: f64) -> f64 {
    let pen = if y == 0.0 { 0.0 } else { y.abs().powf(p) };
    pen + 0.5 * rho * (y - t) * (y - t)
}

/// Separable proximal map of `Σ|y_i|^p`, picked by the exponent.
pub trait Penalty: Send + Sync {
    fn name(&self) -> &'static str;

    /// Minimizer of `|y|^p + (ρ/2)(y − t)²`.
    fn prox(&self, t: f64, rho: f64) -> f64;

    fn prox_vec(&self, t: &[f64], rho: f64, out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(t) {
            *o = self.prox(v, rho);
        }
    }
}

/// `|y|`, prox is soft thresholding at `1/ρ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct L1Penalty;

impl Penalty for L1Penalty {
    fn name(&self) -> &'static str {
        "soft"
    }

    fn prox(&self, t: f64, rho: f64) -> f64 {
        soft_threshold(t, 1.0 / rho)
    }
}

/// `|y|^p` for `0 < p < 1`, prox is GST.
#[derive(Debug, Clone, Copy)]
pub struct LpPenalty {
    p: f64,
}

impl LpPenalty {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "GST penalty needs 0 < p < 1, got {p}"
            )));
        }
        Ok(Self { p })
    }
}

impl Penalty for LpPenalty {
    fn name(&self) -> &'static str {
        "gst"
    }

    fn prox(&self, t: f64, rho: f64) -> f64 {
        match GstParams::new(self.p, rho) {
            Ok(params) => gst_apply(t, &params),
            Err(_) => 0.0,
        }
    }

    fn prox_vec(&self, t: &[f64], rho: f64, out: &mut [f64]) {
        let Ok(params) = GstParams::new(self.p, rho) else {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        };
        let tau = threshold_unchecked(&params);
        for (o, &v) in out.iter_mut().zip(t) {
            *o = if v.abs() <= tau {
                0.0
            } else {
                gst_apply(v, &params)
            };
        }
    }
}

/// Proximal strategy for exponent `p`.
pub fn penalty_for(p: f64) -> Result<Box<dyn Penalty>> {
    if p == 1.0 {
        Ok(Box::new(L1Penalty))
    } else {
        Ok(Box::new(LpPenalty::new(p)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid_min(t: f64, p: f64, rho: f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
        let steps = ((hi - lo) / step).round() as usize;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=steps {
            let y = lo + i as f64 * step;
            let v = scalar_objective(y, t, p, rho);
            if v < best.0 {
                best = (v, y);
            }
        }
        best
    }

    #[test]
    fn threshold_examples() {
        let tau = gst_threshold(&GstParams::new(0.5, 2.0).unwrap()).unwrap();
        let bp = 0.5f64.powf(2.0 / 3.0);
        assert_relative_eq!(bp, 0.629960524947, epsilon = 1e-11);
        assert_relative_eq!(tau, bp + 0.25 * bp.powf(-0.5), epsilon = 1e-15);
        assert!((tau - 0.944940).abs() < 1e-6);

        let tau = gst_threshold(&GstParams::new(0.5, 0.5).unwrap()).unwrap();
        assert!((tau - 2.381101).abs() < 1e-6, "{tau}");

        let tau = gst_threshold(&GstParams::new(0.999, 1.0).unwrap()).unwrap();
        assert!((tau - 1.0).abs() < 0.01, "{tau}");
    }

    #[test]
    fn threshold_rejects_p_one() {
        assert!(matches!(
            gst_threshold(&GstParams::new(1.0, 1.0).unwrap()),
            Err(Error::Domain(_))
        ));
        assert!(GstParams::new(0.5, 0.0).is_err());
        assert!(GstParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-4.0, 1.5), -2.5);
        let params = GstParams::new(1.0, 1.0).unwrap();
        assert_eq!(gst_apply(3.0, &params), 2.0);
    }

    #[test]
    fn gst_zero_input() {
        for p in [0.1, 0.5, 0.9] {
            assert_eq!(gst_apply(0.0, &GstParams::new(p, 3.0).unwrap()), 0.0);
        }
    }

    #[test]
    fn gst_matches_grid_oracle() {
        let params = GstParams::new(0.5, 2.0).unwrap();
        let y = gst_apply(2.0, &params);
        let (_, y_grid) = grid_min(2.0, 0.5, 2.0, -3.0, 3.0, 1e-4);
        assert!((y - y_grid).abs() < 1e-3, "{y} vs {y_grid}");
    }

    #[test]
    fn gst_boundary_takes_zero_branch() {
        for (p, rho) in [(0.2, 1.0), (0.5, 2.0), (0.8, 0.3)] {
            let params = GstParams::new(p, rho).unwrap();
            let tau = gst_threshold(&params).unwrap();
            assert_eq!(gst_apply(tau, &params), 0.0);
            assert_eq!(gst_apply(-tau, &params), 0.0);
            assert_eq!(gst_apply(tau - 1e-9, &params), 0.0);
            let above = gst_apply(tau + 1e-9, &params);
            assert!(above >= params.branch_start() * (1.0 - 1e-6), "{above}");
            // both candidates tie at the threshold
            let bp = params.branch_start();
            let tie = scalar_objective(bp, tau, p, rho) - scalar_objective(0.0, tau, p, rho);
            assert!(tie.abs() < 1e-12, "{tie}");
        }
    }

    #[test]
    fn status_reports_path() {
        let params = GstParams::with_newton(0.5, 1.0, 1e-300, 1).unwrap();
        let (y, status) = gst_apply_checked(5.0, &params);
        assert_eq!(status, GstStatus::Bisection);
        let exact = gst_apply(5.0, &GstParams::new(0.5, 1.0).unwrap());
        assert_relative_eq!(y, exact, max_relative = 1e-12);
        let (_, status) = gst_apply_checked(0.1, &params);
        assert_eq!(status, GstStatus::Thresholded);
    }

    proptest! {
        #[test]
        fn gst_shrinks_and_keeps_sign(p in 0.05f64..0.95, rho in 0.05f64..50.0, t in -50.0f64..50.0) {
            let params = GstParams::new(p, rho).unwrap();
            let y = gst_apply(t, &params);
            prop_assert!(y.abs() <= t.abs());
            prop_assert!(y == 0.0 || y.signum() == t.signum());
        }

        #[test]
        fn gst_nondecreasing(p in 0.05f64..0.95, rho in 0.05f64..50.0, t in -20.0f64..20.0, dt in 0.0f64..5.0) {
            let params = GstParams::new(p, rho).unwrap();
            prop_assert!(gst_apply(t, &params) <= gst_apply(t + dt, &params));
        }

        #[test]
        fn gst_beats_zero_and_input(p in 0.05f64..0.95, rho in 0.05f64..50.0, t in -20.0f64..20.0) {
            let params = GstParams::new(p, rho).unwrap();
            let y = gst_apply(t, &params);
            let f = scalar_objective(y, t, p, rho);
            prop_assert!(f <= scalar_objective(0.0, t, p, rho) + 1e-12);
            prop_assert!(f <= scalar_objective(t, t, p, rho) + 1e-12);
        }
    }
}
