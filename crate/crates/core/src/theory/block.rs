use serde::{Deserialize, Serialize};

use super::TheoryInput;
use crate::error::Result;

/// Constants of the (k, t) guarantee stated with δ_k and θ_{k,t}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T6Constants {
    pub a_p: f64,
    pub vartheta: f64,
    pub eta: f64,
    pub tau: f64,
    pub psi: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub eta_ok: bool,
    pub psi_ok: bool,
}

/// Constants of the (k, t) guarantee stated with δ_k and δ_{k+t} only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T6RipConstants {
    pub a_p: f64,
    pub vartheta: f64,
    pub rho_p: f64,
    pub alpha: f64,
    pub eta: f64,
    pub c_p: f64,
    pub tau: f64,
    pub psi: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub eta_ok: bool,
    pub psi_ok: bool,
}

impl T6Constants {
    pub fn applicable(&self) -> bool {
        self.eta_ok && self.psi_ok
    }
}

impl T6RipConstants {
    pub fn applicable(&self) -> bool {
        self.eta_ok && self.psi_ok
    }
}

struct Common {
    a_p: f64,
    vartheta: f64,
    rho_p: f64,
    alpha: f64,
    eta: f64,
    c_p: f64,
}

fn common(input: &TheoryInput) -> Common {
    let (p, q) = (input.params.p(), input.params.q());
    let (k, t) = (input.k as f64, input.t as f64);
    let a_p = 3f64.powf((1.0 - p) / p);
    let vartheta = (1.0 / q - 0.5).max(0.0);
    let kp = k.powf((p - 1.0) / p);
    Common {
        a_p,
        vartheta,
        rho_p: a_p * (k / t).sqrt() + 0.25 * (t / k).sqrt(),
        alpha: a_p * input.beta * kp * k.powf(vartheta) / t.sqrt(),
        eta: a_p * input.beta * kp * t.powf(vartheta - 0.5),
        c_p: a_p * 2f64.powf(1.0 / p) * kp / t.sqrt(),
    }
}

pub fn t6_constants(input: &TheoryInput) -> Result<T6Constants> {
    input.validate()?;
    let delta_k = input.require("delta_k", input.delta_k)?;
    let theta = input.require("theta_kt", input.theta_kt)?;
    let c = common(input);
    let tau = (c.rho_p + c.alpha) / (1.0 - c.eta);
    let psi = delta_k + tau * theta;
    let eta_ok = c.eta < 1.0;
    let psi_ok = psi < 1.0;
    let ok = eta_ok && psi_ok;
    Ok(T6Constants {
        a_p: c.a_p,
        vartheta: c.vartheta,
        eta: c.eta,
        tau,
        psi,
        c1: ok.then(|| c.c_p * (1.0 - delta_k + theta) / ((1.0 - c.eta) * (1.0 - psi))),
        c2: ok.then(|| 2.0 * (1.0 + tau) * (1.0 + delta_k).sqrt() / (1.0 - psi)),
        eta_ok,
        psi_ok,
    })
}

pub fn t6rip_constants(input: &TheoryInput) -> Result<T6RipConstants> {
    input.validate()?;
    let delta_k = input.require("delta_k", input.delta_k)?;
    let delta_kt = input.require("delta_kt", input.delta_kt)?;
    let c = common(input);
    let tau = (c.rho_p + c.alpha) / (1.0 - c.eta);
    let psi = delta_k + delta_kt * tau;
    let eta_ok = c.eta < 1.0;
    let psi_ok = psi < 1.0;
    let ok = eta_ok && psi_ok;
    Ok(T6RipConstants {
        a_p: c.a_p,
        vartheta: c.vartheta,
        rho_p: c.rho_p,
        alpha: c.alpha,
        eta: c.eta,
        c_p: c.c_p,
        tau,
        psi,
        c1: ok.then(|| c.c_p / (1.0 - c.eta) * (1.0 + (1.0 + tau) * delta_kt / (1.0 - psi))),
        c2: ok.then(|| 2.0 * (1.0 + tau) * (1.0 + delta_k).sqrt() / (1.0 - psi)),
        eta_ok,
        psi_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::RatioParams;

    fn input(p: f64, q: f64, k: usize, t: usize, beta: f64) -> TheoryInput {
        TheoryInput::new(RatioParams::new(p, q).unwrap(), k, beta)
            .unwrap()
            .with_t(t)
    }

    #[test]
    fn simple_constants() {
        let r = t6_constants(&input(1.0, 2.0, 3, 5, 1.0).with_block(0.1, 0.2, 0.1)).unwrap();
        assert_eq!(r.a_p, 1.0);
        assert_eq!(r.vartheta, 0.0);
        let r = t6_constants(&input(0.5, 1.5, 3, 5, 1.0).with_block(0.1, 0.2, 0.1)).unwrap();
        assert!((r.a_p - 3.0).abs() < 1e-15);
        assert!((r.vartheta - (1.0 / 1.5 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn eta_at_one_is_inapplicable() {
        let r = t6_constants(&input(1.0, 2.0, 4, 4, 2.0).with_block(0.1, 0.1, 0.1)).unwrap();
        assert!((r.eta - 1.0).abs() < 1e-15);
        assert!(!r.eta_ok && r.c1.is_none() && r.c2.is_none());
    }

    #[test]
    fn rho_at_equal_blocks() {
        let r = t6rip_constants(&input(1.0, 2.0, 5, 5, 1.0).with_block(0.1, 0.1, 0.0)).unwrap();
        assert!((r.rho_p - 1.25).abs() < 1e-15);
    }

    #[test]
    fn applicable_case_values() {
        // p = 1, q = 2, k = 1, t = 16, β = 1: η = 1/4, α = 1/4, ρ = 1/4 + 1
        let inp = input(1.0, 2.0, 1, 16, 1.0).with_block(0.1, 0.2, 0.05);
        let r = t6rip_constants(&inp).unwrap();
        assert!((r.eta - 0.25).abs() < 1e-15);
        assert!((r.alpha - 0.25).abs() < 1e-15);
        assert!((r.rho_p - 1.25).abs() < 1e-15);
        let tau = 1.5 / 0.75;
        assert!((r.tau - tau).abs() < 1e-14);
        let psi = 0.1 + 0.2 * tau;
        assert!((r.psi - psi).abs() < 1e-14);
        let c1 = 0.5 / 0.75 * (1.0 + 3.0 * 0.2 / (1.0 - psi));
        assert!((r.c1.unwrap() - c1).abs() < 1e-13);
        let c2 = 2.0 * 3.0 * 1.1f64.sqrt() / (1.0 - psi);
        assert!((r.c2.unwrap() - c2).abs() < 1e-13);

        let r6 = t6_constants(&inp).unwrap();
        let psi6 = 0.1 + tau * 0.05;
        assert!((r6.psi - psi6).abs() < 1e-14);
        let c1 = 0.5 * (1.0 - 0.1 + 0.05) / (0.75 * (1.0 - psi6));
        assert!((r6.c1.unwrap() - c1).abs() < 1e-13);
    }

    #[test]
    fn roc_version_no_worse_when_theta_below_ric() {
        let inp = input(0.7, 1.8, 2, 12, 1.2).with_block(0.05, 0.15, 0.1);
        let a = t6_constants(&inp).unwrap();
        let b = t6rip_constants(&inp).unwrap();
        assert!((a.tau - b.tau).abs() < 1e-15);
        assert!(a.psi <= b.psi);
        let c = t6_constants(&inp.with_theta_from_ric()).unwrap();
        assert!((c.psi - b.psi).abs() < 1e-15);
    }

    #[test]
    fn c2_does_not_depend_on_epsilon() {
        let inp = input(1.0, 2.0, 1, 16, 1.0).with_block(0.1, 0.2, 0.05);
        let a = t6rip_constants(&inp.with_epsilon(0.0)).unwrap();
        let b = t6rip_constants(&inp.with_epsilon(3.0)).unwrap();
        assert_eq!(a.c2, b.c2);
    }

    #[test]
    fn missing_inputs() {
        let inp = input(1.0, 2.0, 1, 16, 1.0);
        assert!(t6_constants(&inp).is_err());
        assert!(t6rip_constants(&inp).is_err());
    }
}
