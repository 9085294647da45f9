use serde::{Deserialize, Serialize};

use super::TheoryInput;
use crate::error::{Error, Result};

/// Root of the auxiliary equation together with its certified bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroPointResult {
    pub z0: f64,
    pub bracket_low: f64,
    pub bracket_high: f64,
    pub residual: f64,
}

/// `f(z) = z^q - c z^p - c - 1` with `c = β^p k^{-(q-p)/q}`.
pub fn fpq(z: f64, p: f64, q: f64, c: f64) -> f64 {
    z.powf(q) - c * z.powf(p) - c - 1.0
}

fn fpq_prime(z: f64, p: f64, q: f64, c: f64) -> f64 {
    q * z.powf(q - 1.0) - c * p * z.powf(p - 1.0)
}

pub(crate) fn coupling(input: &TheoryInput) -> f64 {
    let (p, q) = (input.params.p(), input.params.q());
    input.beta.powf(p) * (input.k as f64).powf(-(q - p) / q)
}

/// Unique positive zero of `f`, by bisection on the analytic bracket and two
/// Newton steps.
pub fn fpq_zero(input: &TheoryInput) -> Result<ZeroPointResult> {
    input.validate()?;
    let (p, q) = (input.params.p(), input.params.q());
    let k = input.k as f64;
    let c = coupling(input);
    let f = |z: f64| fpq(z, p, q, c);

    let low = (k * q).powf(-1.0 / q) * (p * input.beta.powf(p)).powf(1.0 / (q - p));
    let high = (1.0 + c).powf(2.0 / (q - p));
    if !low.is_finite() {
        return Err(Error::Domain(format!(
            "the root exceeds the floating-point range (lower bracket {low})"
        )));
    }
    if !(f(low) < 0.0) {
        return Err(Error::Internal(format!(
            "f(z_low) = {} is not negative",
            f(low)
        )));
    }
    // for q close to p the upper end overflows; any point with f > 0 will do
    let mut hi = high;
    if !hi.is_finite() {
        hi = low.max(1.0) * 2.0;
        while f(hi) <= 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Internal("no finite upper bracket".into()));
            }
        }
    } else if !(f(hi) > 0.0) {
        return Err(Error::Internal(format!(
            "f(z_high) = {} is not positive",
            f(hi)
        )));
    }

    let mut lo = low;
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..2 {
        let step = f(z) / fpq_prime(z, p, q, c);
        let next = z - step;
        if next.is_finite() && next > low && f(next).abs() <= f(z).abs() {
            z = next;
        }
    }
    if !(z > low && z < high) {
        return Err(Error::Internal(format!("root {z} escaped ({low}, {high})")));
    }
    Ok(ZeroPointResult {
        z0: z,
        bracket_low: low,
        bracket_high: high,
        residual: f(z).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::RatioParams;

    fn input(p: f64, q: f64, k: usize, beta: f64) -> TheoryInput {
        TheoryInput::new(RatioParams::new(p, q).unwrap(), k, beta).unwrap()
    }

    #[test]
    fn quadratic_case() {
        let r = fpq_zero(&input(1.0, 2.0, 1, 1.0)).unwrap();
        assert!((r.z0 - 2.0).abs() < 1e-12);
        assert!((r.bracket_low - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((r.bracket_high - 4.0).abs() < 1e-15);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn worst_case_reduces_to_fixed_equation() {
        for &(p, q) in &[(0.5, 2.0), (0.3, 1.6), (1.0, 3.0)] {
            for k in [1, 4, 16] {
                let inp = TheoryInput::worst_case(RatioParams::new(p, q).unwrap(), k).unwrap();
                assert!((coupling(&inp) - 1.0).abs() < 1e-10);
                let z = fpq_zero(&inp).unwrap().z0;
                assert!((z.powf(q) - z.powf(p) - 2.0).abs() < 1e-9);
            }
        }
        let r = fpq_zero(&TheoryInput::worst_case(RatioParams::new(1.0, 2.0).unwrap(), 9).unwrap())
            .unwrap();
        assert!((r.z0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nearly_equal_exponents_stay_finite() {
        let r = fpq_zero(&input(1.0, 1.0005, 3, 1.0)).unwrap();
        assert!(r.z0.is_finite() && r.z0 > r.bracket_low);
        assert!(r.bracket_high.is_infinite());
        assert!(r.residual < 1e-9);
        // here the root itself is around 2^2000
        assert!(matches!(
            fpq_zero(&input(1.0, 1.0005, 3, 2.0)),
            Err(Error::Domain(_))
        ));
    }
}
