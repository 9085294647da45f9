use crate::error::{Error, Result};
use crate::norms::RatioParams;

/// `κ(x) = ‖x‖_p^p ‖x‖_∞^{q-p} / ‖x‖_q^q`, scale invariant and at least 1.
pub fn gnrc(x: &[f64], params: RatioParams) -> Result<f64> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("entry {i} is {}", x[i])));
    }
    let inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if inf == 0.0 {
        return Err(Error::Domain(
            "the GNRC of the zero vector is undefined".into(),
        ));
    }
    let (p, q) = (params.p(), params.q());
    // after dividing by ‖x‖_∞ the ∞-norm factor is 1
    let (mut sp, mut sq) = (0.0, 0.0);
    for v in x {
        let a = v.abs() / inf;
        if a > 0.0 {
            sp += a.powf(p);
            sq += a.powf(q);
        }
    }
    Ok(sp / sq)
}

/// Positive root `x*` in (0, 1) of `(q-1)(s-1)x^q + q x^{q-1} - 1`.
pub fn uniform_gnrc_root(q: f64, s: usize) -> Result<f64> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "q must be a finite value > 1, got {q}"
        )));
    }
    if s == 0 {
        return Err(Error::InvalidParameter("s must be at least 1".into()));
    }
    let a = (q - 1.0) * (s as f64 - 1.0);
    let h = |v: f64| a * v.powf(q) + q * v.powf(q - 1.0) - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if s == 1 {
        // h(v) = q v^{q-1} - 1
        return Ok(q.powf(-1.0 / (q - 1.0)));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest GNRC at p = 1 over nonzero s-sparse vectors,
/// `K = (1 + (s-1)x*) / (1 + (s-1)x*^q)`.
pub fn uniform_gnrc_bound(q: f64, s: usize) -> Result<f64> {
    let x = uniform_gnrc_root(q, s)?;
    let r = s as f64 - 1.0;
    Ok((1.0 + r * x) / (1.0 + r * x.powf(q)))
}

/// Upper end of the null-space constant range guaranteeing strict local
/// optimality of `x0`: `1/(1+κ(x0))` at p = 1 and 1 for p < 1.
pub fn local_optimality_mu_threshold(x0: &[f64], params: RatioParams) -> Result<f64> {
    let kappa = gnrc(x0, params)?;
    Ok(if params.p() == 1.0 {
        1.0 / (1.0 + kappa)
    } else {
        1.0
    })
}
