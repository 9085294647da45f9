use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Most supports [`exact_ric`] will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

fn binomial(n: usize, s: usize) -> u128 {
    let s = s.min(n - s);
    let mut c: u128 = 1;
    for i in 0..s {
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if c > ENUMERATION_LIMIT * 1000 {
            return u128::MAX;
        }
    }
    c
}

/// Advances `idx` to the next s-subset of 0..n in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let s = idx.len();
    let mut i = s;
    while i > 0 {
        i -= 1;
        if idx[i] < n - s + i {
            idx[i] += 1;
            for j in i + 1..s {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Restricted isometry constant of order s by enumerating every support.
pub fn exact_ric(a: &DMatrix<f64>, s: usize) -> Result<f64> {
    let n = a.ncols();
    if s == 0 || s > n {
        return Err(Error::InvalidParameter(format!(
            "order s = {s} must lie in 1..={n}"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    let count = binomial(n, s);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let gram = a.transpose() * a;
    let mut idx: Vec<usize> = (0..s).collect();
    let mut delta = 0.0f64;
    loop {
        let sub = gram.select_rows(idx.iter()).select_columns(idx.iter());
        let eig = sub.symmetric_eigenvalues();
        let lmax = eig.max();
        let lmin = eig.min();
        delta = delta.max(lmax - 1.0).max(1.0 - lmin);
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_enumerated_once() {
        let mut idx = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut idx, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(binomial(12, 5), 792);
        assert_eq!(binomial(40, 20), u128::MAX);
    }

    #[test]
    fn hand_values() {
        let eye = DMatrix::<f64>::identity(4, 4);
        for s in 1..=4 {
            assert!(exact_ric(&eye, s).unwrap().abs() < 1e-12);
        }
        let d = DMatrix::from_element(1, 1, 2.0);
        assert!((exact_ric(&d, 1).unwrap() - 3.0).abs() < 1e-12);
        let r = 0.5f64.sqrt();
        let a = DMatrix::from_row_slice(1, 2, &[r, r]);
        assert!((exact_ric(&a, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn guard_and_order_checks() {
        let a = DMatrix::<f64>::zeros(2, 40);
        assert!(matches!(
            exact_ric(&a, 20),
            Err(Error::EnumerationLimit { .. })
        ));
        assert!(exact_ric(&a, 0).is_err());
        assert!(exact_ric(&a, 41).is_err());
    }
}
