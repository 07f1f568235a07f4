//! Closed-form missed-detection bounds for the per-cluster check.

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs to the bound formulas: field size, degree of `H`, repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundParams {
    pub q: u64,
    pub deg_h: usize,
    pub eta: usize,
}

fn check_nonvacuous(q: u64, deg: usize) -> Result<()> {
    if (q as u128) <= deg as u128 + 1 {
        return Err(Error::BoundVacuous { q, deg });
    }
    Ok(())
}

/// Unclamped single-check bound `x + 1/q - x/q` with `x = deg / (q - deg - 1)`.
/// Exceeds one when `deg` is large relative to `q`.
pub fn bound_single_raw(q: u64, deg_h: usize) -> Result<f64> {
    check_nonvacuous(q, deg_h)?;
    let qf = q as f64;
    let x = deg_h as f64 / (qf - deg_h as f64 - 1.0);
    Ok(x + 1.0 / qf - x / qf)
}

/// [`bound_single_raw`] clamped to `[0, 1]`.
pub fn bound_single(q: u64, deg_h: usize) -> Result<f64> {
    Ok(bound_single_raw(q, deg_h)?.min(1.0))
}

/// `eta` checks at independently drawn points.
pub fn bound_repeated_iid(q: u64, deg_h: usize, eta: usize) -> Result<f64> {
    if eta == 0 {
        return Err(Error::EtaOutOfRange { eta, max: usize::MAX });
    }
    Ok(bound_single(q, deg_h)?.powi(eta as i32))
}

fn binomial(n: u128, k: u128) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc /= BigInt::from(i + 1);
    }
    acc
}

/// `eta` checks at points drawn without replacement from the `q - deg - 1`
/// candidates, evaluated exactly:
/// `sum_j C(deg, j) C(q - 2 deg - 1, eta - j) / C(q - deg - 1, eta) * q^-(eta - j)`.
pub fn bound_repeated_distinct(q: u64, deg_h: usize, eta: usize) -> Result<f64> {
    check_nonvacuous(q, deg_h)?;
    let pool = q as u128 - deg_h as u128 - 1;
    if eta == 0 || eta as u128 > pool {
        return Err(Error::EtaOutOfRange {
            eta,
            max: pool.min(usize::MAX as u128) as usize,
        });
    }
    let d = deg_h as u128;
    let e = eta as u128;
    // q - 2d - 1 may be negative; the binomial is then zero.
    let rest = (q as i128) - 2 * deg_h as i128 - 1;
    let denom = binomial(pool, e);
    let qb = BigInt::from(q);
    let mut total = BigRational::zero();
    for j in 0..=e.min(d) {
        let rest_term = if rest < 0 { BigInt::zero() } else { binomial(rest as u128, e - j) };
        let num = binomial(d, j) * rest_term;
        if num.is_zero() {
            continue;
        }
        let power = num::pow(qb.clone(), (e - j) as usize);
        total += BigRational::new(num, denom.clone() * power);
    }
    Ok(total.to_f64().unwrap_or(1.0).clamp(0.0, 1.0))
}

/// Bound for a check at a uniformly random public point:
/// `deg/q + 1/q - deg/q^2`.
pub fn bound_public_gamma(q: u64, deg_h: usize) -> f64 {
    let qf = q as f64;
    let d = deg_h as f64;
    (d / qf + 1.0 / qf - d / (qf * qf)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_bound_reference_values() {
        let want = [
            (7, 0.5714285714285714),
            (11, 0.3181818181818182),
            (23, 0.1391304347826087),
            (53, 0.058113207547169816),
        ];
        for (q, v) in want {
            assert!(close(bound_single(q, 2).unwrap(), v, 1e-12), "q={q}");
        }
        let raw = bound_single_raw(151, 99).unwrap();
        assert!(close(raw, 1.934943513829373, 1e-12));
        assert_eq!(bound_single(151, 99).unwrap(), 1.0);
        assert!(close(bound_single(11, 0).unwrap(), 1.0 / 11.0, 1e-15));
    }

    #[test]
    fn vacuous_rejected() {
        assert_eq!(bound_single(3, 2), Err(Error::BoundVacuous { q: 3, deg: 2 }));
        assert!(bound_repeated_distinct(3, 2, 1).is_err());
        assert!(bound_repeated_distinct(23, 10, 13).is_err());
        assert!(bound_repeated_distinct(23, 10, 0).is_err());
    }

    #[test]
    fn repeated_reference_values() {
        let iid2 = bound_repeated_iid(23, 10, 2).unwrap();
        let iid3 = bound_repeated_iid(23, 10, 3).unwrap();
        assert!(close(iid2, 0.7065742491073304, 1e-12));
        assert!(close(iid3, 0.5939319775105096, 1e-12));
        let d1 = bound_repeated_distinct(23, 10, 1).unwrap();
        assert!(close(d1, 0.8405797101449275, 1e-12));
        assert!(close(d1, bound_single(23, 10).unwrap(), 1e-15));
        assert!(close(bound_repeated_distinct(23, 10, 3).unwrap(), 0.5633270321361059, 1e-9));
        assert!(close(bound_repeated_distinct(23, 10, 12).unwrap(), 0.001890359168241966, 1e-12));
    }

    /// Direct probability model behind the distinct-draw bound: points are
    /// drawn without replacement from `q - deg - 1` candidates, of which
    /// `deg` are roots; a miss needs every non-root draw to also hit the
    /// Freivalds nullspace, probability `1/q` each.
    fn distinct_oracle(q: u64, deg: usize, eta: usize) -> f64 {
        let pool = (q as usize) - deg - 1;
        // Sum over ordered draw sequences by recursion on (remaining roots, remaining others).
        fn go(roots: usize, others: usize, left: usize, q: f64) -> f64 {
            if left == 0 {
                return 1.0;
            }
            let total = (roots + others) as f64;
            let mut p = 0.0;
            if roots > 0 {
                p += roots as f64 / total * go(roots - 1, others, left - 1, q);
            }
            if others > 0 {
                p += others as f64 / total * go(roots, others - 1, left - 1, q) / q;
            }
            p
        }
        go(deg, pool - deg, eta, q as f64)
    }

    #[test]
    fn distinct_matches_sequential_oracle() {
        for (q, d) in [(23u64, 2usize), (23, 10), (31, 5), (101, 2)] {
            for eta in 1..=6 {
                let got = bound_repeated_distinct(q, d, eta).unwrap();
                let want = distinct_oracle(q, d, eta);
                assert!(close(got, want, 1e-12), "q={q} d={d} eta={eta}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn distinct_dominated_by_iid() {
        for q in [23u64, 101] {
            for d in [2usize, 10] {
                for eta in 2..=10 {
                    let dist = bound_repeated_distinct(q, d, eta).unwrap();
                    let iid = bound_repeated_iid(q, d, eta).unwrap();
                    assert!(dist <= iid + 1e-15, "q={q} d={d} eta={eta}");
                }
            }
        }
    }

    #[test]
    fn huge_modulus_is_finite() {
        let q = crate::field::NTT_PRIME_62;
        let v = bound_repeated_distinct(q, 98, 3).unwrap();
        assert!(v > 0.0 && v < 1e-40);
    }

    #[test]
    fn public_gamma_formula() {
        assert!(close(bound_public_gamma(101, 2), 2.0 / 101.0 + 1.0 / 101.0 - 2.0 / (101.0 * 101.0), 1e-15));
    }

    proptest! {
        #[test]
        fn bounds_monotone(q_idx in 0usize..6, d in 0usize..6, eta in 1usize..6) {
            let primes = [23u64, 29, 31, 37, 41, 43];
            let q = primes[q_idx];
            let qn = primes[(q_idx + 1).min(5)];
            for f in [bound_repeated_iid, bound_repeated_distinct] {
                let a = f(q, d, eta)?;
                prop_assert!(f(q, d, eta + 1)? <= a + 1e-15);
                prop_assert!(f(qn, d, eta)? <= a + 1e-15);
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
