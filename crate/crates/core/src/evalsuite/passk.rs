use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::EvalError;

fn check(n: u64, c: u64, k: u64) -> Result<(), EvalError> {
    if c > n || k == 0 || k > n {
        return Err(EvalError::InvalidArgs(format!("need 0 <= c <= n and 1 <= k <= n, got n={n} c={c} k={k}")));
    }
    Ok(())
}

/// Probability that at least one of `k` samples drawn without replacement
/// from `n`, of which `c` are correct, is correct: 1 - C(n-c,k)/C(n,k).
///
/// Evaluated as 1 - prod_{i=n-c+1}^{n} (1 - k/i), which never forms a
/// binomial coefficient.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, EvalError> {
    check(n, c, k)?;
    if n - c < k {
        return Ok(1.0);
    }
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// [`pass_at_k`] in exact rational arithmetic.
pub fn pass_at_k_exact(n: u64, c: u64, k: u64) -> Result<BigRational, EvalError> {
    check(n, c, k)?;
    Ok(BigRational::one() - BigRational::new(binomial(n - c, k), binomial(n, k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn trivial_values() {
        assert_eq!(pass_at_k(10, 10, 3).unwrap(), 1.0);
        assert_eq!(pass_at_k(10, 0, 5).unwrap(), 0.0);
        assert!((pass_at_k(5, 2, 1).unwrap() - 0.4).abs() < 1e-12);
        assert!((pass_at_k(3, 1, 2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn invalid() {
        for (n, c, k) in [(3, 4, 1), (3, 1, 0), (3, 1, 4)] {
            assert_eq!(pass_at_k(n, c, k).unwrap_err().kind(), "invalid_args");
            assert!(pass_at_k_exact(n, c, k).is_err());
        }
    }

    #[test]
    fn large_n_is_finite() {
        let p = pass_at_k(10_000, 37, 100).unwrap();
        let exact = pass_at_k_exact(10_000, 37, 100).unwrap().to_f64().unwrap();
        assert!(p.is_finite() && (p - exact).abs() < 1e-12);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(52, 5), BigInt::from(2_598_960));
        assert_eq!(binomial(3, 4), BigInt::zero());
    }
}
