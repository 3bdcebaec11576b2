//! Exact integer and rational helpers shared by the exact code paths.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// `C(n, k)` as an arbitrary-precision integer; zero when `k > n`.
pub fn choose(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, k)` with signed arguments; zero outside `0 <= k <= n`.
pub fn choose_signed(n: i64, k: i64) -> BigUint {
    if n < 0 || k < 0 || k > n {
        BigUint::zero()
    } else {
        choose(n as u64, k as u64)
    }
}

/// Row `C(n, 0), ..., C(n, n)` by the multiplicative recurrence.
pub fn choose_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 1..=n {
        c = c * (n - k + 1) / k;
        row.push(c.clone());
    }
    row
}

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

pub fn from_uint(v: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(v.clone()))
}

/// Converts an exact fraction to the nearest `f64`.
pub fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Natural log of a positive big integer, accurate to a few ulps.
pub fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().map_or(f64::NAN, f64::ln);
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact mean and variance of `(probability, value)` pairs whose probabilities sum to one.
pub fn weighted_moments(items: &[(BigRational, BigRational)]) -> (BigRational, BigRational) {
    let mut mean = BigRational::zero();
    for (w, v) in items {
        mean += w * v;
    }
    let mut var = BigRational::zero();
    for (w, v) in items {
        let d = v - &mean;
        var += w * &d * &d;
    }
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert_eq!(choose(5, 2), BigUint::from(10u32));
        assert_eq!(choose(5, 0), BigUint::one());
        assert_eq!(choose(5, 6), BigUint::zero());
        assert_eq!(choose_signed(4, -1), BigUint::zero());
        let row = choose_row(6);
        assert_eq!(
            row.iter().map(|c| c.to_u64().unwrap()).collect::<Vec<_>>(),
            vec![1, 6, 15, 20, 15, 6, 1]
        );
    }

    #[test]
    fn ln_of_huge_integer() {
        let c = choose(3000, 1500);
        // ln C(3000, 1500) from the ln-gamma identity, good to ~1e-9 at this size.
        let reference = statrs::function::gamma::ln_gamma(3001.0)
            - 2.0 * statrs::function::gamma::ln_gamma(1501.0);
        assert!((ln_biguint(&c) - reference).abs() < 1e-8);
    }
}
