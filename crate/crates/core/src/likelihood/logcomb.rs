//! Log binomial coefficients and log-space accumulation.

use crate::error::{Error, Result};

/// The log of zero probability. Orders below every finite log value.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

pub fn is_log_zero(v: f64) -> bool {
    v == LOG_ZERO
}

// Largest n for which every C(n, k) fits in a u64.
const EXACT_MAX_N: i64 = 67;
const SMALL_K: i64 = 20;

/// Natural log of `C(n, k)`.
///
/// Exact integer arithmetic is used for `n <= 67`; above that, a direct sum
/// for small `min(k, n - k)` and a Stirling expansion with a corrected
/// remainder otherwise.
pub fn log_choose(n: i64, k: i64) -> Result<f64> {
    if k < 0 || n < 0 || k > n {
        return Err(Error::ChooseOutOfRange { n, k });
    }
    let k = k.min(n - k);
    if k == 0 {
        return Ok(0.0);
    }
    if n <= EXACT_MAX_N {
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        return Ok((acc as f64).ln());
    }
    if k <= SMALL_K {
        let base = (n - k) as f64;
        let sum: f64 = (1..=k).map(|i| ((base + i as f64) / i as f64).ln()).sum();
        return Ok(sum);
    }
    let (nf, kf) = (n as f64, k as f64);
    let rest = nf - kf;
    let frac = kf / nf;
    let main = -kf * frac.ln() - rest * (-frac).ln_1p();
    let half = 0.5 * (nf / (2.0 * std::f64::consts::PI * kf * rest)).ln();
    Ok(main + half + stirling_remainder(nf) - stirling_remainder(kf) - stirling_remainder(rest))
}

/// `log_choose`, with out-of-range arguments mapped to [`LOG_ZERO`].
pub fn log_choose_or_zero(n: i64, k: i64) -> f64 {
    log_choose(n, k).unwrap_or(LOG_ZERO)
}

// ln(n!) - (n ln n - n + ln(2 pi n) / 2), valid for n >= 21.
fn stirling_remainder(n: f64) -> f64 {
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0
        - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))))
}

/// `ln(sum(exp(v)))` over the values, ignoring [`LOG_ZERO`] entries.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(LOG_ZERO, f64::max);
    if is_log_zero(max) {
        return LOG_ZERO;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{choose, ln_biguint};

    fn exact_ln(n: u64, k: u64) -> f64 {
        ln_biguint(&choose(n, k))
    }

    #[test]
    fn edges_are_zero() {
        for n in [0, 1, 7, 67, 68, 500, 1_000_000] {
            assert_eq!(log_choose(n, 0).unwrap(), 0.0);
            assert_eq!(log_choose(n, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn out_of_range_is_error() {
        assert_eq!(
            log_choose(5, 6),
            Err(Error::ChooseOutOfRange { n: 5, k: 6 })
        );
        assert!(log_choose(5, -1).is_err());
        assert!(is_log_zero(log_choose_or_zero(3, 4)));
    }

    #[test]
    fn matches_big_integer_c_53_32() {
        let got = log_choose(53, 32).unwrap();
        assert!((got - exact_ln(53, 32)).abs() < 1e-10);
    }

    #[test]
    fn matches_big_integers_across_paths() {
        for n in [60u64, 67, 68, 100, 250, 999, 4000] {
            for k in [1, 5, 20, 21, 22, 33, n / 3, n / 2] {
                if k > n {
                    continue;
                }
                let got = log_choose(n as i64, k as i64).unwrap();
                let want = exact_ln(n, k);
                assert!((got - want).abs() < 1e-10, "C({n},{k}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn large_n_accuracy() {
        let (n, k) = (100_000u64, 50_000u64);
        let got = log_choose(n as i64, k as i64).unwrap();
        let want = exact_ln(n, k);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn log_sum_exp_handles_zeros() {
        assert!(is_log_zero(log_sum_exp(&[])));
        assert!(is_log_zero(log_sum_exp(&[LOG_ZERO, LOG_ZERO])));
        let v = log_sum_exp(&[(0.25f64).ln(), LOG_ZERO, (0.5f64).ln()]);
        assert!((v - (0.75f64).ln()).abs() < 1e-15);
    }
}
