//! Inference for the attributable effect `A`, the number of treated units
//! whose outcome was changed by treatment.
//!
//! `A = n11_obs + n01_obs - S` with `S = N11 + N01` the number of units with
//! `Y(0) = 1`, so inference on `A` reduces to inference on `S`. The control
//! count `n01_obs` is hypergeometric in `S` with `N0` draws, which gives exact
//! tests of `S = s` that do not depend on monotonicity.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bayes::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::exact::{choose, choose_row, from_uint, int, ratio, to_f64};
use crate::likelihood::log_choose_or_zero;
use crate::moments::{tau_hat, two_sided_z, IntervalEstimate, Method};
use crate::tables::{ObservedTable, ScienceTable};

// Populations up to this size get exact rational p-values.
const EXACT_PVALUE_MAX_N: u64 = 1000;
// Relative tolerance for mass ties on the floating-point path.
const FLOAT_TIE: f64 = 1e-7;

/// Hypergeometric law of the number of successes among `draws` units drawn
/// without replacement from `population` units of which `successes` succeed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HypergeomLaw {
    population: u64,
    successes: u64,
    draws: u64,
}

impl HypergeomLaw {
    pub fn new(population: u64, successes: u64, draws: u64) -> Result<Self> {
        if successes > population {
            return Err(Error::InvalidArgument(format!(
                "successes {successes} exceed population {population}"
            )));
        }
        if draws == 0 || draws >= population {
            return Err(Error::InvalidArgument(format!(
                "draws must be in 1..{population}, got {draws}"
            )));
        }
        Ok(Self {
            population,
            successes,
            draws,
        })
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Inclusive range of attainable values.
    pub fn support(&self) -> (u64, u64) {
        let failures = self.population - self.successes;
        (
            self.draws.saturating_sub(failures),
            self.successes.min(self.draws),
        )
    }

    pub fn contains(&self, h: u64) -> bool {
        let (lo, hi) = self.support();
        lo <= h && h <= hi
    }

    /// `C(s, h) C(N - s, draws - h)`, the number of draws yielding `h`.
    pub fn pmf_count(&self, h: u64) -> BigUint {
        if !self.contains(h) {
            return BigUint::zero();
        }
        choose(self.successes, h) * choose(self.population - self.successes, self.draws - h)
    }

    pub fn pmf_exact(&self, h: u64) -> BigRational {
        from_uint(&self.pmf_count(h)) / from_uint(&choose(self.population, self.draws))
    }

    pub fn ln_pmf(&self, h: u64) -> f64 {
        if !self.contains(h) {
            return f64::NEG_INFINITY;
        }
        let (n, s, d) = (
            self.population as i64,
            self.successes as i64,
            self.draws as i64,
        );
        let h = h as i64;
        log_choose_or_zero(s, h) + log_choose_or_zero(n - s, d - h) - log_choose_or_zero(n, d)
    }

    pub fn pmf(&self, h: u64) -> f64 {
        self.ln_pmf(h).exp()
    }

    /// Exact two-sided p-value of `observed`: total mass of values no more
    /// probable than it. Zero when `observed` is unattainable.
    pub fn pvalue_exact(&self, observed: u64) -> BigRational {
        if !self.contains(observed) {
            return BigRational::zero();
        }
        let (lo, hi) = self.support();
        let row_s = choose_row(self.successes);
        let row_f = choose_row(self.population - self.successes);
        let count = |h: u64| &row_s[h as usize] * &row_f[(self.draws - h) as usize];
        let threshold = count(observed);
        let mut tail = BigUint::zero();
        for h in lo..=hi {
            let c = count(h);
            if c <= threshold {
                tail += c;
            }
        }
        from_uint(&tail) / from_uint(&choose(self.population, self.draws))
    }

    /// Floating-point two-sided p-value, ties judged with a relative tolerance.
    pub fn pvalue_float(&self, observed: u64) -> f64 {
        if !self.contains(observed) {
            return 0.0;
        }
        let (lo, hi) = self.support();
        let threshold = self.ln_pmf(observed) + FLOAT_TIE.ln_1p();
        let p: f64 = (lo..=hi)
            .map(|h| self.ln_pmf(h))
            .filter(|&l| l <= threshold)
            .map(f64::exp)
            .sum();
        p.min(1.0)
    }
}

/// Law of `n01_obs` when `s` units have `Y(0) = 1`.
pub fn control_law(obs: &ObservedTable, s: u64) -> Result<HypergeomLaw> {
    HypergeomLaw::new(obs.total(), s, obs.n0())
}

/// Exact p-value for the hypothesis `S = s`.
pub fn pvalue_s_exact(obs: &ObservedTable, s: u64) -> Result<BigRational> {
    Ok(control_law(obs, s)?.pvalue_exact(obs.n01()))
}

/// p-value for the hypothesis `S = s`; exact arithmetic for `N <= 1000`.
pub fn pvalue_s(obs: &ObservedTable, s: u64) -> Result<f64> {
    let law = control_law(obs, s)?;
    Ok(if obs.total() <= EXACT_PVALUE_MAX_N {
        to_f64(&law.pvalue_exact(obs.n01()))
    } else {
        law.pvalue_float(obs.n01())
    })
}

/// Attributable effect implied by `S = s`.
pub fn a_from_s(obs: &ObservedTable, s: u64) -> i64 {
    (obs.n11() + obs.n01()) as i64 - s as i64
}

/// Values of `S` under which the observed control count has positive probability.
pub fn feasible_s(obs: &ObservedTable) -> std::ops::RangeInclusive<u64> {
    obs.n01()..=obs.total() - obs.n00()
}

// p(s) over the feasible s, with exact values when affordable.
struct PValueCurve {
    s: Vec<u64>,
    values: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl PValueCurve {
    fn new(obs: &ObservedTable) -> Self {
        let s: Vec<u64> = feasible_s(obs).collect();
        let laws: Vec<HypergeomLaw> = s
            .iter()
            .map(|&v| control_law(obs, v).expect("feasible s gives a valid law"))
            .collect();
        if obs.total() <= EXACT_PVALUE_MAX_N {
            let exact: Vec<BigRational> = laws.iter().map(|l| l.pvalue_exact(obs.n01())).collect();
            Self {
                values: exact.iter().map(to_f64).collect(),
                exact: Some(exact),
                s,
            }
        } else {
            Self {
                values: laws.iter().map(|l| l.pvalue_float(obs.n01())).collect(),
                exact: None,
                s,
            }
        }
    }

    fn cmp(&self, i: usize, j: usize) -> Ordering {
        match &self.exact {
            Some(e) => e[i].cmp(&e[j]),
            None => {
                let (a, b) = (self.values[i], self.values[j]);
                if (a - b).abs() <= FLOAT_TIE * a.max(b) {
                    Ordering::Equal
                } else {
                    a.total_cmp(&b)
                }
            }
        }
    }

    fn exceeds(&self, i: usize, alpha: f64) -> bool {
        match &self.exact {
            Some(e) => match BigRational::from_f64(alpha) {
                Some(a) => e[i] > a,
                None => self.values[i] > alpha,
            },
            None => self.values[i] > alpha,
        }
    }
}

/// Hodges-Lehmann-type point estimates of `A`: every `A` whose `s` maximizes
/// the p-value, ascending.
pub fn hl_estimate_a(obs: &ObservedTable) -> Vec<i64> {
    let curve = PValueCurve::new(obs);
    let mut best = 0;
    for i in 1..curve.s.len() {
        if curve.cmp(i, best) == Ordering::Greater {
            best = i;
        }
    }
    let mut a: Vec<i64> = (0..curve.s.len())
        .filter(|&i| curve.cmp(i, best) == Ordering::Equal)
        .map(|i| a_from_s(obs, curve.s[i]))
        .collect();
    a.sort_unstable();
    a
}

/// Interval for `A` from inverting the exact tests of `S = s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionInterval {
    /// Hull of the retained values; the point is the mean of the HL set.
    pub estimate: IntervalEstimate,
    /// Every retained `A`, ascending.
    pub retained: Vec<i64>,
    pub contiguous: bool,
}

/// Retains every `A` whose `s` has `p(s) > alpha`.
pub fn interval_a(obs: &ObservedTable, alpha: f64) -> Result<InversionInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let curve = PValueCurve::new(obs);
    let mut retained: Vec<i64> = (0..curve.s.len())
        .filter(|&i| curve.exceeds(i, alpha))
        .map(|i| a_from_s(obs, curve.s[i]))
        .collect();
    retained.sort_unstable();
    let (Some(&lower), Some(&upper)) = (retained.first(), retained.last()) else {
        return Err(Error::InvalidArgument(format!(
            "no value of A has p-value above {alpha}"
        )));
    };
    let hl = hl_estimate_a(obs);
    let point = hl.iter().sum::<i64>() as f64 / hl.len() as f64;
    let contiguous = retained.windows(2).all(|w| w[1] == w[0] + 1);
    Ok(InversionInterval {
        estimate: IntervalEstimate {
            point,
            lower: lower as f64,
            upper: upper as f64,
            level: 1.0 - alpha,
            method: Method::ExactInversion,
        },
        retained,
        contiguous,
    })
}

/// Which arm's outcome variance enters the prediction error of `N1 tau_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MseArm {
    /// `p0_hat (1 - p0_hat)`, the variance that actually governs the error.
    #[default]
    Control,
    /// `p1_hat (1 - p1_hat)`; reproduces intervals published with this substitution.
    Treated,
}

/// Estimated mean squared error of `N1 tau_hat` as a predictor of `A`.
pub fn prediction_mse(obs: &ObservedTable, arm: MseArm) -> f64 {
    let (n, n1, n0) = (obs.total() as f64, obs.n1() as f64, obs.n0() as f64);
    let p = match arm {
        MseArm::Control => obs.p0_hat(),
        MseArm::Treated => obs.p1_hat(),
    };
    n * n * n1 * p * (1.0 - p) / (n0 * (n - 1.0))
}

/// Normal-approximation prediction interval `N1 tau_hat +/- z sqrt(MSE)`.
///
/// Not rounded to integers even though `A` is one.
pub fn neyman_predict_a(obs: &ObservedTable, level: f64, arm: MseArm) -> IntervalEstimate {
    let point = obs.n1() as f64 * tau_hat(obs);
    let half = two_sided_z(level) * prediction_mse(obs, arm).sqrt();
    IntervalEstimate {
        point,
        lower: point - half,
        upper: point + half,
        level,
        method: Method::Prediction,
    }
}

/// Exact `var(A - N1 tau_hat)` over all assignments, `N N1 / N0 * S0^2`.
pub fn population_prediction_mse(science: &ScienceTable, n1: u64) -> BigRational {
    let n = science.total();
    let n0 = n - n1;
    let p0 = science.p0_exact();
    let s0_sq = ratio(n, n - 1) * &p0 * (int(1) - &p0);
    ratio(BigInt::from(n) * BigInt::from(n1), n0) * s0_sq
}

/// p-values over the feasible `s`, rescaled to sum to one and indexed by `A`.
pub fn standardized_pvalues(obs: &ObservedTable) -> Result<DiscreteDistribution> {
    let curve = PValueCurve::new(obs);
    DiscreteDistribution::from_weights(
        curve
            .s
            .iter()
            .zip(curve.values.iter())
            .map(|(&s, &p)| (a_from_s(obs, s), p)),
        1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn obs(a: u64, b: u64, c: u64, d: u64) -> ObservedTable {
        ObservedTable::new(a, b, c, d).unwrap()
    }

    fn illustration() -> ObservedTable {
        obs(18, 14, 5, 16)
    }

    #[test]
    fn law_validation_and_normalization() {
        assert!(HypergeomLaw::new(5, 6, 2).is_err());
        assert!(HypergeomLaw::new(5, 2, 0).is_err());
        assert!(HypergeomLaw::new(5, 2, 5).is_err());
        for n in 2..=12u64 {
            for s in 0..=n {
                for d in 1..n {
                    let law = HypergeomLaw::new(n, s, d).unwrap();
                    let (lo, hi) = law.support();
                    let total: BigRational = (lo..=hi).map(|h| law.pmf_exact(h)).sum();
                    assert!(total.is_one());
                }
            }
        }
    }

    #[test]
    fn degenerate_law_has_p_one() {
        // s = 0 forces n01_obs = 0. With s = 1 the observed 0 is the modal
        // value (probability 3/5), so it also has p-value one.
        let o = obs(0, 3, 0, 2);
        assert!(pvalue_s_exact(&o, 0).unwrap().is_one());
        assert!(pvalue_s_exact(&o, 1).unwrap().is_one());
        assert_eq!(hl_estimate_a(&o), vec![-1, 0]);
    }

    #[test]
    fn modal_value_has_p_one() {
        // N = 4, N0 = 2, s = 2: pmf over h = 0, 1, 2 is 1/6, 2/3, 1/6.
        let o = obs(1, 1, 1, 1);
        let law = control_law(&o, 2).unwrap();
        assert_eq!(law.pmf_exact(1), ratio(2, 3));
        assert_eq!(law.pmf_exact(0), ratio(1, 6));
        assert!(pvalue_s_exact(&o, 2).unwrap().is_one());
        assert_eq!(pvalue_s(&o, 2).unwrap(), 1.0);
    }

    #[test]
    fn unattainable_observation_has_p_zero() {
        let o = illustration();
        assert!(pvalue_s_exact(&o, 4).unwrap().is_zero());
        assert_eq!(pvalue_s(&o, 50).unwrap(), 0.0);
    }

    #[test]
    fn hl_set_for_illustration() {
        assert_eq!(hl_estimate_a(&illustration()), vec![9, 10, 11]);
    }

    #[test]
    fn inversion_interval_for_illustration() {
        let o = illustration();
        let inv = interval_a(&o, 0.05).unwrap();
        assert_eq!((inv.estimate.lower, inv.estimate.upper), (2.0, 16.0));
        assert!(inv.contiguous);
        assert_eq!(inv.estimate.point, 10.0);
        for s in 0..=o.total() {
            let a = a_from_s(&o, s);
            let p = pvalue_s(&o, s).unwrap();
            assert_eq!(p > 0.05, inv.retained.contains(&a), "s = {s}, p = {p}");
            assert_eq!(p > 0.05, (7..=21).contains(&s));
        }
    }

    #[test]
    fn inversion_widens_as_alpha_shrinks() {
        let o = illustration();
        let narrow = interval_a(&o, 0.2).unwrap().estimate;
        let wide = interval_a(&o, 1e-12).unwrap().estimate;
        assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
        let all: Vec<i64> = feasible_s(&o).map(|s| a_from_s(&o, s)).collect();
        assert_eq!(wide.lower, *all.iter().min().unwrap() as f64);
        assert!(interval_a(&o, 0.0).is_err());
    }

    #[test]
    fn prediction_for_illustration() {
        let o = illustration();
        let pred = neyman_predict_a(&o, 0.95, MseArm::Control);
        assert!((pred.point - 10.38).abs() < 0.01);
        assert!((pred.lower - 2.81).abs() < 0.01 && (pred.upper - 17.96).abs() < 0.01);
        let compat = neyman_predict_a(&o, 0.95, MseArm::Treated);
        assert!((compat.lower - 1.56).abs() < 0.01 && (compat.upper - 19.20).abs() < 0.01);
    }

    #[test]
    fn standardized_curve_for_illustration() {
        let o = illustration();
        let d = standardized_pvalues(&o).unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        let max = d.mass().iter().copied().fold(0.0, f64::max);
        let argmax: Vec<i64> = d
            .support()
            .iter()
            .zip(d.mass())
            .filter(|(_, m)| **m == max)
            .map(|(a, _)| *a)
            .collect();
        assert_eq!(argmax, vec![9, 10, 11]);
        // Without monotonicity A may be negative; the monotone posterior
        // lives on the nonnegative part of the same grid.
        assert_eq!(d.support()[0], -14);
        let posterior = crate::bayes::a_posterior(&o, 0, &crate::bayes::Prior::Uniform).unwrap();
        assert_eq!(posterior.support(), &d.support()[14..]);
    }

    #[test]
    fn float_path_agrees_with_exact() {
        for (n, s, d, h) in [
            (53, 13, 21, 5),
            (53, 23, 21, 5),
            (40, 7, 20, 0),
            (30, 15, 10, 8),
        ] {
            let law = HypergeomLaw::new(n, s, d).unwrap();
            let exact = to_f64(&law.pvalue_exact(h));
            assert!(
                (law.pvalue_float(h) - exact).abs() < 1e-9,
                "{n} {s} {d} {h}"
            );
        }
    }

    #[test]
    fn large_population_uses_float_path() {
        let o = obs(700, 500, 300, 900);
        let hl = hl_estimate_a(&o);
        assert!(!hl.is_empty());
        let inv = interval_a(&o, 0.05).unwrap();
        assert!(
            inv.estimate.lower <= hl[0] as f64 && hl[hl.len() - 1] as f64 <= inv.estimate.upper
        );
        // Moment prediction should land inside the exact interval at this size.
        let pred = neyman_predict_a(&o, 0.95, MseArm::Control);
        assert!(inv.estimate.contains(pred.point));
    }
}
