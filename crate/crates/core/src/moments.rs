//! Moment estimators, plug-in variances and normal-approximation intervals.
//!
//! Everything here works with the difference-in-means estimator
//! `tau_hat = n11/N1 - n01/N0`. With the number `N01` of harmed units fixed,
//! every cell of the science table is identified and the randomization
//! variance of `tau_hat` has a closed form, which gives the sensitivity
//! analysis over `N01`.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exact::{int, ratio};
use crate::tables::{ObservedTable, ScienceTable};

/// Which procedure produced an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Plug-in variance without the `tau(1 - tau)/N` correction.
    Neyman,
    /// Unbiased per-arm sample variances, `s1^2/N1 + s0^2/N0`.
    Conventional,
    /// Plug-in variance valid under monotonicity.
    Improved,
    /// Plug-in variance for a hypothesized number of harmed units.
    Sensitivity,
    BayesHpd,
    ExactInversion,
    Prediction,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Neyman => "neyman",
            Method::Conventional => "conventional",
            Method::Improved => "improved",
            Method::Sensitivity => "sensitivity",
            Method::BayesHpd => "bayes-hpd",
            Method::ExactInversion => "exact-inversion",
            Method::Prediction => "prediction",
        }
    }
}

/// A point value with an interval around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: Method,
}

impl IntervalEstimate {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

pub fn tau_hat(obs: &ObservedTable) -> f64 {
    obs.p1_hat() - obs.p0_hat()
}

/// Exact `tau_hat` as a fraction.
pub fn tau_hat_exact(obs: &ObservedTable) -> BigRational {
    ratio(obs.n11(), obs.n1()) - ratio(obs.n01(), obs.n0())
}

/// Moment estimates of the science-table cells for a known `N01`.
///
/// These are unbiased but unconstrained: they can be fractional or negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellEstimates {
    pub n11: f64,
    pub n00: f64,
    pub n10: f64,
}

impl CellEstimates {
    /// Whether every estimate is a count the population could actually have.
    pub fn in_parameter_space(&self) -> bool {
        [self.n11, self.n00, self.n10].iter().all(|v| *v >= 0.0)
    }
}

pub fn moment_cells(obs: &ObservedTable, n01: u64) -> CellEstimates {
    let n = obs.total() as f64;
    let k = n01 as f64;
    let scaled_control = n / obs.n0() as f64 * obs.n01() as f64;
    let scaled_treated = n / obs.n1() as f64 * obs.n10() as f64;
    CellEstimates {
        n11: scaled_control - k,
        n00: scaled_treated - k,
        n10: n + k - scaled_control - scaled_treated,
    }
}

/// Exact version of [`moment_cells`], as `(N11, N00, N10)`.
pub fn moment_cells_exact(obs: &ObservedTable, n01: u64) -> [BigRational; 3] {
    let n = obs.total();
    let k = int(n01);
    let scaled_control = ratio(n * obs.n01(), obs.n0());
    let scaled_treated = ratio(n * obs.n10(), obs.n1());
    [
        &scaled_control - &k,
        &scaled_treated - &k,
        int(n) + &k - scaled_control - scaled_treated,
    ]
}

// p1(1-p1)/N1 + p0(1-p0)/N0 at the observed proportions.
fn arm_terms(obs: &ObservedTable) -> f64 {
    let (p1, p0) = (obs.p1_hat(), obs.p0_hat());
    p1 * (1.0 - p1) / obs.n1() as f64 + p0 * (1.0 - p0) / obs.n0() as f64
}

fn finite_correction(obs: &ObservedTable) -> f64 {
    let n = obs.total() as f64;
    n / (n - 1.0)
}

/// Plug-in variance of `tau_hat` under monotonicity.
pub fn improved_variance(obs: &ObservedTable) -> f64 {
    let t = tau_hat(obs);
    let n = obs.total() as f64;
    finite_correction(obs) * (arm_terms(obs) - t * (1.0 - t) / n)
}

/// [`improved_variance`] without the `tau_hat(1 - tau_hat)/N` term.
pub fn neyman_variance(obs: &ObservedTable) -> f64 {
    finite_correction(obs) * arm_terms(obs)
}

/// The textbook `s1^2/N1 + s0^2/N0` with per-arm `N_w - 1` divisors.
///
/// An arm of one unit contributes zero.
pub fn conventional_variance(obs: &ObservedTable) -> f64 {
    let arm = |success: u64, size: u64| {
        if size < 2 {
            return 0.0;
        }
        let p = success as f64 / size as f64;
        p * (1.0 - p) / (size as f64 - 1.0)
    };
    arm(obs.n11(), obs.n1()) + arm(obs.n01(), obs.n0())
}

/// Plug-in variance of `tau_hat` when `n01` units are harmed by treatment.
///
/// Negative values mean `n01` is implausible for these data and are reported
/// as errors rather than clamped.
pub fn sensitivity_variance(obs: &ObservedTable, n01: u64) -> Result<f64> {
    let n = obs.total() as f64;
    let t = tau_hat(obs);
    let variance =
        finite_correction(obs) * (arm_terms(obs) - t * (1.0 - t) / n - 2.0 * n01 as f64 / (n * n));
    if variance < 0.0 {
        return Err(Error::NegativeVariance { n01, variance });
    }
    Ok(variance)
}

/// `N/(N-1) {p1(1-p1)/N1 + p0(1-p0)/N0 - tau(1-tau)/N - 2 N01/N^2}` with
/// `tau = p1 - p0`, in exact arithmetic. At the population margins this is
/// the randomization variance of `tau_hat`; at the observed proportions with
/// `n01 = 0` it is [`improved_variance`].
pub fn variance_formula(
    n: u64,
    n1: u64,
    p1: &BigRational,
    p0: &BigRational,
    n01: u64,
) -> BigRational {
    let n0 = n - n1;
    let one = int(1);
    let tau = p1 - p0;
    let bracket = p1 * (&one - p1) / int(n1) + p0 * (&one - p0) / int(n0)
        - &tau * (&one - &tau) / int(n)
        - ratio(2 * n01, n * n);
    ratio(n, n - 1) * bracket
}

/// Randomization variance of `tau_hat` for a known population, exactly.
pub fn population_variance(science: &ScienceTable, n1: u64) -> BigRational {
    variance_formula(
        science.total(),
        n1,
        &science.p1_exact(),
        &science.p0_exact(),
        science.n01(),
    )
}

/// Lower and upper bounds of [`population_variance`] over the admissible
/// `N01` range, at the population margins. The lower end corresponds to
/// uncorrelated potential outcomes and the upper end to monotonicity.
pub fn population_variance_bounds(science: &ScienceTable, n1: u64) -> (BigRational, BigRational) {
    let n = science.total();
    let n0 = n - n1;
    let p1 = science.p1_exact();
    let p0 = science.p0_exact();
    let tau = science.tau_exact();
    let one = int(1);
    let scale = ratio(n, n - 1);
    let lower = &scale
        * (ratio(n0, n) * &p1 * (&one - &p1) / int(n1)
            + ratio(n1, n) * &p0 * (&one - &p0) / int(n0));
    let upper = &scale
        * (&p1 * (&one - &p1) / int(n1) + &p0 * (&one - &p0) / int(n0)
            - &tau * (&one - &tau) / int(n));
    (lower, upper)
}

/// Assumption used to bound the number of harmed units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundAssumption {
    /// Only the marginal constraints.
    Frechet,
    /// Nonnegative correlation between the potential outcomes.
    NonnegCorrelation,
    /// Nonnegative correlation and a nonnegative average effect.
    NonnegCorrelationAndEffect,
}

/// Integer range of `N01` allowed by the plug-in bounds, rounded inward.
pub fn n01_bounds(obs: &ObservedTable, assumption: BoundAssumption) -> Result<(u64, u64)> {
    let n = obs.total();
    let (n1, n0) = (BigInt::from(obs.n1()), BigInt::from(obs.n0()));
    let nb = BigInt::from(n);
    // N tau_hat = N (n11 N0 - n01 N1) / (N1 N0)
    let tau_num = BigInt::from(obs.n11()) * &n0 - BigInt::from(obs.n01()) * &n1;
    let neg_n_tau = BigRational::new(-(&nb * tau_num), &n1 * &n0);
    let frechet_lo = neg_n_tau.ceil().to_integer().max(BigInt::from(0));

    let n_p0 = BigRational::new(&nb * BigInt::from(obs.n01()), n0.clone());
    let n_q1 = BigRational::new(&nb * BigInt::from(obs.n10()), n1.clone());
    let independence = BigRational::new(
        &nb * BigInt::from(obs.n01()) * BigInt::from(obs.n10()),
        &n0 * &n1,
    );

    let (lo, hi) = match assumption {
        BoundAssumption::Frechet => (frechet_lo, n_p0.min(n_q1).floor().to_integer()),
        BoundAssumption::NonnegCorrelation => (frechet_lo, independence.floor().to_integer()),
        BoundAssumption::NonnegCorrelationAndEffect => {
            (BigInt::from(0), independence.floor().to_integer())
        }
    };
    let lo: i64 = lo.try_into().unwrap_or(i64::MAX);
    let hi: i64 = hi.try_into().unwrap_or(i64::MIN);
    if hi < lo {
        return Err(Error::EmptyBounds { lo, hi });
    }
    Ok((lo as u64, hi as u64))
}

/// Standard normal quantile `z` with `P(|Z| <= z) = level`.
pub fn two_sided_z(level: f64) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(0.5 + level / 2.0)
}

/// Normal-approximation interval `tau_hat +/- z sqrt(variance)`.
///
/// Deliberately not clipped to `[-1, 1]`.
pub fn confidence_interval(
    point: f64,
    variance: f64,
    level: f64,
    method: Method,
) -> IntervalEstimate {
    let half = two_sided_z(level) * variance.sqrt();
    IntervalEstimate {
        point,
        lower: point - half,
        upper: point + half,
        level,
        method,
    }
}

/// Interval for `tau` using the named variance formula.
pub fn estimate(
    obs: &ObservedTable,
    method: Method,
    n01: u64,
    level: f64,
) -> Result<IntervalEstimate> {
    let variance = match method {
        Method::Neyman => neyman_variance(obs),
        Method::Conventional => conventional_variance(obs),
        Method::Improved => improved_variance(obs),
        Method::Sensitivity => sensitivity_variance(obs, n01)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "{} is not a moment method",
                other.as_str()
            )))
        }
    };
    Ok(confidence_interval(tau_hat(obs), variance, level, method))
}

/// One row of a sensitivity analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub n01: u64,
    pub point: f64,
    /// `None` when the plug-in variance is negative at this `n01`.
    pub variance: Option<f64>,
    pub interval: Option<IntervalEstimate>,
}

impl SensitivityRow {
    pub fn feasible(&self) -> bool {
        self.variance.is_some()
    }

    pub fn length(&self) -> Option<f64> {
        self.interval.map(|i| i.length())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCurve {
    pub observed: ObservedTable,
    pub level: f64,
    pub rows: Vec<SensitivityRow>,
}

/// Moment-based intervals over a set of hypothesized `n01` values, in input order.
pub fn sensitivity_sweep<I>(obs: &ObservedTable, n01_values: I, level: f64) -> SensitivityCurve
where
    I: IntoIterator<Item = u64>,
{
    let point = tau_hat(obs);
    let rows = n01_values
        .into_iter()
        .map(|n01| {
            let variance = sensitivity_variance(obs, n01).ok();
            SensitivityRow {
                n01,
                point,
                variance,
                interval: variance
                    .map(|v| confidence_interval(point, v, level, Method::Sensitivity)),
            }
        })
        .collect();
    SensitivityCurve {
        observed: *obs,
        level,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(a: u64, b: u64, c: u64, d: u64) -> ObservedTable {
        ObservedTable::new(a, b, c, d).unwrap()
    }

    fn illustration() -> ObservedTable {
        obs(18, 14, 5, 16)
    }

    #[test]
    fn tau_hat_values() {
        assert!((tau_hat(&illustration()) - (18.0 / 32.0 - 5.0 / 21.0)).abs() < 1e-15);
        assert!((tau_hat(&illustration()) - 0.324).abs() < 5e-4);
        assert_eq!(tau_hat(&obs(4, 0, 0, 3)), 1.0);
        assert_eq!(tau_hat(&obs(1, 1, 1, 1)), 0.0);
    }

    #[test]
    fn moment_cells_for_illustration() {
        let c = moment_cells(&illustration(), 0);
        assert!((c.n11 - 53.0 * 5.0 / 21.0).abs() < 1e-12);
        assert!((c.n00 - 53.0 * 14.0 / 32.0).abs() < 1e-12);
        assert!((c.n11 + c.n00 + c.n10 - 53.0).abs() < 1e-12);
        assert!((c.n10 - 17.19).abs() < 0.01);
    }

    #[test]
    fn moment_cells_can_leave_parameter_space() {
        let c = moment_cells(&obs(0, 3, 0, 1), 0);
        assert_eq!(c.n11, 0.0);
        assert!(c.n10.abs() < 1e-12);
        // One harmed unit hypothesized pushes N11_hat negative.
        let c = moment_cells(&obs(0, 3, 0, 1), 1);
        assert!(c.n11 < 0.0);
        assert!(!c.in_parameter_space());
    }

    #[test]
    fn improved_and_neyman_for_illustration() {
        let o = illustration();
        let v = improved_variance(&o);
        assert!((v - 0.012428).abs() < 1e-6);
        let ci = confidence_interval(tau_hat(&o), v, 0.95, Method::Improved);
        assert!((ci.lower - 0.106).abs() < 0.001 && (ci.upper - 0.543).abs() < 0.001);
        let ci = estimate(&o, Method::Neyman, 0, 0.95).unwrap();
        assert!((ci.lower - 0.072).abs() < 0.001 && (ci.upper - 0.577).abs() < 0.001);
        assert!((ci.length() - 0.505).abs() < 0.001);
        let ci = estimate(&o, Method::Conventional, 0, 0.95).unwrap();
        assert!((ci.lower - 0.069).abs() < 0.001 && (ci.upper - 0.580).abs() < 0.001);
    }

    #[test]
    fn neyman_dominates_improved_when_tau_hat_nonnegative() {
        for o in [illustration(), obs(1, 1, 1, 1), obs(9, 1, 2, 8)] {
            assert!(neyman_variance(&o) >= improved_variance(&o));
        }
        // A negative tau_hat makes tau_hat (1 - tau_hat) negative.
        let o = obs(1, 9, 8, 2);
        assert!(neyman_variance(&o) < improved_variance(&o));
        let o = obs(1, 1, 1, 1);
        assert_eq!(neyman_variance(&o), improved_variance(&o));
    }

    #[test]
    fn sensitivity_rows_for_illustration() {
        let o = illustration();
        assert_eq!(sensitivity_variance(&o, 0).unwrap(), improved_variance(&o));
        let ci = estimate(&o, Method::Sensitivity, 2, 0.95).unwrap();
        assert!((ci.lower - 0.119).abs() < 0.001 && (ci.upper - 0.530).abs() < 0.001);
        let ci = estimate(&o, Method::Sensitivity, 5, 0.95).unwrap();
        assert!((ci.lower - 0.141).abs() < 0.001 && (ci.upper - 0.508).abs() < 0.001);
    }

    #[test]
    fn negative_variance_is_an_error() {
        let o = illustration();
        assert!(matches!(
            sensitivity_variance(&o, 60),
            Err(Error::NegativeVariance { n01: 60, .. })
        ));
    }

    #[test]
    fn bounds_for_illustration() {
        let o = illustration();
        assert_eq!(
            n01_bounds(&o, BoundAssumption::NonnegCorrelationAndEffect).unwrap(),
            (0, 5)
        );
        assert_eq!(
            n01_bounds(&o, BoundAssumption::NonnegCorrelation).unwrap(),
            (0, 5)
        );
        // min(53 * 5/21, 53 * 14/32) = min(12.6, 23.2)
        assert_eq!(n01_bounds(&o, BoundAssumption::Frechet).unwrap(), (0, 12));
        assert_eq!(
            n01_bounds(
                &obs(1, 1, 1, 1),
                BoundAssumption::NonnegCorrelationAndEffect
            )
            .unwrap(),
            (0, 1)
        );
    }

    #[test]
    fn negative_effect_raises_frechet_floor() {
        let o = obs(2, 8, 7, 3);
        let (lo, _) = n01_bounds(&o, BoundAssumption::Frechet).unwrap();
        // -N tau_hat = -20 (0.2 - 0.7) = 10
        assert_eq!(lo, 10);
    }

    #[test]
    fn inconsistent_bounds_are_errors() {
        // -N tau_hat = 3.5 and N p0 (1 - p1) = 3.5 round to 4 > 3.
        let o = obs(0, 3, 2, 2);
        assert!(matches!(
            n01_bounds(&o, BoundAssumption::NonnegCorrelation),
            Err(Error::EmptyBounds { .. })
        ));
    }

    #[test]
    fn interval_edge_cases() {
        let ci = confidence_interval(0.3, 0.0, 0.95, Method::Improved);
        assert_eq!((ci.lower, ci.upper), (0.3, 0.3));
        assert!((two_sided_z(0.95) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!(estimate(&illustration(), Method::BayesHpd, 0, 0.95).is_err());
    }

    #[test]
    fn sweep_lengths_shrink() {
        let curve = sensitivity_sweep(&illustration(), 0..=5, 0.95);
        assert_eq!(curve.rows.len(), 6);
        let lengths: Vec<f64> = curve.rows.iter().map(|r| r.length().unwrap()).collect();
        assert!(lengths.windows(2).all(|w| w[1] < w[0]));
        assert!((lengths[0] - 0.437).abs() < 0.001);
        assert!((lengths[5] - 0.367).abs() < 0.001);
        let single = sensitivity_sweep(&illustration(), [0], 0.95);
        assert_eq!(
            single.rows[0].interval.unwrap(),
            IntervalEstimate {
                method: Method::Sensitivity,
                ..estimate(&illustration(), Method::Improved, 0, 0.95).unwrap()
            }
        );
    }

    #[test]
    fn sweep_marks_infeasible_rows() {
        let curve = sensitivity_sweep(&illustration(), [0, 200], 0.95);
        assert!(curve.rows[0].feasible());
        assert!(!curve.rows[1].feasible());
        assert_eq!(curve.rows[1].n01, 200);
    }

    #[test]
    fn variance_step_per_harmed_unit() {
        let o = illustration();
        let n = 53.0f64;
        let step = 2.0 * n / ((n - 1.0) * n * n);
        for k in 0..5 {
            let d = sensitivity_variance(&o, k).unwrap() - sensitivity_variance(&o, k + 1).unwrap();
            assert!((d - step).abs() < 1e-15);
        }
    }

    #[test]
    fn population_variance_bounds_bracket() {
        // (N11, N10, N01, N00) with N01 inside [0, N p0 (1 - p1)].
        let s = ScienceTable::new(4, 3, 1, 4).unwrap();
        let (lo, hi) = population_variance_bounds(&s, 6);
        let v = population_variance(&s, 6);
        assert!(lo <= v && v <= hi);
    }
}
