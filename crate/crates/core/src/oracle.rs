//! Ground truth by brute force over the randomization distribution.
//!
//! Exact enumeration works over type compositions of the treatment arm:
//! how many units of each potential-outcome type were treated. All
//! assignments with the same composition produce the same observed table,
//! so each composition is weighted by its number of assignments. Monte Carlo
//! stands in when the design is too large to enumerate.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exact::{choose, from_uint, int, ratio, to_f64, weighted_moments};
use crate::moments::{improved_variance, moment_cells_exact, population_variance, tau_hat_exact};
use crate::tables::{ObservedTable, ScienceTable};

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Generator used for every stochastic path. Draw `i` uses stream `i` of a
/// ChaCha8 generator seeded with the user seed, so results do not depend on
/// how draws are scheduled across threads.
pub const PRNG_NAME: &str = "chacha8/rand_chacha-0.9/seed_from_u64/stream=draw-index";

/// Treated counts of each potential-outcome type `(11, 10, 01, 00)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Composition {
    pub x11: u64,
    pub x10: u64,
    pub x01: u64,
    pub x00: u64,
}

impl Composition {
    pub fn observed(&self, science: &ScienceTable) -> Result<ObservedTable> {
        ObservedTable::new(
            self.x11 + self.x10,
            self.x01 + self.x00,
            (science.n11() - self.x11) + (science.n01() - self.x01),
            (science.n10() - self.x10) + (science.n00() - self.x00),
        )
    }

    /// Treated units helped minus treated units harmed.
    pub fn attributable(&self) -> i64 {
        self.x10 as i64 - self.x01 as i64
    }

    /// Number of assignments with this composition.
    pub fn assignments(&self, science: &ScienceTable) -> BigUint {
        choose(science.n11(), self.x11)
            * choose(science.n10(), self.x10)
            * choose(science.n01(), self.x01)
            * choose(science.n00(), self.x00)
    }
}

/// Everything the randomization does with one composition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionRecord {
    pub composition: Composition,
    #[serde(serialize_with = "ser_display")]
    pub assignments: BigUint,
    #[serde(serialize_with = "ser_display")]
    pub probability: BigRational,
    pub observed: ObservedTable,
    #[serde(serialize_with = "ser_display")]
    pub tau_hat: BigRational,
    pub attributable: i64,
}

fn ser_display<T: std::fmt::Display, S: serde::Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Exact randomization distribution of a design.
#[derive(Debug, Clone)]
pub struct AssignmentDistribution {
    pub science: ScienceTable,
    pub n1: u64,
    records: Vec<CompositionRecord>,
    outcomes: BTreeMap<ObservedTable, BigRational>,
}

fn check_design(science: &ScienceTable, n1: u64) -> Result<()> {
    if n1 == 0 || n1 >= science.total() {
        return Err(Error::InvalidArgument(format!(
            "treated count must be in 1..{}, got {n1}",
            science.total()
        )));
    }
    Ok(())
}

fn compositions(science: &ScienceTable, n1: u64) -> Vec<Composition> {
    let mut out = Vec::new();
    for x11 in 0..=science.n11().min(n1) {
        for x10 in 0..=science.n10().min(n1 - x11) {
            for x01 in 0..=science.n01().min(n1 - x11 - x10) {
                let x00 = n1 - x11 - x10 - x01;
                if x00 <= science.n00() {
                    out.push(Composition { x11, x10, x01, x00 });
                }
            }
        }
    }
    out
}

/// Enumerates the design exactly, refusing when `C(N, N1)` exceeds `cap`.
pub fn enumerate_with_cap(
    science: &ScienceTable,
    n1: u64,
    cap: u64,
) -> Result<AssignmentDistribution> {
    check_design(science, n1)?;
    let total = choose(science.total(), n1);
    if total > BigUint::from(cap) {
        return Err(Error::EnumerationCapExceeded {
            n: science.total(),
            n1,
            count: total.to_string(),
            cap,
        });
    }
    let denominator = from_uint(&total);
    let records: Vec<CompositionRecord> = compositions(science, n1)
        .into_iter()
        .map(|c| {
            let assignments = c.assignments(science);
            let observed = c.observed(science)?;
            Ok(CompositionRecord {
                probability: from_uint(&assignments) / &denominator,
                tau_hat: tau_hat_exact(&observed),
                attributable: c.attributable(),
                composition: c,
                assignments,
                observed,
            })
        })
        .collect::<Result<_>>()?;
    let mut outcomes: BTreeMap<ObservedTable, BigRational> = BTreeMap::new();
    for r in &records {
        *outcomes.entry(r.observed).or_insert_with(BigRational::zero) += &r.probability;
    }
    Ok(AssignmentDistribution {
        science: *science,
        n1,
        records,
        outcomes,
    })
}

pub fn enumerate(science: &ScienceTable, n1: u64) -> Result<AssignmentDistribution> {
    enumerate_with_cap(science, n1, DEFAULT_ENUMERATION_CAP)
}

impl AssignmentDistribution {
    pub fn records(&self) -> &[CompositionRecord] {
        &self.records
    }

    /// Observed tables with their exact probabilities.
    pub fn outcomes(&self) -> &BTreeMap<ObservedTable, BigRational> {
        &self.outcomes
    }

    pub fn probability_of(&self, obs: &ObservedTable) -> BigRational {
        self.outcomes
            .get(obs)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total_probability(&self) -> BigRational {
        self.records.iter().map(|r| &r.probability).sum()
    }

    /// Sum of the composition weights; equals `C(N, N1)`.
    pub fn total_assignments(&self) -> BigUint {
        self.records.iter().map(|r| &r.assignments).sum()
    }

    /// Exact mean and variance of a statistic of each composition.
    pub fn moments_of<F>(&self, stat: F) -> (BigRational, BigRational)
    where
        F: Fn(&CompositionRecord) -> BigRational,
    {
        let items: Vec<(BigRational, BigRational)> = self
            .records
            .iter()
            .map(|r| (r.probability.clone(), stat(r)))
            .collect();
        weighted_moments(&items)
    }

    pub fn tau_hat_moments(&self) -> (BigRational, BigRational) {
        self.moments_of(|r| r.tau_hat.clone())
    }

    /// Mean and variance of `A - N1 tau_hat`.
    pub fn prediction_error_moments(&self) -> (BigRational, BigRational) {
        let n1 = int(self.n1);
        self.moments_of(|r| int(r.attributable) - &n1 * &r.tau_hat)
    }

    /// Expected moment estimates `(N11, N00, N10)` when the true `N01` is plugged in.
    pub fn expected_moment_cells(&self) -> [BigRational; 3] {
        let mut acc = [
            BigRational::zero(),
            BigRational::zero(),
            BigRational::zero(),
        ];
        for r in &self.records {
            let cells = moment_cells_exact(&r.observed, self.science.n01());
            for (a, c) in acc.iter_mut().zip(cells.iter()) {
                *a += &r.probability * c;
            }
        }
        acc
    }
}

/// Monte Carlo stand-in for [`AssignmentDistribution`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    pub science: ScienceTable,
    pub n1: u64,
    pub draws: u64,
    pub seed: u64,
    pub prng: &'static str,
    counts: BTreeMap<Composition, u64>,
}

fn draw_composition(science: &ScienceTable, n1: u64, seed: u64, index: u64) -> Composition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let cuts = [
        science.n11(),
        science.n11() + science.n10(),
        science.n11() + science.n10() + science.n01(),
    ];
    let mut c = Composition {
        x11: 0,
        x10: 0,
        x01: 0,
        x00: 0,
    };
    for unit in rand::seq::index::sample(&mut rng, science.total() as usize, n1 as usize) {
        let u = unit as u64;
        if u < cuts[0] {
            c.x11 += 1;
        } else if u < cuts[1] {
            c.x10 += 1;
        } else if u < cuts[2] {
            c.x01 += 1;
        } else {
            c.x00 += 1;
        }
    }
    c
}

/// Draws `draws` completely randomized assignments.
pub fn monte_carlo(
    science: &ScienceTable,
    n1: u64,
    draws: u64,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    check_design(science, n1)?;
    if draws == 0 {
        return Err(Error::InvalidArgument(
            "monte carlo needs at least one draw".into(),
        ));
    }
    let counts = (0..draws)
        .into_par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<Composition, u64>, i| {
            *acc.entry(draw_composition(science, n1, seed, i))
                .or_insert(0) += 1;
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(EmpiricalDistribution {
        science: *science,
        n1,
        draws,
        seed,
        prng: PRNG_NAME,
        counts,
    })
}

impl EmpiricalDistribution {
    pub fn composition_counts(&self) -> &BTreeMap<Composition, u64> {
        &self.counts
    }

    /// Observed tables with their empirical frequencies.
    pub fn outcome_frequencies(&self) -> BTreeMap<ObservedTable, f64> {
        let mut out = BTreeMap::new();
        for (c, n) in &self.counts {
            let obs = c
                .observed(&self.science)
                .expect("design has two nonempty arms");
            *out.entry(obs).or_insert(0.0) += *n as f64 / self.draws as f64;
        }
        out
    }

    fn moments_of<F: Fn(&Composition, &ObservedTable) -> f64>(&self, stat: F) -> (f64, f64) {
        let d = self.draws as f64;
        let values: Vec<(f64, f64)> = self
            .counts
            .iter()
            .map(|(c, n)| {
                let obs = c
                    .observed(&self.science)
                    .expect("design has two nonempty arms");
                (*n as f64, stat(c, &obs))
            })
            .collect();
        let mean = values.iter().map(|(n, v)| n * v).sum::<f64>() / d;
        let var = values
            .iter()
            .map(|(n, v)| n * (v - mean).powi(2))
            .sum::<f64>()
            / d;
        (mean, var)
    }

    /// Empirical mean and variance of `tau_hat`.
    pub fn tau_hat_moments(&self) -> (f64, f64) {
        self.moments_of(|_, o| o.p1_hat() - o.p0_hat())
    }

    /// Empirical mean and variance of `A - N1 tau_hat`.
    pub fn prediction_error_moments(&self) -> (f64, f64) {
        let n1 = self.n1 as f64;
        self.moments_of(|c, o| c.attributable() as f64 - n1 * (o.p1_hat() - o.p0_hat()))
    }
}

/// Exact moments of `sum W_i c_i` over all completely randomized assignments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentSumReport {
    #[serde(serialize_with = "ser_display")]
    pub mean: BigRational,
    #[serde(serialize_with = "ser_display")]
    pub variance: BigRational,
    #[serde(serialize_with = "ser_display")]
    pub expected_mean: BigRational,
    #[serde(serialize_with = "ser_display")]
    pub expected_variance: BigRational,
    pub matches: bool,
}

/// Enumerates every treated subset and compares with `N1 c_bar` and
/// `(N1 N0 / N) S_c^2`.
pub fn assignment_sum_check(constants: &[f64], n1: u64, cap: u64) -> Result<AssignmentSumReport> {
    let n = constants.len() as u64;
    if n < 2 || n1 == 0 || n1 >= n {
        return Err(Error::InvalidArgument(format!(
            "need N >= 2 constants and 1 <= N1 < N, got N = {n}, N1 = {n1}"
        )));
    }
    let subsets = choose(n, n1);
    if subsets > BigUint::from(cap) {
        return Err(Error::EnumerationCapExceeded {
            n,
            n1,
            count: subsets.to_string(),
            cap,
        });
    }
    let c: Vec<BigRational> = constants
        .iter()
        .map(|&v| {
            BigRational::from_f64(v)
                .ok_or_else(|| Error::InvalidArgument(format!("constant {v} is not finite")))
        })
        .collect::<Result<_>>()?;
    let weight = BigRational::one() / from_uint(&subsets);
    let items: Vec<(BigRational, BigRational)> = (0..n as usize)
        .combinations(n1 as usize)
        .map(|idx| (weight.clone(), idx.iter().map(|&i| &c[i]).sum()))
        .collect();
    let (mean, variance) = weighted_moments(&items);

    let c_bar: BigRational = c.iter().sum::<BigRational>() / int(n);
    let s_sq: BigRational = c
        .iter()
        .map(|v| (v - &c_bar) * (v - &c_bar))
        .sum::<BigRational>()
        / int(n - 1);
    let expected_mean = int(n1) * &c_bar;
    let expected_variance = ratio(n1 * (n - n1), n) * s_sq;
    let matches = mean == expected_mean && variance == expected_variance;
    Ok(AssignmentSumReport {
        mean,
        variance,
        expected_mean,
        expected_variance,
        matches,
    })
}

/// Distance of the studentized estimator from a standard normal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub science: ScienceTable,
    pub n1: u64,
    pub draws: u64,
    pub seed: u64,
    pub prng: &'static str,
    /// Kolmogorov-Smirnov distance of `(tau_hat - tau) / sqrt(V_hat)`.
    pub ks_distance: Option<f64>,
    /// Draws whose plug-in variance was not positive; left out of the statistic.
    pub excluded_draws: u64,
    pub skipped: Option<String>,
}

pub fn normality_check(
    science: &ScienceTable,
    n1: u64,
    draws: u64,
    seed: u64,
) -> Result<NormalityReport> {
    check_design(science, n1)?;
    let mut report = NormalityReport {
        science: *science,
        n1,
        draws,
        seed,
        prng: PRNG_NAME,
        ks_distance: None,
        excluded_draws: 0,
        skipped: None,
    };
    if population_variance(science, n1).is_zero() {
        report.skipped = Some("randomization variance of tau_hat is zero".into());
        return Ok(report);
    }
    let empirical = monte_carlo(science, n1, draws, seed)?;
    let tau = to_f64(&science.tau_exact());
    let mut points: Vec<(f64, u64)> = Vec::new();
    for (c, count) in empirical.composition_counts() {
        let obs = c.observed(science)?;
        let v = improved_variance(&obs);
        if v > 0.0 {
            points.push((((obs.p1_hat() - obs.p0_hat()) - tau) / v.sqrt(), *count));
        } else {
            report.excluded_draws += count;
        }
    }
    let used: u64 = points.iter().map(|(_, c)| c).sum();
    if used == 0 {
        report.skipped = Some("no draw had a positive plug-in variance".into());
        return Ok(report);
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let normal = Normal::standard();
    let mut below = 0u64;
    let mut distance: f64 = 0.0;
    let mut i = 0;
    while i < points.len() {
        let z = points[i].0;
        let mut at = 0;
        while i < points.len() && points[i].0 == z {
            at += points[i].1;
            i += 1;
        }
        let phi = normal.cdf(z);
        let before = below as f64 / used as f64;
        below += at;
        let after = below as f64 / used as f64;
        distance = distance.max((before - phi).abs()).max((after - phi).abs());
    }
    report.ks_distance = Some(distance);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attributable::population_prediction_mse;

    fn science(a: u64, b: u64, c: u64, d: u64) -> ScienceTable {
        ScienceTable::new(a, b, c, d).unwrap()
    }

    #[test]
    fn three_equiprobable_tables() {
        let dist = enumerate(&science(1, 1, 0, 1), 1).unwrap();
        assert_eq!(dist.outcomes().len(), 3);
        assert!(dist.outcomes().values().all(|p| *p == ratio(1, 3)));
        assert_eq!(dist.total_assignments(), BigUint::from(3u32));
    }

    #[test]
    fn all_failures_give_one_table() {
        for n1 in 1..5 {
            let dist = enumerate(&science(0, 0, 0, 5), n1).unwrap();
            assert_eq!(dist.outcomes().len(), 1);
            assert!(dist.total_probability().is_one());
        }
    }

    #[test]
    fn six_assignment_case() {
        // Science (1, 2, 0, 1), N1 = 2.
        let s = science(1, 2, 0, 1);
        let dist = enumerate(&s, 2).unwrap();
        assert_eq!(dist.total_assignments(), BigUint::from(6u32));
        let (mean, var) = dist.tau_hat_moments();
        assert_eq!(mean, ratio(1, 2));
        assert_eq!(var, ratio(1, 6));
        assert_eq!(var, population_variance(&s, 2));
        let (err_mean, err_var) = dist.prediction_error_moments();
        assert!(err_mean.is_zero());
        assert_eq!(err_var, int(1));
        assert_eq!(err_var, population_prediction_mse(&s, 2));
    }

    #[test]
    fn cap_is_enforced() {
        let s = science(10, 10, 10, 10);
        assert!(matches!(
            enumerate_with_cap(&s, 20, 1000),
            Err(Error::EnumerationCapExceeded { .. })
        ));
        assert!(enumerate(&s, 0).is_err());
    }

    #[test]
    fn assignment_sum_hand_cases() {
        let r = assignment_sum_check(&[1.0, 0.0, 0.0], 1, 100).unwrap();
        assert_eq!(r.mean, ratio(1, 3));
        assert_eq!(r.variance, ratio(2, 9));
        assert!(r.matches);
        let r = assignment_sum_check(&[2.5; 5], 2, 100).unwrap();
        assert!(r.variance.is_zero() && r.matches);
        assert!(
            assignment_sum_check(&[1.0, 1.0, 0.0, 0.0], 2, 100)
                .unwrap()
                .matches
        );
        assert!(assignment_sum_check(&[1.0; 20], 10, 100).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let s = science(13, 10, 0, 30);
        let a = monte_carlo(&s, 32, 2000, 7).unwrap();
        let b = monte_carlo(&s, 32, 2000, 7).unwrap();
        let c = monte_carlo(&s, 32, 2000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.composition_counts().values().sum::<u64>(), 2000);
    }

    #[test]
    fn monte_carlo_mean_is_tau() {
        let s = science(13, 10, 0, 30);
        let emp = monte_carlo(&s, 32, 100_000, 11).unwrap();
        let (mean, _) = emp.tau_hat_moments();
        let se = (to_f64(&population_variance(&s, 32)) / 100_000.0).sqrt();
        assert!((mean - 10.0 / 53.0).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn monte_carlo_prediction_variance() {
        let s = science(13, 10, 0, 30);
        let emp = monte_carlo(&s, 32, 1_000_000, 3).unwrap();
        let (_, var) = emp.prediction_error_moments();
        let want = to_f64(&population_prediction_mse(&s, 32));
        assert!((var / want - 1.0).abs() < 0.05, "{var} vs {want}");
    }

    #[test]
    fn normality_degenerate_is_skipped() {
        let r = normality_check(&science(0, 0, 0, 6), 3, 10_000, 1).unwrap();
        assert!(r.skipped.is_some() && r.ks_distance.is_none());
    }

    #[test]
    fn normality_is_seeded() {
        let s = science(10, 10, 0, 20);
        let a = normality_check(&s, 20, 10_000, 5).unwrap();
        let b = normality_check(&s, 20, 10_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.ks_distance.unwrap() < 0.5);
    }
}
