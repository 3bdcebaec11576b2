//! Randomization likelihood of `(N10, N11)` for a fixed number of harmed units.
//!
//! A completely randomized experiment draws `N1` units without replacement
//! from an urn holding the four potential-outcome types. Given the observed
//! table and a candidate `(N10, N11, N01)`, the only unknown is `x`, the
//! number of `(1,1)` units landing in treatment; the likelihood sums the
//! multivariate hypergeometric mass over the feasible `x`. With `N01 = 0`
//! the range of `x` collapses to a single value.

mod logcomb;

pub use logcomb::{is_log_zero, log_choose, log_choose_or_zero, log_sum_exp, LOG_ZERO};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{choose, choose_signed, from_uint};
use crate::tables::{general_support, in_general_support, ObservedTable, ParameterPoint};

/// Inclusive range `[L, U]` of treated `(1,1)` units consistent with the data.
/// Empty when `L > U`.
fn latent_range(obs: &ObservedTable, point: &ParameterPoint) -> (i64, i64) {
    let n = obs.total() as i64;
    let (o11, o10, o01) = (obs.n11() as i64, obs.n10() as i64, obs.n01() as i64);
    let (n10, n11, k) = (point.n10 as i64, point.n11 as i64, point.n01 as i64);
    let lo = 0.max(o11 - n10).max(n11 - o01).max(k + n11 - o10 - o01);
    let hi = n11.min(o11).min(k + n11 - o01).min(n - n10 - o10 - o01);
    (lo, hi)
}

/// Cell sizes `(N11, N10, N01, N00)` of the candidate population, if it fits.
fn cells(obs: &ObservedTable, point: &ParameterPoint) -> Option<[i64; 4]> {
    let n = obs.total() as i64;
    let n00 = n - (point.n10 + point.n11 + point.n01) as i64;
    (n00 >= 0).then_some([point.n11 as i64, point.n10 as i64, point.n01 as i64, n00])
}

// Counts drawn into treatment from each cell when `x` (1,1) units are treated.
fn treated_draws(obs: &ObservedTable, cells: &[i64; 4], x: i64) -> [i64; 4] {
    let (o11, o10, o01) = (obs.n11() as i64, obs.n10() as i64, obs.n01() as i64);
    let [n11, _, k, _] = *cells;
    [x, o11 - x, k + n11 - o01 - x, o10 + o01 + x - k - n11]
}

/// Likelihood under monotonicity, in log space.
///
/// Points carrying `n01 > 0` lie outside the monotone model and get [`LOG_ZERO`].
pub fn loglik_monotone(obs: &ObservedTable, point: &ParameterPoint) -> f64 {
    if point.n01 != 0 {
        return LOG_ZERO;
    }
    let n = obs.total();
    let (o11, o10, o01) = (obs.n11(), obs.n10(), obs.n01());
    let sum = point.n10 + point.n11;
    let in_region =
        o01 <= point.n11 && point.n11 <= o11 + o01 && o11 + o01 <= sum && sum <= n - o10;
    if !in_region {
        return LOG_ZERO;
    }
    let n11 = point.n11 as i64;
    let n10 = point.n10 as i64;
    log_choose_or_zero(n11, n11 - o01 as i64)
        + log_choose_or_zero(n10, (o11 + o01) as i64 - n11)
        + log_choose_or_zero(n as i64 - n10 - n11, o10 as i64)
        - log_choose_or_zero(n as i64, obs.n1() as i64)
}

/// Likelihood for a fixed `n01` carried by the point, in log space.
pub fn loglik_general(obs: &ObservedTable, point: &ParameterPoint) -> f64 {
    if !in_general_support(obs, point) {
        return LOG_ZERO;
    }
    let Some(cells) = cells(obs, point) else {
        return LOG_ZERO;
    };
    let (lo, hi) = latent_range(obs, point);
    if lo > hi {
        return LOG_ZERO;
    }
    let terms: Vec<f64> = (lo..=hi)
        .map(|x| {
            let draws = treated_draws(obs, &cells, x);
            cells
                .iter()
                .zip(draws.iter())
                .map(|(&c, &d)| log_choose_or_zero(c, d))
                .sum()
        })
        .collect();
    log_sum_exp(&terms) - log_choose_or_zero(obs.total() as i64, obs.n1() as i64)
}

/// Number of treatment assignments that produce `obs` from the candidate
/// population. Computed without consulting the support predicate.
pub fn assignment_count(obs: &ObservedTable, point: &ParameterPoint) -> BigUint {
    let Some(cells) = cells(obs, point) else {
        return BigUint::zero();
    };
    let (lo, hi) = latent_range(obs, point);
    let mut total = BigUint::zero();
    for x in lo..=hi {
        let draws = treated_draws(obs, &cells, x);
        let mut term = choose_signed(cells[0], draws[0]);
        for j in 1..4 {
            if term.is_zero() {
                break;
            }
            term *= choose_signed(cells[j], draws[j]);
        }
        total += term;
    }
    total
}

/// Exact likelihood as a fraction of the `C(N, N1)` equally likely assignments.
pub fn likelihood_exact(obs: &ObservedTable, point: &ParameterPoint) -> BigRational {
    let count = assignment_count(obs, point);
    from_uint(&count) / from_uint(&choose(obs.total(), obs.n1()))
}

/// Log-likelihood values over the support for one value of `n01`.
#[derive(Debug, Clone, Serialize)]
pub struct LikelihoodSurface {
    pub n01: u64,
    pub n: u64,
    pub n1: u64,
    pub n0: u64,
    entries: Vec<(ParameterPoint, f64)>,
}

impl LikelihoodSurface {
    /// Entries in `(N11, N10)` lexicographic order.
    pub fn entries(&self) -> &[(ParameterPoint, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, point: &ParameterPoint) -> Option<f64> {
        self.entries
            .binary_search_by(|(p, _)| p.cmp(point))
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Log of the summed likelihood over the support.
    pub fn log_total(&self) -> f64 {
        let values: Vec<f64> = self.entries.iter().map(|(_, v)| *v).collect();
        log_sum_exp(&values)
    }
}

pub fn surface(obs: &ObservedTable, n01: u64) -> LikelihoodSurface {
    let entries = general_support(obs, n01)
        .into_par_iter()
        .map(|p| (p, loglik_general(obs, &p)))
        .collect();
    LikelihoodSurface {
        n01,
        n: obs.total(),
        n1: obs.n1(),
        n0: obs.n0(),
        entries,
    }
}

/// Maximum-likelihood points for one `n01`, with exact ties kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxLikelihood {
    pub n01: u64,
    pub points: Vec<ParameterPoint>,
    /// Distinct `N * tau` values over the argmax points, ascending.
    pub tau_numerators: Vec<i64>,
    pub taus: Vec<f64>,
    pub log_likelihood: f64,
}

// Log-likelihoods within this distance of the maximum are rechecked exactly.
const TIE_SCREEN: f64 = 1e-9;

pub fn mle(obs: &ObservedTable, n01: u64) -> Result<MaxLikelihood> {
    let surface = surface(obs, n01);
    if surface.is_empty() {
        return Err(Error::EmptySupport(n01));
    }
    let best = surface
        .entries()
        .iter()
        .map(|(_, v)| *v)
        .fold(LOG_ZERO, f64::max);
    let candidates: Vec<(ParameterPoint, BigUint)> = surface
        .entries()
        .iter()
        .filter(|(_, v)| best - v <= TIE_SCREEN)
        .map(|(p, _)| (*p, assignment_count(obs, p)))
        .collect();
    let top = candidates
        .iter()
        .map(|(_, c)| c)
        .max()
        .cloned()
        .unwrap_or_default();
    let points: Vec<ParameterPoint> = candidates
        .into_iter()
        .filter(|(_, c)| *c == top)
        .map(|(p, _)| p)
        .collect();
    let mut tau_numerators: Vec<i64> = points.iter().map(|p| p.tau_numerator()).collect();
    tau_numerators.sort_unstable();
    tau_numerators.dedup();
    let n = obs.total() as f64;
    Ok(MaxLikelihood {
        n01,
        taus: tau_numerators.iter().map(|&k| k as f64 / n).collect(),
        tau_numerators,
        points,
        log_likelihood: best,
    })
}
