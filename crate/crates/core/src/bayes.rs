//! Posterior inference over the `(N10, N11)` grid for a fixed `N01`.
//!
//! The parameter space is finite, so any prior gives a proper posterior.
//! Posteriors of `tau` and of the attributable effect are pushforwards of the
//! point posterior.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{self, is_log_zero, LOG_ZERO};
use crate::moments::{IntervalEstimate, Method};
use crate::tables::{ObservedTable, ParameterPoint};

const MASS_TOLERANCE: f64 = 1e-9;
// Slack when comparing accumulated mass against a target level.
const LEVEL_SLACK: f64 = 1e-12;

/// Probability mass over integer grid values `support[i] / scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    support: Vec<i64>,
    scale: u64,
    mass: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution, checking order and normalization.
    pub fn new(support: Vec<i64>, scale: u64, mass: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != mass.len() || scale == 0 {
            return Err(Error::InvalidArgument(
                "distribution needs a nonempty support matching its masses".into(),
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "distribution support must be strictly increasing".into(),
            ));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidArgument(
                "masses must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "masses sum to {total}, not 1"
            )));
        }
        Ok(Self {
            support,
            scale,
            mass,
        })
    }

    /// Aggregates unnormalized weights by grid value and normalizes them.
    pub fn from_weights<I>(weights: I, scale: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, f64)>,
    {
        let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
        for (k, w) in weights {
            *acc.entry(k).or_insert(0.0) += w;
        }
        let total: f64 = acc.values().sum();
        if total.is_nan() || total <= 0.0 || total.is_infinite() {
            return Err(Error::InvalidArgument(
                "weights must have a positive finite sum".into(),
            ));
        }
        let (support, mass) = acc.into_iter().map(|(k, w)| (k, w / total)).unzip();
        Self::new(support, scale, mass)
    }

    /// Integer grid labels, ascending.
    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn value(&self, index: usize) -> f64 {
        self.support[index] as f64 / self.scale as f64
    }

    /// `(value, mass)` pairs in ascending order of value.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |i| (self.value(i), self.mass[i]))
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mass_at(&self, label: i64) -> f64 {
        self.support
            .binary_search(&label)
            .map_or(0.0, |i| self.mass[i])
    }

    /// Index of the most probable value; the smallest one when several tie.
    pub fn mode_index(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.mass[i] > self.mass[best] {
                best = i;
            }
        }
        best
    }

    pub fn mode(&self) -> f64 {
        self.value(self.mode_index())
    }

    /// Grid label of the mode.
    pub fn mode_label(&self) -> i64 {
        self.support[self.mode_index()]
    }

    /// Smallest value whose cumulative mass reaches one half.
    pub fn median(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += self.mass[i];
            if acc >= 0.5 - LEVEL_SLACK {
                return self.value(i);
            }
        }
        self.value(self.len() - 1)
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, m)| v * m).sum()
    }
}

/// Prior weights over `(N10, N11)` for a fixed `N01`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum Prior {
    /// Equal weight on every grid point.
    #[default]
    Uniform,
    /// Explicit weights keyed by `(N10, N11)`; unlisted points get zero.
    Table(BTreeMap<(u64, u64), f64>),
}

impl Prior {
    /// A table prior from `(n10, n11, weight)` entries.
    ///
    /// Negative or non-finite weights are rejected, listing every offender.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u64, f64)>,
    {
        let mut table = BTreeMap::new();
        let mut bad = Vec::new();
        for (n10, n11, w) in entries {
            if !w.is_finite() || w < 0.0 {
                bad.push(format!("(n10={n10}, n11={n11}, weight={w})"));
            } else {
                *table.entry((n10, n11)).or_insert(0.0) += w;
            }
        }
        if !bad.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "invalid prior weights: {}",
                bad.join(", ")
            )));
        }
        Ok(Prior::Table(table))
    }

    pub fn point_mass(point: &ParameterPoint) -> Self {
        Prior::Table([((point.n10, point.n11), 1.0)].into_iter().collect())
    }

    pub fn weight(&self, point: &ParameterPoint) -> f64 {
        match self {
            Prior::Uniform => 1.0,
            Prior::Table(t) => t.get(&(point.n10, point.n11)).copied().unwrap_or(0.0),
        }
    }
}

/// Posterior probabilities of the grid points for one `N01`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointPosterior {
    pub n01: u64,
    pub n: u64,
    points: Vec<ParameterPoint>,
    mass: Vec<f64>,
}

impl PointPosterior {
    pub fn points(&self) -> &[ParameterPoint] {
        &self.points
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ParameterPoint, f64)> + '_ {
        self.points.iter().zip(self.mass.iter().copied())
    }

    /// Points of largest posterior mass.
    pub fn argmax(&self) -> Vec<ParameterPoint> {
        let best = self.mass.iter().copied().fold(0.0, f64::max);
        self.iter()
            .filter(|(_, m)| *m == best)
            .map(|(p, _)| *p)
            .collect()
    }
}

pub fn posterior_points(obs: &ObservedTable, n01: u64, prior: &Prior) -> Result<PointPosterior> {
    let surface = likelihood::surface(obs, n01);
    if surface.is_empty() {
        return Err(Error::EmptySupport(n01));
    }
    let logs: Vec<(ParameterPoint, f64)> = surface
        .entries()
        .iter()
        .map(|(p, ll)| {
            let w = prior.weight(p);
            let lw = if w > 0.0 { w.ln() + ll } else { LOG_ZERO };
            (*p, lw)
        })
        .filter(|(_, lw)| !is_log_zero(*lw))
        .collect();
    if logs.is_empty() {
        return Err(Error::PriorAnnihilatesSupport);
    }
    let max = logs.iter().map(|(_, v)| *v).fold(LOG_ZERO, f64::max);
    let weights: Vec<f64> = logs.iter().map(|(_, v)| (v - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(PointPosterior {
        n01,
        n: obs.total(),
        points: logs.iter().map(|(p, _)| *p).collect(),
        mass: weights.iter().map(|w| w / total).collect(),
    })
}

/// Posterior of `tau = (N10 - N01) / N`, labelled by `N10 - N01`.
pub fn tau_posterior(obs: &ObservedTable, n01: u64, prior: &Prior) -> Result<DiscreteDistribution> {
    let post = posterior_points(obs, n01, prior)?;
    tau_from_points(&post)
}

pub fn tau_from_points(post: &PointPosterior) -> Result<DiscreteDistribution> {
    DiscreteDistribution::from_weights(post.iter().map(|(p, m)| (p.tau_numerator(), m)), post.n)
}

/// Posterior of the attributable effect `A = n11_obs + n01_obs - N01 - N11`.
pub fn a_posterior(obs: &ObservedTable, n01: u64, prior: &Prior) -> Result<DiscreteDistribution> {
    let post = posterior_points(obs, n01, prior)?;
    a_from_points(obs, &post)
}

pub fn a_from_points(obs: &ObservedTable, post: &PointPosterior) -> Result<DiscreteDistribution> {
    DiscreteDistribution::from_weights(post.iter().map(|(p, m)| (p.attributable(obs), m)), 1)
}

/// How a highest-probability interval is cut from a discrete distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HpdRule {
    /// Shortest contiguous window holding at least the target mass.
    #[default]
    MinimalWindow,
    /// Add values in decreasing order of mass until the target is reached,
    /// then add one more, and report the hull.
    OneStepPast,
}

/// Highest-probability interval under [`HpdRule::MinimalWindow`]; the point is the mode.
pub fn hpd_interval(dist: &DiscreteDistribution, level: f64) -> IntervalEstimate {
    hpd_interval_with(dist, level, HpdRule::MinimalWindow)
}

pub fn hpd_interval_with(
    dist: &DiscreteDistribution,
    level: f64,
    rule: HpdRule,
) -> IntervalEstimate {
    let (lo, hi) = match rule {
        HpdRule::MinimalWindow => minimal_window(dist, level),
        HpdRule::OneStepPast => one_step_past(dist, level),
    };
    IntervalEstimate {
        point: dist.mode(),
        lower: dist.value(lo),
        upper: dist.value(hi),
        level,
        method: Method::BayesHpd,
    }
}

fn minimal_window(dist: &DiscreteDistribution, level: f64) -> (usize, usize) {
    let n = dist.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + dist.mass()[i];
    }
    let mode = dist.mode_index();
    for width in 1..=n {
        let mut best: Option<(usize, f64)> = None;
        for start in 0..=n - width {
            let m = prefix[start + width] - prefix[start];
            if m < level - LEVEL_SLACK {
                continue;
            }
            best = match best {
                None => Some((start, m)),
                Some((b, bm)) => {
                    let better = if (m - bm).abs() > LEVEL_SLACK {
                        m > bm
                    } else {
                        // Distance of the window centre from the mode, doubled.
                        let off = |s: usize| (2 * s + width - 1).abs_diff(2 * mode);
                        off(start) < off(b)
                    };
                    if better {
                        Some((start, m))
                    } else {
                        Some((b, bm))
                    }
                }
            };
        }
        if let Some((start, _)) = best {
            return (start, start + width - 1);
        }
    }
    (0, n - 1)
}

fn one_step_past(dist: &DiscreteDistribution, level: f64) -> (usize, usize) {
    let mode = dist.mode_index();
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| {
        dist.mass()[b]
            .total_cmp(&dist.mass()[a])
            .then(a.abs_diff(mode).cmp(&b.abs_diff(mode)))
            .then(a.cmp(&b))
    });
    let mut acc = 0.0;
    let mut taken = order.len();
    for (count, &i) in order.iter().enumerate() {
        acc += dist.mass()[i];
        if acc >= level - LEVEL_SLACK {
            taken = (count + 2).min(order.len());
            break;
        }
    }
    let chosen = &order[..taken];
    let lo = *chosen.iter().min().unwrap_or(&0);
    let hi = *chosen.iter().max().unwrap_or(&0);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(a: u64, b: u64, c: u64, d: u64) -> ObservedTable {
        ObservedTable::new(a, b, c, d).unwrap()
    }

    #[test]
    fn rejects_malformed_distributions() {
        assert!(DiscreteDistribution::new(vec![1, 1], 1, vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![2, 1], 1, vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![1, 2], 1, vec![0.5, 0.4]).is_err());
        assert!(DiscreteDistribution::new(vec![], 1, vec![]).is_err());
        assert!(DiscreteDistribution::from_weights([(0, 0.0)], 1).is_err());
    }

    #[test]
    fn uniform_prior_posterior_is_normalized_likelihood() {
        let o = obs(3, 2, 1, 3);
        let post = posterior_points(&o, 0, &Prior::Uniform).unwrap();
        let surface = likelihood::surface(&o, 0);
        let total = surface.log_total();
        for ((p, m), (q, ll)) in post.iter().zip(surface.entries()) {
            assert_eq!(p, q);
            assert!((m - (ll - total).exp()).abs() < 1e-14);
        }
        assert!((post.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_prior_gives_point_mass() {
        let o = obs(18, 14, 5, 16);
        let target = ParameterPoint::new(15, 10, 0);
        let prior = Prior::point_mass(&target);
        let post = posterior_points(&o, 0, &prior).unwrap();
        assert_eq!(post.points(), &[target]);
        assert_eq!(post.mass(), &[1.0]);
        let a = a_posterior(&o, 0, &prior).unwrap();
        assert_eq!(a.support(), &[23 - 10]);
    }

    #[test]
    fn prior_off_support_is_error() {
        let o = obs(18, 14, 5, 16);
        let prior = Prior::point_mass(&ParameterPoint::new(0, 0, 0));
        assert_eq!(
            posterior_points(&o, 0, &prior),
            Err(Error::PriorAnnihilatesSupport)
        );
        assert!(Prior::from_entries([(1, 1, -1.0), (2, 2, f64::NAN)]).is_err());
    }

    #[test]
    fn tau_posterior_for_illustration() {
        let o = obs(18, 14, 5, 16);
        let tau = tau_posterior(&o, 0, &Prior::Uniform).unwrap();
        assert!((tau.total_mass() - 1.0).abs() < 1e-9);
        assert_eq!(tau.scale(), 53);
        // The exact mode lands on 17/53; the median on 16/53.
        assert_eq!(tau.mode_label(), 17);
        assert!((tau.median() - 16.0 / 53.0).abs() < 1e-12);
        let hpd = hpd_interval(&tau, 0.95);
        assert_eq!((hpd.lower * 53.0).round() as i64, 4);
        assert_eq!((hpd.upper * 53.0).round() as i64, 26);
        let wide = hpd_interval_with(&tau, 0.95, HpdRule::OneStepPast);
        assert_eq!((wide.upper * 53.0).round() as i64, 27);
    }

    #[test]
    fn a_posterior_for_illustration() {
        let o = obs(18, 14, 5, 16);
        let a = a_posterior(&o, 0, &Prior::Uniform).unwrap();
        assert_eq!(a.mode_label(), 10);
        assert!(*a.support().last().unwrap() <= 18);
        let hpd = hpd_interval(&a, 0.95);
        assert_eq!((hpd.lower, hpd.upper), (2.0, 16.0));
        let wide = hpd_interval_with(&a, 0.95, HpdRule::OneStepPast);
        assert_eq!((wide.lower, wide.upper), (1.0, 16.0));
    }

    #[test]
    fn hpd_near_one_covers_support() {
        let d = DiscreteDistribution::new(vec![0, 1, 2, 3], 1, vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let h = hpd_interval(&d, 1.0 - 1e-15);
        assert_eq!((h.lower, h.upper), (0.0, 3.0));
        let h = hpd_interval(&d, 0.4);
        assert_eq!((h.lower, h.upper, h.point), (1.0, 1.0, 1.0));
    }

    #[test]
    fn two_point_symmetric() {
        let d = DiscreteDistribution::new(vec![0, 1], 1, vec![0.5, 0.5]).unwrap();
        let h = hpd_interval(&d, 0.6);
        assert_eq!((h.lower, h.upper), (0.0, 1.0));
        assert_eq!(d.mode(), 0.0);
    }

    #[test]
    fn equal_mass_windows_prefer_centered() {
        // Width-3 windows [0..2] and [2..4] both hold 0.7; the mode sits at 2,
        // so both are equally off-centre and the leftmost wins. Window [1..3]
        // holds 0.8 and beats both on mass.
        let d = DiscreteDistribution::new(vec![0, 1, 2, 3, 4], 1, vec![0.1, 0.2, 0.4, 0.2, 0.1])
            .unwrap();
        let h = hpd_interval(&d, 0.75);
        assert_eq!((h.lower, h.upper), (1.0, 3.0));
    }

    #[test]
    fn median_and_mean() {
        let d = DiscreteDistribution::new(vec![-1, 0, 2], 2, vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(d.median(), 0.0);
        assert!((d.mean() - (-0.125 + 0.5)).abs() < 1e-15);
        assert_eq!(d.mass_at(2), 0.5);
        assert_eq!(d.mass_at(1), 0.0);
    }
}
