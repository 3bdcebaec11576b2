//! Science tables, observed tables, and the parameter grids they induce.
//!
//! A binary outcome and a binary treatment give four potential-outcome types,
//! so the whole finite population is summarized by four counts. The observed
//! data after a completely randomized experiment is another four counts,
//! classified by treatment arm and observed outcome.
//!
//! All predicates in this module work on exact integers.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct RawCounts {
    n11: u64,
    n10: u64,
    n01: u64,
    n00: u64,
}

/// Counts of units by potential-outcome type `(Y(1), Y(0))`.
///
/// `n10` counts units helped by treatment and `n01` counts units harmed by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawCounts", into = "RawCounts")]
pub struct ScienceTable {
    n11: u64,
    n10: u64,
    n01: u64,
    n00: u64,
}

impl ScienceTable {
    pub fn new(n11: u64, n10: u64, n01: u64, n00: u64) -> Result<Self> {
        let total = n11 + n10 + n01 + n00;
        if total < 2 {
            return Err(Error::InvalidTable(format!(
                "science table ({n11}, {n10}, {n01}, {n00}) needs at least two units"
            )));
        }
        Ok(Self { n11, n10, n01, n00 })
    }

    pub fn n11(&self) -> u64 {
        self.n11
    }

    pub fn n10(&self) -> u64 {
        self.n10
    }

    pub fn n01(&self) -> u64 {
        self.n01
    }

    pub fn n00(&self) -> u64 {
        self.n00
    }

    /// Cell counts in the order `(n11, n10, n01, n00)`.
    pub fn counts(&self) -> [u64; 4] {
        [self.n11, self.n10, self.n01, self.n00]
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    /// Number of units with `Y(0) = 1`.
    pub fn s(&self) -> u64 {
        self.n11 + self.n01
    }

    pub fn margins(&self) -> Margins {
        derived_margins(self)
    }

    /// Average causal effect as an exact fraction.
    pub fn tau_exact(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.n10) - BigInt::from(self.n01),
            BigInt::from(self.total()),
        )
    }

    pub fn p1_exact(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.n11 + self.n10),
            BigInt::from(self.total()),
        )
    }

    pub fn p0_exact(&self) -> BigRational {
        BigRational::new(BigInt::from(self.s()), BigInt::from(self.total()))
    }

    /// The `(N10, N11)` grid coordinates of this table, with its `N01`.
    pub fn parameter_point(&self) -> ParameterPoint {
        ParameterPoint {
            n10: self.n10,
            n11: self.n11,
            n01: self.n01,
        }
    }

    /// Whether no unit is harmed by treatment.
    pub fn is_monotone(&self) -> bool {
        self.n01 == 0
    }
}

impl TryFrom<RawCounts> for ScienceTable {
    type Error = Error;

    fn try_from(raw: RawCounts) -> Result<Self> {
        Self::new(raw.n11, raw.n10, raw.n01, raw.n00)
    }
}

impl From<ScienceTable> for RawCounts {
    fn from(t: ScienceTable) -> Self {
        RawCounts {
            n11: t.n11,
            n10: t.n10,
            n01: t.n01,
            n00: t.n00,
        }
    }
}

impl fmt::Display for ScienceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "science(N11={}, N10={}, N01={}, N00={})",
            self.n11, self.n10, self.n01, self.n00
        )
    }
}

/// Marginal summaries of a science table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    pub p1: f64,
    pub p0: f64,
    pub tau: f64,
    pub s: u64,
}

pub fn derived_margins(science: &ScienceTable) -> Margins {
    let n = science.total() as f64;
    let p1 = (science.n11 + science.n10) as f64 / n;
    let p0 = (science.n11 + science.n01) as f64 / n;
    Margins {
        p1,
        p0,
        tau: (science.n10 as f64 - science.n01 as f64) / n,
        s: science.s(),
    }
}

/// Observed counts classified by `(W, Y_obs)`.
///
/// `n11` and `n10` are treated units with outcome one and zero; `n01` and
/// `n00` are control units with outcome one and zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawCounts", into = "RawCounts")]
pub struct ObservedTable {
    n11: u64,
    n10: u64,
    n01: u64,
    n00: u64,
}

impl ObservedTable {
    pub fn new(n11: u64, n10: u64, n01: u64, n00: u64) -> Result<Self> {
        if n11 + n10 == 0 {
            return Err(Error::InvalidTable(format!(
                "observed table ({n11}, {n10}, {n01}, {n00}) has no treated units"
            )));
        }
        if n01 + n00 == 0 {
            return Err(Error::InvalidTable(format!(
                "observed table ({n11}, {n10}, {n01}, {n00}) has no control units"
            )));
        }
        Ok(Self { n11, n10, n01, n00 })
    }

    pub fn n11(&self) -> u64 {
        self.n11
    }

    pub fn n10(&self) -> u64 {
        self.n10
    }

    pub fn n01(&self) -> u64 {
        self.n01
    }

    pub fn n00(&self) -> u64 {
        self.n00
    }

    pub fn counts(&self) -> [u64; 4] {
        [self.n11, self.n10, self.n01, self.n00]
    }

    /// Size of the treatment arm.
    pub fn n1(&self) -> u64 {
        self.n11 + self.n10
    }

    /// Size of the control arm.
    pub fn n0(&self) -> u64 {
        self.n01 + self.n00
    }

    pub fn total(&self) -> u64 {
        self.n1() + self.n0()
    }

    pub fn p1_hat(&self) -> f64 {
        self.n11 as f64 / self.n1() as f64
    }

    pub fn p0_hat(&self) -> f64 {
        self.n01 as f64 / self.n0() as f64
    }
}

impl TryFrom<RawCounts> for ObservedTable {
    type Error = Error;

    fn try_from(raw: RawCounts) -> Result<Self> {
        Self::new(raw.n11, raw.n10, raw.n01, raw.n00)
    }
}

impl From<ObservedTable> for RawCounts {
    fn from(t: ObservedTable) -> Self {
        RawCounts {
            n11: t.n11,
            n10: t.n10,
            n01: t.n01,
            n00: t.n00,
        }
    }
}

impl fmt::Display for ObservedTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.n11, self.n10, self.n01, self.n00
        )
    }
}

/// A candidate population, `(N10, N11)` on the grid for a fixed `N01`.
///
/// Points order lexicographically by `(n01, n11, n10)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub n10: u64,
    pub n11: u64,
    pub n01: u64,
}

impl ParameterPoint {
    pub fn new(n10: u64, n11: u64, n01: u64) -> Self {
        Self { n10, n11, n01 }
    }

    /// Completes the point to a science table of `total` units, if it fits.
    pub fn science(&self, total: u64) -> Option<ScienceTable> {
        let used = self.n10 + self.n11 + self.n01;
        if used > total {
            return None;
        }
        ScienceTable::new(self.n11, self.n10, self.n01, total - used).ok()
    }

    /// Average causal effect `(N10 - N01) / N` implied by this point.
    pub fn tau(&self, total: u64) -> f64 {
        (self.n10 as f64 - self.n01 as f64) / total as f64
    }

    /// Numerator of `tau` on the `1/N` grid.
    pub fn tau_numerator(&self) -> i64 {
        self.n10 as i64 - self.n01 as i64
    }

    /// Attributable effect `n11_obs + n01_obs - N01 - N11` implied by this point.
    pub fn attributable(&self, obs: &ObservedTable) -> i64 {
        (obs.n11 + obs.n01) as i64 - (self.n01 + self.n11) as i64
    }
}

impl Ord for ParameterPoint {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.n01, self.n11, self.n10).cmp(&(other.n01, other.n11, other.n10))
    }
}

impl PartialOrd for ParameterPoint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Support of the likelihood under monotonicity (`N01 = 0`).
///
/// Returns the `(n11_obs + 1)(n00_obs + 1)` points satisfying
/// `n01_obs <= N11 <= n11_obs + n01_obs <= N10 + N11 <= N - n10_obs`,
/// ordered by `(N11, N10)`.
pub fn monotone_support(obs: &ObservedTable) -> Vec<ParameterPoint> {
    let n = obs.total();
    let mut points = Vec::with_capacity(((obs.n11 + 1) * (obs.n00 + 1)) as usize);
    for n11 in obs.n01..=obs.n11 + obs.n01 {
        for sum in obs.n11 + obs.n01..=n - obs.n10 {
            points.push(ParameterPoint::new(sum - n11, n11, 0));
        }
    }
    points
}

/// Whether `point` lies in the support of the general likelihood for its `n01`.
pub fn in_general_support(obs: &ObservedTable, point: &ParameterPoint) -> bool {
    let n = obs.total() as i64;
    let (o11, o10, o01, o00) = (
        obs.n11 as i64,
        obs.n10 as i64,
        obs.n01 as i64,
        obs.n00 as i64,
    );
    let (n10, n11, k) = (point.n10 as i64, point.n11 as i64, point.n01 as i64);

    if k > o10 + o01 || n10 + n11 + k > n {
        return false;
    }
    let n11_ok = (o01 - k).max(0) <= n11 && n11 <= (o01 + o11).min(n - o00 - k);
    let n10_ok = n10 <= n - o01 - o10;
    let sum = n10 + n11;
    let sum_ok = (o11 + o01 - k).max(o11) <= sum && sum <= n - o10;
    n11_ok && n10_ok && sum_ok
}

/// Support of the likelihood for a fixed number `n01` of harmed units.
///
/// An empty vector means `n01` is incompatible with the data; it is not an
/// error. Values `n01 > n10_obs + n01_obs` always give an empty support.
pub fn general_support(obs: &ObservedTable, n01: u64) -> Vec<ParameterPoint> {
    let n = obs.total();
    if n01 > obs.n10 + obs.n01 {
        return Vec::new();
    }
    let mut points = Vec::new();
    let n11_lo = obs.n01.saturating_sub(n01);
    let n11_hi = (obs.n01 + obs.n11).min((n - obs.n00).saturating_sub(n01));
    for n11 in n11_lo..=n11_hi {
        for n10 in 0..=(n - n11 - n01) {
            let point = ParameterPoint::new(n10, n11, n01);
            if in_general_support(obs, &point) {
                points.push(point);
            }
        }
    }
    points
}
