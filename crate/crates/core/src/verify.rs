//! Oracle-versus-formula identity suite.
//!
//! Every science table up to a given size is enumerated exactly, and each
//! closed form is compared with the exact randomization distribution. The
//! closed forms are passed in through [`Formulas`] so that a deliberately
//! broken formula can be shown to make the suite fail.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::attributable::population_prediction_mse;
use crate::error::Result;
use crate::exact::{choose, int, ratio, to_f64};
use crate::likelihood::{is_log_zero, likelihood_exact, loglik_general, loglik_monotone};
use crate::moments::{improved_variance, variance_formula};
use crate::oracle::{
    assignment_sum_check, enumerate_with_cap, monte_carlo, AssignmentDistribution,
};
use crate::tables::{in_general_support, ObservedTable, ParameterPoint, ScienceTable};

const FLOAT_TOL: f64 = 1e-12;

/// The closed forms under test.
#[derive(Clone, Copy)]
pub struct Formulas {
    /// `(N, N1, p1, p0, N01) -> var(tau_hat)`.
    pub tau_variance: fn(u64, u64, &BigRational, &BigRational, u64) -> BigRational,
    pub prediction_mse: fn(&ScienceTable, u64) -> BigRational,
    pub likelihood: fn(&ObservedTable, &ParameterPoint) -> BigRational,
}

impl Default for Formulas {
    fn default() -> Self {
        Self {
            tau_variance: variance_formula,
            prediction_mse: population_prediction_mse,
            likelihood: likelihood_exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VerifyConfig {
    pub max_n: u64,
    pub seed: u64,
    pub cap: u64,
    pub mc_draws: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            max_n: 8,
            seed: 20_160_101,
            cap: crate::oracle::DEFAULT_ENUMERATION_CAP,
            mc_draws: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckFailure {
    pub check: &'static str,
    pub science: ScienceTable,
    pub n1: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub tables: u64,
    pub designs: u64,
    pub checks: u64,
    pub failures: Vec<CheckFailure>,
    pub monte_carlo_deterministic: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.monte_carlo_deterministic
    }
}

/// Every science table with `2 <= N <= max_n`, in lexicographic order of
/// `(N, N11, N10, N01)`.
pub fn science_family(max_n: u64) -> Vec<ScienceTable> {
    let mut out = Vec::new();
    for n in 2..=max_n {
        for a in 0..=n {
            for b in 0..=n - a {
                for c in 0..=n - a - b {
                    out.push(ScienceTable::new(a, b, c, n - a - b - c).expect("N >= 2"));
                }
            }
        }
    }
    out
}

struct Checker<'a> {
    science: &'a ScienceTable,
    n1: u64,
    checks: u64,
    failures: Vec<CheckFailure>,
}

impl Checker<'_> {
    fn check(&mut self, name: &'static str, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(CheckFailure {
                check: name,
                science: *self.science,
                n1: self.n1,
                detail: detail(),
            });
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= FLOAT_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Unit-level potential outcomes `(Y(1), Y(0))`, grouped by type.
fn unit_outcomes(science: &ScienceTable) -> (Vec<f64>, Vec<f64>) {
    let types = [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)];
    let mut y1 = Vec::new();
    let mut y0 = Vec::new();
    for (count, (a, b)) in science.counts().into_iter().zip(types) {
        for _ in 0..count {
            y1.push(a);
            y0.push(b);
        }
    }
    (y1, y0)
}

/// Runs every identity for one design and returns `(checks, failures)`.
pub fn verify_design(
    science: &ScienceTable,
    n1: u64,
    cap: u64,
    formulas: &Formulas,
) -> Result<(u64, Vec<CheckFailure>)> {
    let dist: AssignmentDistribution = enumerate_with_cap(science, n1, cap)?;
    let n = science.total();
    let point = science.parameter_point();
    let mut c = Checker {
        science,
        n1,
        checks: 0,
        failures: Vec::new(),
    };

    let total = dist.total_probability();
    c.check("total-probability", total.is_one(), || {
        format!("sum = {total}")
    });
    let count = dist.total_assignments();
    let want: BigUint = choose(n, n1);
    c.check("assignment-count", count == want, || {
        format!("{count} != {want}")
    });

    for (obs, prob) in dist.outcomes() {
        let formula = (formulas.likelihood)(obs, &point);
        c.check("likelihood-exact", &formula == prob, || {
            format!("obs {:?}: formula {formula}, oracle {prob}", obs.counts())
        });
        let float = loglik_general(obs, &point).exp();
        let exact = to_f64(prob);
        c.check("likelihood-float", close(float, exact), || {
            format!(
                "obs {:?}: exp(loglik) {float:e}, oracle {exact:e}",
                obs.counts()
            )
        });
        c.check("support", in_general_support(obs, &point), || {
            format!("obs {:?} reachable but outside the support", obs.counts())
        });
        if science.n01() == 0 {
            let general = loglik_general(obs, &point);
            let monotone = loglik_monotone(obs, &point);
            c.check(
                "monotone-reduction",
                !is_log_zero(monotone) && (general - monotone).abs() <= FLOAT_TOL,
                || {
                    format!(
                        "obs {:?}: general {general}, monotone {monotone}",
                        obs.counts()
                    )
                },
            );
        }
        let plugin = to_f64(&(formulas.tau_variance)(
            n,
            n1,
            &ratio(obs.n11(), obs.n1()),
            &ratio(obs.n01(), obs.n0()),
            0,
        ));
        let shipped = improved_variance(obs);
        c.check("plugin-variance", close(plugin, shipped), || {
            format!(
                "obs {:?}: formula {plugin}, estimator {shipped}",
                obs.counts()
            )
        });
    }

    let (mean, var) = dist.tau_hat_moments();
    let tau = science.tau_exact();
    c.check("mean-tau-hat", mean == tau, || format!("{mean} != {tau}"));
    let want_var = (formulas.tau_variance)(
        n,
        n1,
        &science.p1_exact(),
        &science.p0_exact(),
        science.n01(),
    );
    c.check("var-tau-hat", var == want_var, || {
        format!("oracle {var}, formula {want_var}")
    });

    let (err_mean, err_var) = dist.prediction_error_moments();
    c.check("mean-prediction-error", err_mean.is_zero(), || {
        format!("{err_mean}")
    });
    let want_mse = (formulas.prediction_mse)(science, n1);
    c.check("var-prediction-error", err_var == want_mse, || {
        format!("oracle {err_var}, formula {want_mse}")
    });

    let cells = dist.expected_moment_cells();
    let truth = [int(science.n11()), int(science.n00()), int(science.n10())];
    c.check("moment-cells", cells == truth, || {
        format!(
            "E(N11, N00, N10) = ({}, {}, {})",
            cells[0], cells[1], cells[2]
        )
    });

    let (y1, y0) = unit_outcomes(science);
    for (name, values) in [
        ("assignment-sum-treated", y1),
        ("assignment-sum-control", y0),
    ] {
        let report = assignment_sum_check(&values, n1, cap)?;
        c.check(name, report.matches, || {
            format!(
                "mean {} vs {}, variance {} vs {}",
                report.mean, report.expected_mean, report.variance, report.expected_variance
            )
        });
    }
    Ok((c.checks, c.failures))
}

/// Science table and design used for the Monte Carlo determinism check.
pub fn monte_carlo_probe() -> (ScienceTable, u64) {
    (ScienceTable::new(13, 10, 0, 30).expect("valid"), 32)
}

pub fn run_suite(config: &VerifyConfig, formulas: &Formulas) -> Result<VerifyReport> {
    let family = science_family(config.max_n);
    let designs: Vec<(ScienceTable, u64)> = family
        .iter()
        .flat_map(|s| (1..s.total()).map(move |n1| (*s, n1)))
        .collect();
    let results: Vec<(u64, Vec<CheckFailure>)> = designs
        .par_iter()
        .map(|(s, n1)| verify_design(s, *n1, config.cap, formulas))
        .collect::<Result<_>>()?;
    let mut checks = 0;
    let mut failures = Vec::new();
    for (k, f) in results {
        checks += k;
        failures.extend(f);
    }

    let (probe, n1) = monte_carlo_probe();
    let first = monte_carlo(&probe, n1, config.mc_draws, config.seed)?;
    let second = monte_carlo(&probe, n1, config.mc_draws, config.seed)?;
    Ok(VerifyReport {
        config: *config,
        tables: family.len() as u64,
        designs: designs.len() as u64,
        checks,
        failures,
        monte_carlo_deterministic: first == second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_size() {
        // Tables with N units: C(N + 3, 3).
        assert_eq!(science_family(2).len(), 10);
        assert_eq!(science_family(4).len(), 10 + 20 + 35);
    }

    #[test]
    fn small_suite_passes() {
        let config = VerifyConfig {
            max_n: 5,
            mc_draws: 500,
            ..VerifyConfig::default()
        };
        let report = run_suite(&config, &Formulas::default()).unwrap();
        assert!(report.passed(), "{:?}", report.failures.first());
        assert!(report.checks > report.designs * 10);
    }

    fn shifted_variance(
        n: u64,
        n1: u64,
        p1: &BigRational,
        p0: &BigRational,
        n01: u64,
    ) -> BigRational {
        variance_formula(n, n1, p1, p0, n01) * ratio(n - 1, n) * ratio(n + 1, n)
    }

    #[test]
    fn broken_variance_is_caught() {
        let config = VerifyConfig {
            max_n: 4,
            mc_draws: 100,
            ..VerifyConfig::default()
        };
        let formulas = Formulas {
            tau_variance: shifted_variance,
            ..Formulas::default()
        };
        let report = run_suite(&config, &formulas).unwrap();
        assert!(!report.passed());
        assert!(report.failures.iter().any(|f| f.check == "var-tau-hat"));
        assert!(report.failures.iter().any(|f| f.check == "plugin-variance"));
    }
}
