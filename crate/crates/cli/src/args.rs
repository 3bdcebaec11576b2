use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use urn_core::attributable::MseArm;
use urn_core::bayes::HpdRule;
use urn_core::moments::Method;

#[derive(Debug, Parser)]
#[command(
    name = "urn",
    version,
    about = "Randomization inference for a binary outcome in a completely randomized experiment",
    long_about = "Randomization inference for a binary outcome in a completely randomized experiment.\n\n\
                  Observed tables are given as four counts in the order n11 n10 n01 n00: treated \
                  successes, treated failures, control successes, control failures."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Point estimate and normal-approximation interval for the average effect.
    Estimate(Run<EstimateInput>),
    /// Moment and posterior intervals over a range of harmed-unit counts.
    Sensitivity(Run<SensitivityInput>),
    /// Posterior curve of the average effect or the attributable effect.
    Posterior(Run<PosteriorInput>),
    /// Exact and approximate inference for the attributable effect.
    Attributable(Run<AttributableInput>),
    /// Check every closed form against exhaustive enumeration.
    Verify(Run<VerifyInput>),
    /// Randomization distribution of a known science table.
    Simulate(Run<SimulateInput>),
}

#[derive(Debug, Args)]
pub struct Run<I: Args> {
    #[command(flatten)]
    pub input: I,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct OutputOpts {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short = 'o', value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Rerun the analysis recorded in the `input` block of a JSON report.
    #[arg(long, value_name = "FILE")]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie strictly between 0 and 1, got {v}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Improved,
    Neyman,
    Conventional,
    Sensitivity,
    All,
}

impl MethodArg {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Improved => vec![Method::Improved],
            MethodArg::Neyman => vec![Method::Neyman],
            MethodArg::Conventional => vec![Method::Conventional],
            MethodArg::Sensitivity => vec![Method::Sensitivity],
            MethodArg::All => vec![
                Method::Improved,
                Method::Neyman,
                Method::Conventional,
                Method::Sensitivity,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HpdRuleArg {
    /// Shortest contiguous window with at least the target mass.
    #[default]
    Shortest,
    /// Accumulate values by decreasing mass, add one more, take the hull.
    OneStepPast,
}

impl From<HpdRuleArg> for HpdRule {
    fn from(r: HpdRuleArg) -> Self {
        match r {
            HpdRuleArg::Shortest => HpdRule::MinimalWindow,
            HpdRuleArg::OneStepPast => HpdRule::OneStepPast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Tau,
    A,
}

/// Upper end of a sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum N01Max {
    /// `floor(N p0_hat (1 - p1_hat))`.
    Auto,
    Value(u64),
}

impl FromStr for N01Max {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(N01Max::Auto);
        }
        s.parse()
            .map(N01Max::Value)
            .map_err(|_| format!("expected `auto` or a nonnegative integer, got `{s}`"))
    }
}

impl fmt::Display for N01Max {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            N01Max::Auto => f.write_str("auto"),
            N01Max::Value(v) => write!(f, "{v}"),
        }
    }
}

impl From<N01Max> for String {
    fn from(v: N01Max) -> Self {
        v.to_string()
    }
}

impl TryFrom<String> for N01Max {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EstimateInput {
    /// Observed counts n11 n10 n01 n00.
    #[arg(num_args = 4, value_names = ["N11", "N10", "N01", "N00"], required_unless_present = "replay", conflicts_with = "replay")]
    pub table: Vec<u64>,
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub level: f64,
    /// Hypothesized number of harmed units; used by the sensitivity method.
    #[arg(long, default_value_t = 0)]
    pub n01: u64,
    /// Variance formula(s), comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "improved")]
    pub method: Vec<MethodArg>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SensitivityInput {
    /// Observed counts n11 n10 n01 n00.
    #[arg(num_args = 4, value_names = ["N11", "N10", "N01", "N00"], required_unless_present = "replay", conflicts_with = "replay")]
    pub table: Vec<u64>,
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub level: f64,
    /// Last harmed-unit count of the sweep, or `auto` for floor(N p0_hat (1 - p1_hat)).
    #[arg(long, default_value = "auto")]
    pub n01_max: N01Max,
    /// Explicit harmed-unit counts, comma separated; overrides --n01-max.
    #[arg(long = "n01", value_delimiter = ',')]
    pub n01_list: Vec<u64>,
    #[arg(long, value_enum, default_value_t = HpdRuleArg::Shortest)]
    pub hpd_rule: HpdRuleArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PosteriorInput {
    /// Observed counts n11 n10 n01 n00.
    #[arg(num_args = 4, value_names = ["N11", "N10", "N01", "N00"], required_unless_present = "replay", conflicts_with = "replay")]
    pub table: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    pub n01: u64,
    #[arg(long, value_enum, default_value_t = Target::Tau)]
    pub target: Target,
    /// CSV of `n10,n11,weight` rows; points not listed get zero prior weight.
    #[arg(long, value_name = "FILE")]
    pub prior_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = HpdRuleArg::Shortest)]
    pub hpd_rule: HpdRuleArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AttributableInput {
    /// Observed counts n11 n10 n01 n00.
    #[arg(num_args = 4, value_names = ["N11", "N10", "N01", "N00"], required_unless_present = "replay", conflicts_with = "replay")]
    pub table: Vec<u64>,
    /// Size of the exact tests that are inverted.
    #[arg(long, default_value_t = 0.05, value_parser = parse_level)]
    pub alpha: f64,
    /// Level of the prediction and posterior intervals.
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    pub level: f64,
    /// Use p1_hat (1 - p1_hat) instead of p0_hat (1 - p0_hat) in the prediction error.
    #[arg(long, alias = "compat-paper-mse")]
    pub treated_arm_mse: bool,
    /// Also emit the standardized p-value curve.
    #[arg(long)]
    pub pvalues: bool,
    #[arg(long, value_enum, default_value_t = HpdRuleArg::Shortest)]
    pub hpd_rule: HpdRuleArg,
}

impl AttributableInput {
    pub fn mse_arm(&self) -> MseArm {
        if self.treated_arm_mse {
            MseArm::Treated
        } else {
            MseArm::Control
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyInput {
    /// Largest population size in the family of science tables.
    #[arg(long, default_value_t = 8)]
    pub max_n: u64,
    #[arg(long, default_value_t = 20_160_101)]
    pub seed: u64,
    /// Draws for the Monte Carlo determinism check.
    #[arg(long, default_value_t = 20_000)]
    pub mc_draws: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateInput {
    /// Science table N11 N10 N01 N00.
    #[arg(num_args = 4, value_names = ["N11", "N10", "N01", "N00"], required_unless_present = "replay", conflicts_with = "replay")]
    pub science: Vec<u64>,
    /// Number of treated units.
    #[arg(long, required_unless_present = "replay")]
    pub n1: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub draws: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Enumerate every assignment instead of sampling.
    #[arg(long)]
    pub exact: bool,
}
