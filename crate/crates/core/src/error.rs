use thiserror::Error;

/// Errors produced by the inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("binomial coefficient C({n}, {k}) is undefined")]
    ChooseOutOfRange { n: i64, k: i64 },

    #[error("plug-in variance is negative ({variance:.6}) at n01 = {n01}; n01 is implausible for these data")]
    NegativeVariance { n01: u64, variance: f64 },

    #[error(
        "n01 bounds are empty (lower {lo} > upper {hi}); data are inconsistent with the assumption"
    )]
    EmptyBounds { lo: i64, hi: i64 },

    #[error("likelihood support is empty at n01 = {0}")]
    EmptySupport(u64),

    #[error("prior assigns zero weight to every support point")]
    PriorAnnihilatesSupport,

    #[error("enumerating C({n}, {n1}) = {count} assignments exceeds the cap of {cap}; use monte carlo instead")]
    EnumerationCapExceeded {
        n: u64,
        n1: u64,
        count: String,
        cap: u64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
