//! Randomization inference for a binary outcome in a completely randomized
//! experiment, without a model for the outcomes.
//!
//! The population is summarized by its science table: how many units have
//! each pair of potential outcomes. Observed tables are draws from an urn
//! holding that population. The crate offers moment-based intervals with a
//! sensitivity parameter for the number of harmed units, the exact
//! likelihood and grid posteriors over science tables, exact inference for
//! the attributable effect, and a brute-force oracle that checks all of it.

mod error;

pub mod attributable;
pub mod bayes;
pub mod exact;
pub mod likelihood;
pub mod moments;
pub mod oracle;
pub mod tables;
pub mod verify;

pub use error::{Error, Result};
pub use tables::{ObservedTable, ParameterPoint, ScienceTable};
