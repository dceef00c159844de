//! Regression and inference kernel: OLS with classical and HC3 errors,
//! dummy-variable fixed effects, winsorization, Welch's t-test, Spearman
//! correlation, seeded bootstrap and growth accounting.

mod bootstrap;
mod growth;
mod regression;

use thiserror::Error;

pub use bootstrap::{bootstrap, resample_indices, BootstrapSummary};
pub use growth::{growth_accounting, Factor, GrowthAccounting};
pub use regression::{
    fixed_effects, hc3_se, ols, percentile, winsor_bounds, winsorize, Design, RegressionResult,
};
pub use tests::{average_ranks, spearman, welch_t, WelchResult};

#[derive(Debug, Error, PartialEq)]
pub enum EconError {
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: String,
        got: usize,
        expected: usize,
    },
    #[error("{n} observations cannot identify {k} coefficients")]
    TooFewObservations { n: usize, k: usize },
    #[error("design matrix is singular; dependent columns: {0:?}")]
    SingularDesign(Vec<String>),
    #[error("observation {0} has leverage 1; HC3 weight is undefined")]
    UnitLeverage(usize),
    #[error("no group has two or more observations")]
    NoGroups,
    #[error("percentiles must satisfy 0 < lower < upper < 100 (got {0}, {1})")]
    InvalidPercentiles(f64, f64),
    #[error("sample {0} needs at least two observations")]
    SampleTooSmall(&'static str),
    #[error("both samples have zero variance and different means")]
    DegenerateVariance,
    #[error("ranks of {0} are constant; correlation undefined")]
    ConstantRanks(&'static str),
    #[error("bootstrap needs B >= 1 and a non-empty series")]
    EmptyBootstrap,
    #[error("statistic failed on the full sample: {0}")]
    Statistic(String),
    #[error("all {0} bootstrap replicates failed")]
    AllReplicatesFailed(usize),
    #[error("total change is zero; contribution shares are undefined")]
    ZeroTotal,
    #[error("factor `{0}` has a negative share")]
    NegativeShare(String),
}
