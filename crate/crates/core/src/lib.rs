//! Analytics for LLM token-pricing data.
//!
//! The crate covers the full pipeline from ingestion to estimation:
//!
//! * [`model`]: price and training records, tiers, quarters, validation
//! * [`ingest`]: CSV loaders, the catalog HTTP client, snapshots and run config
//! * [`decay`]: exponential decay fits, half-life, functional-form comparison
//! * [`breaks`]: Chow structural-break scan
//! * [`market`]: reasoning premium, HHI and CR4
//! * [`frontier`]: DEA (CCR/BCC) and Malmquist decomposition on [`lp`]
//! * [`econometrics`]: OLS/HC3, fixed effects, Welch, Spearman, bootstrap

pub mod breaks;
pub mod decay;
pub mod econometrics;
pub mod frontier;
pub mod ingest;
pub mod linalg;
pub mod lp;
pub mod market;
pub mod model;

pub use breaks::{chow_at, chow_scan, ChowResult, ChowScan};
pub use decay::{fit_exponential, half_life, moore_ratio, DecayFit, Observation, SpecComparison, Window};
pub use econometrics::{BootstrapSummary, GrowthAccounting, RegressionResult};
pub use frontier::{DeaResult, Dmu, MalmquistResult};
pub use market::{ConcentrationResult, PremiumRow};
pub use model::{
    blended_price, classify_tier, quarter_of, validate_dataset, BlendWeights, PriceRecord, Quarter,
    Region, Tier, TierThresholds, TrainingRecord,
};
