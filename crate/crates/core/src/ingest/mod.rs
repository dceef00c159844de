//! Dataset loading and persistence: CSV/JSON panels, the pricing-catalog
//! client, catalog snapshots and run configuration.

mod catalog;
mod config;
mod tabular;

use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub use catalog::{
    fetch_catalog, load_snapshot, normalize_payload, persist_snapshot, per_million, CatalogSnapshot,
    FetchOptions, SkippedModel, SNAPSHOT_SCHEMA_VERSION,
};
pub use config::{
    BootstrapConfig, CatalogConfig, ChowConfig, DeaConfig, GrowthConfig, RunConfig, WinsorConfig,
};
pub use tabular::{fingerprint, load_milestones, load_shares, load_training, ShareTable};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: &'static str },
    #[error("{path}:{line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {} validation violation(s), first: {}", .violations.len(), .violations[0])]
    Invalid {
        path: PathBuf,
        violations: Vec<Violation>,
    },
    #[error("snapshot schema version {found:?}, expected {SNAPSHOT_SCHEMA_VERSION}")]
    SnapshotVersion { found: Option<u64> },
    #[error("malformed JSON")]
    Json(#[from] serde_json::Error),
    #[error("malformed field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("request failed after {attempts} attempt(s): {message}")]
    Network { attempts: u32, message: String },
    #[error("catalog rejected the credential (HTTP {0})")]
    Credential(u16),
    #[error("catalog returned HTTP {0}")]
    Status(u16),
    #[error("invalid configuration: {0}")]
    Config(String),
}
