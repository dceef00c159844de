use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IngestError;
use crate::breaks::DEFAULT_MIN_SEGMENT;
use crate::decay::Window;
use crate::econometrics::Factor;
use crate::frontier::{Representative, FRONTIER_TOL};
use crate::model::{BlendWeights, Quarter, Tier, TierThresholds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
    /// Read the catalog payload from this file instead of the network.
    pub fixture: Option<PathBuf>,
    pub max_attempts: u32,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://openrouter.ai/api/v1".into(),
            credential_env: "TOKENLAB_API_KEY".into(),
            fixture: None,
            max_attempts: 4,
        }
    }
}

/// Per-tier sample windows for the decay fits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub economy: Window,
    pub mid: Window,
    pub flagship: Window,
}

impl DecayConfig {
    pub fn window(&self, tier: Tier) -> Window {
        match tier {
            Tier::Economy => self.economy,
            Tier::Mid => self.mid,
            Tier::Flagship => self.flagship,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChowConfig {
    pub min_segment: usize,
    /// Restricted window for the second scan.
    pub window: Window,
}

impl Default for ChowConfig {
    fn default() -> Self {
        Self {
            min_segment: DEFAULT_MIN_SEGMENT,
            window: Window::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replications: 1000,
            seed: 20_260_328,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WinsorConfig {
    /// Values below this percentile and above `100 - tail_percent` are clamped.
    pub tail_percent: f64,
}

impl Default for WinsorConfig {
    fn default() -> Self {
        Self { tail_percent: 5.0 }
    }
}

impl WinsorConfig {
    pub fn bounds(&self) -> (f64, f64) {
        (self.tail_percent, 100.0 - self.tail_percent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeaConfig {
    pub tolerance: f64,
    pub representative: Representative,
    /// Quarters chained in the Malmquist table; empty means every quarter
    /// that has quality-scored records.
    pub malmquist_periods: Vec<Quarter>,
    /// Relative quality shift for the sensitivity check.
    pub quality_perturbation: f64,
}

impl Default for DeaConfig {
    fn default() -> Self {
        Self {
            tolerance: FRONTIER_TOL,
            representative: Representative::default(),
            malmquist_periods: Vec::new(),
            quality_perturbation: 0.2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    /// Total log cost change; growth accounting is skipped when absent.
    pub total_change: Option<f64>,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub catalog: CatalogConfig,
    pub blend: BlendWeights,
    pub tiers: TierThresholds,
    pub decay: DecayConfig,
    pub chow: ChowConfig,
    pub bootstrap: BootstrapConfig,
    pub winsor: WinsorConfig,
    pub dea: DeaConfig,
    pub growth: GrowthConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, IngestError> {
        let config: Self = toml::from_str(text).map_err(|e| IngestError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is TOML-representable")
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let fail = |m: String| Err(IngestError::Config(m));
        let positive = [
            ("blend.input", self.blend.input),
            ("blend.output", self.blend.output),
            ("tiers.economy_below", self.tiers.economy_below),
            ("tiers.flagship_above", self.tiers.flagship_above),
            ("dea.tolerance", self.dea.tolerance),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return fail(format!("{name} must be positive, got {v}"));
        }
        if self.tiers.economy_below >= self.tiers.flagship_above {
            return fail("tiers.economy_below must be below tiers.flagship_above".into());
        }
        if self.chow.min_segment < 3 {
            return fail(format!("chow.min_segment must be at least 3, got {}", self.chow.min_segment));
        }
        if self.bootstrap.replications == 0 {
            return fail("bootstrap.replications must be positive".into());
        }
        let tail = self.winsor.tail_percent;
        if !(tail > 0.0 && tail < 50.0) {
            return fail(format!("winsor.tail_percent must lie in (0, 50), got {tail}"));
        }
        if self.dea.tolerance.is_nan() || self.dea.tolerance >= 1.0 {
            return fail("dea.tolerance must be below 1".into());
        }
        let q = self.dea.quality_perturbation;
        if !(q > 0.0 && q < 1.0) {
            return fail(format!("dea.quality_perturbation must lie in (0, 1), got {q}"));
        }
        if self.catalog.credential_env.is_empty() || self.catalog.max_attempts == 0 {
            return fail("catalog.credential_env must be set and catalog.max_attempts positive".into());
        }
        if let Some(f) = self.growth.factors.iter().find(|f| f.share.is_nan() || f.share < 0.0) {
            return fail(format!("growth factor `{}` has a negative share", f.name));
        }
        Ok(())
    }

    /// Hex SHA-256 over the canonical JSON form; unaffected by formatting,
    /// comments or key order in the source TOML.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config is JSON-representable");
        hex::encode(Sha256::digest(&canonical))
    }

    /// API key from the configured environment variable, if set.
    pub fn credential(&self) -> Option<String> {
        std::env::var(&self.catalog.credential_env).ok().filter(|v| !v.is_empty())
    }
}
