use std::path::Path;

use serde::{Deserialize, Serialize};
use truckmotion_core::area::DEFAULT_SECTOR_SIZE;
use truckmotion_core::events::EventLimits;
use truckmotion_core::kinematics::ChainConfig;
use truckmotion_core::{Error, Result};

/// Everything needed to turn a position log into frames, events, KPIs and
/// heatmaps. Every field is optional in the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub chain: ChainConfig,
    pub limits: EventLimits,
    /// Default heatmap sector edge, mm.
    pub sector_size: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            chain: ChainConfig::default(),
            limits: EventLimits::default(),
            sector_size: DEFAULT_SECTOR_SIZE,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        self.limits.validate()?;
        if !(self.sector_size > 0.0 && self.sector_size.is_finite()) {
            return Err(Error::Config(format!("sector_size must be positive, got {}", self.sector_size)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))
    }
}
