use serde::{Deserialize, Serialize};

use crate::diff_engine::DiffConfig;
use crate::dp_align::DpConfig;
use crate::seven_phase::SevenPhaseConfig;

/// Every tunable of the matching and diff pipeline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub seven_phase: SevenPhaseConfig,
    pub dp: DpConfig<f64>,
    pub diff: DiffConfig,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.seven_phase.validate()?;
        self.dp.validate()
    }
}
