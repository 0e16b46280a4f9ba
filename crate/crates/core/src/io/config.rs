//! Run configuration: one JSON document validated before any compute
//! starts. Unknown keys are rejected so typos cannot silently fall back to
//! defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::evaluation::{MetricThresholds, INDOOR_THRESHOLDS};
use crate::refinement::RefinementParams;
use crate::regeneration::{IterationSchedule, PipelineOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub thresholds: MetricThresholds,
    /// Residual tolerance τ_in defining an inlier for IP/IN/INR.
    pub inlier_tolerance: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { thresholds: INDOOR_THRESHOLDS, inlier_tolerance: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescriptorConfig {
    /// Neighborhood radius of the built-in weak descriptor.
    pub support_radius: f64,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self { support_radius: 0.15 }
    }
}

/// Everything a registration run needs. All sections have defaults, so the
/// empty document `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schedule: IterationSchedule,
    pub refinement: RefinementParams,
    /// Run point-level pose refinement after the pipeline.
    pub refine: bool,
    pub metrics: MetricsConfig,
    pub descriptor: DescriptorConfig,
    pub rng_seed: u64,
    pub ablation: PipelineOptions,
    /// Produce an initial correspondence set when none is supplied.
    pub bootstrap: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedule: IterationSchedule::default(),
            refinement: RefinementParams::default(),
            refine: true,
            metrics: MetricsConfig::default(),
            descriptor: DescriptorConfig::default(),
            rng_seed: 0,
            ablation: PipelineOptions::default(),
            bootstrap: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), IoError> {
        self.schedule
            .validate()
            .map_err(|e| IoError::InvalidConfig(e.to_string()))?;
        self.refinement
            .validate()
            .map_err(|e| IoError::InvalidConfig(e.to_string()))?;
        if self.metrics.inlier_tolerance <= 0.0 || !self.metrics.inlier_tolerance.is_finite() {
            return Err(IoError::InvalidConfig("metrics.inlier_tolerance must be positive".into()));
        }
        if self.metrics.thresholds.rotation_deg <= 0.0 || self.metrics.thresholds.translation <= 0.0
        {
            return Err(IoError::InvalidConfig("metrics.thresholds must be positive".into()));
        }
        if self.descriptor.support_radius <= 0.0 {
            return Err(IoError::InvalidConfig("descriptor.support_radius must be positive".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n")?;
        Ok(())
    }
}
