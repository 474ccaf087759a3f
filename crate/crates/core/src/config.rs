//! TOML configuration shared by the library entry points and the CLI.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::map_builder::MapBuilderConfig;
use crate::rotation::RotationConfig;
use crate::saturation::{SaturationKind, SaturationSpec, DEFAULT_Q_TRUSTED};
use crate::translation::TranslationConfig;

/// Saturation used by the rotation search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaturationConfig {
    pub kind: SaturationKind,
    pub q: f64,
    /// Largest possible rotation residual (`u_r`).
    pub upper_bound: f64,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        SaturationConfig {
            kind: SaturationKind::Likelihood,
            q: DEFAULT_Q_TRUSTED,
            upper_bound: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    /// Query segments shorter than this (pixels) are ignored.
    pub min_line_length_px: f64,
    /// Polish the selected pose by least squares on its consistent inliers.
    pub refine_pose: bool,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            min_line_length_px: 0.0,
            refine_pose: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub saturation: SaturationConfig,
    pub rotation: RotationConfig,
    pub translation: TranslationConfig,
    pub pipeline: PipelineSection,
    pub map_builder: MapBuilderConfig,
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn rotation_saturation(&self) -> Result<SaturationSpec> {
        SaturationSpec::new(
            self.saturation.kind,
            self.saturation.q,
            self.rotation.epsilon_r,
            self.saturation.upper_bound,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        let t = &self.translation;
        if !(r.epsilon_r > 0.0 && t.epsilon_t > 0.0) {
            return Err(Error::Config("epsilon_r and epsilon_t must be positive".into()));
        }
        if !(r.gap >= 0.0 && t.gap >= 0.0 && r.min_cube_width >= 0.0 && t.min_cube_width >= 0.0) {
            return Err(Error::Config("gaps and cube widths must be nonnegative".into()));
        }
        if r.max_nodes < 5 || t.max_nodes < 5 {
            return Err(Error::Config("max_nodes must allow at least one split".into()));
        }
        if let Some(s) = r.prior_side_length {
            crate::pipeline::check_side_length(s).map_err(|e| Error::Config(e.to_string()))?;
        }
        self.rotation_saturation()?;
        t.saturation()?;
        self.map_builder.validate()
    }
}
