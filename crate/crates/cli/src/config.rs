//! Run configuration: a JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use cw_randers::killing::OrbitParams;
use cw_randers::randers::RandersSpec;
use serde::Deserialize;

use crate::CliError;

/// Contents of `--config`. A file holding a bare spec object (one with a
/// `family` key) is read as `{"spec": ...}`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub spec: Option<RandersSpec>,
    pub params: Option<OrbitParams>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("family").is_some() {
            Ok(RunConfig {
                spec: Some(serde_json::from_value(value)?),
                ..RunConfig::default()
            })
        } else {
            serde_json::from_value(value)
        }
    }
}

/// Flags shared by every command; values given here win over the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub tolerance: Option<f64>,
}

/// Effective settings after merging.
#[derive(Debug, Clone)]
pub struct Settings {
    pub spec: Option<RandersSpec>,
    pub params: Option<OrbitParams>,
    pub trials: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tolerance: Option<f64>,
}

impl Settings {
    pub fn merge(config: RunConfig, flags: Overrides) -> Result<Self, CliError> {
        let tolerance = flags.tolerance.or(config.tolerance);
        if let Some(t) = tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Usage(format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(Settings {
            spec: config.spec,
            params: config.params,
            trials: flags.trials.or(config.trials),
            seed: flags.seed.or(config.seed).unwrap_or(0),
            out: flags.out.or(config.out),
            tolerance,
        })
    }

    pub fn trials_or(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    pub fn tolerance_or(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }
}
