//! Run configuration: a TOML (or resolved JSON) file merged with flags.

use std::path::{Path, PathBuf};

use hoe::model::TrainConfig;
use hoe::sim::{EstimatorKind, SimConfig, Task};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub n: usize,
    /// Weighted occlusion modes, e.g. `full:0.5,lower:0.5`.
    pub mix: String,
    /// Keypoint noise in body heights.
    pub noise: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            n: 1000,
            mix: "full".into(),
            noise: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EvalEstimator {
    #[default]
    Model,
    GtEcho,
    Uniform,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub estimator: EvalEstimator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub estimators: Vec<EstimatorKind>,
    pub tasks: Vec<Task>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            estimators: EstimatorKind::ALL.to_vec(),
            tasks: Task::ALL.to_vec(),
        }
    }
}

/// Everything a subcommand reads. `seed` is the single master seed; when
/// unset, `simulate` falls back to the scenario's own seed and the other
/// commands use 0.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub data: DataSection,
    pub train: TrainConfig,
    pub eval: EvalSection,
    pub sim: SimConfig,
    pub simulate: SimulateSection,
}

impl RunConfig {
    /// Reads TOML, or JSON when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Runtime(format!("cannot read config {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, Failure> {
        path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
    }

    /// Writes the resolved configuration as pretty JSON.
    pub fn save(&self, path: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).expect("config serializes") + "\n";
        std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
    }
}

/// Resolves a required path, naming the flag when it is missing.
pub fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    value
        .as_deref()
        .ok_or_else(|| Failure::Usage(format!("missing {flag} (flag or [paths] entry)")))
}
