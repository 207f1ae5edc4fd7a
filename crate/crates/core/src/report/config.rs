//! Run configuration file.
//!
//! A TOML file written as flat dotted keys. Every key is optional and
//! defaults to the reference parameter set, so a file holding only
//! `map.path` describes the no-intervention scenario.
//!
//! | key | default |
//! |-----|---------|
//! | `map.path` | required; relative paths are resolved against the config file's directory |
//! | `map.origin_x`, `map.origin_y` | the map's `# origin=` directive |
//! | `scenario.kind` | `"none"` (`"strict"`, `"leaky"`) |
//! | `scenario.activation_step` | 14 |
//! | `scenario.leak_probability` | 0.001 |
//! | `behavior.p_fight`, `p_flight`, `p_freeze` | 0.25, 0.55, 0.20 |
//! | `behavior.p_win_fight`, `p_escape`, `p_win_caught`, `p_win_freeze` | 0.5, 0.70, 0.10, 0.05 |
//! | `movement.base_weight`, `bias_per_km` | 0.125, 0.05 |
//! | `movement.bias_cap_distance`, `full_bias_distance` | 12, 13 |
//! | `engine.incubation_steps`, `max_steps`, `trajectory_stride` | 1, 2000, 1 |
//! | `batch.n_runs`, `base_seed`, `max_parallel_runs` | 1000, 0, 1 |
//! | `output.dir` | `"out"` |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::BehaviorTable;
use crate::engine::EngineConfig;
use crate::intervention::ScenarioPolicy;
use crate::montecarlo::BatchConfig;
use crate::movement::MovementParams;
use crate::worldmap::{load_raster, Cell, GridWorld, WorldError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    pub path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin_x: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin_y: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSection {
    pub n_runs: u32,
    pub base_seed: u64,
    pub max_parallel_runs: usize,
}

impl Default for BatchSection {
    fn default() -> Self {
        BatchSection { n_runs: 1000, base_seed: 0, max_parallel_runs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub map: MapSection,
    pub scenario: ScenarioPolicy,
    pub behavior: BehaviorTable,
    pub movement: MovementParams,
    pub engine: EngineConfig,
    pub batch: BatchSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Reads and validates a config file; `map.path` must exist.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.display().to_string(), message },
            other => other,
        })?;
        if cfg.map.path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.map.path = dir.join(&cfg.map.path);
            }
        }
        cfg.validate()?;
        if !cfg.map.path.is_file() {
            return Err(ConfigError::Invalid(format!("map file {} does not exist", cfg.map.path.display())));
        }
        Ok(cfg)
    }

    /// Parses config text without touching the file system.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: "<config>".into(), message: e.to_string() })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        if self.map.path.as_os_str().is_empty() {
            return Err(ConfigError::Invalid("map.path is required".into()));
        }
        if self.map.origin_x.is_some() != self.map.origin_y.is_some() {
            return Err(ConfigError::Invalid("map.origin_x and map.origin_y must be given together".into()));
        }
        self.scenario.validate().map_err(|e| invalid(&e))?;
        self.behavior.validate().map_err(|e| invalid(&e))?;
        self.movement.validate().map_err(|e| invalid(&e))?;
        self.engine.validate().map_err(|e| invalid(&e))?;
        if self.batch.max_parallel_runs == 0 {
            return Err(ConfigError::Invalid("batch.max_parallel_runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn origin(&self) -> Option<Cell> {
        Some(Cell::new(self.map.origin_x?, self.map.origin_y?))
    }

    pub fn load_world(&self) -> Result<GridWorld, ConfigError> {
        Ok(load_raster(&self.map.path, self.origin())?)
    }

    pub fn batch_config(&self) -> BatchConfig {
        BatchConfig {
            n_runs: self.batch.n_runs,
            base_seed: self.batch.base_seed,
            max_parallel_runs: self.batch.max_parallel_runs,
            policy: self.scenario,
            behavior: self.behavior,
            movement: self.movement,
            engine: self.engine,
        }
    }

    /// The full effective configuration as `section.key = value` lines.
    pub fn to_toml_string(&self) -> String {
        let value = toml::Value::try_from(self).expect("config is representable as TOML");
        let mut out = String::new();
        let sections = ["map", "scenario", "behavior", "movement", "engine", "batch", "output"];
        for section in sections {
            let Some(toml::Value::Table(table)) = value.get(section) else { continue };
            for (key, v) in table {
                writeln!(out, "{section}.{key} = {v}").expect("writing to a String");
            }
            out.push('\n');
        }
        out.pop();
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        let path = path.as_ref();
        fs::write(path, self.to_toml_string()).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
