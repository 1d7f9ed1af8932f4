//! Graph config file: monitors, groups, gates, evaluation settings,
//! countermeasure policy and simulator stubs. JSON and YAML share one schema.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::GroupSpec;
use crate::countermeasures::CountermeasurePolicy;
use crate::monitors::MonitorDecl;
use crate::simulator::StubSpec;
use crate::system_state::GatingTable;

/// The reference shuttle configuration shipped with the crate.
pub const REFERENCE_CONFIG_YAML: &str = include_str!("../../../configs/shuttle.yaml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid YAML: {0}")]
    Yaml(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    #[serde(default = "default_tick_ms")]
    pub tick_ms: u64,
    /// Leaf statuses older than `staleness_factor * tick_ms` count as UNKNOWN.
    #[serde(default = "default_staleness_factor")]
    pub staleness_factor: f64,
}

fn default_tick_ms() -> u64 {
    100
}

fn default_staleness_factor() -> f64 {
    3.0
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            tick_ms: default_tick_ms(),
            staleness_factor: default_staleness_factor(),
        }
    }
}

impl EvaluationConfig {
    pub fn default_stale_after_ms(&self) -> u64 {
        (self.staleness_factor * self.tick_ms as f64).round().max(0.0) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    #[serde(default)]
    pub monitors: Vec<MonitorDecl>,
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub gates: GatingTable,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub countermeasures: CountermeasurePolicy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stubs: Vec<StubSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Yaml,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "json" => Some(Format::Json),
            "yaml" | "yml" => Some(Format::Yaml),
            _ => None,
        }
    }
}

pub(crate) fn parse_text<T: serde::de::DeserializeOwned>(
    text: &str,
    format: Option<Format>,
) -> Result<T, ConfigError> {
    let json = |text: &str| {
        serde_json::from_str(text).map_err(|e| ConfigError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    };
    // Enums are written as single-key maps (`prefix: /a`) rather than YAML tags.
    let yaml = |text: &str| {
        serde_yaml::with::singleton_map_recursive::deserialize(serde_yaml::Deserializer::from_str(text))
            .map_err(|e| ConfigError::Yaml(e.to_string()))
    };
    match format {
        Some(Format::Json) => json(text),
        Some(Format::Yaml) => yaml(text),
        None if text.trim_start().starts_with('{') => json(text),
        None => yaml(text),
    }
}

pub(crate) fn to_yaml<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_yaml::Serializer::new(&mut out);
    serde_yaml::with::singleton_map_recursive::serialize(value, &mut ser).expect("config values serialize");
    String::from_utf8(out).expect("yaml is utf-8")
}

pub(crate) fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl GraphConfig {
    pub fn parse(text: &str, format: Option<Format>) -> Result<Self, ConfigError> {
        parse_text(text, format)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        GraphConfig::parse(&read_file(path)?, Format::from_path(path))
    }

    pub fn to_yaml(&self) -> String {
        to_yaml(self)
    }

    pub fn reference() -> Self {
        GraphConfig::parse(REFERENCE_CONFIG_YAML, Some(Format::Yaml))
            .expect("reference config parses")
    }

    /// Copy of this config with every dependency edge removed.
    pub fn without_dependencies(&self) -> Self {
        let mut out = self.clone();
        for group in &mut out.groups {
            group.depends_on.clear();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_has_eight_groups() {
        let cfg = GraphConfig::reference();
        let names: Vec<String> = cfg.groups.iter().map(|g| g.name.to_string()).collect();
        assert_eq!(
            names,
            [
                "/sensors",
                "/can",
                "/localization",
                "/perception",
                "/prediction",
                "/mission",
                "/planning",
                "/execution"
            ]
        );
        assert_eq!(cfg.evaluation.tick_ms, 100);
        assert_eq!(cfg.evaluation.default_stale_after_ms(), 300);
    }

    #[test]
    fn json_and_yaml_agree() {
        let cfg = GraphConfig::reference();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let from_json = GraphConfig::parse(&json, None).unwrap();
        assert_eq!(from_json, cfg);
        let yaml = cfg.to_yaml();
        assert!(yaml.contains("prefix: /sensors"));
        assert_eq!(GraphConfig::parse(&yaml, Some(Format::Yaml)).unwrap(), cfg);
    }

    #[test]
    fn json_errors_are_positioned() {
        let err = GraphConfig::parse("{\"groups\": [}", Some(Format::Json)).unwrap_err();
        assert!(matches!(err, ConfigError::Json { line: 1, .. }), "{err}");
    }
}
