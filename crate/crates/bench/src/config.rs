use std::path::Path;

use serde::{Deserialize, Serialize};

use noisyrank_core::{EngineConfig, ErrorModel, QueryStrategy};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModelMode {
    /// The engine is told the simulated channel's `p`.
    #[default]
    KnownP,
    UnknownP,
}

impl ErrorModelMode {
    pub fn model(self, p: f64) -> Result<ErrorModel, BenchError> {
        Ok(match self {
            ErrorModelMode::KnownP => ErrorModel::known(p)?,
            ErrorModelMode::UnknownP => ErrorModel::UnknownP,
        })
    }
}

/// A grid of simulated sessions. Field names follow the CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "L_values")]
    pub l_values: Vec<usize>,
    pub p_values: Vec<f64>,
    #[serde(rename = "N_values")]
    pub n_values: Vec<usize>,
    pub epsilon: f64,
    pub trials_per_cell: usize,
    #[serde(default)]
    pub query_strategy: QueryStrategy,
    #[serde(default)]
    pub error_model_mode: ErrorModelMode,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the engine's default question cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_questions: Option<usize>,
    /// Wall time is the only nondeterministic column; it is written as 0
    /// unless this is set.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            l_values: vec![4, 8],
            p_values: vec![0.9],
            n_values: vec![100],
            epsilon: 0.01,
            trials_per_cell: 5,
            query_strategy: QueryStrategy::FullPairs,
            error_model_mode: ErrorModelMode::KnownP,
            seed: 0,
            max_questions: None,
            record_wall_time: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidConfig(m.to_string()));
        if self.l_values.is_empty() || self.p_values.is_empty() || self.n_values.is_empty() {
            return bad("L_values, p_values and N_values must be non-empty");
        }
        if self.trials_per_cell == 0 {
            return bad("trials_per_cell must be at least 1");
        }
        if let Some(&l) = self.l_values.iter().find(|&&l| l < 2) {
            return bad(&format!("L = {l}: every list needs at least 2 elements"));
        }
        for &p in &self.p_values {
            ErrorModel::known(p).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        }
        for &n in &self.n_values {
            self.engine_config(n, 0)
                .validate()
                .map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    pub(crate) fn engine_config(&self, n: usize, seed: u64) -> EngineConfig {
        EngineConfig {
            ensemble_size: n,
            epsilon: self.epsilon,
            query_strategy: self.query_strategy,
            max_questions: self.max_questions,
            ..EngineConfig::with_seed(seed)
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, BenchError> {
        toml::from_str(s).map_err(|e| BenchError::Parse(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self, BenchError> {
        serde_json::from_str(s).map_err(|e| BenchError::Parse(e.to_string()))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text)?,
            _ => Self::from_toml_str(&text)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cell_count(&self) -> usize {
        self.l_values.len() * self.p_values.len() * self.n_values.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let text = r#"
L_values = [8, 16]
p_values = [0.9]
N_values = [100]
epsilon = 0.01
trials_per_cell = 3
query_strategy = "adjacent_pairs"
error_model_mode = "unknown_p"
seed = 42
"#;
        let cfg = SweepConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.l_values, vec![8, 16]);
        assert_eq!(cfg.query_strategy, QueryStrategy::AdjacentPairs);
        assert_eq!(cfg.error_model_mode, ErrorModelMode::UnknownP);
        assert!(!cfg.record_wall_time);
        cfg.validate().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(SweepConfig::from_json_str(&json).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_grids() {
        let d = SweepConfig::default;
        for cfg in [
            SweepConfig {
                trials_per_cell: 0,
                ..d()
            },
            SweepConfig {
                l_values: vec![1],
                ..d()
            },
            SweepConfig {
                p_values: vec![0.5],
                ..d()
            },
            SweepConfig {
                n_values: vec![1],
                ..d()
            },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(SweepConfig::from_toml_str("L_values = [4]\nbogus = 1").is_err());
    }
}
