use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::parallel::Execution;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryStrategy {
    /// Scan every unordered pair.
    #[default]
    #[serde(alias = "full")]
    FullPairs,
    /// Scan only pairs adjacent in at least one candidate.
    #[serde(alias = "adjacent")]
    AdjacentPairs,
}

impl QueryStrategy {
    pub fn name(self) -> &'static str {
        match self {
            QueryStrategy::FullPairs => "full",
            QueryStrategy::AdjacentPairs => "adjacent",
        }
    }
}

impl std::str::FromStr for QueryStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "full" | "full_pairs" => Ok(QueryStrategy::FullPairs),
            "adjacent" | "adjacent_pairs" => Ok(QueryStrategy::AdjacentPairs),
            other => Err(format!("unknown query strategy {other:?} (expected full or adjacent)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Number of candidate orderings, N.
    pub ensemble_size: usize,
    /// Stop once the modal candidate's share exceeds `1 - epsilon`.
    pub epsilon: f64,
    #[serde(default)]
    pub query_strategy: QueryStrategy,
    /// Below this many measurements the middle block is redrawn with the
    /// recursive sampler instead of the max-element one. Defaults to L.
    #[serde(default)]
    pub warm_start_threshold: Option<usize>,
    /// Defaults to `ceil(50 L ln L)`.
    #[serde(default)]
    pub max_questions: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            ensemble_size: 100,
            epsilon: 0.01,
            query_strategy: QueryStrategy::FullPairs,
            warm_start_threshold: None,
            max_questions: None,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

impl EngineConfig {
    pub fn with_seed(seed: u64) -> Self {
        EngineConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size < 2 {
            return Err(CoreError::InvalidConfig {
                field: "ensemble_size",
                reason: format!("need at least 2 candidates, got {}", self.ensemble_size),
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CoreError::InvalidConfig {
                field: "epsilon",
                reason: format!("must lie in (0, 1), got {}", self.epsilon),
            });
        }
        if self.max_questions == Some(0) {
            return Err(CoreError::InvalidConfig {
                field: "max_questions",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn warm_start_for(&self, size: usize) -> usize {
        self.warm_start_threshold.unwrap_or(size)
    }

    pub fn max_questions_for(&self, size: usize) -> usize {
        self.max_questions.unwrap_or_else(|| default_max_questions(size))
    }
}

pub fn default_max_questions(size: usize) -> usize {
    let l = size as f64;
    ((50.0 * l * l.ln()).ceil() as usize).max(1)
}
