//! Request and response bodies of the HTTP API.

use serde::{Deserialize, Serialize};

use noisyrank_core::{EngineConfig, ErrorModel, QueryStrategy};

use crate::ServiceError;

pub const MIN_LABELS: usize = 2;
pub const MAX_LABELS: usize = noisyrank_core::model::MAX_LIST_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    KnownP,
    /// Human reliability is rarely known in advance.
    #[default]
    UnknownP,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigInput {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<QueryStrategy>,
    #[serde(default)]
    pub error_mode: ErrorMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_questions: Option<usize>,
}

impl ConfigInput {
    /// Resolves defaults and validates, naming the offending field.
    pub fn resolve(&self, seed: u64) -> Result<(EngineConfig, ErrorModel), ServiceError> {
        let defaults = EngineConfig::default();
        let config = EngineConfig {
            ensemble_size: self.ensemble_size.unwrap_or(defaults.ensemble_size),
            epsilon: self.epsilon.unwrap_or(defaults.epsilon),
            query_strategy: self.strategy.unwrap_or_default(),
            max_questions: self.max_questions,
            ..EngineConfig::with_seed(seed)
        };
        config.validate().map_err(|e| match e {
            noisyrank_core::CoreError::InvalidConfig { field, reason } => {
                let field = match field {
                    "ensemble_size" => "N",
                    other => other,
                };
                ServiceError::validation(format!("config.{field}"), reason)
            }
            other => ServiceError::validation("config", other.to_string()),
        })?;
        let model = match (self.error_mode, self.p) {
            (ErrorMode::UnknownP, None) => ErrorModel::UnknownP,
            (ErrorMode::UnknownP, Some(_)) => {
                return Err(ServiceError::validation(
                    "config.p",
                    "p is only meaningful with error_mode known_p",
                ))
            }
            (ErrorMode::KnownP, None) => {
                return Err(ServiceError::validation("config.p", "error_mode known_p needs p"))
            }
            (ErrorMode::KnownP, Some(p)) => {
                ErrorModel::known(p).map_err(|e| ServiceError::validation("config.p", e.to_string()))?
            }
        };
        Ok((config, model))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub labels: Vec<String>,
    #[serde(default)]
    pub config: ConfigInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Labels must be non-empty after trimming and pairwise distinct.
pub fn validate_labels(labels: &[String]) -> Result<(), ServiceError> {
    if labels.len() < MIN_LABELS || labels.len() > MAX_LABELS {
        return Err(ServiceError::validation(
            "labels",
            format!(
                "need between {MIN_LABELS} and {MAX_LABELS} labels, got {}",
                labels.len()
            ),
        ));
    }
    let mut seen = std::collections::HashSet::with_capacity(labels.len());
    for (k, l) in labels.iter().enumerate() {
        if l.trim().is_empty() {
            return Err(ServiceError::validation(format!("labels[{k}]"), "label is empty"));
        }
        if !seen.insert(l.as_str()) {
            return Err(ServiceError::validation(
                format!("labels[{k}]"),
                format!("duplicate label {l:?}"),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub id: String,
    pub seed: u64,
    pub question: Option<QuestionView>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusKind {
    AwaitingAnswer,
    Converged,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub i: u32,
    pub j: u32,
    pub label_i: String,
    pub label_j: String,
    /// Modal fraction of the ensemble.
    pub progress: f64,
    pub questions_asked: usize,
    /// Sequence number the answer to this question will get; echo it back
    /// to make submission idempotent.
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    /// The element judged smaller (less preferred).
    pub lesser: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub status: StatusKind,
    pub progress: f64,
    pub questions_asked: usize,
    pub question: Option<QuestionView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultView {
    /// Most preferred first.
    pub ranking: Vec<String>,
    #[serde(rename = "final")]
    pub is_final: bool,
    pub confidence: f64,
    pub questions_asked: usize,
    pub status: StatusKind,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn label_rules() {
        assert!(validate_labels(&labels(&["golf", "tennis"])).is_ok());
        assert!(validate_labels(&labels(&["golf"])).is_err());
        assert!(validate_labels(&labels(&["golf", " "])).is_err());
        match validate_labels(&labels(&["golf", "tennis", "golf"])) {
            Err(ServiceError::Validation { field, .. }) => assert_eq!(field, "labels[2]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_defaults_and_errors() {
        let (cfg, model) = ConfigInput::default().resolve(7).unwrap();
        assert_eq!(cfg.ensemble_size, 100);
        assert_eq!(cfg.seed, 7);
        assert_eq!(model, ErrorModel::UnknownP);

        let known = ConfigInput {
            error_mode: ErrorMode::KnownP,
            p: Some(0.9),
            ..Default::default()
        };
        assert_eq!(known.resolve(0).unwrap().1, ErrorModel::KnownP { p: 0.9 });

        let field_of = |c: ConfigInput| match c.resolve(0) {
            Err(ServiceError::Validation { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(
            field_of(ConfigInput {
                p: Some(0.4),
                error_mode: ErrorMode::KnownP,
                ..Default::default()
            }),
            "config.p"
        );
        assert_eq!(
            field_of(ConfigInput {
                error_mode: ErrorMode::KnownP,
                ..Default::default()
            }),
            "config.p"
        );
        assert_eq!(
            field_of(ConfigInput {
                ensemble_size: Some(1),
                ..Default::default()
            }),
            "config.N"
        );
        assert_eq!(
            field_of(ConfigInput {
                epsilon: Some(1.5),
                ..Default::default()
            }),
            "config.epsilon"
        );
    }

    #[test]
    fn request_json_shape() {
        let req: CreateSessionRequest = serde_json::from_str(
            r#"{"labels":["a","b"],"config":{"N":50,"epsilon":0.05,"strategy":"adjacent","error_mode":"known_p","p":0.8},"seed":3}"#,
        )
        .unwrap();
        assert_eq!(req.config.ensemble_size, Some(50));
        assert_eq!(req.config.strategy, Some(QueryStrategy::AdjacentPairs));
        assert!(serde_json::from_str::<AnswerRequest>(r#"{"lesser":1,"bogus":2}"#).is_err());
        let r = ResultView {
            ranking: vec![],
            is_final: true,
            confidence: 1.0,
            questions_asked: 0,
            status: StatusKind::Converged,
        };
        assert!(serde_json::to_string(&r).unwrap().contains("\"final\":true"));
    }
}
