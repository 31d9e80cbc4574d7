//! The adiabatic sorting loop.
//!
//! 1. start from `N` uniform candidate orderings;
//! 2. ask about the pair the candidates disagree on most evenly;
//! 3. record the answer and update every candidate in place;
//! 4. stop once one ordering holds more than `1 - epsilon` of the ensemble.
//!
//! The engine is a pure function of `(L, model, config, journal)`: the query
//! tie-break stream and every candidate's resample stream are derived from
//! the seed and the record sequence number, so replaying a journal rebuilds
//! the exact state.

pub mod config;
pub mod cost;
pub mod ensemble;
pub mod query;
pub mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{ElementId, ErrorModel, Measurement, MeasurementLog, Ordering};
use crate::oracle::{Oracle, OracleError};
use crate::rng::{tag, RandomStream};

pub use config::{default_max_questions, EngineConfig, QueryStrategy};
pub use cost::{estimated_cost, judgements_dominate};
pub use ensemble::{check_convergence, ApplyOptions, Candidate, Convergence, Ensemble, UpdateStats};
pub use query::{pair_score, select_query};
pub use trace::{trace_csv_string, write_trace_csv, TraceEntry, TRACE_CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineStatus {
    Running,
    Converged,
    /// Hit `max_questions` without converging.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortResult {
    pub modal_order: Ordering,
    pub modal_fraction: f64,
    pub questions_asked: usize,
    pub converged: bool,
    pub per_question_trace: Vec<TraceEntry>,
}

/// Totals over the whole run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunStats {
    pub resamples: usize,
    pub middle_len_total: usize,
}

impl RunStats {
    pub fn middle_len_mean(&self) -> f64 {
        if self.resamples == 0 {
            0.0
        } else {
            self.middle_len_total as f64 / self.resamples as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Engine {
    size: usize,
    model: ErrorModel,
    config: EngineConfig,
    apply: ApplyOptions,
    max_questions: usize,
    log: MeasurementLog,
    ensemble: Ensemble,
    convergence: Convergence,
    trace: Vec<TraceEntry>,
    stats: RunStats,
}

impl Engine {
    pub fn new(size: usize, model: ErrorModel, config: EngineConfig) -> Result<Self> {
        if size == 0 {
            return Err(CoreError::InvalidConfig {
                field: "L",
                reason: "empty list".into(),
            });
        }
        model.validate()?;
        config.validate()?;
        let log = MeasurementLog::new(size)?;
        let ensemble = Ensemble::uniform(size, &config);
        let convergence = ensemble.convergence(config.epsilon);
        Ok(Engine {
            size,
            model,
            apply: ApplyOptions::from_config(&config, size),
            max_questions: config.max_questions_for(size),
            config,
            log,
            ensemble,
            convergence,
            trace: Vec::new(),
            stats: RunStats::default(),
        })
    }

    /// Rebuilds the state reached after observing `records` in order.
    pub fn replay(size: usize, model: ErrorModel, config: EngineConfig, records: &[Measurement]) -> Result<Self> {
        let mut engine = Self::new(size, model, config)?;
        for (k, m) in records.iter().enumerate() {
            if m.sequence_number != k as u64 + 1 {
                return Err(CoreError::SequenceGap {
                    expected: k as u64 + 1,
                    found: m.sequence_number,
                });
            }
            engine.observe(m.lesser, m.greater)?;
        }
        Ok(engine)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn model(&self) -> &ErrorModel {
        &self.model
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn log(&self) -> &MeasurementLog {
        &self.log
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn stats(&self) -> RunStats {
        self.stats
    }

    pub fn convergence(&self) -> &Convergence {
        &self.convergence
    }

    pub fn questions_asked(&self) -> usize {
        self.log.len()
    }

    pub fn max_questions(&self) -> usize {
        self.max_questions
    }

    pub fn status(&self) -> EngineStatus {
        if self.convergence.converged {
            EngineStatus::Converged
        } else if self.log.len() >= self.max_questions {
            EngineStatus::Exhausted
        } else {
            EngineStatus::Running
        }
    }

    /// The question to ask next. Repeated calls return the same pair until
    /// an answer is observed.
    pub fn next_query(&self) -> Option<(ElementId, ElementId)> {
        if self.status() != EngineStatus::Running {
            return None;
        }
        let mut rng = RandomStream::derive(self.config.seed, &[tag::QUERY, self.log.len() as u64]);
        select_query(&self.ensemble, self.config.query_strategy, &mut rng)
    }

    /// Records `lesser < greater` and updates the ensemble.
    pub fn observe(&mut self, lesser: ElementId, greater: ElementId) -> Result<&TraceEntry> {
        let m = self.log.record(lesser, greater)?;
        let update = self
            .ensemble
            .apply_measurement(&m, &self.log, &self.model, &self.apply)?;
        self.stats.resamples += update.resampled;
        self.stats.middle_len_total += update.middle_len_total;
        self.convergence = self.ensemble.convergence(self.config.epsilon);
        self.trace.push(TraceEntry {
            q_index: self.log.len(),
            i: lesser.min(greater),
            j: lesser.max(greater),
            response: lesser,
            modal_fraction: self.convergence.modal_fraction,
            middle_partition_len_mean: update.middle_len_mean(),
        });
        Ok(self.trace.last().expect("just pushed"))
    }

    /// Drives the loop until convergence or the question cap.
    ///
    /// An oracle that cannot answer yet ([`OracleError::Suspended`]) leaves
    /// the engine intact; call `run` again once the answer is available.
    pub fn run(&mut self, oracle: &mut impl Oracle) -> Result<SortResult> {
        while let Some((i, j)) = self.next_query() {
            let r = oracle.ask(i, j)?;
            let pair_ok = (r.lesser == i && r.greater == j) || (r.lesser == j && r.greater == i);
            if !pair_ok {
                return Err(CoreError::Oracle(OracleError::TranscriptMismatch {
                    index: self.log.len(),
                    i,
                    j,
                    lesser: r.lesser,
                    greater: r.greater,
                }));
            }
            self.observe(r.lesser, r.greater)?;
        }
        Ok(self.result())
    }

    pub fn result(&self) -> SortResult {
        SortResult {
            modal_order: self.convergence.modal_order.clone(),
            modal_fraction: self.convergence.modal_fraction,
            questions_asked: self.log.len(),
            converged: self.convergence.converged,
            per_question_trace: self.trace.clone(),
        }
    }
}

/// One-shot convenience wrapper around [`Engine::run`].
pub fn run(size: usize, oracle: &mut impl Oracle, model: ErrorModel, config: EngineConfig) -> Result<SortResult> {
    Engine::new(size, model, config)?.run(oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{MailboxOracle, ScriptedOracle, SimulatedOracle};

    #[test]
    fn singleton_list_is_immediately_sorted() {
        let mut oracle = ScriptedOracle::default();
        let r = run(1, &mut oracle, ErrorModel::known(0.9).unwrap(), EngineConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.questions_asked, 0);
        assert_eq!(r.modal_order, Ordering::identity(1));
    }

    #[test]
    fn noiseless_pair_sorts_quickly() {
        for seed in 0..100 {
            let truth = Ordering::from_indices(&[1, 0]).unwrap();
            let mut oracle = SimulatedOracle::new(&truth, 1.0, RandomStream::new(seed)).unwrap();
            let r = run(
                2,
                &mut oracle,
                ErrorModel::known(1.0).unwrap(),
                EngineConfig::with_seed(seed),
            )
            .unwrap();
            assert!(r.converged);
            assert_eq!(r.modal_order, truth);
            assert!(r.questions_asked <= 2, "{}", r.questions_asked);
        }
    }

    #[test]
    fn next_query_is_idempotent() {
        let engine = Engine::new(6, ErrorModel::known(0.9).unwrap(), EngineConfig::with_seed(5)).unwrap();
        let q = engine.next_query();
        assert!(q.is_some());
        for _ in 0..5 {
            assert_eq!(engine.next_query(), q);
        }
    }

    #[test]
    fn replay_reproduces_state_and_next_question() {
        let truth = Ordering::from_indices(&[3, 0, 5, 1, 4, 2]).unwrap();
        let config = EngineConfig::with_seed(77);
        let model = ErrorModel::known(0.85).unwrap();
        let mut live = Engine::new(6, model, config.clone()).unwrap();
        let mut oracle = SimulatedOracle::new(&truth, 0.85, RandomStream::new(1)).unwrap();
        for _ in 0..15 {
            let (i, j) = live.next_query().unwrap();
            let r = oracle.ask(i, j).unwrap();
            live.observe(r.lesser, r.greater).unwrap();
        }
        let replayed = Engine::replay(6, model, config, live.log().records()).unwrap();
        assert_eq!(replayed.ensemble().candidates(), live.ensemble().candidates());
        assert_eq!(replayed.next_query(), live.next_query());
        assert_eq!(replayed.trace(), live.trace());
    }

    #[test]
    fn mailbox_run_suspends_and_resumes() {
        let mut oracle = MailboxOracle::new();
        let handle = oracle.handle();
        let mut engine = Engine::new(3, ErrorModel::known(0.95).unwrap(), EngineConfig::with_seed(2)).unwrap();
        let truth = [ElementId(2), ElementId(0), ElementId(1)];
        let rank = |e: ElementId| truth.iter().position(|&x| x == e).unwrap();
        let mut suspensions = 0;
        let result = loop {
            match engine.run(&mut oracle) {
                Ok(r) => break r,
                Err(CoreError::Oracle(OracleError::Suspended { i, j })) => {
                    suspensions += 1;
                    let (l, g) = if rank(i) < rank(j) { (i, j) } else { (j, i) };
                    handle.deliver(l, g).unwrap();
                }
                Err(other) => panic!("{other}"),
            }
        };
        assert!(result.converged);
        assert_eq!(suspensions, result.questions_asked);
        assert_eq!(result.modal_order.as_slice(), &truth);
    }

    #[test]
    fn cap_stops_the_loop() {
        let config = EngineConfig {
            max_questions: Some(3),
            epsilon: 1e-9,
            ..EngineConfig::with_seed(4)
        };
        let truth = Ordering::identity(8);
        let mut oracle = SimulatedOracle::new(&truth, 0.6, RandomStream::new(3)).unwrap();
        let mut engine = Engine::new(8, ErrorModel::known(0.6).unwrap(), config).unwrap();
        let r = engine.run(&mut oracle).unwrap();
        assert!(!r.converged);
        assert_eq!(r.questions_asked, 3);
        assert_eq!(engine.status(), EngineStatus::Exhausted);
        assert_eq!(engine.next_query(), None);
    }
}
