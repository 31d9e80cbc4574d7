//! One persisted sorting session.
//!
//! On disk a session is a directory holding `meta.json` (labels, engine
//! config, error model, seed) and `journal`. Engine state is never written;
//! loading replays the journal.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use noisyrank_core::journal::{self, JournalWriter};
use noisyrank_core::{ElementId, Engine, EngineConfig, EngineStatus, ErrorModel, Measurement};

use crate::api::{AnswerResponse, QuestionView, ResultView, StatusKind};
use crate::ServiceError;

pub const META_FILE: &str = "meta.json";
pub const JOURNAL_FILE: &str = "journal";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub format: u32,
    pub id: String,
    pub labels: Vec<String>,
    pub config: EngineConfig,
    pub model: ErrorModel,
    pub seed: u64,
}

/// Where an injected fault fires, for crash-recovery tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    /// After the answer is durable in the journal, before the engine sees it.
    AfterJournalAppend,
}

#[derive(Debug)]
pub struct Session {
    meta: SessionMeta,
    dir: PathBuf,
    engine: Engine,
    journal: JournalWriter,
    fault: Option<FaultPoint>,
}

impl Session {
    /// Creates the session directory and its files. Everything is on disk
    /// before this returns.
    pub fn create(dir: PathBuf, meta: SessionMeta) -> Result<Self, ServiceError> {
        let engine = Engine::new(meta.labels.len(), meta.model, meta.config.clone())?;
        fs::create_dir(&dir)?;
        write_synced(
            &dir.join(META_FILE),
            &serde_json::to_vec_pretty(&meta).expect("meta serialises"),
        )?;
        let journal = JournalWriter::create(&dir.join(JOURNAL_FILE), meta.labels.len())?;
        File::open(&dir)?.sync_all()?;
        Ok(Session {
            meta,
            dir,
            engine,
            journal,
            fault: None,
        })
    }

    /// Rebuilds a session by replaying its journal.
    pub fn load(dir: PathBuf) -> Result<Self, ServiceError> {
        let text = fs::read(dir.join(META_FILE))?;
        let meta: SessionMeta =
            serde_json::from_slice(&text).map_err(|e| ServiceError::Storage(format!("bad {META_FILE}: {e}")))?;
        let (journal, log) = JournalWriter::open(&dir.join(JOURNAL_FILE))?;
        if log.size() != meta.labels.len() {
            return Err(ServiceError::Storage(format!(
                "journal is for {} elements but meta lists {} labels",
                log.size(),
                meta.labels.len()
            )));
        }
        let engine = Engine::replay(log.size(), meta.model, meta.config.clone(), log.records())?;
        Ok(Session {
            meta,
            dir,
            engine,
            journal,
            fault: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }

    pub fn meta(&self) -> &SessionMeta {
        &self.meta
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn inject_fault(&mut self, fault: FaultPoint) {
        self.fault = Some(fault);
    }

    pub fn status(&self) -> StatusKind {
        match self.engine.status() {
            EngineStatus::Running => StatusKind::AwaitingAnswer,
            EngineStatus::Converged => StatusKind::Converged,
            EngineStatus::Exhausted => StatusKind::Exhausted,
        }
    }

    fn pending(&self) -> Option<(ElementId, ElementId)> {
        self.engine.next_query()
    }

    fn question_view(&self, (i, j): (ElementId, ElementId)) -> QuestionView {
        QuestionView {
            i: i.0,
            j: j.0,
            label_i: self.meta.labels[i.index()].clone(),
            label_j: self.meta.labels[j.index()].clone(),
            progress: self.engine.convergence().modal_fraction,
            questions_asked: self.engine.questions_asked(),
            seq: self.engine.questions_asked() as u64 + 1,
        }
    }

    /// The pending question, or a conflict carrying the final result.
    pub fn question(&self) -> Result<QuestionView, ServiceError> {
        match self.pending() {
            Some(pair) => Ok(self.question_view(pair)),
            None => Err(self.finished_conflict()),
        }
    }

    fn finished_conflict(&self) -> ServiceError {
        ServiceError::Conflict {
            detail: format!("session is {}", status_name(self.status())),
            result: Some(Box::new(self.result())),
        }
    }

    /// Records `lesser` as the smaller element of the pending pair. The
    /// journal append is synced before the engine is advanced.
    pub fn answer(&mut self, lesser: u32, seq: Option<u64>) -> Result<AnswerResponse, ServiceError> {
        let (i, j) = self.pending().ok_or_else(|| self.finished_conflict())?;
        let expected = self.engine.questions_asked() as u64 + 1;
        if let Some(seq) = seq {
            if seq != expected {
                return Err(ServiceError::conflict(format!(
                    "answer for question {seq} but question {expected} is pending"
                )));
            }
        }
        let lesser = ElementId(lesser);
        let greater = if lesser == i {
            j
        } else if lesser == j {
            i
        } else {
            return Err(ServiceError::validation(
                "lesser",
                format!("{lesser} is not in the pending pair ({i}, {j})"),
            ));
        };
        self.journal.append(&Measurement {
            lesser,
            greater,
            sequence_number: expected,
        })?;
        if self.fault.take() == Some(FaultPoint::AfterJournalAppend) {
            return Err(ServiceError::Storage("injected fault after journal append".into()));
        }
        self.engine.observe(lesser, greater)?;
        Ok(AnswerResponse {
            status: self.status(),
            progress: self.engine.convergence().modal_fraction,
            questions_asked: self.engine.questions_asked(),
            question: self.pending().map(|p| self.question_view(p)),
        })
    }

    /// Current modal ordering, most preferred first.
    pub fn result(&self) -> ResultView {
        let c = self.engine.convergence();
        ResultView {
            ranking: c
                .modal_order
                .as_slice()
                .iter()
                .rev()
                .map(|e| self.meta.labels[e.index()].clone())
                .collect(),
            is_final: c.converged,
            confidence: c.modal_fraction,
            questions_asked: self.engine.questions_asked(),
            status: self.status(),
        }
    }

    pub fn trace_csv(&self) -> String {
        noisyrank_core::engine::trace_csv_string(self.engine.trace())
    }

    pub fn journal_text(&self) -> String {
        journal::to_string(self.engine.log())
    }
}

fn status_name(s: StatusKind) -> &'static str {
    match s {
        StatusKind::AwaitingAnswer => "awaiting an answer",
        StatusKind::Converged => "converged",
        StatusKind::Exhausted => "exhausted",
    }
}

fn write_synced(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut f = File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()
}
