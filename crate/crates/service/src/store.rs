use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::RwLock;
use uuid::Uuid;

use crate::api::{
    validate_labels, AnswerResponse, CreateSessionRequest, CreateSessionResponse, QuestionView, ResultView,
};
use crate::session::{FaultPoint, Session, SessionMeta};
use crate::ServiceError;

type Shared = Arc<RwLock<Session>>;

/// All sessions under one root directory. Sessions are loaded lazily from
/// disk and each sits behind its own lock: answers take it exclusively,
/// reads share it.
#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    sessions: RwLock<HashMap<String, Shared>>,
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(SessionStore {
            root,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn create(&self, req: CreateSessionRequest) -> Result<CreateSessionResponse, ServiceError> {
        validate_labels(&req.labels)?;
        let token = Uuid::new_v4();
        let seed = req.seed.unwrap_or_else(|| Uuid::new_v4().as_u64_pair().0);
        let (config, model) = req.config.resolve(seed)?;
        let id = token.simple().to_string();
        let meta = SessionMeta {
            format: 1,
            id: id.clone(),
            labels: req.labels,
            config,
            model,
            seed,
        };
        let session = Session::create(self.root.join(&id), meta)?;
        let question = session.question().ok();
        self.sessions.write().insert(id.clone(), Arc::new(RwLock::new(session)));
        Ok(CreateSessionResponse { id, seed, question })
    }

    /// Looks a session up, replaying it from disk on first use.
    pub fn get(&self, id: &str) -> Result<Shared, ServiceError> {
        if let Some(s) = self.sessions.read().get(id) {
            return Ok(s.clone());
        }
        // ids are 32 lowercase hex digits; anything else never touches the disk
        if id.len() != 32 || !id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        let dir = self.root.join(id);
        if !dir.is_dir() {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        let mut map = self.sessions.write();
        if let Some(s) = map.get(id) {
            return Ok(s.clone());
        }
        let shared = Arc::new(RwLock::new(Session::load(dir)?));
        map.insert(id.to_string(), shared.clone());
        Ok(shared)
    }

    /// Forgets the in-memory copy; the next access replays from disk.
    pub fn evict(&self, id: &str) {
        self.sessions.write().remove(id);
    }

    pub fn question(&self, id: &str) -> Result<QuestionView, ServiceError> {
        self.get(id)?.read().question()
    }

    /// On a storage failure the in-memory session may be ahead of or behind
    /// the disk, so it is dropped and rebuilt from the journal on next use.
    pub fn answer(&self, id: &str, lesser: u32, seq: Option<u64>) -> Result<AnswerResponse, ServiceError> {
        let session = self.get(id)?;
        let outcome = session.write().answer(lesser, seq);
        if matches!(outcome, Err(ServiceError::Storage(_) | ServiceError::Core(_))) {
            self.evict(id);
        }
        outcome
    }

    pub fn result(&self, id: &str) -> Result<ResultView, ServiceError> {
        Ok(self.get(id)?.read().result())
    }

    pub fn trace_csv(&self, id: &str) -> Result<String, ServiceError> {
        Ok(self.get(id)?.read().trace_csv())
    }

    /// Arms a one-shot fault on the next answer of session `id`.
    pub fn inject_fault(&self, id: &str, fault: FaultPoint) -> Result<(), ServiceError> {
        self.get(id)?.write().inject_fault(fault);
        Ok(())
    }
}
