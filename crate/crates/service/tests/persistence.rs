use noisyrank_core::{journal, ElementId, Oracle, Ordering, RandomStream, SimulatedOracle};
use noisyrank_service::api::{ConfigInput, CreateSessionRequest, ErrorMode, StatusKind};
use noisyrank_service::{FaultPoint, ServiceError, SessionStore};

fn request(labels: usize, seed: u64) -> CreateSessionRequest {
    CreateSessionRequest {
        labels: (0..labels).map(|k| format!("item-{k}")).collect(),
        config: ConfigInput {
            error_mode: ErrorMode::KnownP,
            p: Some(0.85),
            ..Default::default()
        },
        seed: Some(seed),
    }
}

/// Answers `n` questions from a simulated judge with the given truth.
fn answer_n(store: &SessionStore, id: &str, oracle: &mut SimulatedOracle, n: usize) {
    for _ in 0..n {
        let q = match store.question(id) {
            Ok(q) => q,
            Err(_) => return,
        };
        let r = oracle.ask(ElementId(q.i), ElementId(q.j)).unwrap();
        store.answer(id, r.lesser.0, Some(q.seq)).unwrap();
    }
}

#[test]
fn restart_reproduces_pending_question_and_modal_order() {
    let dir = tempfile::tempdir().unwrap();
    let truth = Ordering::from_indices(&[5, 2, 7, 0, 3, 6, 1, 4]).unwrap();
    let (id, before_q, before_r) = {
        let store = SessionStore::open(dir.path()).unwrap();
        let id = store.create(request(8, 21)).unwrap().id;
        let mut oracle = SimulatedOracle::new(&truth, 0.85, RandomStream::new(3)).unwrap();
        answer_n(&store, &id, &mut oracle, 12);
        (id.clone(), store.question(&id).unwrap(), store.result(&id).unwrap())
    };
    let store = SessionStore::open(dir.path()).unwrap();
    assert_eq!(store.question(&id).unwrap(), before_q);
    assert_eq!(store.result(&id).unwrap(), before_r);

    let text = std::fs::read_to_string(dir.path().join(&id).join("journal")).unwrap();
    assert!(text.starts_with("#noisyrank-journal v1 L=8\n"));
    let log = journal::parse(text.as_bytes()).unwrap();
    assert_eq!(log.len(), 12);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(&id).join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 21);
    assert_eq!(meta["labels"][7], "item-7");
}

#[test]
fn crash_after_journal_append_recovers_post_answer_state() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let truth = Ordering::from_indices(&[3, 1, 4, 0, 5, 2]).unwrap();
    let crashy = store.create(request(6, 8)).unwrap().id;
    let steady = store.create(request(6, 8)).unwrap().id;
    let mut o1 = SimulatedOracle::new(&truth, 0.85, RandomStream::new(11)).unwrap();
    let mut o2 = SimulatedOracle::new(&truth, 0.85, RandomStream::new(11)).unwrap();
    answer_n(&store, &crashy, &mut o1, 5);
    answer_n(&store, &steady, &mut o2, 5);

    let q = store.question(&crashy).unwrap();
    assert_eq!(q, store.question(&steady).unwrap());
    let r = o1.ask(ElementId(q.i), ElementId(q.j)).unwrap();
    o2.ask(ElementId(q.i), ElementId(q.j)).unwrap();

    store.inject_fault(&crashy, FaultPoint::AfterJournalAppend).unwrap();
    let err = store.answer(&crashy, r.lesser.0, Some(q.seq)).unwrap_err();
    assert!(matches!(err, ServiceError::Storage(_)), "{err:?}");
    store.answer(&steady, r.lesser.0, Some(q.seq)).unwrap();

    // a fresh process sees the answer exactly once
    let reopened = SessionStore::open(dir.path()).unwrap();
    assert_eq!(reopened.result(&crashy).unwrap().questions_asked, 6);
    assert_eq!(reopened.question(&crashy).unwrap(), store.question(&steady).unwrap());
    assert_eq!(reopened.result(&crashy).unwrap(), store.result(&steady).unwrap());
    // and so does the original store after its eviction
    assert_eq!(store.question(&crashy).unwrap(), store.question(&steady).unwrap());
    // resubmitting the lost answer is refused rather than doubled
    assert!(matches!(
        store.answer(&crashy, r.lesser.0, Some(q.seq)),
        Err(ServiceError::Conflict { .. })
    ));
}

#[test]
fn finished_sessions_report_their_result() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let mut req = request(2, 1);
    req.config.p = Some(1.0);
    let id = store.create(req).unwrap().id;
    let q = store.question(&id).unwrap();
    let a = store.answer(&id, q.j, Some(1)).unwrap();
    assert_eq!(a.status, StatusKind::Converged);
    assert!(a.question.is_none());
    match store.question(&id) {
        Err(ServiceError::Conflict { result: Some(r), .. }) => {
            assert_eq!(r.ranking, vec!["item-0", "item-1"]);
            assert!(r.is_final);
        }
        other => panic!("{other:?}"),
    }
    let first = store.result(&id).unwrap();
    assert_eq!(first, store.result(&id).unwrap());
    assert!(matches!(
        store.answer(&id, q.i, None),
        Err(ServiceError::Conflict { .. })
    ));
}

#[test]
fn result_matches_engine_modal_order() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let id = store.create(request(6, 30)).unwrap().id;
    let truth = Ordering::from_indices(&[0, 1, 2, 3, 4, 5]).unwrap();
    let mut oracle = SimulatedOracle::new(&truth, 0.85, RandomStream::new(2)).unwrap();
    answer_n(&store, &id, &mut oracle, 7);
    let session = store.get(&id).unwrap();
    let session = session.read();
    let modal = &session.engine().convergence().modal_order;
    let expected: Vec<String> = modal.as_slice().iter().rev().map(|e| format!("item-{}", e.0)).collect();
    let r = session.result();
    assert_eq!(r.ranking, expected);
    assert!(!r.is_final);
    assert_eq!(r.confidence, session.engine().convergence().modal_fraction);
    assert_eq!(session.question().unwrap().progress, r.confidence);
}

#[test]
fn concurrent_sessions_are_independent() {
    let dir = tempfile::tempdir().unwrap();
    let store = std::sync::Arc::new(SessionStore::open(dir.path()).unwrap());
    let ids: Vec<String> = (0..4).map(|k| store.create(request(5, 100 + k)).unwrap().id).collect();
    let handles: Vec<_> = ids
        .iter()
        .cloned()
        .enumerate()
        .map(|(k, id)| {
            let store = store.clone();
            std::thread::spawn(move || {
                let truth = Ordering::identity(5);
                let mut oracle = SimulatedOracle::new(&truth, 0.85, RandomStream::new(k as u64)).unwrap();
                answer_n(&store, &id, &mut oracle, 6);
                store.result(&id).unwrap().questions_asked
            })
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), 6);
    }
}
