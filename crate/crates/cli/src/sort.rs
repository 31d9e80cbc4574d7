//! Interactive sorting in the terminal.
//!
//! Each answer is written to the session journal before the next question,
//! so quitting at any point loses nothing; `--resume` replays the journal.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use noisyrank_service::api::{ConfigInput, CreateSessionRequest, ErrorMode, ResultView, StatusKind};
use noisyrank_service::{ServiceError, SessionStore};

use crate::args::SortArgs;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum SortOutcome {
    Finished(ResultView),
    /// Input ended before convergence; the session is on disk.
    Saved {
        dir: PathBuf,
    },
}

/// Items file: one label per line, blank lines ignored.
pub fn read_items(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read items file {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn usage_on_validation(e: ServiceError) -> CliError {
    match e {
        ServiceError::Validation { .. } => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.into()),
    }
}

fn open_session(args: &SortArgs, err: &mut dyn Write) -> Result<(SessionStore, String), CliError> {
    if let Some(dir) = &args.resume {
        let id = dir
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Usage(format!("{} is not a session directory", dir.display())))?
            .to_string();
        let root = dir
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let store = SessionStore::open(root)?;
        let session = store.get(&id).map_err(|e| match e {
            ServiceError::NotFound(_) => CliError::Usage(format!("no saved session at {}", dir.display())),
            other => CliError::Runtime(other.into()),
        })?;
        let seed = session.read().meta().seed;
        writeln!(err, "seed: {seed}")?;
        if args.seed.is_some_and(|s| s != seed) {
            writeln!(err, "note: a resumed session keeps its original seed")?;
        }
        return Ok((store, id));
    }

    let labels = match &args.items {
        Some(path) => read_items(path)?,
        None => args.labels.clone(),
    };
    let seed = args.seed.unwrap_or_else(crate::random_seed);
    let store = SessionStore::open(&args.dir)?;
    let request = CreateSessionRequest {
        labels,
        config: ConfigInput {
            ensemble_size: args.ensemble_size,
            epsilon: args.epsilon,
            strategy: args.strategy,
            error_mode: if args.p.is_some() {
                ErrorMode::KnownP
            } else {
                ErrorMode::UnknownP
            },
            p: args.p,
            max_questions: None,
        },
        seed: Some(seed),
    };
    let created = store.create(request).map_err(usage_on_validation)?;
    writeln!(err, "seed: {seed}")?;
    Ok((store, created.id))
}

fn resume_hint(dir: &Path) -> String {
    format!(
        "session saved; continue with: noisyrank sort --resume {}",
        dir.display()
    )
}

/// Runs the question loop over `input`. Prompts go to `err` so that `out`
/// carries only the final ranking.
pub fn run(
    args: &SortArgs,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<SortOutcome, CliError> {
    let (store, id) = open_session(args, err)?;
    let dir = store.root().join(&id);
    writeln!(err, "session directory: {}", dir.display())?;

    let mut line = String::new();
    loop {
        let q = match store.question(&id) {
            Ok(q) => q,
            Err(ServiceError::Conflict { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        let preferred = loop {
            write!(
                err,
                "[{}] 1: {}  2: {} - which do you prefer? ",
                q.questions_asked + 1,
                q.label_i,
                q.label_j
            )?;
            err.flush()?;
            line.clear();
            let read = input.read_line(&mut line)?;
            let answer = line.trim();
            if read == 0 || answer == "q" || answer == "quit" {
                writeln!(err)?;
                writeln!(err, "{}", resume_hint(&dir))?;
                return Ok(SortOutcome::Saved { dir });
            }
            match answer {
                "1" => break q.i,
                "2" => break q.j,
                a if a == q.label_i => break q.i,
                a if a == q.label_j => break q.j,
                _ => writeln!(err, "answer 1 or 2 (q to stop)")?,
            }
        };
        let lesser = if preferred == q.i { q.j } else { q.i };
        store.answer(&id, lesser, Some(q.seq))?;
    }

    let result = store.result(&id)?;
    for (rank, label) in result.ranking.iter().enumerate() {
        writeln!(out, "{}. {}", rank + 1, label)?;
    }
    writeln!(
        out,
        "confidence: {:.1}% after {} questions",
        result.confidence * 100.0,
        result.questions_asked
    )?;
    if result.status == StatusKind::Exhausted {
        writeln!(
            err,
            "question budget exhausted before convergence; the ranking is provisional"
        )?;
    }
    Ok(SortOutcome::Finished(result))
}
