//! The `noisyrank` command line.
//!
//! ```text
//! noisyrank sort golf tennis chess         # rank interactively
//! noisyrank simulate --sweep grid.toml --out sweep.csv
//! noisyrank serve --addr 127.0.0.1:8080
//! noisyrank verify --level full
//! ```
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

pub mod args;
pub mod simulate;
pub mod sort;
pub mod verify;

use std::fmt;
use std::hash::{BuildHasher, Hasher};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files; exit code 2.
    Usage(String),
    /// Everything else; exit code 1.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

/// A fresh seed when none was given.
pub fn random_seed() -> u64 {
    std::collections::hash_map::RandomState::new().build_hasher().finish()
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sort(a) => {
            let stdin = std::io::stdin();
            sort::run(&a, &mut stdin.lock(), &mut std::io::stdout(), &mut std::io::stderr()).map(|_| ())
        }
        Command::Simulate(a) => simulate::run(&a),
        Command::Serve(a) => serve(a.addr, a.data_dir),
        Command::Verify(a) => run_verify(&a),
    }
}

fn serve(addr: SocketAddr, data_dir: PathBuf) -> Result<(), CliError> {
    let store = Arc::new(noisyrank_service::SessionStore::open(&data_dir)?);
    eprintln!("sessions stored under {}", data_dir.display());
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(noisyrank_service::serve(addr, store))?;
    Ok(())
}

fn run_verify(a: &args::VerifyArgs) -> Result<(), CliError> {
    let seed = a.seed.unwrap_or(verify::DEFAULT_SEED);
    eprintln!("seed: {seed}");
    let report = verify::run(a.level, seed, |c| println!("{}", c.line()));
    let path = a
        .report
        .clone()
        .or_else(|| (a.level == verify::Level::Full).then(|| PathBuf::from("verify-report.json")));
    if let Some(path) = path {
        std::fs::write(&path, serde_json::to_vec_pretty(&report)?)?;
        eprintln!("report written to {}", path.display());
    }
    if report.passed {
        Ok(())
    } else {
        let names: Vec<String> = report.failures().map(|c| format!("{} ({})", c.id, c.name)).collect();
        Err(CliError::Runtime(anyhow::anyhow!("failed: {}", names.join(", "))))
    }
}
