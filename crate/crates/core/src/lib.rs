//! Active ranking from noisy pairwise judgements.
//!
//! A Monte Carlo ensemble of candidate orderings approximates the posterior
//! over permutations given every judgement so far. After each answer the
//! ensemble is updated in place rather than redrawn, and the next question is
//! the pair the ensemble is most evenly split on.
//!
//! ```
//! use noisyrank_core::{engine, EngineConfig, ErrorModel, Ordering, RandomStream, SimulatedOracle};
//!
//! let truth = Ordering::from_indices(&[4, 1, 3, 0, 2]).unwrap();
//! let mut oracle = SimulatedOracle::new(&truth, 0.9, RandomStream::new(7)).unwrap();
//! let result = engine::run(5, &mut oracle, ErrorModel::known(0.9).unwrap(), EngineConfig::with_seed(1)).unwrap();
//! assert!(result.questions_asked > 0);
//! ```

pub mod engine;
pub mod error;
pub mod journal;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod rng;
pub mod samplers;

pub use engine::{Engine, EngineConfig, EngineStatus, QueryStrategy, SortResult};
pub use error::{CoreError, Result};
pub use model::{
    brute_force_posterior, f_next, n_dispute, n_match, posterior_weight, ElementId, ErrorModel, Measurement,
    MeasurementLog, Ordering, Posterior, SampleBookkeeping,
};
pub use oracle::{MailboxHandle, MailboxOracle, Oracle, OracleError, Response, ScriptedOracle, SimulatedOracle};
pub use parallel::Execution;
pub use rng::RandomStream;
pub use samplers::SamplerKind;
