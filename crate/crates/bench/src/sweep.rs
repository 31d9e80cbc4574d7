use std::time::Instant;

use serde::{Deserialize, Serialize};

use noisyrank_core::parallel::map_range;
use noisyrank_core::rng::{derive_seed, tag};
use noisyrank_core::{Engine, Execution, Ordering, RandomStream, SimulatedOracle};

use crate::config::SweepConfig;
use crate::stats::mean_stddev;
use crate::BenchError;

/// One aggregated grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub size: usize,
    pub p: f64,
    #[serde(rename = "N")]
    pub ensemble_size: usize,
    pub epsilon: f64,
    pub strategy: String,
    pub trials: usize,
    pub mean_questions: f64,
    pub questions_stddev: f64,
    pub failure_rate: f64,
    pub mean_wall_millis: f64,
    pub mean_middle_partition_len: f64,
    /// Trials that ended in an engine error; they also count as failures.
    #[serde(default)]
    pub errored: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub questions: usize,
    pub converged: bool,
    pub correct: bool,
    pub wall_millis: f64,
    pub middle_len_mean: f64,
    pub error: Option<String>,
}

impl TrialOutcome {
    /// Non-convergence counts as failure as well as a wrong modal order.
    pub fn failed(&self) -> bool {
        self.error.is_some() || !self.converged || !self.correct
    }
}

/// Uniformly random hidden order for a trial.
pub fn random_truth(size: usize, seed: u64) -> Ordering {
    let mut perm = Ordering::identity(size).into_vec();
    RandomStream::derive(seed, &[tag::TRUTH]).shuffle(&mut perm);
    Ordering::new(perm).expect("shuffled identity")
}

fn trial_seed(config: &SweepConfig, size: usize, p: f64, n: usize, trial: usize) -> u64 {
    derive_seed(
        config.seed,
        &[tag::TRIAL, size as u64, p.to_bits(), n as u64, trial as u64],
    )
}

/// Plays one simulated session: a fresh hidden order, a channel of
/// reliability `p` and an engine seeded from `seed`.
pub fn run_trial(
    config: &SweepConfig,
    size: usize,
    p: f64,
    n: usize,
    seed: u64,
    engine_exec: Execution,
) -> TrialOutcome {
    let start = config.record_wall_time.then(Instant::now);
    let result = (|| -> Result<_, BenchError> {
        let truth = random_truth(size, seed);
        let mut oracle = SimulatedOracle::new(&truth, p, RandomStream::derive(seed, &[tag::ORACLE]))?;
        let model = config.error_model_mode.model(p)?;
        let engine_config = noisyrank_core::EngineConfig {
            execution: engine_exec,
            ..config.engine_config(n, seed)
        };
        let mut engine = Engine::new(size, model, engine_config)?;
        let result = engine.run(&mut oracle)?;
        Ok((result.modal_order == truth, result, engine.stats().middle_len_mean()))
    })();
    let wall_millis = start.map_or(0.0, |t| t.elapsed().as_secs_f64() * 1e3);
    match result {
        Ok((correct, r, middle)) => TrialOutcome {
            questions: r.questions_asked,
            converged: r.converged,
            correct,
            wall_millis,
            middle_len_mean: middle,
            error: None,
        },
        Err(e) => TrialOutcome {
            questions: 0,
            converged: false,
            correct: false,
            wall_millis,
            middle_len_mean: 0.0,
            error: Some(e.to_string()),
        },
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, BenchError> {
    run_sweep_with(config, Execution::Parallel)
}

/// Runs every cell of the grid. `exec` decides whether trials fan out over
/// the rayon pool; each engine runs sequentially inside its trial. The rows
/// do not depend on `exec`.
pub fn run_sweep_with(config: &SweepConfig, exec: Execution) -> Result<Vec<SweepRow>, BenchError> {
    config.validate()?;
    let mut cells = Vec::with_capacity(config.cell_count());
    for &size in &config.l_values {
        for &p in &config.p_values {
            for &n in &config.n_values {
                cells.push((size, p, n));
            }
        }
    }
    let per_cell = config.trials_per_cell;
    let outcomes = map_range(exec, cells.len() * per_cell, |job| {
        let (size, p, n) = cells[job / per_cell];
        let seed = trial_seed(config, size, p, n, job % per_cell);
        run_trial(config, size, p, n, seed, Execution::Sequential)
    });
    Ok(cells
        .iter()
        .zip(outcomes.chunks(per_cell))
        .map(|(&(size, p, n), trials)| aggregate(config, size, p, n, trials))
        .collect())
}

fn aggregate(config: &SweepConfig, size: usize, p: f64, n: usize, trials: &[TrialOutcome]) -> SweepRow {
    let count = trials.len() as f64;
    let questions: Vec<f64> = trials.iter().map(|t| t.questions as f64).collect();
    let (mean_questions, questions_stddev) = mean_stddev(&questions);
    let failures = trials.iter().filter(|t| t.failed()).count();
    SweepRow {
        size,
        p,
        ensemble_size: n,
        epsilon: config.epsilon,
        strategy: config.query_strategy.name().to_string(),
        trials: trials.len(),
        mean_questions,
        questions_stddev,
        failure_rate: failures as f64 / count,
        mean_wall_millis: trials.iter().map(|t| t.wall_millis).sum::<f64>() / count,
        mean_middle_partition_len: trials.iter().map(|t| t.middle_len_mean).sum::<f64>() / count,
        errored: trials.iter().filter(|t| t.error.is_some()).count(),
        first_error: trials.iter().find_map(|t| t.error.clone()),
    }
}
