//! Wall-clock cost of one query selection under each strategy.

use std::time::Instant;

use serde::Serialize;

use noisyrank_core::engine::select_query;
use noisyrank_core::rng::tag;
use noisyrank_core::{
    Engine, EngineConfig, ErrorModel, Execution, Oracle, QueryStrategy, RandomStream, SimulatedOracle,
};

use crate::sweep::random_truth;
use crate::BenchError;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SelectionTiming {
    pub size: usize,
    pub questions_before: usize,
    /// Pairs examined by each strategy on the timed ensemble.
    pub full_pairs_scanned: usize,
    pub adjacent_pairs_scanned: usize,
    pub full_nanos: f64,
    pub adjacent_nanos: f64,
}

/// Advances a simulated session by `warm` answers, then times
/// `select_query` for both strategies on the same ensemble. Each figure is
/// the best of `batches` batches of `reps` calls.
pub fn selection_timing(
    size: usize,
    p: f64,
    warm: usize,
    reps: usize,
    batches: usize,
    seed: u64,
) -> Result<SelectionTiming, BenchError> {
    let truth = random_truth(size, seed);
    let mut oracle = SimulatedOracle::new(&truth, p, RandomStream::derive(seed, &[tag::ORACLE]))?;
    let config = EngineConfig {
        epsilon: 1e-9,
        max_questions: Some(warm.max(1)),
        execution: Execution::Sequential,
        ..EngineConfig::with_seed(seed)
    };
    let mut engine = Engine::new(size, ErrorModel::known(p)?, config)?;
    while let Some((i, j)) = engine.next_query() {
        let r = oracle.ask(i, j).map_err(noisyrank_core::CoreError::from)?;
        engine.observe(r.lesser, r.greater)?;
    }
    let ensemble = engine.ensemble();
    let time = |strategy| {
        let mut best = f64::INFINITY;
        for b in 0..batches.max(1) {
            let mut rng = RandomStream::new(b as u64);
            let start = Instant::now();
            for _ in 0..reps.max(1) {
                std::hint::black_box(select_query(std::hint::black_box(ensemble), strategy, &mut rng));
            }
            best = best.min(start.elapsed().as_nanos() as f64 / reps.max(1) as f64);
        }
        best
    };
    Ok(SelectionTiming {
        size,
        questions_before: engine.questions_asked(),
        full_pairs_scanned: size * (size - 1) / 2,
        adjacent_pairs_scanned: ensemble.adjacent_pairs().len(),
        full_nanos: time(QueryStrategy::FullPairs),
        adjacent_nanos: time(QueryStrategy::AdjacentPairs),
    })
}
