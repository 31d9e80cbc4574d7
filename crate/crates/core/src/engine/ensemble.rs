//! The candidate ensemble and its derived pair statistics.
//!
//! `pair_count(i, j)` (the number of candidates placing `i` below `j`) and the
//! set of pairs adjacent in some candidate are both maintained incrementally:
//! a redrawn middle block only changes relations inside that block and the
//! adjacencies at and around it.

use std::collections::HashMap;

use crate::error::{CoreError, Result};
use crate::model::{ElementId, ErrorModel, Measurement, MeasurementLog, Ordering, SampleBookkeeping};
use crate::parallel::{map_indexed, map_range, Execution};
use crate::rng::{tag, RandomStream};
use crate::samplers::{incremental_resample_with, MiddleSampler, ResampleAction, ResampleOptions};

use super::config::EngineConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub ordering: Ordering,
    pub bookkeeping: SampleBookkeeping,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    size: usize,
    candidates: Vec<Candidate>,
    pair_counts: Vec<u32>,
    adjacency: AdjacencySet,
}

/// How one measurement was absorbed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub consistent: usize,
    pub kept: usize,
    pub resampled: usize,
    pub middle_len_total: usize,
}

impl UpdateStats {
    /// Mean length of the redrawn middle blocks, 0 when nothing was redrawn.
    pub fn middle_len_mean(&self) -> f64 {
        if self.resampled == 0 {
            0.0
        } else {
            self.middle_len_total as f64 / self.resampled as f64
        }
    }
}

/// Per-level attempt budget for warm-start partitions inside the engine.
/// Past it the middle falls back to the max-element sampler.
pub const WARM_START_BUDGET: u64 = 10_000;

/// Knobs for [`Ensemble::apply_measurement`].
#[derive(Debug, Clone, Copy)]
pub struct ApplyOptions {
    pub seed: u64,
    pub warm_start_threshold: usize,
    pub execution: Execution,
    pub resample: ResampleOptions,
}

impl ApplyOptions {
    pub fn from_config(config: &EngineConfig, size: usize) -> Self {
        ApplyOptions {
            seed: config.seed,
            warm_start_threshold: config.warm_start_for(size),
            execution: config.execution,
            resample: ResampleOptions {
                partition_budget: WARM_START_BUDGET,
                ..ResampleOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub converged: bool,
    pub modal_order: Ordering,
    pub modal_fraction: f64,
}

impl Ensemble {
    /// `N` independent uniform permutations.
    pub fn init(size: usize, config: &EngineConfig) -> Result<Self> {
        if size < 2 {
            return Err(CoreError::InvalidConfig {
                field: "L",
                reason: format!("need at least 2 elements, got {size}"),
            });
        }
        config.validate()?;
        Ok(Self::uniform(size, config))
    }

    pub(crate) fn uniform(size: usize, config: &EngineConfig) -> Self {
        let seed = config.seed;
        let orderings = map_range(config.execution, config.ensemble_size, |k| {
            let mut rng = RandomStream::derive(seed, &[tag::INIT, k as u64]);
            let mut perm: Vec<ElementId> = (0..size as u32).map(ElementId).collect();
            rng.shuffle(&mut perm);
            Ordering::from_vec_unchecked(perm)
        });
        Self::build(size, orderings)
    }

    /// An ensemble over the given candidates, all with empty bookkeeping.
    pub fn from_orderings(size: usize, orderings: Vec<Ordering>) -> Result<Self> {
        if orderings.is_empty() {
            return Err(CoreError::InvalidConfig {
                field: "ensemble_size",
                reason: "no candidates".into(),
            });
        }
        if let Some(bad) = orderings.iter().find(|o| o.len() != size) {
            return Err(CoreError::DimensionMismatch {
                expected: size,
                found: bad.len(),
            });
        }
        Ok(Self::build(size, orderings))
    }

    fn build(size: usize, orderings: Vec<Ordering>) -> Self {
        let candidates: Vec<Candidate> = orderings
            .into_iter()
            .map(|ordering| Candidate {
                ordering,
                bookkeeping: SampleBookkeeping::default(),
            })
            .collect();
        let pair_counts = count_pairs(size, &candidates);
        let mut adjacency = AdjacencySet::new(size);
        for c in &candidates {
            for w in c.ordering.as_slice().windows(2) {
                adjacency.add(w[0], w[1]);
            }
        }
        Ensemble {
            size,
            candidates,
            pair_counts,
            adjacency,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    /// N_ij: candidates with `i` below `j`.
    #[inline]
    pub fn pair_count(&self, i: ElementId, j: ElementId) -> u32 {
        self.pair_counts[i.index() * self.size + j.index()]
    }

    /// Pair counts recomputed from the candidates.
    pub fn recount_pairs(&self) -> Vec<u32> {
        count_pairs(self.size, &self.candidates)
    }

    pub fn pair_counts(&self) -> &[u32] {
        &self.pair_counts
    }

    /// Deduplicated pairs `(min, max)` adjacent in at least one candidate.
    pub fn adjacent_pairs(&self) -> &[(ElementId, ElementId)] {
        &self.adjacency.active
    }

    /// Folds the latest record `m` of `log` into every candidate.
    pub fn apply_measurement(
        &mut self,
        m: &Measurement,
        log: &MeasurementLog,
        model: &ErrorModel,
        opts: &ApplyOptions,
    ) -> Result<UpdateStats> {
        let mut resample = opts.resample;
        resample.middle = if log.len() < opts.warm_start_threshold {
            MiddleSampler::RecursivePartition
        } else {
            MiddleSampler::MaxElement
        };
        let seq = m.sequence_number;
        let outcomes = map_indexed(opts.execution, &self.candidates, |k, c| {
            let mut rng = RandomStream::derive(opts.seed, &[tag::RESAMPLE, k as u64, seq]);
            incremental_resample_with(&c.ordering, c.bookkeeping, m, log, model, &mut rng, &resample)
        });
        let mut stats = UpdateStats::default();
        for (k, outcome) in outcomes.into_iter().enumerate() {
            let outcome = outcome?;
            match outcome.action {
                ResampleAction::Consistent => stats.consistent += 1,
                ResampleAction::KeptInconsistent => stats.kept += 1,
                ResampleAction::Resampled { start, len } => {
                    stats.resampled += 1;
                    stats.middle_len_total += len;
                    self.replace_block(k, &outcome.ordering, start, len);
                }
            }
            self.candidates[k] = Candidate {
                ordering: outcome.ordering,
                bookkeeping: outcome.bookkeeping,
            };
        }
        Ok(stats)
    }

    /// Updates pair counts and adjacency for candidate `k` whose positions
    /// `start .. start + len` are about to become those of `new`.
    fn replace_block(&mut self, k: usize, new: &Ordering, start: usize, len: usize) {
        let size = self.size;
        let old = self.candidates[k].ordering.as_slice();
        let new = new.as_slice();
        let end = start + len;
        for (a, &x) in old[start..end].iter().enumerate() {
            for &y in &old[start + a + 1..end] {
                self.pair_counts[x.index() * size + y.index()] -= 1;
            }
        }
        for (a, &x) in new[start..end].iter().enumerate() {
            for &y in &new[start + a + 1..end] {
                self.pair_counts[x.index() * size + y.index()] += 1;
            }
        }
        let lo = start.saturating_sub(1);
        let hi = end.min(size - 1);
        for p in lo..hi {
            self.adjacency.remove(old[p], old[p + 1]);
        }
        for p in lo..hi {
            self.adjacency.add(new[p], new[p + 1]);
        }
    }

    /// Most frequent candidate (ties go to the earliest) and its share.
    pub fn convergence(&self, epsilon: f64) -> Convergence {
        let mut tally: HashMap<&[ElementId], (usize, usize)> = HashMap::new();
        for (k, c) in self.candidates.iter().enumerate() {
            tally.entry(c.ordering.as_slice()).or_insert((0, k)).0 += 1;
        }
        let (count, first) = tally
            .values()
            .copied()
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .unwrap_or((0, 0));
        let modal_fraction = count as f64 / self.candidates.len() as f64;
        Convergence {
            converged: modal_fraction > 1.0 - epsilon,
            modal_order: self.candidates[first].ordering.clone(),
            modal_fraction,
        }
    }
}

pub fn check_convergence(ensemble: &Ensemble, epsilon: f64) -> Convergence {
    ensemble.convergence(epsilon)
}

fn count_pairs(size: usize, candidates: &[Candidate]) -> Vec<u32> {
    let mut counts = vec![0u32; size * size];
    for c in candidates {
        let perm = c.ordering.as_slice();
        for (a, &x) in perm.iter().enumerate() {
            let row = x.index() * size;
            for &y in &perm[a + 1..] {
                counts[row + y.index()] += 1;
            }
        }
    }
    counts
}

/// Multiset of adjacent pairs with O(1) insert/remove and a dense list of
/// the distinct pairs present.
#[derive(Debug, Clone)]
struct AdjacencySet {
    size: usize,
    multiplicity: Vec<u32>,
    slot: Vec<u32>,
    active: Vec<(ElementId, ElementId)>,
}

impl AdjacencySet {
    fn new(size: usize) -> Self {
        AdjacencySet {
            size,
            multiplicity: vec![0; size * size],
            slot: vec![u32::MAX; size * size],
            active: Vec::new(),
        }
    }

    #[inline]
    fn key(&self, a: ElementId, b: ElementId) -> (usize, (ElementId, ElementId)) {
        let pair = if a < b { (a, b) } else { (b, a) };
        (pair.0.index() * self.size + pair.1.index(), pair)
    }

    fn add(&mut self, a: ElementId, b: ElementId) {
        let (key, pair) = self.key(a, b);
        self.multiplicity[key] += 1;
        if self.multiplicity[key] == 1 {
            self.slot[key] = self.active.len() as u32;
            self.active.push(pair);
        }
    }

    fn remove(&mut self, a: ElementId, b: ElementId) {
        let (key, _) = self.key(a, b);
        self.multiplicity[key] -= 1;
        if self.multiplicity[key] == 0 {
            let at = self.slot[key] as usize;
            self.slot[key] = u32::MAX;
            self.active.swap_remove(at);
            if let Some(&moved) = self.active.get(at) {
                let (mk, _) = self.key(moved.0, moved.1);
                self.slot[mk] = at as u32;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn order(ix: &[u32]) -> Ordering {
        Ordering::from_indices(ix).unwrap()
    }

    fn adjacency_from_scratch(e: &Ensemble) -> BTreeSet<(ElementId, ElementId)> {
        e.candidates()
            .iter()
            .flat_map(|c| {
                c.ordering
                    .as_slice()
                    .windows(2)
                    .map(|w| if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) })
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    #[test]
    fn init_rejects_tiny_lists() {
        assert!(Ensemble::init(1, &EngineConfig::default()).is_err());
    }

    #[test]
    fn init_is_uniform_and_deterministic() {
        let config = EngineConfig {
            ensemble_size: 1000,
            ..EngineConfig::with_seed(3)
        };
        let e = Ensemble::init(2, &config).unwrap();
        let n_ab = e.pair_count(ElementId(0), ElementId(1)) as f64;
        let ci = 2.576 * (0.25f64 / 1000.0).sqrt();
        assert!((n_ab / 1000.0 - 0.5).abs() < ci);

        let a = Ensemble::init(9, &config).unwrap();
        let seq = EngineConfig {
            execution: Execution::Sequential,
            ..config.clone()
        };
        let b = Ensemble::init(9, &seq).unwrap();
        assert_eq!(a.candidates(), b.candidates());
        for c in a.candidates() {
            assert!(crate::model::validate_permutation(c.ordering.as_slice()).is_ok());
        }
    }

    #[test]
    fn pair_counts_are_complementary() {
        let e = Ensemble::init(7, &EngineConfig::with_seed(1)).unwrap();
        for i in 0..7u32 {
            for j in 0..7u32 {
                if i != j {
                    assert_eq!(
                        e.pair_count(ElementId(i), ElementId(j)) + e.pair_count(ElementId(j), ElementId(i)),
                        100
                    );
                }
            }
        }
    }

    #[test]
    fn convergence_thresholds() {
        let mut orders = vec![order(&[0, 1, 2]); 99];
        orders.push(order(&[1, 0, 2]));
        let e = Ensemble::from_orderings(3, orders).unwrap();
        let c = e.convergence(0.02);
        assert!(c.converged);
        assert_eq!(c.modal_fraction, 0.99);
        assert_eq!(c.modal_order, order(&[0, 1, 2]));
        assert!(!e.convergence(0.005).converged);

        let all = Ensemble::from_orderings(3, vec![order(&[2, 1, 0]); 10]).unwrap();
        let c = all.convergence(0.01);
        assert!(c.converged);
        assert_eq!(c.modal_fraction, 1.0);
    }

    #[test]
    fn incremental_statistics_match_recount() {
        let config = EngineConfig {
            ensemble_size: 60,
            ..EngineConfig::with_seed(8)
        };
        let size = 12;
        let mut e = Ensemble::init(size, &config).unwrap();
        let mut log = MeasurementLog::new(size).unwrap();
        let model = ErrorModel::known(0.75).unwrap();
        let opts = ApplyOptions::from_config(&config, size);
        let mut rng = RandomStream::new(4);
        for _ in 0..80 {
            let a = rng.below(size);
            let b = (a + 1 + rng.below(size - 1)) % size;
            let m = log.record(ElementId::from(a), ElementId::from(b)).unwrap();
            e.apply_measurement(&m, &log, &model, &opts).unwrap();
            assert_eq!(e.pair_counts(), e.recount_pairs().as_slice());
            let listed: BTreeSet<_> = e.adjacent_pairs().iter().copied().collect();
            assert_eq!(listed.len(), e.adjacent_pairs().len());
            assert_eq!(listed, adjacency_from_scratch(&e));
            for c in e.candidates() {
                assert_eq!(Ok(c.bookkeeping), SampleBookkeeping::of(&c.ordering, &log));
            }
        }
    }

    #[test]
    fn consistent_measurement_only_touches_bookkeeping() {
        let orders = vec![order(&[0, 1, 2, 3]), order(&[0, 2, 1, 3]), order(&[1, 0, 2, 3])];
        let mut e = Ensemble::from_orderings(4, orders.clone()).unwrap();
        let mut log = MeasurementLog::new(4).unwrap();
        let m = log.record(ElementId(0), ElementId(3)).unwrap();
        let config = EngineConfig::default();
        let stats = e
            .apply_measurement(
                &m,
                &log,
                &ErrorModel::known(0.8).unwrap(),
                &ApplyOptions::from_config(&config, 4),
            )
            .unwrap();
        assert_eq!(stats.consistent, 3);
        for (c, o) in e.candidates().iter().zip(orders) {
            assert_eq!(c.ordering, o);
            assert_eq!(c.bookkeeping, SampleBookkeeping::new(1, 1));
        }
    }

    #[test]
    fn parallel_and_sequential_updates_agree() {
        let base = EngineConfig {
            ensemble_size: 50,
            ..EngineConfig::with_seed(10)
        };
        let seq_cfg = EngineConfig {
            execution: Execution::Sequential,
            ..base.clone()
        };
        let size = 10;
        let mut a = Ensemble::init(size, &base).unwrap();
        let mut b = Ensemble::init(size, &seq_cfg).unwrap();
        let mut log = MeasurementLog::new(size).unwrap();
        let model = ErrorModel::UnknownP;
        let mut rng = RandomStream::new(6);
        for _ in 0..40 {
            let x = rng.below(size);
            let y = (x + 1 + rng.below(size - 1)) % size;
            let m = log.record(ElementId::from(x), ElementId::from(y)).unwrap();
            a.apply_measurement(&m, &log, &model, &ApplyOptions::from_config(&base, size))
                .unwrap();
            b.apply_measurement(&m, &log, &model, &ApplyOptions::from_config(&seq_cfg, size))
                .unwrap();
        }
        assert_eq!(a.candidates(), b.candidates());
    }
}
