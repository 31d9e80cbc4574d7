//! Greedy-entropy question selection: ask about the pair whose answer the
//! ensemble is least sure of, i.e. minimise `(N_ij - N_ji)^2`.

use crate::model::ElementId;
use crate::rng::RandomStream;

use super::config::QueryStrategy;
use super::ensemble::Ensemble;

/// `(N_ij - N_ji)^2` for the unordered pair.
#[inline]
pub fn pair_score(ensemble: &Ensemble, i: ElementId, j: ElementId) -> u64 {
    let d = ensemble.pair_count(i, j) as i64 - ensemble.pair_count(j, i) as i64;
    (d * d) as u64
}

/// Returns the minimising pair as `(min id, max id)`; ties are broken
/// uniformly at random. `None` only for lists shorter than two.
pub fn select_query(
    ensemble: &Ensemble,
    strategy: QueryStrategy,
    rng: &mut RandomStream,
) -> Option<(ElementId, ElementId)> {
    let mut best = ArgMin::default();
    match strategy {
        QueryStrategy::FullPairs => {
            let size = ensemble.size() as u32;
            for i in 0..size {
                for j in i + 1..size {
                    let (i, j) = (ElementId(i), ElementId(j));
                    best.offer(pair_score(ensemble, i, j), (i, j), rng);
                }
            }
        }
        QueryStrategy::AdjacentPairs => {
            for &(i, j) in ensemble.adjacent_pairs() {
                best.offer(pair_score(ensemble, i, j), (i, j), rng);
            }
        }
    }
    best.pair
}

/// Running minimum with reservoir sampling over ties.
#[derive(Default)]
struct ArgMin {
    score: u64,
    ties: u32,
    pair: Option<(ElementId, ElementId)>,
}

impl ArgMin {
    #[inline]
    fn offer(&mut self, score: u64, pair: (ElementId, ElementId), rng: &mut RandomStream) {
        if self.pair.is_none() || score < self.score {
            self.score = score;
            self.ties = 1;
            self.pair = Some(pair);
        } else if score == self.score {
            self.ties += 1;
            if rng.below(self.ties as usize) == 0 {
                self.pair = Some(pair);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineConfig;
    use crate::model::Ordering;
    use std::collections::{BTreeSet, HashMap};

    fn order(ix: &[u32]) -> Ordering {
        Ordering::from_indices(ix).unwrap()
    }

    fn e(i: u32) -> ElementId {
        ElementId(i)
    }

    #[test]
    fn picks_the_split_pair() {
        let ens = Ensemble::from_orderings(3, vec![order(&[0, 1, 2]), order(&[0, 2, 1])]).unwrap();
        assert_eq!(pair_score(&ens, e(1), e(2)), 0);
        assert_eq!(pair_score(&ens, e(0), e(1)), 4);
        assert_eq!(pair_score(&ens, e(0), e(2)), 4);
        let mut rng = RandomStream::new(0);
        for strategy in [QueryStrategy::FullPairs, QueryStrategy::AdjacentPairs] {
            assert_eq!(select_query(&ens, strategy, &mut rng), Some((e(1), e(2))));
        }
        let scanned: BTreeSet<_> = ens.adjacent_pairs().iter().copied().collect();
        assert_eq!(scanned, BTreeSet::from([(e(0), e(1)), (e(1), e(2)), (e(0), e(2))]));
    }

    #[test]
    fn degenerate_ensemble_ties_are_spread() {
        let ens = Ensemble::from_orderings(4, vec![order(&[3, 1, 0, 2]); 5]).unwrap();
        let mut rng = RandomStream::new(4);
        let mut seen = HashMap::new();
        for _ in 0..6000 {
            let p = select_query(&ens, QueryStrategy::FullPairs, &mut rng).unwrap();
            assert_eq!(pair_score(&ens, p.0, p.1), 25);
            *seen.entry(p).or_insert(0) += 1;
        }
        assert_eq!(seen.len(), 6);
        for &c in seen.values() {
            assert!((800..1200).contains(&c), "{c}");
        }
        let adjacent: BTreeSet<_> = (0..300)
            .map(|_| select_query(&ens, QueryStrategy::AdjacentPairs, &mut rng).unwrap())
            .collect();
        assert_eq!(adjacent, BTreeSet::from([(e(1), e(3)), (e(0), e(1)), (e(0), e(2))]));
    }

    #[test]
    fn selection_is_a_true_argmin() {
        let config = EngineConfig {
            ensemble_size: 37,
            ..EngineConfig::with_seed(12)
        };
        let ens = Ensemble::init(15, &config).unwrap();
        let mut rng = RandomStream::new(1);
        let (i, j) = select_query(&ens, QueryStrategy::FullPairs, &mut rng).unwrap();
        let chosen = pair_score(&ens, i, j);
        let n = ens.len() as f64;
        for a in 0..15u32 {
            for b in a + 1..15 {
                assert!(pair_score(&ens, e(a), e(b)) >= chosen);
                // closest to an even split
                let share = |x: ElementId, y: ElementId| (ens.pair_count(x, y) as f64 / n - 0.5).abs();
                assert!(share(e(a), e(b)) >= share(i, j) - 1e-12);
            }
        }
        let (i, j) = select_query(&ens, QueryStrategy::AdjacentPairs, &mut rng).unwrap();
        let chosen = pair_score(&ens, i, j);
        for &(a, b) in ens.adjacent_pairs() {
            assert!(pair_score(&ens, a, b) >= chosen);
        }
    }
}
