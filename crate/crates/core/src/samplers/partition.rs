//! Recursive half-split sampler.
//!
//! A random split of the elements into a lower half (`floor(k/2)`) and an
//! upper half is accepted with probability `ratio^disputes`, where a dispute is
//! a record placing a lower-half element above an upper-half one. Accepted
//! halves are sampled recursively.

use crate::error::{CoreError, Result};
use crate::model::{ElementId, ErrorModel, MeasurementLog, SampleBookkeeping};
use crate::rng::RandomStream;

use super::sequential_log_ratio;

pub const DEFAULT_PARTITION_BUDGET: u64 = 1_000_000;

const OUTSIDE: u8 = 0;
const LOWER: u8 = 1;
const UPPER: u8 = 2;

/// Samples an arrangement (lowest-first) of `elements`.
///
/// `bk` is the bookkeeping accumulated before this call; the returned
/// bookkeeping has additionally consumed every record internal to `elements`.
pub fn recursive_partition_sample(
    elements: &[ElementId],
    log: &MeasurementLog,
    model: &ErrorModel,
    rng: &mut RandomStream,
    bk: SampleBookkeeping,
    budget: u64,
) -> Result<(Vec<ElementId>, SampleBookkeeping)> {
    let mut arranged = elements.to_vec();
    let mut ctx = Partitioner {
        log,
        model,
        budget,
        side: vec![OUTSIDE; log.size()],
        cross: Vec::new(),
    };
    let mut bk = bk;
    ctx.arrange(&mut arranged, rng, &mut bk)?;
    Ok((arranged, bk))
}

struct Partitioner<'a> {
    log: &'a MeasurementLog,
    model: &'a ErrorModel,
    budget: u64,
    side: Vec<u8>,
    cross: Vec<u32>,
}

impl Partitioner<'_> {
    fn arrange(&mut self, elems: &mut [ElementId], rng: &mut RandomStream, bk: &mut SampleBookkeeping) -> Result<()> {
        let k = elems.len();
        if k < 2 {
            return Ok(());
        }
        let half = k / 2;
        let mut attempts = 0;
        loop {
            if attempts == self.budget {
                return Err(CoreError::BudgetExceeded { attempts });
            }
            attempts += 1;
            rng.shuffle(elems);
            let (lower, upper) = elems.split_at(half);
            for &e in lower {
                self.side[e.index()] = LOWER;
            }
            for &e in upper {
                self.side[e.index()] = UPPER;
            }
            let (accept, next_bk) = self.split_test(lower, *bk);
            for &e in elems.iter() {
                self.side[e.index()] = OUTSIDE;
            }
            if rng.bernoulli(accept) {
                *bk = next_bk;
                break;
            }
        }
        let (lower, upper) = elems.split_at_mut(half);
        self.arrange(lower, rng, bk)?;
        self.arrange(upper, rng, bk)
    }

    /// Acceptance probability of the current split and the bookkeeping after
    /// consuming its cross records.
    fn split_test(&mut self, lower: &[ElementId], bk: SampleBookkeeping) -> (f64, SampleBookkeeping) {
        let log = self.log;
        match *self.model {
            ErrorModel::KnownP { p } => {
                let mut disputes = 0u64;
                let mut agree = 0u64;
                for &x in lower {
                    for &y in log.beaten_by(x) {
                        if self.side[y.index()] == UPPER {
                            disputes += log.count(y, x) as u64;
                        }
                    }
                    for &y in log.lost_to(x) {
                        if self.side[y.index()] == UPPER {
                            agree += log.count(x, y) as u64;
                        }
                    }
                }
                let accept = if disputes == 0 {
                    1.0
                } else {
                    ((1.0 - p) / p).powf(disputes as f64)
                };
                let next = SampleBookkeeping::new(bk.n_seen + (disputes + agree) as u32, bk.n_match + agree as u32);
                (accept, next)
            }
            ErrorModel::UnknownP => {
                self.cross.clear();
                for &x in lower {
                    for &ri in log.touching(x) {
                        let other = log.records()[ri as usize].other(x);
                        if self.side[other.index()] == UPPER {
                            self.cross.push(ri);
                        }
                    }
                }
                // journal order
                self.cross.sort_unstable();
                let mut next = bk;
                let side = &self.side;
                let lr = sequential_log_ratio(
                    self.model,
                    &mut next,
                    self.cross
                        .iter()
                        .map(|&ri| side[log.records()[ri as usize].lesser.index()] == LOWER),
                );
                (lr.exp().min(1.0), next)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{n_match, Ordering};

    fn ids(n: u32) -> Vec<ElementId> {
        (0..n).map(ElementId).collect()
    }

    #[test]
    fn singleton_is_fixed_point() {
        let log = MeasurementLog::new(3).unwrap();
        let mut rng = RandomStream::new(0);
        let bk = SampleBookkeeping::new(4, 2);
        let (out, bk2) =
            recursive_partition_sample(&[ElementId(2)], &log, &ErrorModel::UnknownP, &mut rng, bk, 10).unwrap();
        assert_eq!(out, vec![ElementId(2)]);
        assert_eq!(bk2, bk);
    }

    #[test]
    fn two_elements_follow_posterior() {
        let mut log = MeasurementLog::new(2).unwrap();
        log.record(ElementId(0), ElementId(1)).unwrap();
        let model = ErrorModel::known(0.8).unwrap();
        let mut rng = RandomStream::new(17);
        let trials = 100_000;
        let mut ab = 0;
        for _ in 0..trials {
            let (out, _) = recursive_partition_sample(
                &ids(2),
                &log,
                &model,
                &mut rng,
                SampleBookkeeping::default(),
                DEFAULT_PARTITION_BUDGET,
            )
            .unwrap();
            if out[0] == ElementId(0) {
                ab += 1;
            }
        }
        let freq = ab as f64 / trials as f64;
        let ci = 2.576 * (0.8f64 * 0.2 / trials as f64).sqrt();
        assert!((freq - 0.8).abs() < ci, "{freq}");
    }

    #[test]
    fn bookkeeping_matches_direct_count() {
        let mut rng = RandomStream::new(3);
        for model in [ErrorModel::known(0.75).unwrap(), ErrorModel::UnknownP] {
            let mut log = MeasurementLog::new(9).unwrap();
            for q in 0..30u32 {
                let a = q % 9;
                let b = (a + 1 + (q * 7) % 8) % 9;
                log.record(ElementId(a), ElementId(b)).unwrap();
            }
            let (out, bk) = recursive_partition_sample(
                &ids(9),
                &log,
                &model,
                &mut rng,
                SampleBookkeeping::default(),
                DEFAULT_PARTITION_BUDGET,
            )
            .unwrap();
            let order = Ordering::new(out).unwrap();
            assert_eq!(bk.n_seen as usize, log.len());
            assert_eq!(bk.n_match as usize, n_match(&order, &log).unwrap());
        }
    }

    #[test]
    fn noiseless_cycle_exhausts_budget() {
        let mut log = MeasurementLog::new(2).unwrap();
        log.record(ElementId(0), ElementId(1)).unwrap();
        log.record(ElementId(1), ElementId(0)).unwrap();
        let mut rng = RandomStream::new(3);
        let err = recursive_partition_sample(
            &ids(2),
            &log,
            &ErrorModel::known(1.0).unwrap(),
            &mut rng,
            SampleBookkeeping::default(),
            64,
        );
        assert_eq!(err, Err(CoreError::BudgetExceeded { attempts: 64 }));
    }
}
