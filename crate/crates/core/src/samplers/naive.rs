//! Uniform proposal plus rejection. Exact, but the acceptance rate collapses
//! as measurements accumulate, so it is limited to tiny lists.

use crate::error::{CoreError, Result};
use crate::model::{ElementId, ErrorModel, MeasurementLog, Ordering, SampleBookkeeping};
use crate::rng::RandomStream;

use super::sequential_log_ratio;

pub const DEFAULT_NAIVE_BUDGET: u64 = 10_000_000;
pub const NAIVE_SIZE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveSample {
    pub ordering: Ordering,
    pub bookkeeping: SampleBookkeeping,
    pub attempts: u64,
}

pub fn naive_rejection_sample(
    log: &MeasurementLog,
    model: &ErrorModel,
    rng: &mut RandomStream,
    budget: u64,
) -> Result<NaiveSample> {
    let size = log.size();
    if size > NAIVE_SIZE_LIMIT {
        return Err(CoreError::TooLarge {
            what: "the naive rejection sampler",
            size,
            limit: NAIVE_SIZE_LIMIT,
        });
    }
    let mut perm: Vec<ElementId> = (0..size as u32).map(ElementId).collect();
    let mut pos = vec![0u32; size];
    for attempt in 1..=budget {
        rng.shuffle(&mut perm);
        for (p, e) in perm.iter().enumerate() {
            pos[e.index()] = p as u32;
        }
        let mut bk = SampleBookkeeping::default();
        let accept = match *model {
            ErrorModel::KnownP { p } => {
                let matched = log.records().iter().filter(|m| m.consistent_with(&pos)).count();
                bk = SampleBookkeeping::new(log.len() as u32, matched as u32);
                let missed = (log.len() - matched) as i32;
                ((1.0 - p) / p).powi(missed)
            }
            ErrorModel::UnknownP => {
                let lr = sequential_log_ratio(model, &mut bk, log.records().iter().map(|m| m.consistent_with(&pos)));
                lr.exp().min(1.0)
            }
        };
        if rng.bernoulli(accept) {
            return Ok(NaiveSample {
                ordering: Ordering::from_vec_unchecked(perm),
                bookkeeping: bk,
                attempts: attempt,
            });
        }
    }
    Err(CoreError::BudgetExceeded { attempts: budget })
}
