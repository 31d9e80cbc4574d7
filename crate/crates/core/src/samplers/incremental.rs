//! Updating a candidate after one new measurement.
//!
//! A candidate that agrees with the new record `a < b` is kept. One that
//! disagrees has the shape `{outer-left, b ... a, outer-right}`; it survives
//! with probability `(1 - f) / f`, otherwise only the middle block `b ... a`
//! is redrawn. The block is reversed first so the most plausible maximum is
//! presented first to the max-element sampler.

use crate::error::{CoreError, Result};
use crate::model::{ErrorModel, Measurement, MeasurementLog, Ordering, SampleBookkeeping};
use crate::rng::RandomStream;

use super::{max_element_sample, recursive_partition_sample, DEFAULT_PARTITION_BUDGET};

/// Probability of keeping a candidate that contradicts the new record.
pub type KeepRule = fn(&ErrorModel, SampleBookkeeping) -> f64;

/// `min(1, (1 - f) / f)` with `f` taken from the candidate's bookkeeping.
pub fn standard_keep_rule(model: &ErrorModel, bk: SampleBookkeeping) -> f64 {
    model.keep_probability(bk)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiddleSampler {
    MaxElement,
    RecursivePartition,
}

#[derive(Debug, Clone, Copy)]
pub struct ResampleOptions {
    pub middle: MiddleSampler,
    pub keep_rule: KeepRule,
    pub partition_budget: u64,
}

impl Default for ResampleOptions {
    fn default() -> Self {
        ResampleOptions {
            middle: MiddleSampler::MaxElement,
            keep_rule: standard_keep_rule,
            partition_budget: DEFAULT_PARTITION_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleAction {
    /// The candidate already agreed with the record.
    Consistent,
    /// It disagreed but passed the keep test.
    KeptInconsistent,
    /// Positions `start .. start + len` were redrawn.
    Resampled { start: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResampleOutcome {
    pub ordering: Ordering,
    pub bookkeeping: SampleBookkeeping,
    pub action: ResampleAction,
}

pub fn incremental_resample(
    candidate: &Ordering,
    bk: SampleBookkeeping,
    new_measurement: &Measurement,
    log: &MeasurementLog,
    model: &ErrorModel,
    rng: &mut RandomStream,
) -> Result<ResampleOutcome> {
    incremental_resample_with(
        candidate,
        bk,
        new_measurement,
        log,
        model,
        rng,
        &ResampleOptions::default(),
    )
}

pub fn incremental_resample_with(
    candidate: &Ordering,
    bk: SampleBookkeeping,
    new_measurement: &Measurement,
    log: &MeasurementLog,
    model: &ErrorModel,
    rng: &mut RandomStream,
    options: &ResampleOptions,
) -> Result<ResampleOutcome> {
    match log.last() {
        Some(last) if last == new_measurement => {}
        _ => {
            return Err(CoreError::SequenceGap {
                expected: log.len() as u64,
                found: new_measurement.sequence_number,
            })
        }
    }
    if candidate.len() != log.size() {
        return Err(CoreError::DimensionMismatch {
            expected: log.size(),
            found: candidate.len(),
        });
    }
    let pos = candidate.positions();
    let mut bk = bk;
    if new_measurement.consistent_with(&pos) {
        bk.observe(true);
        return Ok(ResampleOutcome {
            ordering: candidate.clone(),
            bookkeeping: bk,
            action: ResampleAction::Consistent,
        });
    }
    let keep = (options.keep_rule)(model, bk);
    if rng.bernoulli(keep) {
        bk.observe(false);
        return Ok(ResampleOutcome {
            ordering: candidate.clone(),
            bookkeeping: bk,
            action: ResampleAction::KeptInconsistent,
        });
    }

    let start = pos[new_measurement.greater.index()] as usize;
    let end = pos[new_measurement.lesser.index()] as usize;
    let perm = candidate.as_slice();
    let mut middle: Vec<_> = perm[start..=end].to_vec();
    middle.reverse();

    // Records touching the outer blocks keep their verdict whatever the
    // middle becomes; seed the bookkeeping with them.
    let inside = |e: crate::model::ElementId| {
        let p = pos[e.index()] as usize;
        (start..=end).contains(&p)
    };
    let mut seed = SampleBookkeeping::default();
    for m in log.records() {
        if !(inside(m.lesser) && inside(m.greater)) {
            seed.observe(m.consistent_with(&pos));
        }
    }

    let (arranged, bk) = match options.middle {
        MiddleSampler::MaxElement => max_element_sample(&middle, log, model, rng, seed)?,
        // An exhausted partition budget hands the middle to the max-element
        // sampler, continuing on the same stream.
        MiddleSampler::RecursivePartition => {
            match recursive_partition_sample(&middle, log, model, rng, seed, options.partition_budget) {
                Err(CoreError::BudgetExceeded { .. }) => max_element_sample(&middle, log, model, rng, seed)?,
                other => other?,
            }
        }
    };
    let mut out = Vec::with_capacity(perm.len());
    out.extend_from_slice(&perm[..start]);
    out.extend_from_slice(&arranged);
    out.extend_from_slice(&perm[end + 1..]);
    let ordering = Ordering::from_vec_unchecked(out);
    debug_assert_eq!(Ok(bk), SampleBookkeeping::of(&ordering, log));
    Ok(ResampleOutcome {
        ordering,
        bookkeeping: bk,
        action: ResampleAction::Resampled {
            start,
            len: end - start + 1,
        },
    })
}
