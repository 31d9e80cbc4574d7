//! Samplers over orderings given a measurement log.
//!
//! Three samplers draw from scratch ([`naive`], [`partition`],
//! [`max_element`]); [`incremental`] turns a sample of the previous posterior
//! into a sample of the updated one.
//!
//! With an unknown error rate the acceptance ratio is not constant, so
//! records are consumed one at a time as a sequence of tests, each moving the
//! sample's `(n, n_match)` forward.

pub mod incremental;
pub mod max_element;
pub mod naive;
pub mod partition;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{ElementId, ErrorModel, MeasurementLog, Ordering, SampleBookkeeping};
use crate::rng::RandomStream;

pub use incremental::{
    incremental_resample, incremental_resample_with, standard_keep_rule, KeepRule, MiddleSampler, ResampleAction,
    ResampleOptions, ResampleOutcome,
};
pub use max_element::{max_element_sample, DisputeTracker};
pub use naive::{naive_rejection_sample, NaiveSample, DEFAULT_NAIVE_BUDGET, NAIVE_SIZE_LIMIT};
pub use partition::{recursive_partition_sample, DEFAULT_PARTITION_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Naive,
    RecursivePartition,
    MaxElement,
    /// Needs a predecessor sample; see [`incremental_resample`].
    Incremental,
}

impl SamplerKind {
    pub const FROM_SCRATCH: [SamplerKind; 3] = [
        SamplerKind::Naive,
        SamplerKind::RecursivePartition,
        SamplerKind::MaxElement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Naive => "naive",
            SamplerKind::RecursivePartition => "recursive_partition",
            SamplerKind::MaxElement => "max_element",
            SamplerKind::Incremental => "incremental",
        }
    }
}

/// Draws a full ordering of `log.size()` elements from scratch.
pub fn sample_from_scratch(
    kind: SamplerKind,
    log: &MeasurementLog,
    model: &ErrorModel,
    rng: &mut RandomStream,
) -> Result<(Ordering, SampleBookkeeping)> {
    let elements: Vec<ElementId> = (0..log.size() as u32).map(ElementId).collect();
    let (perm, bk) = match kind {
        SamplerKind::Naive => {
            let s = naive_rejection_sample(log, model, rng, DEFAULT_NAIVE_BUDGET)?;
            return Ok((s.ordering, s.bookkeeping));
        }
        SamplerKind::RecursivePartition => recursive_partition_sample(
            &elements,
            log,
            model,
            rng,
            SampleBookkeeping::default(),
            DEFAULT_PARTITION_BUDGET,
        )?,
        SamplerKind::MaxElement => max_element_sample(&elements, log, model, rng, SampleBookkeeping::default())?,
        SamplerKind::Incremental => {
            return Err(CoreError::InvalidConfig {
                field: "sampler",
                reason: "the incremental sampler needs a predecessor candidate".into(),
            })
        }
    };
    Ok((Ordering::from_vec_unchecked(perm), bk))
}

/// Runs a sequence of tests (`true` = the record agrees with the sample),
/// advancing `bk`; returns the log of the product of acceptance ratios over
/// the disagreeing records.
pub(crate) fn sequential_log_ratio(
    model: &ErrorModel,
    bk: &mut SampleBookkeeping,
    outcomes: impl IntoIterator<Item = bool>,
) -> f64 {
    let mut acc = 0.0;
    for matched in outcomes {
        if !matched {
            acc += model.ratio(*bk).ln();
        }
        bk.observe(matched);
    }
    acc
}
