//! Maximum-element sampler in arithmetic-coding form.
//!
//! Each step picks the largest remaining element with probability
//! proportional to `beta_i = ratio^n_dispute(i)`, using exactly one uniform
//! draw: the normaliser is summed backwards through the presentation order
//! and the cumulative weights are walked forwards. Elements should be
//! presented most-plausible-maximum first so the walk stops early.
//!
//! Dispute counts are kept incrementally by [`DisputeTracker`]: removing the
//! chosen maximum only touches the elements it has beaten.

use crate::error::{CoreError, Result};
use crate::model::{ElementId, ErrorModel, MeasurementLog, SampleBookkeeping};
use crate::rng::RandomStream;

/// Largest number of record ids reported in an inconsistency error.
const MAX_REPORTED_RECORDS: usize = 32;

/// Per-element dispute counters restricted to a shrinking remaining set.
#[derive(Debug, Clone)]
pub struct DisputeTracker {
    disputes: Vec<u64>,
    remaining: Vec<bool>,
    len: usize,
}

impl DisputeTracker {
    pub fn new(elements: &[ElementId], log: &MeasurementLog) -> Self {
        let mut remaining = vec![false; log.size()];
        for &e in elements {
            remaining[e.index()] = true;
        }
        let mut disputes = vec![0u64; log.size()];
        for &e in elements {
            disputes[e.index()] = log
                .lost_to(e)
                .iter()
                .filter(|g| remaining[g.index()])
                .map(|&g| log.count(e, g) as u64)
                .sum();
        }
        DisputeTracker {
            disputes,
            remaining,
            len: elements.len(),
        }
    }

    /// Current `n_dispute(e, remaining)`.
    #[inline]
    pub fn dispute(&self, e: ElementId) -> u64 {
        self.disputes[e.index()]
    }

    #[inline]
    pub fn is_remaining(&self, e: ElementId) -> bool {
        self.remaining[e.index()]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Removes `e` and returns how many records show `e` beating a
    /// still-remaining element.
    pub fn remove(&mut self, e: ElementId, log: &MeasurementLog) -> u64 {
        debug_assert!(self.remaining[e.index()]);
        self.remaining[e.index()] = false;
        self.len -= 1;
        let mut wins = 0;
        for &l in log.beaten_by(e) {
            if self.remaining[l.index()] {
                let c = log.count(l, e) as u64;
                self.disputes[l.index()] -= c;
                wins += c;
            }
        }
        wins
    }
}

/// Samples an arrangement (lowest-first) of `elements`, presented in
/// decreasing plausibility of being the maximum.
pub fn max_element_sample(
    elements: &[ElementId],
    log: &MeasurementLog,
    model: &ErrorModel,
    rng: &mut RandomStream,
    bk: SampleBookkeeping,
) -> Result<(Vec<ElementId>, SampleBookkeeping)> {
    let mut seq = elements.to_vec();
    let mut top_down = Vec::with_capacity(seq.len());
    let mut tracker = DisputeTracker::new(&seq, log);
    let mut bk = bk;
    let mut betas = Vec::with_capacity(seq.len());
    while seq.len() > 1 {
        compute_betas(&seq, &tracker, log, model, bk, &mut betas)?;
        let sigma = rng.uniform();
        let k = arithmetic_select(&betas, sigma);
        let chosen = seq.remove(k);
        let lost = tracker.dispute(chosen);
        match model {
            ErrorModel::KnownP { .. } => {
                let won = tracker.remove(chosen, log);
                bk = SampleBookkeeping::new(bk.n_seen + (lost + won) as u32, bk.n_match + won as u32);
            }
            ErrorModel::UnknownP => {
                for &ri in log.touching(chosen) {
                    let m = &log.records()[ri as usize];
                    if tracker.is_remaining(m.other(chosen)) {
                        bk.observe(m.greater == chosen);
                    }
                }
                tracker.remove(chosen, log);
            }
        }
        top_down.push(chosen);
    }
    top_down.extend(seq);
    top_down.reverse();
    Ok((top_down, bk))
}

/// Unnormalised selection weights for every element of `seq`, rescaled so the
/// largest is 1.
fn compute_betas(
    seq: &[ElementId],
    tracker: &DisputeTracker,
    log: &MeasurementLog,
    model: &ErrorModel,
    bk: SampleBookkeeping,
    betas: &mut Vec<f64>,
) -> Result<()> {
    betas.clear();
    match *model {
        ErrorModel::KnownP { p } => {
            let min = seq.iter().map(|&e| tracker.dispute(e)).min().unwrap_or(0);
            let ratio = (1.0 - p) / p;
            if ratio == 0.0 && min > 0 {
                return Err(inconsistency(seq, tracker, log));
            }
            betas.extend(seq.iter().map(|&e| {
                let excess = tracker.dispute(e) - min;
                if excess == 0 {
                    1.0
                } else {
                    ratio.powf(excess as f64)
                }
            }));
        }
        ErrorModel::UnknownP => {
            let mut max = f64::NEG_INFINITY;
            for &e in seq {
                let mut local = bk;
                let mut lb = 0.0;
                for &ri in log.touching(e) {
                    let m = &log.records()[ri as usize];
                    if !tracker.is_remaining(m.other(e)) {
                        continue;
                    }
                    let matched = m.greater == e;
                    if !matched {
                        lb += model.ratio(local).ln();
                    }
                    local.observe(matched);
                }
                max = max.max(lb);
                betas.push(lb);
            }
            for b in betas.iter_mut() {
                *b = (*b - max).exp();
            }
        }
    }
    Ok(())
}

fn inconsistency(seq: &[ElementId], tracker: &DisputeTracker, log: &MeasurementLog) -> CoreError {
    let mut records: Vec<u64> = seq
        .iter()
        .flat_map(|&e| log.touching(e).iter().map(move |&ri| (e, ri)))
        .filter(|&(e, ri)| {
            let m = &log.records()[ri as usize];
            m.lesser == e && tracker.is_remaining(m.greater)
        })
        .map(|(_, ri)| log.records()[ri as usize].sequence_number)
        .collect();
    records.sort_unstable();
    records.dedup();
    records.truncate(MAX_REPORTED_RECORDS);
    CoreError::Inconsistent { records }
}

/// Normaliser summed from the back of the sequence (smallest weights first).
pub(crate) fn backward_normalizer(betas: &[f64]) -> f64 {
    betas.iter().rev().sum()
}

/// Index selected by a single uniform `sigma` in `[0, 1)`.
pub(crate) fn arithmetic_select(betas: &[f64], sigma: f64) -> usize {
    let z = backward_normalizer(betas);
    let mut w = 0.0;
    for (i, &b) in betas.iter().enumerate() {
        let gamma = b / z;
        if sigma < w + gamma {
            return i;
        }
        w += gamma;
    }
    // sigma landed in the rounding slack past the last cumulative sum
    betas.iter().rposition(|&b| b > 0.0).unwrap_or(betas.len() - 1)
}

/// Selection probabilities `beta_i / Z_p`.
#[cfg(test)]
pub(crate) fn selection_probabilities(betas: &[f64]) -> Vec<f64> {
    let z = backward_normalizer(betas);
    betas.iter().map(|b| b / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{n_dispute, n_match, Ordering};
    use proptest::prelude::*;

    fn ids(n: u32) -> Vec<ElementId> {
        (0..n).map(ElementId).collect()
    }

    fn random_log(size: usize, records: usize, rng: &mut RandomStream) -> MeasurementLog {
        let mut log = MeasurementLog::new(size).unwrap();
        for _ in 0..records {
            let a = rng.below(size);
            let mut b = rng.below(size - 1);
            if b >= a {
                b += 1;
            }
            log.record(ElementId::from(a), ElementId::from(b)).unwrap();
        }
        log
    }

    #[test]
    fn singleton_and_empty_log() {
        let log = MeasurementLog::new(4).unwrap();
        let mut rng = RandomStream::new(1);
        let model = ErrorModel::known(0.8).unwrap();
        let (out, _) = max_element_sample(&[ElementId(3)], &log, &model, &mut rng, Default::default()).unwrap();
        assert_eq!(out, vec![ElementId(3)]);

        let mut tally = std::collections::HashMap::new();
        for _ in 0..24_000 {
            let (out, _) = max_element_sample(&ids(4), &log, &model, &mut rng, Default::default()).unwrap();
            *tally.entry(out).or_insert(0u32) += 1;
        }
        assert_eq!(tally.len(), 24);
        for &c in tally.values() {
            assert!((800..1200).contains(&c), "{c}");
        }
    }

    #[test]
    fn three_element_chain_probabilities() {
        let mut log = MeasurementLog::new(3).unwrap();
        log.record(ElementId(0), ElementId(1)).unwrap();
        let model = ErrorModel::known(0.8).unwrap();
        let seq = ids(3);
        let tracker = DisputeTracker::new(&seq, &log);
        let mut betas = Vec::new();
        compute_betas(&seq, &tracker, &log, &model, Default::default(), &mut betas).unwrap();
        let probs = selection_probabilities(&betas);
        assert!((probs[0] - 0.25 / 2.25).abs() < 1e-12);
        assert!((probs[1] - 1.0 / 2.25).abs() < 1e-12);
        assert!((probs[2] - 1.0 / 2.25).abs() < 1e-12);
    }

    #[test]
    fn one_draw_per_selection() {
        let mut rng = RandomStream::new(8);
        let log = random_log(12, 40, &mut rng);
        let mut stream = RandomStream::new(99);
        let before = stream.counter();
        max_element_sample(
            &ids(12),
            &log,
            &ErrorModel::known(0.7).unwrap(),
            &mut stream,
            Default::default(),
        )
        .unwrap();
        // 11 selections, each a single f64 draw (two 32-bit words)
        assert_eq!(stream.counter() - before, 22);
    }

    #[test]
    fn noiseless_contradiction_is_reported() {
        let mut log = MeasurementLog::new(3).unwrap();
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            log.record(ElementId(a), ElementId(b)).unwrap();
        }
        let mut rng = RandomStream::new(2);
        let err = max_element_sample(
            &ids(3),
            &log,
            &ErrorModel::known(1.0).unwrap(),
            &mut rng,
            Default::default(),
        );
        assert_eq!(err, Err(CoreError::Inconsistent { records: vec![1, 2, 3] }));
    }

    #[test]
    fn noiseless_consistent_log_is_sorted() {
        let mut log = MeasurementLog::new(5).unwrap();
        for k in 0..4u32 {
            log.record(ElementId(k), ElementId(k + 1)).unwrap();
        }
        let mut rng = RandomStream::new(2);
        let (out, bk) = max_element_sample(
            &ids(5),
            &log,
            &ErrorModel::known(1.0).unwrap(),
            &mut rng,
            Default::default(),
        )
        .unwrap();
        assert_eq!(out, ids(5));
        assert_eq!(bk, SampleBookkeeping::new(4, 4));
    }

    #[test]
    fn bookkeeping_matches_direct_count() {
        let mut rng = RandomStream::new(21);
        for model in [ErrorModel::known(0.8).unwrap(), ErrorModel::UnknownP] {
            for _ in 0..20 {
                let log = random_log(10, 35, &mut rng);
                let (out, bk) = max_element_sample(&ids(10), &log, &model, &mut rng, Default::default()).unwrap();
                let order = Ordering::new(out).unwrap();
                assert_eq!(bk.n_seen as usize, log.len());
                assert_eq!(bk.n_match as usize, n_match(&order, &log).unwrap());
            }
        }
    }

    #[test]
    fn arithmetic_select_edges() {
        assert_eq!(arithmetic_select(&[1.0, 1.0], 0.0), 0);
        assert_eq!(arithmetic_select(&[1.0, 1.0], 0.4999), 0);
        assert_eq!(arithmetic_select(&[1.0, 1.0], 0.5), 1);
        assert_eq!(arithmetic_select(&[1.0, 0.0], 0.999_999_999_999_999_9), 0);
        assert_eq!(arithmetic_select(&[0.0, 1.0, 0.0], 0.3), 1);
    }

    #[test]
    fn tracker_matches_recount_large() {
        let mut rng = RandomStream::new(5);
        let log = random_log(256, 3000, &mut rng);
        let mut remaining = ids(256);
        rng.shuffle(&mut remaining);
        let mut tracker = DisputeTracker::new(&remaining, &log);
        while let Some(e) = remaining.pop() {
            for &r in remaining.iter().chain(std::iter::once(&e)) {
                let mut set = remaining.clone();
                set.push(e);
                assert_eq!(tracker.dispute(r), n_dispute(r, &set, &log).unwrap());
            }
            tracker.remove(e, &log);
        }
        assert!(tracker.is_empty());
    }

    proptest! {
        #[test]
        fn selection_probabilities_sum_to_one(
            seed in any::<u64>(),
            size in 2usize..40,
            records in 0usize..200,
            p in 0.51f64..0.999,
        ) {
            let mut rng = RandomStream::new(seed);
            let log = random_log(size, records, &mut rng);
            let model = ErrorModel::known(p).unwrap();
            let mut seq = ids(size as u32);
            let mut tracker = DisputeTracker::new(&seq, &log);
            let mut betas = Vec::new();
            while seq.len() > 1 {
                compute_betas(&seq, &tracker, &log, &model, Default::default(), &mut betas).unwrap();
                let total: f64 = selection_probabilities(&betas).iter().sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
                let k = arithmetic_select(&betas, rng.uniform());
                let e = seq.remove(k);
                tracker.remove(e, &log);
            }
        }

        #[test]
        fn tracker_matches_recount(seed in any::<u64>(), size in 2usize..64, records in 0usize..400) {
            let mut rng = RandomStream::new(seed);
            let log = random_log(size, records, &mut rng);
            let mut remaining = ids(size as u32);
            rng.shuffle(&mut remaining);
            let mut tracker = DisputeTracker::new(&remaining, &log);
            while let Some(e) = remaining.pop() {
                tracker.remove(e, &log);
                for &r in &remaining {
                    prop_assert_eq!(tracker.dispute(r), n_dispute(r, &remaining, &log).unwrap());
                }
            }
        }
    }
}
