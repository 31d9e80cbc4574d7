//! Elements, orderings, measurement logs and the posterior over orderings.
//!
//! An [`Ordering`] is stored lowest-first: position 0 holds the smallest
//! (least preferred) element. A [`Measurement`] records one judgement
//! `lesser < greater`. Posterior weights are always handled in log space.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{CoreError, Result};

/// Largest list the dense count matrix is sized for.
pub const MAX_LIST_SIZE: usize = 4096;

/// Largest list [`brute_force_posterior`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Dense index of a list element, in `[0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for ElementId {
    fn from(v: u32) -> Self {
        ElementId(v)
    }
}

impl From<usize> for ElementId {
    fn from(v: usize) -> Self {
        ElementId(v as u32)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_id(id: ElementId, size: usize) -> Result<()> {
    if id.index() < size {
        Ok(())
    } else {
        Err(CoreError::ElementOutOfRange { id, size })
    }
}

/// A permutation of `L` elements, lowest-first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<ElementId>", try_from = "Vec<ElementId>")]
pub struct Ordering {
    perm: Vec<ElementId>,
}

impl From<Ordering> for Vec<ElementId> {
    fn from(o: Ordering) -> Self {
        o.perm
    }
}

impl TryFrom<Vec<ElementId>> for Ordering {
    type Error = CoreError;

    fn try_from(perm: Vec<ElementId>) -> Result<Self> {
        Ordering::new(perm)
    }
}

impl Ordering {
    pub fn new(perm: Vec<ElementId>) -> Result<Self> {
        validate_permutation(&perm)?;
        Ok(Ordering { perm })
    }

    pub fn from_indices(indices: &[u32]) -> Result<Self> {
        Self::new(indices.iter().copied().map(ElementId).collect())
    }

    /// Caller guarantees `perm` is a permutation. Checked in debug builds.
    pub(crate) fn from_vec_unchecked(perm: Vec<ElementId>) -> Self {
        debug_assert!(validate_permutation(&perm).is_ok());
        Ordering { perm }
    }

    pub fn identity(size: usize) -> Self {
        Ordering {
            perm: (0..size as u32).map(ElementId).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn as_slice(&self) -> &[ElementId] {
        &self.perm
    }

    pub fn into_vec(self) -> Vec<ElementId> {
        self.perm
    }

    /// `positions()[e]` is the position of element `e`.
    pub fn positions(&self) -> Vec<u32> {
        let mut pos = vec![0u32; self.perm.len()];
        for (p, e) in self.perm.iter().enumerate() {
            pos[e.index()] = p as u32;
        }
        pos
    }

    pub fn reversed(&self) -> Ordering {
        let mut perm = self.perm.clone();
        perm.reverse();
        Ordering { perm }
    }

    /// True when `a` sits below `b`.
    pub fn precedes(&self, a: ElementId, b: ElementId) -> bool {
        let pa = self.perm.iter().position(|&e| e == a);
        let pb = self.perm.iter().position(|&e| e == b);
        matches!((pa, pb), (Some(x), Some(y)) if x < y)
    }

    /// Canonical byte encoding (little-endian u32 per position), used for
    /// exact-equality hashing of candidates.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        self.perm.iter().flat_map(|e| e.0.to_le_bytes()).collect()
    }

    /// Relabels every element through `map` (`map[old] = new`).
    pub fn relabel(&self, map: &[ElementId]) -> Result<Ordering> {
        Ordering::new(self.perm.iter().map(|e| map[e.index()]).collect())
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.perm.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Checks that `perm` holds each of `0..perm.len()` exactly once.
pub fn validate_permutation(perm: &[ElementId]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &e in perm {
        let i = e.index();
        if i >= perm.len() {
            return Err(CoreError::InvalidPermutation(format!(
                "element {e} out of range for length {}",
                perm.len()
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(CoreError::InvalidPermutation(format!("element {e} repeated")));
        }
    }
    Ok(())
}

/// One judgement: `lesser` was found smaller than `greater`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Measurement {
    pub lesser: ElementId,
    pub greater: ElementId,
    pub sequence_number: u64,
}

impl Measurement {
    /// True when `order_positions` places `lesser` below `greater`.
    #[inline]
    pub fn consistent_with(&self, order_positions: &[u32]) -> bool {
        order_positions[self.lesser.index()] < order_positions[self.greater.index()]
    }

    pub fn involves(&self, e: ElementId) -> bool {
        self.lesser == e || self.greater == e
    }

    pub fn other(&self, e: ElementId) -> ElementId {
        if self.lesser == e {
            self.greater
        } else {
            self.lesser
        }
    }
}

/// Append-only history of judgements with a dense `L x L` count matrix.
///
/// `count(i, j)` is the number of records asserting `i < j`. Alongside the
/// matrix the log keeps, per element, the distinct elements it has beaten
/// and lost to, and the indices of every record touching it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLog {
    size: usize,
    records: Vec<Measurement>,
    counts: Vec<u32>,
    beaten: Vec<Vec<ElementId>>,
    lost_to: Vec<Vec<ElementId>>,
    touching: Vec<Vec<u32>>,
}

impl MeasurementLog {
    pub fn new(size: usize) -> Result<Self> {
        if size > MAX_LIST_SIZE {
            return Err(CoreError::TooLarge {
                what: "the dense count matrix",
                size,
                limit: MAX_LIST_SIZE,
            });
        }
        Ok(MeasurementLog {
            size,
            records: Vec::new(),
            counts: vec![0; size * size],
            beaten: vec![Vec::new(); size],
            lost_to: vec![Vec::new(); size],
            touching: vec![Vec::new(); size],
        })
    }

    /// Rebuilds a log from stored records, checking ids and sequence numbers.
    pub fn from_records(size: usize, records: impl IntoIterator<Item = Measurement>) -> Result<Self> {
        let mut log = Self::new(size)?;
        for m in records {
            let expected = log.records.len() as u64 + 1;
            if m.sequence_number != expected {
                return Err(CoreError::SequenceGap {
                    expected,
                    found: m.sequence_number,
                });
            }
            log.record(m.lesser, m.greater)?;
        }
        Ok(log)
    }

    /// Appends `lesser < greater` and returns the stored record.
    pub fn record(&mut self, lesser: ElementId, greater: ElementId) -> Result<Measurement> {
        check_id(lesser, self.size)?;
        check_id(greater, self.size)?;
        if lesser == greater {
            return Err(CoreError::SelfComparison(lesser));
        }
        let m = Measurement {
            lesser,
            greater,
            sequence_number: self.records.len() as u64 + 1,
        };
        let cell = &mut self.counts[lesser.index() * self.size + greater.index()];
        if *cell == 0 {
            self.beaten[greater.index()].push(lesser);
            self.lost_to[lesser.index()].push(greater);
        }
        *cell += 1;
        let idx = self.records.len() as u32;
        self.touching[lesser.index()].push(idx);
        self.touching[greater.index()].push(idx);
        self.records.push(m);
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of records, `n`.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Measurement] {
        &self.records
    }

    pub fn last(&self) -> Option<&Measurement> {
        self.records.last()
    }

    /// Number of records asserting `lesser < greater`.
    #[inline]
    pub fn count(&self, lesser: ElementId, greater: ElementId) -> u32 {
        self.counts[lesser.index() * self.size + greater.index()]
    }

    /// Distinct elements `l` with at least one record `l < e`.
    pub fn beaten_by(&self, e: ElementId) -> &[ElementId] {
        &self.beaten[e.index()]
    }

    /// Distinct elements `g` with at least one record `e < g`.
    pub fn lost_to(&self, e: ElementId) -> &[ElementId] {
        &self.lost_to[e.index()]
    }

    /// Indices into [`records`](Self::records) of every record involving `e`,
    /// in journal order.
    pub fn touching(&self, e: ElementId) -> &[u32] {
        &self.touching[e.index()]
    }

    /// Count matrix recomputed from scratch out of the records.
    pub fn recount(&self) -> Vec<u32> {
        let mut counts = vec![0; self.size * self.size];
        for m in &self.records {
            counts[m.lesser.index() * self.size + m.greater.index()] += 1;
        }
        counts
    }

    pub fn counts_matrix(&self) -> &[u32] {
        &self.counts
    }
}

/// Probability model for the noisy channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ErrorModel {
    /// Each judgement is correct with the given probability.
    KnownP { p: f64 },
    /// Reliability unknown; integrated out with the closed-form weights.
    UnknownP,
}

impl ErrorModel {
    /// A known-reliability model, requiring `0.5 < p <= 1`.
    pub fn known(p: f64) -> Result<Self> {
        let model = ErrorModel::KnownP { p };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ErrorModel::KnownP { p } if !(p > 0.5 && p <= 1.0) => {
                Err(CoreError::InvalidModel(format!("p must lie in (0.5, 1], got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_known(&self) -> bool {
        matches!(self, ErrorModel::KnownP { .. })
    }

    /// Acceptance ratio `(1 - f) / f` for the next test at `bk`.
    ///
    /// Known `p = 1` yields 0. For unknown `p` the ratio exceeds 1 whenever
    /// the sample has matched fewer than half of its tests.
    #[inline]
    pub fn ratio(&self, bk: SampleBookkeeping) -> f64 {
        match *self {
            ErrorModel::KnownP { p } => (1.0 - p) / p,
            ErrorModel::UnknownP => {
                let f = f_next(self, bk);
                (1.0 - f) / f
            }
        }
    }

    /// Probability of keeping a candidate that contradicts a new record.
    #[inline]
    pub fn keep_probability(&self, bk: SampleBookkeeping) -> f64 {
        self.ratio(bk).min(1.0)
    }
}

/// Running `(n, n_match)` of a single sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleBookkeeping {
    pub n_seen: u32,
    pub n_match: u32,
}

impl SampleBookkeeping {
    pub fn new(n_seen: u32, n_match: u32) -> Self {
        debug_assert!(n_match <= n_seen);
        SampleBookkeeping { n_seen, n_match }
    }

    /// Bookkeeping of `order` after seeing every record of `log`.
    pub fn of(order: &Ordering, log: &MeasurementLog) -> Result<Self> {
        Ok(SampleBookkeeping {
            n_seen: log.len() as u32,
            n_match: n_match(order, log)? as u32,
        })
    }

    #[inline]
    pub fn observe(&mut self, matched: bool) {
        self.n_seen += 1;
        self.n_match += matched as u32;
    }
}

/// Number of records consistent with `order`.
pub fn n_match(order: &Ordering, log: &MeasurementLog) -> Result<usize> {
    if order.len() != log.size() {
        return Err(CoreError::DimensionMismatch {
            expected: log.size(),
            found: order.len(),
        });
    }
    let pos = order.positions();
    Ok(n_match_at(&pos, log.records()))
}

#[inline]
pub(crate) fn n_match_at(positions: &[u32], records: &[Measurement]) -> usize {
    records.iter().filter(|m| m.consistent_with(positions)).count()
}

/// Number of times `e` was judged smaller than another element of `remaining`.
pub fn n_dispute(e: ElementId, remaining: &[ElementId], log: &MeasurementLog) -> Result<u64> {
    if !remaining.contains(&e) {
        return Err(CoreError::NotRemaining(e));
    }
    Ok(remaining
        .iter()
        .filter(|&&r| r != e)
        .map(|&r| log.count(e, r) as u64)
        .sum())
}

/// Unnormalised log posterior weight of `order`.
pub fn posterior_weight(order: &Ordering, log: &MeasurementLog, model: &ErrorModel) -> Result<f64> {
    let matched = n_match(order, log)? as u64;
    Ok(log_weight_from_counts(log.len() as u64, matched, model))
}

/// Log weight given `n` records of which `matched` agree with the order.
pub fn log_weight_from_counts(n: u64, matched: u64, model: &ErrorModel) -> f64 {
    let missed = n - matched;
    match *model {
        ErrorModel::KnownP { p } => {
            // 0 * ln(0) is taken as 0.
            let hit = if matched == 0 { 0.0 } else { matched as f64 * p.ln() };
            let miss = if missed == 0 {
                0.0
            } else {
                missed as f64 * (1.0 - p).ln()
            };
            hit + miss
        }
        ErrorModel::UnknownP => ln_gamma(matched as f64 + 2.0) + ln_gamma(missed as f64 + 2.0),
    }
}

/// Probability that the next record agrees with the sample.
#[inline]
pub fn f_next(model: &ErrorModel, bk: SampleBookkeeping) -> f64 {
    match *model {
        ErrorModel::KnownP { p } => p,
        ErrorModel::UnknownP => (2.0 + bk.n_match as f64) / (4.0 + bk.n_seen as f64),
    }
}

/// Exact posterior over every ordering of a small list.
#[derive(Debug, Clone)]
pub struct Posterior {
    entries: Vec<(Ordering, f64)>,
    index: HashMap<Vec<ElementId>, usize>,
}

impl Posterior {
    /// `(ordering, probability)` pairs in lexicographic order of the permutation.
    pub fn entries(&self) -> &[(Ordering, f64)] {
        &self.entries
    }

    pub fn prob(&self, order: &Ordering) -> f64 {
        self.index.get(order.as_slice()).map_or(0.0, |&k| self.entries[k].1)
    }

    pub fn mode(&self) -> &Ordering {
        let mut best = 0;
        for (k, (_, pr)) in self.entries.iter().enumerate() {
            if *pr > self.entries[best].1 {
                best = k;
            }
        }
        &self.entries[best].0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Enumerates all `L!` orderings and normalises their weights.
pub fn brute_force_posterior(log: &MeasurementLog, model: &ErrorModel) -> Result<Posterior> {
    let size = log.size();
    if size > BRUTE_FORCE_LIMIT {
        return Err(CoreError::TooLarge {
            what: "brute-force enumeration",
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut orders = Vec::new();
    let mut perm: Vec<ElementId> = (0..size as u32).map(ElementId).collect();
    loop {
        orders.push(Ordering::from_vec_unchecked(perm.clone()));
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let weights: Vec<f64> = orders
        .iter()
        .map(|o| posterior_weight(o, log, model))
        .collect::<Result<_>>()?;
    let probs = normalize_log_weights(&weights);
    let index = orders
        .iter()
        .enumerate()
        .map(|(k, o)| (o.as_slice().to_vec(), k))
        .collect();
    Ok(Posterior {
        entries: orders.into_iter().zip(probs).collect(),
        index,
    })
}

/// Turns log weights into probabilities, subtracting the maximum first.
pub fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let k = log_weights.len().max(1) as f64;
        return vec![1.0 / k; log_weights.len()];
    }
    let raw: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

/// Lexicographic successor; returns false after the last permutation.
pub(crate) fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
