//! Sampler quality against the exact posterior.
//!
//! Besides the empirical comparison, the exact distributions of the two
//! partition samplers are enumerated directly from the counts matrix, so a
//! measured gap can be checked against the gap the procedure itself implies.

use std::collections::HashMap;

use serde::Serialize;

use noisyrank_core::parallel::map_range;
use noisyrank_core::samplers::sample_from_scratch;
use noisyrank_core::{
    brute_force_posterior, CoreError, ElementId, ErrorModel, Execution, MeasurementLog, Ordering, RandomStream,
    SamplerKind,
};

use crate::stats::{tv_distance, tv_noise_floor};
use crate::BenchError;

pub const QUALITY_SIZE_LIMIT: usize = 6;

const CHUNK: usize = 2048;

#[derive(Debug, Clone, Serialize)]
pub struct SamplerQuality {
    pub sampler: SamplerKind,
    pub samples: usize,
    /// Empirical distribution, aligned with [`QualityReport::orders`].
    pub frequencies: Vec<f64>,
    pub tv: f64,
    /// Expected TV of an exact sampler at this sample size; the Monte Carlo
    /// error bar on `tv`.
    pub noise_floor: f64,
    /// The sampler's own exact output distribution, when it can be enumerated.
    pub analytic: Option<Vec<f64>>,
    /// TV between `analytic` and the posterior.
    pub analytic_tv: Option<f64>,
    /// The empirical distribution is further from the posterior than
    /// sampling noise explains.
    pub discrepancy: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    pub size: usize,
    pub orders: Vec<Ordering>,
    pub posterior: Vec<f64>,
    pub samplers: Vec<SamplerQuality>,
}

impl QualityReport {
    pub fn get(&self, kind: SamplerKind) -> Option<&SamplerQuality> {
        self.samplers.iter().find(|s| s.sampler == kind)
    }

    pub fn index_of(&self, order: &Ordering) -> Option<usize> {
        self.orders.iter().position(|o| o == order)
    }
}

/// Draws `samples` orderings from each from-scratch sampler and compares them
/// with the brute-force posterior.
pub fn sampler_quality_report(
    log: &MeasurementLog,
    model: &ErrorModel,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<QualityReport, BenchError> {
    let size = log.size();
    if size > QUALITY_SIZE_LIMIT {
        return Err(CoreError::TooLarge {
            what: "sampler quality report",
            size,
            limit: QUALITY_SIZE_LIMIT,
        }
        .into());
    }
    let posterior = brute_force_posterior(log, model)?;
    let orders: Vec<Ordering> = posterior.entries().iter().map(|(o, _)| o.clone()).collect();
    let exact: Vec<f64> = posterior.entries().iter().map(|(_, p)| *p).collect();
    let index: HashMap<&[ElementId], usize> = orders.iter().enumerate().map(|(k, o)| (o.as_slice(), k)).collect();

    let mut reports = Vec::new();
    for (kind_ix, kind) in SamplerKind::FROM_SCRATCH.into_iter().enumerate() {
        let chunks = samples.div_ceil(CHUNK);
        let counts = map_range(exec, chunks, |c| -> Result<Vec<u64>, CoreError> {
            let mut rng = RandomStream::derive(seed, &[kind_ix as u64, c as u64]);
            let mut local = vec![0u64; orders.len()];
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                let (o, _) = sample_from_scratch(kind, log, model, &mut rng)?;
                local[index[o.as_slice()]] += 1;
            }
            Ok(local)
        });
        let mut total = vec![0u64; orders.len()];
        for chunk in counts {
            for (t, c) in total.iter_mut().zip(chunk?) {
                *t += c;
            }
        }
        let frequencies: Vec<f64> = total.iter().map(|&c| c as f64 / samples as f64).collect();
        let analytic = match (kind, model) {
            (SamplerKind::MaxElement, ErrorModel::KnownP { p }) => Some(max_element_distribution(log, *p)?),
            (SamplerKind::RecursivePartition, ErrorModel::KnownP { p }) => {
                Some(recursive_partition_distribution(log, *p)?)
            }
            _ => None,
        };
        let analytic = match kind {
            SamplerKind::Naive => Some(exact.clone()),
            _ => analytic.map(|dist| align(&dist, &orders)),
        };
        let tv = tv_distance(&frequencies, &exact);
        let noise_floor = tv_noise_floor(analytic.as_deref().unwrap_or(&exact), samples);
        reports.push(SamplerQuality {
            sampler: kind,
            samples,
            analytic_tv: analytic.as_ref().map(|a| tv_distance(a, &exact)),
            analytic,
            discrepancy: tv > 3.0 * tv_noise_floor(&exact, samples),
            frequencies,
            tv,
            noise_floor,
        });
    }
    Ok(QualityReport {
        size,
        orders,
        posterior: exact,
        samplers: reports,
    })
}

fn align(dist: &HashMap<Vec<ElementId>, f64>, orders: &[Ordering]) -> Vec<f64> {
    orders
        .iter()
        .map(|o| dist.get(o.as_slice()).copied().unwrap_or(0.0))
        .collect()
}

fn ratio_pow(r: f64, d: u64) -> f64 {
    if d == 0 {
        1.0
    } else {
        r.powi(d as i32)
    }
}

fn known_ratio(p: f64) -> f64 {
    (1.0 - p) / p
}

/// Exact output distribution of the max-element sampler for known `p`: at
/// each step element `e` becomes the maximum of the remaining set `S` with
/// probability `r^d(e) / sum_S r^d`, where `d(e)` counts records of `e`
/// losing to another member of `S`.
pub fn max_element_distribution(log: &MeasurementLog, p: f64) -> Result<HashMap<Vec<ElementId>, f64>, CoreError> {
    let r = known_ratio(p);
    let all: Vec<ElementId> = (0..log.size() as u32).map(ElementId).collect();
    let mut out = HashMap::new();
    let mut top_down = Vec::new();
    chain(log, r, &all, 1.0, &mut top_down, &mut out)?;
    Ok(out)
}

fn chain(
    log: &MeasurementLog,
    r: f64,
    remaining: &[ElementId],
    prob: f64,
    top_down: &mut Vec<ElementId>,
    out: &mut HashMap<Vec<ElementId>, f64>,
) -> Result<(), CoreError> {
    if remaining.len() <= 1 {
        let mut order: Vec<ElementId> = top_down.iter().chain(remaining).copied().collect();
        order.reverse();
        *out.entry(order).or_default() += prob;
        return Ok(());
    }
    let betas: Vec<f64> = remaining
        .iter()
        .map(|&e| {
            let d: u64 = remaining.iter().map(|&g| log.count(e, g) as u64).sum();
            ratio_pow(r, d)
        })
        .collect();
    let z: f64 = betas.iter().sum();
    if z == 0.0 {
        return Err(CoreError::Inconsistent { records: Vec::new() });
    }
    for (k, &e) in remaining.iter().enumerate() {
        if betas[k] == 0.0 {
            continue;
        }
        let rest: Vec<ElementId> = remaining.iter().copied().filter(|&x| x != e).collect();
        top_down.push(e);
        chain(log, r, &rest, prob * betas[k] / z, top_down, out)?;
        top_down.pop();
    }
    Ok(())
}

/// Exact output distribution of the recursive partition sampler for known
/// `p`: a set of size `k` is split into a lower part of size `floor(k/2)`
/// chosen with probability proportional to `r^disputes`, then both parts
/// recurse.
pub fn recursive_partition_distribution(
    log: &MeasurementLog,
    p: f64,
) -> Result<HashMap<Vec<ElementId>, f64>, CoreError> {
    let r = known_ratio(p);
    let all: Vec<ElementId> = (0..log.size() as u32).map(ElementId).collect();
    split(log, r, &all)
}

fn split(log: &MeasurementLog, r: f64, set: &[ElementId]) -> Result<HashMap<Vec<ElementId>, f64>, CoreError> {
    let k = set.len();
    if k <= 1 {
        return Ok(HashMap::from([(set.to_vec(), 1.0)]));
    }
    let lower = k / 2;
    let mut parts = Vec::new();
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize != lower {
            continue;
        }
        let (lo, hi): (Vec<_>, Vec<_>) = set.iter().enumerate().partition(|(i, _)| mask >> i & 1 == 1);
        let lo: Vec<ElementId> = lo.into_iter().map(|(_, &e)| e).collect();
        let hi: Vec<ElementId> = hi.into_iter().map(|(_, &e)| e).collect();
        let disputes: u64 = lo
            .iter()
            .flat_map(|&x| hi.iter().map(move |&y| log.count(y, x) as u64))
            .sum();
        parts.push((ratio_pow(r, disputes), lo, hi));
    }
    let z: f64 = parts.iter().map(|(w, _, _)| w).sum();
    if z == 0.0 {
        return Err(CoreError::Inconsistent { records: Vec::new() });
    }
    let mut out = HashMap::new();
    for (w, lo, hi) in parts {
        if w == 0.0 {
            continue;
        }
        let below = split(log, r, &lo)?;
        let above = split(log, r, &hi)?;
        for (a, pa) in &below {
            for (b, pb) in &above {
                let order: Vec<ElementId> = a.iter().chain(b).copied().collect();
                *out.entry(order).or_default() += w / z * pa * pb;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc_log() -> MeasurementLog {
        let mut log = MeasurementLog::new(3).unwrap();
        log.record(ElementId(0), ElementId(1)).unwrap();
        log
    }

    fn order(ix: &[u32]) -> Vec<ElementId> {
        ix.iter().copied().map(ElementId).collect()
    }

    #[test]
    fn chain_values_for_a_single_record() {
        let d = max_element_distribution(&abc_log(), 0.8).unwrap();
        assert!((d[&order(&[0, 1, 2])] - 1.0 / 2.25 / 1.25).abs() < 1e-12);
        assert!((d[&order(&[0, 2, 1])] - 1.0 / 2.25 / 2.0).abs() < 1e-12);
        assert!((d[&order(&[1, 2, 0])] - 0.25 / 2.25 / 2.0).abs() < 1e-12);
        assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_values_for_a_single_record() {
        let d = recursive_partition_distribution(&abc_log(), 0.8).unwrap();
        assert!((d[&order(&[0, 1, 2])] - 1.0 / 2.25 / 2.0).abs() < 1e-12);
        assert!((d[&order(&[2, 0, 1])] - 1.0 / 2.25 / 1.25).abs() < 1e-12);
        assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_elements_are_exact_for_both() {
        let mut log = MeasurementLog::new(2).unwrap();
        log.record(ElementId(0), ElementId(1)).unwrap();
        for d in [
            max_element_distribution(&log, 0.7).unwrap(),
            recursive_partition_distribution(&log, 0.7).unwrap(),
        ] {
            assert!((d[&order(&[0, 1])] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_log_report_is_uniform() {
        let log = MeasurementLog::new(4).unwrap();
        let report =
            sampler_quality_report(&log, &ErrorModel::known(0.8).unwrap(), 20_000, 1, Execution::Parallel).unwrap();
        assert_eq!(report.orders.len(), 24);
        for s in &report.samplers {
            assert!(s.tv < 3.0 * s.noise_floor, "{:?} tv {}", s.sampler, s.tv);
            assert!(!s.discrepancy);
            assert!(s.analytic_tv.unwrap() < 1e-12);
        }
    }

    #[test]
    fn report_flags_the_max_element_gap() {
        let report = sampler_quality_report(
            &abc_log(),
            &ErrorModel::known(0.8).unwrap(),
            30_000,
            2,
            Execution::Parallel,
        )
        .unwrap();
        let max = report.get(SamplerKind::MaxElement).unwrap();
        assert!(max.discrepancy);
        assert!((max.analytic_tv.unwrap() - 1.0 / 9.0).abs() < 1e-12);
        assert!((max.tv - max.analytic_tv.unwrap()).abs() < 4.0 * max.noise_floor);
        assert!(!report.get(SamplerKind::Naive).unwrap().discrepancy);
    }

    #[test]
    fn size_guard() {
        let log = MeasurementLog::new(7).unwrap();
        assert!(sampler_quality_report(&log, &ErrorModel::known(0.8).unwrap(), 10, 0, Execution::Sequential).is_err());
    }
}
