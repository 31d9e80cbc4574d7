use std::collections::HashMap;

use noisyrank_bench::stats::{tv_distance, wilson_interval, Z99};
use noisyrank_bench::timing::selection_timing;
use noisyrank_bench::{fit_scaling, run_sweep, sampler_quality_report, SweepConfig, SweepRow};
use noisyrank_core::engine::{trace_csv_string, ApplyOptions, Ensemble};
use noisyrank_core::parallel::map_range;
use noisyrank_core::rng::derive_seed;
use noisyrank_core::samplers::{incremental_resample, sample_from_scratch, DisputeTracker, ResampleAction};
use noisyrank_core::{
    brute_force_posterior, f_next, journal, n_dispute, posterior_weight, CoreError, ElementId, Engine, EngineConfig,
    ErrorModel, Execution, MeasurementLog, Oracle, Ordering, QueryStrategy, RandomStream, SampleBookkeeping,
    SamplerKind, SimulatedOracle,
};
use noisyrank_service::api::{ConfigInput, CreateSessionRequest, ErrorMode};
use noisyrank_service::{FaultPoint, ServiceError, SessionStore};

pub use noisyrank_core::samplers::{standard_keep_rule, KeepRule};

use super::{Bound, CheckReport};

type Outcome = anyhow::Result<CheckReport>;

fn settle(id: u32, name: &str, f: impl FnOnce() -> Outcome) -> CheckReport {
    f().unwrap_or_else(|e| CheckReport::errored(id, name, format!("{e:#}")))
}

const A: ElementId = ElementId(0);
const B: ElementId = ElementId(1);

/// `true` records `a < b`.
const TWO_ELEMENT_SCRIPT: [bool; 10] = [true, true, false, true, true, false, true, false, true, true];

/// The keep rule with the ratio inverted, `p / (1 - p)`. A planted bug for
/// checking that the suite notices.
pub fn inverted_keep_rule(model: &ErrorModel, bk: SampleBookkeeping) -> f64 {
    let f = f_next(model, bk);
    (f / (1.0 - f)).min(1.0)
}

/// L = 2: after each scripted record, the ensemble's share of `a < b`
/// against the exact posterior.
pub fn two_element_exactness(samples: usize, keep_rule: KeepRule, seed: u64) -> CheckReport {
    const NAME: &str = "two-element exactness (TV)";
    settle(1, NAME, || {
        let mut worst = (0.0f64, String::new());
        let ab = Ordering::identity(2);
        for (pi, p) in [0.6, 0.8, 0.95].into_iter().enumerate() {
            let model = ErrorModel::known(p)?;
            let config = EngineConfig {
                ensemble_size: samples,
                ..EngineConfig::with_seed(derive_seed(seed, &[1, pi as u64]))
            };
            let mut ensemble = Ensemble::init(2, &config)?;
            let mut opts = ApplyOptions::from_config(&config, 2);
            opts.resample.keep_rule = keep_rule;
            let mut log = MeasurementLog::new(2)?;
            for (step, &a_below_b) in TWO_ELEMENT_SCRIPT.iter().enumerate() {
                let m = if a_below_b {
                    log.record(A, B)?
                } else {
                    log.record(B, A)?
                };
                ensemble.apply_measurement(&m, &log, &model, &opts)?;
                let freq = ensemble.pair_count(A, B) as f64 / samples as f64;
                let exact = brute_force_posterior(&log, &model)?.prob(&ab);
                let tv = (freq - exact).abs();
                if tv >= worst.0 {
                    worst = (
                        tv,
                        format!("worst at p={p} after {} records: {freq:.4} vs {exact:.4}", step + 1),
                    );
                }
            }
        }
        Ok(CheckReport::new(
            1,
            NAME,
            worst.0,
            Bound::AtMost,
            0.02,
            format!("N={samples}; {}", worst.1),
        ))
    })
}

fn random_log(size: usize, records: usize, rng: &mut RandomStream) -> Result<MeasurementLog, CoreError> {
    let mut log = MeasurementLog::new(size)?;
    for _ in 0..records {
        let i = rng.below(size);
        let j = (i + 1 + rng.below(size - 1)) % size;
        log.record(ElementId(i as u32), ElementId(j as u32))?;
    }
    Ok(log)
}

/// Naive rejection sampling against the brute-force posterior on random
/// logs of up to 8 records.
pub fn naive_exactness(sizes: &[usize], samples: usize, seed: u64) -> CheckReport {
    const NAME: &str = "naive sampler exactness (TV)";
    const LOGS_PER_SIZE: u64 = 3;
    settle(2, NAME, || {
        let model = ErrorModel::known(0.8)?;
        let mut worst = (0.0f64, String::new());
        for &size in sizes {
            for k in 0..LOGS_PER_SIZE {
                let mut rng = RandomStream::derive(seed, &[2, size as u64, k]);
                let records = 1 + rng.below(8);
                let log = random_log(size, records, &mut rng)?;
                let posterior = brute_force_posterior(&log, &model)?;
                let draws = map_range(Execution::Parallel, samples, |s| {
                    let mut rng = RandomStream::derive(seed, &[2, size as u64, k, 1, s as u64]);
                    sample_from_scratch(SamplerKind::Naive, &log, &model, &mut rng).map(|(o, _)| o)
                });
                let mut tally: HashMap<Vec<ElementId>, usize> = HashMap::new();
                for d in draws {
                    *tally.entry(d?.into_vec()).or_default() += 1;
                }
                let (exact, freq): (Vec<f64>, Vec<f64>) = posterior
                    .entries()
                    .iter()
                    .map(|(o, p)| (*p, *tally.get(o.as_slice()).unwrap_or(&0) as f64 / samples as f64))
                    .unzip();
                let tv = tv_distance(&freq, &exact);
                if tv >= worst.0 {
                    worst = (tv, format!("worst at L={size} with {records} records"));
                }
            }
        }
        Ok(CheckReport::new(
            2,
            NAME,
            worst.0,
            Bound::AtMost,
            0.02,
            format!("L in {sizes:?}, {samples} samples per log; {}", worst.1),
        ))
    })
}

/// Reference value of the max-element chain probability of `(a, b, c)`.
pub const MAX_ELEMENT_ABC: f64 = 0.3556;
/// Exact posterior of `(a, b, c)` given `a < b` at p = 0.8.
pub const POSTERIOR_ABC: f64 = 0.2667;

/// L = 3, log `{a < b}`, p = 0.8: the max-element sampler's share of
/// `(a, b, c)` and the exact posterior, with the gap flagged.
pub fn partition_gap(samples: usize, seed: u64) -> CheckReport {
    const NAME: &str = "max-element gap (|freq - 0.3556|)";
    settle(3, NAME, || {
        let model = ErrorModel::known(0.8)?;
        let mut log = MeasurementLog::new(3)?;
        log.record(A, B)?;
        let report = sampler_quality_report(&log, &model, samples, derive_seed(seed, &[3]), Execution::Parallel)?;
        let abc = Ordering::identity(3);
        let idx = report.index_of(&abc).expect("every ordering is listed");
        let me = report.get(SamplerKind::MaxElement).expect("max-element is reported");
        let freq = me.frequencies[idx];
        let analytic = me.analytic.as_ref().map(|a| a[idx]).unwrap_or(f64::NAN);
        let exact = report.posterior[idx];
        let sigma = (MAX_ELEMENT_ABC * (1.0 - MAX_ELEMENT_ABC) / samples as f64).sqrt();
        // the reference figure is rounded to four places
        let rounding = 5e-5;
        let analytic_ok = (analytic - MAX_ELEMENT_ABC).abs() <= rounding;
        let exact_ok = (exact - POSTERIOR_ABC).abs() <= 0.005;
        let detail = format!(
            "measured {freq:.4} (sigma {sigma:.4}), enumerated {analytic:.5}, exact posterior {exact:.5}, discrepancy flagged: {}",
            me.discrepancy
        );
        Ok(CheckReport::new(
            3,
            NAME,
            (freq - MAX_ELEMENT_ABC).abs(),
            Bound::AtMost,
            Z99 * sigma + rounding,
            detail,
        )
        .require(analytic_ok && exact_ok && me.discrepancy))
    })
}

fn sequential_log_likelihood(order: &Ordering, log: &MeasurementLog, model: &ErrorModel) -> f64 {
    let pos = order.positions();
    let mut bk = SampleBookkeeping::default();
    let mut total = 0.0;
    for m in log.records() {
        let f = f_next(model, bk);
        let hit = m.consistent_with(&pos);
        total += if hit { f.ln() } else { (1.0 - f).ln() };
        bk.observe(hit);
    }
    total
}

/// Unknown p: the product of sequential match probabilities, compared
/// between two orderings, against the closed-form weight ratio.
pub fn unknown_p_consistency(cases: usize, seed: u64) -> CheckReport {
    const NAME: &str = "unknown-p sequential consistency (rel. error)";
    settle(4, NAME, || {
        let model = ErrorModel::UnknownP;
        let mut worst = 0.0f64;
        for k in 0..cases {
            let mut rng = RandomStream::derive(seed, &[4, k as u64]);
            let size = 3 + rng.below(6);
            let records = 1 + rng.below(20);
            let log = random_log(size, records, &mut rng)?;
            let mut orders = [Ordering::identity(size), Ordering::identity(size)];
            for o in &mut orders {
                let mut v = o.as_slice().to_vec();
                rng.shuffle(&mut v);
                *o = Ordering::new(v)?;
            }
            let seq = sequential_log_likelihood(&orders[0], &log, &model)
                - sequential_log_likelihood(&orders[1], &log, &model);
            let closed = posterior_weight(&orders[0], &log, &model)? - posterior_weight(&orders[1], &log, &model)?;
            worst = worst.max(((seq - closed).exp() - 1.0).abs());
        }
        Ok(CheckReport::new(
            4,
            NAME,
            worst,
            Bound::AtMost,
            1e-9,
            format!("{cases} random (order, log) pairs, n <= 20"),
        ))
    })
}

/// Survival rate of candidates contradicting the new record against
/// `(1 - p) / p`, with a 99% Wilson interval.
pub fn keep_rate(trials: usize, seed: u64) -> CheckReport {
    const NAME: &str = "keep rate of inconsistent candidates";
    settle(5, NAME, || {
        let candidate = Ordering::identity(5);
        let mut log = MeasurementLog::new(5)?;
        let m = log.record(ElementId(4), ElementId(0))?;
        let mut worst: Option<CheckReport> = None;
        let mut parts = Vec::new();
        for (pi, p) in [0.7, 0.9].into_iter().enumerate() {
            let model = ErrorModel::known(p)?;
            let kept = map_range(Execution::Parallel, trials, |k| {
                let mut rng = RandomStream::derive(seed, &[5, pi as u64, k as u64]);
                incremental_resample(&candidate, SampleBookkeeping::default(), &m, &log, &model, &mut rng)
                    .map(|o| o.action == ResampleAction::KeptInconsistent)
            });
            let mut count = 0u64;
            for k in kept {
                count += k? as u64;
            }
            let rate = count as f64 / trials as f64;
            let target = (1.0 - p) / p;
            let (lo, hi) = wilson_interval(count, trials as u64, Z99);
            let room = if target >= rate { hi - rate } else { rate - lo };
            parts.push(format!("p={p}: {rate:.4} in [{lo:.4}, {hi:.4}] vs {target:.4}"));
            let r = CheckReport::new(5, NAME, (target - rate).abs(), Bound::AtMost, room, String::new());
            if worst.as_ref().is_none_or(|w| r.margin < w.margin) {
                worst = Some(r);
            }
        }
        let mut r = worst.expect("two reliabilities checked");
        r.detail = format!("{trials} trials each; {}", parts.join("; "));
        Ok(r)
    })
}

fn sweep(sizes: Vec<usize>, trials: usize, strategy: QueryStrategy, seed: u64) -> anyhow::Result<Vec<SweepRow>> {
    let config = SweepConfig {
        l_values: sizes,
        p_values: vec![0.9],
        n_values: vec![100],
        epsilon: 0.01,
        trials_per_cell: trials,
        query_strategy: strategy,
        seed,
        ..SweepConfig::default()
    };
    Ok(run_sweep(&config)?)
}

fn failure_note(row: &SweepRow) -> String {
    let mut s = format!(
        "L={} {}: failure rate {:.2}, mean questions {:.1} (sd {:.1})",
        row.size, row.strategy, row.failure_rate, row.mean_questions, row.questions_stddev
    );
    if row.errored > 0 {
        s.push_str(&format!(
            ", {} errored: {}",
            row.errored,
            row.first_error.as_deref().unwrap_or("")
        ));
    }
    s
}

/// L = 20, p = 0.9, N = 100, epsilon = 0.01: fraction of simulated sessions
/// whose declared ordering is wrong.
pub fn end_to_end(trials: usize, seed: u64) -> CheckReport {
    const NAME: &str = "end-to-end failure rate at L=20";
    settle(6, NAME, || {
        let rows = sweep(vec![20], trials, QueryStrategy::FullPairs, derive_seed(seed, &[6]))?;
        let row = &rows[0];
        Ok(CheckReport::new(
            6,
            NAME,
            row.failure_rate,
            Bound::AtMost,
            0.05,
            format!("{trials} trials; {}", failure_note(row)),
        ))
    })
}

/// Mean questions against `L ln L` over L in {8, 16, 32, 64}.
pub fn scaling_law(trials: usize, seed: u64) -> CheckReport {
    const NAME: &str = "questions ~ L ln L (R^2)";
    settle(7, NAME, || {
        let rows = sweep(
            vec![8, 16, 32, 64],
            trials,
            QueryStrategy::FullPairs,
            derive_seed(seed, &[7]),
        )?;
        let fit = fit_scaling(&rows)?;
        let means: Vec<String> = rows
            .iter()
            .map(|r| format!("L={}: {:.1}", r.size, r.mean_questions))
            .collect();
        Ok(CheckReport::new(
            7,
            NAME,
            fit.r_squared,
            Bound::AtLeast,
            0.9,
            format!(
                "{trials} trials per L; slope {:.3}, intercept {:.1}; means {}",
                fit.slope,
                fit.intercept,
                means.join(", ")
            ),
        ))
    })
}

/// Adjacent-pair queries against full-pair queries: failure rates at L = 16
/// and selection cost at L = 64.
pub fn adjacent_strategy(trials: usize, seed: u64) -> CheckReport {
    const NAME: &str = "adjacent vs full failure-rate gap (points)";
    settle(8, NAME, || {
        let s = derive_seed(seed, &[8]);
        let full = sweep(vec![16], trials, QueryStrategy::FullPairs, s)?;
        let adjacent = sweep(vec![16], trials, QueryStrategy::AdjacentPairs, s)?;
        // in whole failures so that the comparison is exact
        let failures = |r: &SweepRow| (r.failure_rate * r.trials as f64).round();
        let gap = (failures(&adjacent[0]) - failures(&full[0])).abs() * 100.0 / trials as f64;
        let timing = selection_timing(64, 0.9, 300, 200, 7, s)?;
        let faster = timing.adjacent_nanos < timing.full_nanos;
        Ok(CheckReport::new(
            8,
            NAME,
            gap,
            Bound::AtMost,
            5.0,
            format!(
                "{trials} trials each; {}; {}; selection at L=64 after {} answers: adjacent {:.0} ns ({} pairs) vs full {:.0} ns ({} pairs)",
                failure_note(&full[0]),
                failure_note(&adjacent[0]),
                timing.questions_before,
                timing.adjacent_nanos,
                timing.adjacent_pairs_scanned,
                timing.full_nanos,
                timing.full_pairs_scanned
            ),
        )
        .require(faster))
    })
}

fn simulated_engine(size: usize, seed: u64, exec: Execution) -> anyhow::Result<Engine> {
    let truth = noisyrank_bench::random_truth(size, seed);
    let mut oracle = SimulatedOracle::new(&truth, 0.85, RandomStream::new(seed))?;
    let config = EngineConfig {
        execution: exec,
        ..EngineConfig::with_seed(seed)
    };
    let mut engine = Engine::new(size, ErrorModel::known(0.85)?, config)?;
    engine.run(&mut oracle)?;
    Ok(engine)
}

fn crash_recovery_mismatches(seed: u64) -> anyhow::Result<(usize, String)> {
    let dir = tempfile::tempdir()?;
    let store = SessionStore::open(dir.path())?;
    let request = || CreateSessionRequest {
        labels: (0..7).map(|k| format!("item-{k}")).collect(),
        config: ConfigInput {
            error_mode: ErrorMode::KnownP,
            p: Some(0.85),
            ..Default::default()
        },
        seed: Some(seed),
    };
    let crashy = store.create(request())?.id;
    let twin = store.create(request())?.id;
    let truth = noisyrank_bench::random_truth(7, seed);
    let mut oracle = SimulatedOracle::new(&truth, 0.85, RandomStream::new(seed))?;
    let mut mismatches = 0;
    let mut crashes = 0;
    for step in 0.. {
        let q = match store.question(&twin) {
            Ok(q) => q,
            Err(ServiceError::Conflict { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        mismatches += (store.question(&crashy)? != q) as usize;
        let r = oracle.ask(ElementId(q.i), ElementId(q.j))?;
        if step % 3 == 1 {
            store.inject_fault(&crashy, FaultPoint::AfterJournalAppend)?;
            match store.answer(&crashy, r.lesser.0, Some(q.seq)) {
                Err(ServiceError::Storage(_)) => crashes += 1,
                _ => mismatches += 1,
            }
            // a restarted process must see the answer exactly once
            let restarted = SessionStore::open(dir.path())?;
            store.answer(&twin, r.lesser.0, Some(q.seq))?;
            mismatches += (restarted.result(&crashy)? != store.result(&twin)?) as usize;
            mismatches += (restarted.question(&crashy).ok() != store.question(&twin).ok()) as usize;
        } else {
            store.answer(&crashy, r.lesser.0, Some(q.seq))?;
            store.answer(&twin, r.lesser.0, Some(q.seq))?;
        }
    }
    let a = std::fs::read(dir.path().join(&crashy).join("journal"))?;
    let b = std::fs::read(dir.path().join(&twin).join("journal"))?;
    mismatches += (a != b) as usize;
    Ok((
        mismatches,
        format!(
            "{crashes} injected crashes over {} answers",
            store.result(&twin)?.questions_asked
        ),
    ))
}

/// Identical seeds give identical traces, journal replay rebuilds the same
/// state, and a crash between journal append and ensemble update recovers.
pub fn determinism_and_recovery(seed: u64) -> CheckReport {
    const NAME: &str = "determinism and crash recovery (mismatches)";
    settle(9, NAME, || {
        let s = derive_seed(seed, &[9]);
        let a = simulated_engine(12, s, Execution::Parallel)?;
        let b = simulated_engine(12, s, Execution::Parallel)?;
        let c = simulated_engine(12, s, Execution::Sequential)?;
        let trace = trace_csv_string(a.trace());
        let mut mismatches = 0;
        mismatches += (trace != trace_csv_string(b.trace())) as usize;
        mismatches += (trace != trace_csv_string(c.trace())) as usize;
        mismatches += (journal::to_string(a.log()) != journal::to_string(c.log())) as usize;
        let replayed = Engine::replay(12, *a.model(), a.config().clone(), a.log().records())?;
        mismatches += (trace_csv_string(replayed.trace()) != trace) as usize;
        mismatches += (replayed.convergence() != a.convergence()) as usize;
        let (crash, note) = crash_recovery_mismatches(s)?;
        mismatches += crash;
        Ok(CheckReport::new(
            9,
            NAME,
            mismatches as f64,
            Bound::AtMost,
            0.0,
            format!("{} questions per run; {note}", a.questions_asked()),
        ))
    })
}

fn dispute_mismatches(size: usize, seed: u64) -> anyhow::Result<usize> {
    let mut rng = RandomStream::derive(seed, &[10, size as u64]);
    let log = random_log(size, 3 * size, &mut rng)?;
    let mut mismatches = (log.counts_matrix() != log.recount().as_slice()) as usize;
    let mut remaining: Vec<ElementId> = (0..size as u32).map(ElementId).collect();
    rng.shuffle(&mut remaining);
    // start from a random subset, then remove one at a time
    remaining.truncate(size / 2 + rng.below(size / 2 + 1));
    let mut tracker = DisputeTracker::new(&remaining, &log);
    while !remaining.is_empty() {
        for &e in &remaining {
            mismatches += (tracker.dispute(e) != n_dispute(e, &remaining, &log)?) as usize;
        }
        let gone = remaining.swap_remove(rng.below(remaining.len()));
        tracker.remove(gone, &log);
    }
    Ok(mismatches)
}

/// Incrementally maintained dispute counts and pair counts against full
/// recomputation.
pub fn dispute_bookkeeping(max_size: usize, seed: u64) -> CheckReport {
    const NAME: &str = "incremental bookkeeping (mismatches)";
    settle(10, NAME, || {
        let sizes: Vec<usize> = [8, 32, 128, 256].into_iter().filter(|&s| s <= max_size).collect();
        let mut mismatches = 0;
        for &size in &sizes {
            for k in 0..3 {
                mismatches += dispute_mismatches(size, derive_seed(seed, &[k]))?;
            }
        }
        let size = 24;
        let s = derive_seed(seed, &[10]);
        let truth = noisyrank_bench::random_truth(size, s);
        let mut oracle = SimulatedOracle::new(&truth, 0.85, RandomStream::new(s))?;
        let mut engine = Engine::new(size, ErrorModel::known(0.85)?, EngineConfig::with_seed(s))?;
        let mut steps = 0;
        while let Some((i, j)) = engine.next_query() {
            let r = oracle.ask(i, j)?;
            engine.observe(r.lesser, r.greater)?;
            let ens = engine.ensemble();
            mismatches += (ens.pair_counts() != ens.recount_pairs().as_slice()) as usize;
            steps += 1;
            if steps == 150 {
                break;
            }
        }
        Ok(CheckReport::new(
            10,
            NAME,
            mismatches as f64,
            Bound::AtMost,
            0.0,
            format!("dispute trackers at L in {sizes:?}; ensemble pair counts over {steps} updates at L={size}"),
        ))
    })
}
