//! The verification suite behind `noisyrank verify`.
//!
//! Every check is a plain function returning a [`CheckReport`], so the same
//! code runs from the command line and from the acceptance test target.

mod checks;

use std::time::Instant;

use serde::Serialize;

pub use checks::*;

/// Seed used when neither `--seed` nor `NOISYRANK_SEED` is set.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Small brute-force comparisons and invariants, seconds.
    Quick,
    /// Every acceptance criterion at full scale.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// The measured quantity the threshold applies to.
    pub metric: f64,
    pub bound: Bound,
    pub threshold: f64,
    /// Distance to the threshold; non-negative exactly when the bound holds.
    pub margin: f64,
    pub detail: String,
    pub seconds: f64,
}

impl CheckReport {
    pub fn new(id: u32, name: &str, metric: f64, bound: Bound, threshold: f64, detail: String) -> Self {
        let margin = match bound {
            Bound::AtMost => threshold - metric,
            Bound::AtLeast => metric - threshold,
        };
        CheckReport {
            id,
            name: name.to_string(),
            passed: margin >= 0.0,
            metric,
            bound,
            threshold,
            margin,
            detail,
            seconds: 0.0,
        }
    }

    /// A check that could not produce its metric.
    pub fn errored(id: u32, name: &str, err: impl std::fmt::Display) -> Self {
        CheckReport {
            id,
            name: name.to_string(),
            passed: false,
            metric: f64::NAN,
            bound: Bound::AtMost,
            threshold: f64::NAN,
            margin: f64::NAN,
            detail: format!("error: {err}"),
            seconds: 0.0,
        }
    }

    /// Extra conditions that must also hold.
    pub fn require(mut self, ok: bool) -> Self {
        self.passed &= ok;
        self
    }

    /// One human-readable line.
    pub fn line(&self) -> String {
        let cmp = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        format!(
            "[{}] criterion {:>2} {}: {} {} {} (margin {}, {:.1}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            num(self.metric),
            cmp,
            num(self.threshold),
            num(self.margin),
            self.seconds,
            self.detail
        )
    }
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Which checks run at `level`.
pub fn ids_for(level: Level) -> Vec<u32> {
    match level {
        Level::Quick => vec![1, 2, 3, 4, 5, 9, 10],
        Level::Full => (1..=10).collect(),
    }
}

/// Runs one check at the scale `level` asks for, timing it.
pub fn run_check(id: u32, level: Level, seed: u64) -> CheckReport {
    let started = Instant::now();
    let full = level == Level::Full;
    let mut report = match id {
        1 => two_element_exactness(if full { 100_000 } else { 20_000 }, standard_keep_rule, seed),
        2 => naive_exactness(
            if full { &[3, 4, 5] } else { &[3, 4] },
            if full { 100_000 } else { 50_000 },
            seed,
        ),
        3 => partition_gap(100_000, seed),
        4 => unknown_p_consistency(100, seed),
        5 => keep_rate(10_000, seed),
        6 => end_to_end(100, seed),
        7 => scaling_law(20, seed),
        8 => adjacent_strategy(100, seed),
        9 => determinism_and_recovery(seed),
        10 => dispute_bookkeeping(if full { 256 } else { 64 }, seed),
        other => CheckReport::errored(other, "unknown", format!("no criterion {other}")),
    };
    report.seconds = started.elapsed().as_secs_f64();
    report
}

/// Runs every check of `level`, calling `progress` after each.
pub fn run(level: Level, seed: u64, mut progress: impl FnMut(&CheckReport)) -> VerifyReport {
    let mut checks = Vec::new();
    for id in ids_for(level) {
        let r = run_check(id, level, seed);
        progress(&r);
        checks.push(r);
    }
    VerifyReport {
        level,
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
