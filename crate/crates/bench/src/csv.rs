use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SweepConfig;
use crate::sweep::SweepRow;
use crate::BenchError;

pub const SWEEP_CSV_HEADER: &str =
    "L,p,N,epsilon,strategy,trials,mean_questions,questions_stddev,failure_rate,mean_wall_millis,mean_middle_partition_len";

pub fn write_sweep_csv(rows: &[SweepRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.size,
            r.p,
            r.ensemble_size,
            r.epsilon,
            r.strategy,
            r.trials,
            r.mean_questions,
            r.questions_stddev,
            r.failure_rate,
            r.mean_wall_millis,
            r.mean_middle_partition_len
        )?;
    }
    Ok(())
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf).expect("writing to a Vec");
    String::from_utf8(buf).expect("ascii")
}

/// `out.csv` -> `out.csv.meta.json`.
pub fn meta_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    csv.with_file_name(name)
}

#[derive(Serialize)]
struct Meta<'a> {
    generator: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a SweepConfig,
    cells: usize,
    errored_trials: usize,
}

/// Sidecar recording the config and seed that produced a sweep file.
pub fn write_meta(path: &Path, config: &SweepConfig, rows: &[SweepRow]) -> Result<(), BenchError> {
    let meta = Meta {
        generator: "noisyrank-bench",
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config,
        cells: rows.len(),
        errored_trials: rows.iter().map(|r| r.errored).sum(),
    };
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| BenchError::Parse(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes the CSV and its sidecar; returns the sidecar path.
pub fn write_sweep_files(csv: &Path, config: &SweepConfig, rows: &[SweepRow]) -> Result<PathBuf, BenchError> {
    std::fs::write(csv, sweep_csv_string(rows))?;
    let meta = meta_path(csv);
    write_meta(&meta, config, rows)?;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> SweepRow {
        SweepRow {
            size: 8,
            p: 0.9,
            ensemble_size: 100,
            epsilon: 0.01,
            strategy: "full".into(),
            trials: 5,
            mean_questions: 37.4,
            questions_stddev: 4.5,
            failure_rate: 0.2,
            mean_wall_millis: 0.0,
            mean_middle_partition_len: 3.25,
            errored: 0,
            first_error: None,
        }
    }

    #[test]
    fn csv_layout() {
        let s = sweep_csv_string(&[row()]);
        assert_eq!(
            s,
            format!("{SWEEP_CSV_HEADER}\n8,0.9,100,0.01,full,5,37.4,4.5,0.2,0,3.25\n")
        );
        assert!(!s.contains('\r'));
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            meta_path(Path::new("/tmp/x/out.csv")),
            PathBuf::from("/tmp/x/out.csv.meta.json")
        );
    }
}
