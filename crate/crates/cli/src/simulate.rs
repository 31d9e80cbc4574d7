use noisyrank_bench::{
    run_sweep, write_sweep_csv, write_sweep_files, BenchError, ErrorModelMode, SweepConfig, SweepRow,
};

use crate::args::SimulateArgs;
use crate::CliError;

/// The sweep described by the flags: the config file if given, otherwise
/// the inline grid over the defaults.
pub fn config_from_args(a: &SimulateArgs) -> Result<SweepConfig, CliError> {
    let mut config = match &a.sweep {
        Some(path) => SweepConfig::load(path).map_err(|e| match e {
            BenchError::Io(io) => CliError::Usage(format!("cannot read sweep config {}: {io}", path.display())),
            other => CliError::Usage(other.to_string()),
        })?,
        None => {
            let d = SweepConfig::default();
            SweepConfig {
                l_values: if a.sizes.is_empty() {
                    d.l_values
                } else {
                    a.sizes.clone()
                },
                p_values: if a.p_values.is_empty() {
                    d.p_values
                } else {
                    a.p_values.clone()
                },
                n_values: if a.n_values.is_empty() {
                    d.n_values
                } else {
                    a.n_values.clone()
                },
                epsilon: a.epsilon.unwrap_or(d.epsilon),
                trials_per_cell: a.trials.unwrap_or(d.trials_per_cell),
                query_strategy: a.strategy.unwrap_or(d.query_strategy),
                error_model_mode: if a.unknown_p {
                    ErrorModelMode::UnknownP
                } else {
                    ErrorModelMode::KnownP
                },
                max_questions: a.max_questions,
                ..d
            }
        }
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    config.record_wall_time |= a.wall_time;
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn sweep(config: &SweepConfig, jobs: Option<usize>) -> Result<Vec<SweepRow>, CliError> {
    match jobs {
        #[cfg(feature = "parallel")]
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(|| run_sweep(config))?)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => {
            eprintln!("--jobs ignored: built without the parallel feature");
            Ok(run_sweep(config)?)
        }
        None => Ok(run_sweep(config)?),
    }
}

pub fn run(a: &SimulateArgs) -> Result<(), CliError> {
    if a.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let config = config_from_args(a)?;
    eprintln!("seed: {}", config.seed);
    eprintln!(
        "running {} cells x {} trials",
        config.cell_count(),
        config.trials_per_cell
    );
    let rows = sweep(&config, a.jobs)?;
    for r in &rows {
        eprintln!(
            "L={} p={} N={}: mean questions {:.1}, failure rate {:.3}",
            r.size, r.p, r.ensemble_size, r.mean_questions, r.failure_rate
        );
    }
    match &a.out {
        Some(path) => {
            let meta = write_sweep_files(path, &config, &rows)?;
            eprintln!("wrote {} and {}", path.display(), meta.display());
        }
        None => write_sweep_csv(&rows, std::io::stdout().lock())?,
    }
    let errored: Vec<&SweepRow> = rows.iter().filter(|r| r.errored > 0).collect();
    if let Some(first) = errored.first() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{} cells had errored trials, first: {}",
            errored.len(),
            first.first_error.as_deref().unwrap_or("unknown error")
        )));
    }
    Ok(())
}
