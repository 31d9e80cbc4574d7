use noisyrank_bench::{fit_scaling, run_sweep, write_sweep_files, SweepConfig, SWEEP_CSV_HEADER};

#[test]
fn sweep_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("grid.toml");
    std::fs::write(
        &cfg_path,
        "L_values = [4, 6]\np_values = [0.9]\nN_values = [50]\nepsilon = 0.02\ntrials_per_cell = 4\nseed = 99\n",
    )
    .unwrap();
    let cfg = SweepConfig::load(&cfg_path).unwrap();

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let meta = write_sweep_files(&a, &cfg, &run_sweep(&cfg).unwrap()).unwrap();
    write_sweep_files(&b, &cfg, &run_sweep(&cfg).unwrap()).unwrap();

    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SWEEP_CSV_HEADER));
    assert_eq!(lines.count(), 2);

    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
    assert_eq!(meta["seed"], 99);
    assert_eq!(meta["config"]["L_values"], serde_json::json!([4, 6]));
}

#[test]
fn rows_respect_their_invariants() {
    let cfg = SweepConfig {
        l_values: vec![3, 5, 7],
        p_values: vec![0.8, 0.95],
        trials_per_cell: 3,
        seed: 5,
        ..SweepConfig::default()
    };
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!((0.0..=1.0).contains(&r.failure_rate));
        assert!(r.mean_questions >= 1.0);
        assert_eq!(r.errored, 0);
        assert_eq!(r.trials, 3);
    }
    let fixed_p: Vec<_> = rows.iter().filter(|r| r.p == 0.95).cloned().collect();
    let fit = fit_scaling(&fixed_p).unwrap();
    assert!(fit.slope > 0.0);
    assert!(fit_scaling(&rows).is_err());
}

#[test]
fn missing_config_file_is_an_error() {
    assert!(SweepConfig::load(std::path::Path::new("/nonexistent/grid.toml")).is_err());
}
