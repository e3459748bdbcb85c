use temsnn_experiments::results::{sign_test_less, Status, SINGLE_GRID};
use temsnn_experiments::runner::{single_layer_seed, two_layer_seed, TwoLayerTeacher};
use temsnn_experiments::{
    run_single_layer_grid, run_single_layer_noise_grid, run_two_layer_sweep, ExperimentConfig,
    RunOptions,
};

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_config();
    cfg.trials = 3;
    cfg.single_layer.examples = vec![1, 4];
    cfg.single_layer.exposures = vec![0.5, 2.0];
    cfg.noise.examples = vec![2, 8];
    cfg.noise.snr_db = vec![40.0, f64::INFINITY];
    cfg.two_layer.exposures = vec![1, 4];
    cfg
}

#[test]
fn single_cell_with_ample_data_is_exact() {
    let mut cfg = small_config();
    cfg.single_layer.examples = vec![4];
    cfg.single_layer.exposures = vec![2.0];
    let table = run_single_layer_grid(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(table.len(), 3);
    for r in &table.records {
        assert_eq!(r.status, Status::Ok);
        assert!(r.w1_error.unwrap() <= 1e-6);
    }
}

#[test]
fn every_cell_has_every_trial() {
    let cfg = small_config();
    let grid = run_single_layer_grid(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(grid.len(), 2 * 2 * 3);
    assert!(grid
        .records
        .iter()
        .all(|r| r.experiment == SINGLE_GRID && r.snr_db.is_none()));
    let sweep = run_two_layer_sweep(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(sweep.len(), 2 * 3);
    for s in sweep.summarize() {
        assert_eq!(s.trials, 3);
    }
}

#[test]
fn reruns_are_identical() {
    let cfg = small_config();
    let a = run_single_layer_noise_grid(&cfg, &RunOptions { parallelism: 1 }).unwrap();
    let b = run_single_layer_noise_grid(&cfg, &RunOptions { parallelism: 3 }).unwrap();
    assert_eq!(a.to_csv_bytes().unwrap(), b.to_csv_bytes().unwrap());
    let mut other = cfg.clone();
    other.master_seed += 1;
    let c = run_single_layer_noise_grid(&other, &RunOptions { parallelism: 1 }).unwrap();
    assert_ne!(a.to_csv_bytes().unwrap(), c.to_csv_bytes().unwrap());
}

#[test]
fn infinite_snr_column_matches_noiseless_grid() {
    let mut cfg = small_config();
    cfg.single_layer.examples = cfg.noise.examples.clone();
    cfg.single_layer.exposures = vec![cfg.noise.exposure];
    let grid = run_single_layer_grid(&cfg, &RunOptions::default()).unwrap();
    let noise = run_single_layer_noise_grid(&cfg, &RunOptions::default()).unwrap();
    for g in &grid.records {
        let n = noise
            .records
            .iter()
            .find(|n| {
                n.snr_db == Some(f64::INFINITY) && n.examples == g.examples && n.trial == g.trial
            })
            .unwrap();
        assert_eq!(
            (n.seed, n.w1_error, n.status),
            (g.seed, g.w1_error, g.status)
        );
    }
}

#[test]
fn more_examples_beat_noise() {
    let mut cfg = small_config();
    cfg.trials = 20;
    cfg.noise.examples = vec![2, 8];
    cfg.noise.snr_db = vec![40.0];
    let table = run_single_layer_noise_grid(&cfg, &RunOptions::default()).unwrap();
    let errs = |e: usize| -> Vec<f64> {
        table
            .records
            .iter()
            .filter(|r| r.examples == e)
            .map(|r| r.w1_error.unwrap())
            .collect()
    };
    let test = sign_test_less(&errs(8), &errs(2));
    assert!(test.p_value < 0.05, "{test:?}");
}

#[test]
fn higher_snr_does_not_hurt() {
    let mut cfg = small_config();
    cfg.trials = 20;
    cfg.noise.examples = vec![4];
    cfg.noise.snr_db = vec![20.0, 40.0, 60.0];
    let table = run_single_layer_noise_grid(&cfg, &RunOptions::default()).unwrap();
    let errs = |snr: f64| -> Vec<f64> {
        table
            .records
            .iter()
            .filter(|r| r.snr_db == Some(snr))
            .map(|r| r.w1_error.unwrap())
            .collect()
    };
    for (low, high) in [(20.0, 40.0), (40.0, 60.0)] {
        // Higher SNR should be significantly better, certainly not worse.
        let test = sign_test_less(&errs(high), &errs(low));
        assert!(test.p_value < 0.05, "{low} vs {high} dB: {test:?}");
    }
}

#[test]
fn two_layer_sweep_recovers_at_largest_exposure() {
    let mut cfg = small_config();
    cfg.trials = 6;
    let table = run_two_layer_sweep(&cfg, &RunOptions::default()).unwrap();
    let summaries = table.summarize();
    let last = summaries.last().unwrap();
    assert!(last.w1.unwrap().median <= 1e-4 && last.w2.unwrap().median <= 1e-4);
    // One period is below the spike budget: recorded as failed, not a crash.
    let first = &summaries[0];
    assert_eq!(first.exposure, 1.0);
    assert_eq!(first.failed, first.trials);
    assert!(table
        .records
        .iter()
        .filter(|r| r.exposure == 1.0)
        .all(|r| r.w1_error.is_none()));
}

#[test]
fn sweep_trials_share_a_network_across_exposures() {
    let cfg = small_config();
    let table = run_two_layer_sweep(&cfg, &RunOptions::default()).unwrap();
    for r in &table.records {
        assert_eq!(r.seed, two_layer_seed(cfg.master_seed, r.trial));
    }
    let teacher = TwoLayerTeacher::draw(
        &cfg.two_layer,
        cfg.period,
        two_layer_seed(cfg.master_seed, 0),
    )
    .unwrap();
    assert_eq!(teacher.w1.shape(), (2, 2));
    assert_eq!(teacher.w2.shape(), (4, 2));
    assert_eq!(
        teacher.filter.passband(),
        *teacher.dirac_counts().iter().max().unwrap()
    );
    assert_ne!(
        single_layer_seed(1, 2, 0.5, 0),
        single_layer_seed(1, 2, 1.0, 0)
    );
}

#[test]
fn invalid_config_fails_before_running() {
    let mut cfg = small_config();
    cfg.noise.snr_db.clear();
    assert!(run_single_layer_noise_grid(&cfg, &RunOptions::default()).is_err());
}
