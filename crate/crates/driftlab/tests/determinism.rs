//! Reproducibility: identical results for any worker count, bit-identical
//! serialized output for a fixed seed, and stable checks across seeds.

use driftlab::commands::{cmd_check, cmd_simulate};
use driftlab::filters::Regime;
use driftlab::montecarlo::{estimate_regime, MCConfig};
use driftlab::params::ModelParams;
use driftlab::scenario::ScenarioConfig;

fn mc_config() -> MCConfig {
    MCConfig {
        n_paths: 128,
        lambdas: vec![20.0],
        dt_max: 5e-3,
        eval_times: vec![0.5, 1.0],
        delta: 0.5,
        seed: 2718,
        regimes: vec![Regime::Z],
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let p = ModelParams::reference();
    let cfg = mc_config();

    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate_regime(&cfg, &p, 20.0, Regime::Z).unwrap());
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| estimate_regime(&cfg, &p, 20.0, Regime::Z).unwrap());
    let default_pool = estimate_regime(&cfg, &p, 20.0, Regime::Z).unwrap();

    for ((a, b), c) in single.iter().zip(&four).zip(&default_pool) {
        assert_eq!(a.trq_mean.to_bits(), b.trq_mean.to_bits());
        assert_eq!(a.trq_mean.to_bits(), c.trq_mean.to_bits());
        assert_eq!(a.mse_mean.to_bits(), b.mse_mean.to_bits());
        assert_eq!(a.trq_stderr.to_bits(), b.trq_stderr.to_bits());
        assert_eq!(a.mse_stderr.to_bits(), c.mse_stderr.to_bits());
    }
}

#[test]
fn simulate_output_is_bit_identical_across_runs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut config = ScenarioConfig::default();
    config.run.lambdas = vec![5.0, 20.0];
    config.run.dt_max = 5e-3;
    config.run.seed = 77;

    config.run.output_dir = dir_a.path().to_path_buf();
    cmd_simulate(&config).unwrap();
    config.run.output_dir = dir_b.path().to_path_buf();
    cmd_simulate(&config).unwrap();

    for name in ["path_5.csv", "events_5.csv", "path_20.csv", "events_20.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn checks_pass_across_seeds() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..10u64 {
        let mut config = ScenarioConfig::default();
        config.run.seed = seed;
        config.run.dt_max = 5e-3;
        config.run.output_dir = dir.path().to_path_buf();
        let report = cmd_check(&config).unwrap();
        assert!(report.all_pass(), "seed {seed}:\n{}", report.render());
    }
}
