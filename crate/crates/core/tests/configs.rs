use std::path::PathBuf;

use stochflow::exec::Execution;
use stochflow::experiments::{run_convergence, run_weak, ExperimentConfig, LevelSpec};
use stochflow::random_data::EnsembleMode;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn shipped_configs_load() {
    let weak = ExperimentConfig::load(&config("weak.toml")).unwrap();
    assert_eq!(weak.mode, EnsembleMode::Weak);
    assert_eq!(weak.statistics.functionals.len(), 2);
    let strong = ExperimentConfig::load(&config("strong.toml")).unwrap();
    assert_eq!(
        strong.reference,
        Some(LevelSpec {
            samples: 16,
            cells: 128
        })
    );
    let conv = ExperimentConfig::load(&config("convergence.toml")).unwrap();
    assert!(conv.convergence.is_some());
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("weak.toml"))
        .unwrap()
        .replace("seed = 2024", "sede = 2024");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
}

#[test]
fn shrunken_weak_config_runs() {
    let mut cfg = ExperimentConfig::load(&config("weak.toml")).unwrap();
    cfg.ladder.truncate(2);
    cfg.ladder[1].samples = 16;
    cfg.scheme.final_time = 0.02;
    let rep = run_weak(&cfg, Execution::Parallel).unwrap();
    let viscosity = &rep.levels[1].data_means[0];
    assert!(viscosity.error.unwrap() < 2e-3);
    assert_eq!(rep.levels[1].barycenters.len(), 2);
    assert!(rep.levels[1].barycenters.iter().all(|b| b.converged));
}

#[test]
fn shipped_convergence_study_converges() {
    let mut cfg = ExperimentConfig::load(&config("convergence.toml")).unwrap();
    if let Some(stochflow::experiments::ConvergenceStudy::Manufactured { cells, .. }) =
        &mut cfg.convergence
    {
        cells.truncate(2);
    }
    let table = run_convergence(&cfg).unwrap();
    assert!(table.orders()[0] > 0.9);
}
