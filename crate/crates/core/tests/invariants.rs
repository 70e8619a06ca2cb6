//! Property tests of the cross-module invariants.

use std::sync::Arc;

use proptest::prelude::*;
use stochflow::exec::Execution;
use stochflow::experiments::{ExperimentConfig, LevelSpec};
use stochflow::physics::{total_energy, DataRecord, Forcing, FourierField, FourierMode};
use stochflow::random_data::{
    build_partition, collocate_data, sup_data_error, DistributionSpec, Ensemble, EnsembleMode,
    PointRule,
};
use stochflow::solver::{solve, SchemeConfig};
use stochflow::statistics::boundedness_in_probability;
use stochflow::torus_mesh::{dft, lq_norm, neg_sobolev_norm, Field, GridSpec};

const SPEC: &str = include_str!("../../../configs/distribution.toml");

fn field_strategy() -> impl Strategy<Value = Field> {
    (
        1usize..=2,
        2usize..=12,
        1usize..=2,
        0.5f64..3.0,
        any::<u64>(),
    )
        .prop_map(|(dim, cells, comps, period, seed)| {
            let grid = GridSpec::new(dim, cells, period).unwrap();
            let mut s = seed;
            Field::from_fn(grid, comps, |_, v| {
                for x in v.iter_mut() {
                    s = s
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    *x = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                }
            })
        })
}

fn record(rho_amp: f64, u_amp: f64, mu: f64, k: i32) -> DataRecord {
    let f = |mean: f64, c: f64, s: f64| FourierField {
        dim: 1,
        period: 1.0,
        mean: vec![mean],
        modes: vec![FourierMode {
            k: [k, 0],
            cos: vec![c],
            sin: vec![s],
        }],
    };
    DataRecord::new(
        f(1.0, rho_amp, 0.0),
        f(0.0, 0.0, u_amp),
        mu,
        0.0,
        1.0,
        1.4,
        Forcing::zero(1, 1.0, 1.0),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(f in field_strategy()) {
        let spec = dft(&f);
        let energy: f64 = spec.coeffs.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * f.grid().volume();
        let l2 = lq_norm(&f, 2.0).unwrap().powi(2);
        prop_assert!((l2 - energy).abs() <= 1e-10 * l2.max(1e-300));
    }

    #[test]
    fn negative_norm_below_l2_and_decreasing(f in field_strategy()) {
        let l2 = lq_norm(&f, 2.0).unwrap();
        let m0 = f.grid().dim() as u32 + 2;
        let norms: Vec<f64> = (m0..m0 + 4).map(|m| neg_sobolev_norm(&f, m).unwrap()).collect();
        prop_assert!(norms[0] <= l2 * (1.0 + 1e-12));
        prop_assert!(norms.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn restriction_preserves_mean(f in field_strategy(), factor in 1usize..=3) {
        let fine_grid = GridSpec::new(f.grid().dim(), f.grid().cells() * factor, f.grid().period()).unwrap();
        let fine = f.restrict_or_prolong(&fine_grid).unwrap();
        let back = fine.restrict_or_prolong(f.grid()).unwrap();
        for (a, b) in f.mean().iter().zip(back.mean()) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn solves_conserve_mass_stay_positive_dissipate_energy(
        rho_amp in 0.0f64..0.6, u_amp in -0.8f64..0.8, mu in 0.005f64..0.05, k in 1i32..4, cells in 8usize..48,
    ) {
        let data = record(rho_amp, u_amp, mu, k);
        let grid = GridSpec::unit(1, cells).unwrap();
        let cfg = SchemeConfig { final_time: 0.1, output_interval: Some(0.05), ..SchemeConfig::default() };
        let r = solve(&data, &grid, &cfg).unwrap();
        prop_assert!(r.status.is_completed());
        prop_assert!(r.mass_drift() <= 1e-12);
        for s in r.trajectory.states() {
            prop_assert!(s.rho().min() > 0.0);
            prop_assert!(total_energy(s, data.a, data.gamma).unwrap().is_finite());
        }
        let e0 = r.energy_history[0];
        for w in r.energy_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10 * e0);
        }
        let again = solve(&data, &grid, &cfg).unwrap();
        prop_assert_eq!(r, again);
    }

    #[test]
    fn collocation_error_within_lipschitz_bound(n in 1usize..=6) {
        let spec = DistributionSpec::from_toml(SPEC).unwrap();
        let p = Arc::new(build_partition(spec.latent_dim, n, PointRule::Center).unwrap());
        let col = collocate_data(&spec, p).unwrap();
        let err = sup_data_error(&spec, &col, 4 * n).unwrap();
        prop_assert!(err <= spec.lipschitz_constant() / (2.0 * n as f64));
    }

    #[test]
    fn exceedance_non_increasing_in_threshold(seed in any::<u64>(), mut m in proptest::collection::vec(0.0f64..3.0, 1..8)) {
        m.sort_by(f64::total_cmp);
        let spec = DistributionSpec::from_toml(SPEC).unwrap();
        let grid = GridSpec::unit(1, 4).unwrap();
        let cfg = SchemeConfig { final_time: 0.01, ..SchemeConfig::default() };
        let ens = Ensemble::weak(&spec, seed, 6, &grid, &cfg, Execution::Sequential).unwrap();
        let rep = boundedness_in_probability(&ens, &m).unwrap();
        prop_assert!(rep.exceedance.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(ens.weights().iter().all(|w| *w == 1.0 / 6.0));
    }

    #[test]
    fn config_round_trip(
        seed in any::<u64>(),
        strong in any::<bool>(),
        levels in 1usize..4,
        s0 in 1usize..8,
        c0 in 2usize..16,
        cfl in 0.05f64..1.0,
        budget in 0.0f64..1.0,
    ) {
        let mode = if strong { EnsembleMode::Strong } else { EnsembleMode::Weak };
        let mut cfg = ExperimentConfig::from_toml(&format!(
            "mode = \"weak\"\nladder = [{{ samples = 1, cells = 2 }}]\n[distribution]\n{}",
            SPEC.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n").replace("\n[", "\n[distribution.")
        )).unwrap();
        cfg.mode = mode;
        cfg.seed = seed;
        cfg.ladder = stochflow::experiments::balanced_ladder(mode, s0, c0, levels);
        cfg.scheme.cfl = cfl;
        cfg.failure_budget = budget;
        if strong {
            cfg.reference = Some(LevelSpec { samples: 100, cells: 4096 });
        }
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&back, &cfg);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
