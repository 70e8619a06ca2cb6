//! Config-driven experiment runner: Monte-Carlo (weak) and collocation
//! (strong) studies over a refinement ladder, and deterministic
//! convergence studies.

mod config;
mod report;

pub use config::{
    balanced_ladder, BarycenterRequest, ConvergenceStudy, DistributionSource, ExperimentConfig,
    LevelSpec, StatisticsRequest,
};
pub use report::{
    BarycenterSummary, CrossLevel, DataFunctionalRow, ExperimentReport, FieldMeanSummary,
    LevelPairDiagnostic, LevelReport, MemberSummary, Provenance, StrongErrorRow,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::random_data::{
    build_partition, collocate_data, latent_expectation, sup_data_error, Ensemble, EnsembleMode,
    LatentPoint, Member,
};
use crate::solver::{manufactured_convergence, self_convergence, ErrorTable};
use crate::statistics::{
    boundedness_in_probability, convergence_in_probability_diagnostic, empirical_data_mean,
    empirical_field_mean, empirical_functional_mean, energy_moment_bound, r_barycenter,
};
use crate::torus_mesh::{lq_norm, GridSpec};

/// Lattice resolution per latent axis for the collocation data error.
const COLLOCATION_PROBE_NODES: usize = 1024;

fn provenance(cfg: &ExperimentConfig) -> Result<Provenance> {
    // where the report lands does not change its content
    let canonical = serde_json::to_string(&ExperimentConfig {
        output_dir: None,
        ..cfg.clone()
    })?;
    let digest = Sha256::digest(canonical.as_bytes());
    let config_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(Provenance {
        config_hash,
        seed: cfg.seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        mode: cfg.mode,
    })
}

fn grid_for(cfg: &ExperimentConfig, cells: usize) -> Result<GridSpec> {
    let spec = cfg.spec()?;
    GridSpec::new(spec.dim, cells, spec.period)
}

fn level_ensemble(cfg: &ExperimentConfig, level: &LevelSpec, exec: Execution) -> Result<Ensemble> {
    let spec = cfg.spec()?;
    let grid = grid_for(cfg, level.cells)?;
    let scheme = cfg.effective_scheme();
    match cfg.mode {
        EnsembleMode::Weak => Ensemble::weak(spec, cfg.seed, level.samples, &grid, &scheme, exec),
        EnsembleMode::Strong => {
            let partition = Arc::new(build_partition(
                spec.latent_dim,
                level.samples,
                cfg.point_rule,
            )?);
            Ensemble::strong(spec, partition, &grid, &scheme, exec)
        }
    }
}

fn summarize_level(
    cfg: &ExperimentConfig,
    index: usize,
    level: &LevelSpec,
    ens: &Ensemble,
) -> Result<LevelReport> {
    let spec = cfg.spec()?;
    let st = &cfg.statistics;
    let grid = grid_for(cfg, level.cells)?;
    let unresolved = ens.unresolved_weight();
    let any_resolved =
        unresolved < 1.0 && ens.members().iter().any(|m| m.report.status.is_completed());

    let mut status_counts = BTreeMap::new();
    for m in ens.members() {
        let key = serde_json::to_value(m.report.status)?
            .as_str()
            .unwrap_or_default()
            .to_string();
        *status_counts.entry(key).or_insert(0) += 1;
    }

    let functional_means = st
        .functionals
        .iter()
        .map(|f| empirical_functional_mean(ens, f))
        .collect::<Result<Vec<_>>>()?;
    let data_means = st
        .data_functionals
        .iter()
        .map(|f| {
            let mean = empirical_data_mean(ens, f);
            let exact = latent_expectation(spec.latent_dim, st.quadrature_nodes, |w| {
                let p = LatentPoint::new(w.to_vec()).expect("quadrature nodes lie in the cube");
                spec.realize_data(&p)
                    .map(|d| f.evaluate(&d))
                    .unwrap_or(f64::NAN)
            })
            .ok();
            let error = exact.zip(mean.value).map(|(e, v)| (v - e).abs());
            DataFunctionalRow { mean, exact, error }
        })
        .collect();

    let mut field_means = Vec::new();
    let mut barycenters = Vec::new();
    let mut energy = None;
    if any_resolved {
        for q in &st.field_means {
            let fm = empirical_field_mean(ens, *q)?;
            let l2_norms = fm
                .fields
                .iter()
                .map(|f| lq_norm(f, 2.0))
                .collect::<Result<Vec<_>>>()?;
            field_means.push(FieldMeanSummary {
                quantity: *q,
                times: fm.times.clone(),
                l2_norms,
                final_field: fm.fields.last().cloned(),
            });
        }
        for b in &st.barycenters {
            let res = r_barycenter(ens, b.quantity, b.r, b.q, b.time, &st.barycenter_options)?;
            barycenters.push(BarycenterSummary {
                quantity: b.quantity,
                r: res.r,
                q: res.q,
                time: res.time,
                objective: res.objective,
                iterations: res.iterations,
                first_order_residual: res.first_order_residual,
                converged: res.converged,
                minimizer: Some(res.minimizer),
            });
        }
        energy = Some(energy_moment_bound(ens)?);
    }

    let (collocation_error, collocation_bound) = match (cfg.mode, ens.partition()) {
        (EnsembleMode::Strong, Some(p)) if spec.latent_dim <= 2 => {
            let col = collocate_data(spec, p.clone())?;
            let nodes = match spec.latent_dim {
                1 => COLLOCATION_PROBE_NODES,
                _ => 64,
            };
            let res = (nodes / p.per_axis()).max(1) * p.per_axis();
            let err = sup_data_error(spec, &col, res)?;
            (
                Some(err),
                Some(spec.lipschitz_constant() / (2.0 * p.per_axis() as f64)),
            )
        }
        _ => (None, None),
    };

    let member_summaries = ens
        .members()
        .iter()
        .map(|m| MemberSummary {
            latent: m.latent.coords().to_vec(),
            weight: m.weight,
            status: m.report.status,
            steps: m.report.steps,
            max_linf: m.report.max_linf(),
            final_energy: *m.report.energy_history.last().unwrap_or(&f64::NAN),
            mass_drift: m.report.mass_drift(),
        })
        .collect();

    Ok(LevelReport {
        level: index,
        samples: level.samples,
        members: ens.len(),
        cells: level.cells,
        h: grid.spacing(),
        tainted: unresolved > cfg.failure_budget,
        unresolved_weight: unresolved,
        status_counts,
        boundedness: boundedness_in_probability(ens, &st.m_grid)?,
        functional_means,
        data_means,
        field_means,
        barycenters,
        energy,
        collocation_error,
        collocation_bound,
        member_summaries,
    })
}

/// Members of `coarse` evaluated at the latent points of `fine`, carrying
/// the fine weights: the common-random-number pairing of two levels.
fn pair_levels(coarse: &Ensemble, fine: &Ensemble) -> Result<(Ensemble, Ensemble)> {
    match (coarse.mode(), coarse.partition()) {
        (EnsembleMode::Strong, Some(_)) => {
            let lifted = fine
                .members()
                .iter()
                .map(|f| {
                    let c = coarse.evaluate_at(&f.latent)?;
                    Ok(Member {
                        latent: f.latent.clone(),
                        weight: f.weight,
                        ..c.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((Ensemble::new(EnsembleMode::Strong, lifted)?, fine.clone()))
        }
        _ => {
            // weak streams are prefix-stable: the first N members coincide
            let n = coarse.len();
            if fine.len() < n {
                return Err(Error::Pairing("finer level has fewer samples".into()));
            }
            let w = 1.0 / n as f64;
            let head = fine.members()[..n]
                .iter()
                .map(|m| Member {
                    weight: w,
                    ..m.clone()
                })
                .collect();
            Ok((coarse.clone(), Ensemble::new(EnsembleMode::Weak, head)?))
        }
    }
}

/// `sum_j w_j |X_l(omega_j) - X_ref(omega_j)|^r` at the final time over the
/// reference collocation points.
fn strong_error(
    cfg: &ExperimentConfig,
    index: usize,
    level: &LevelSpec,
    ens: &Ensemble,
    reference: &Ensemble,
) -> Result<StrongErrorRow> {
    let spec = cfg.spec()?;
    let gamma = spec.gamma;
    let r = cfg.statistics.strong_error_r;
    let (lifted, fine) = pair_levels(ens, reference)?;
    let (mut de, mut me) = (0.0, 0.0);
    for (a, b) in lifted.members().iter().zip(fine.members()) {
        if !a.report.status.is_completed() || !b.report.status.is_completed() {
            de = f64::INFINITY;
            me = f64::INFINITY;
            continue;
        }
        let (sa, sb) = (
            a.report.trajectory.final_state(),
            b.report.trajectory.final_state(),
        );
        let coarse = if sa.grid().cells() <= sb.grid().cells() {
            *sa.grid()
        } else {
            *sb.grid()
        };
        let (sa, sb) = (sa.restrict_to(&coarse)?, sb.restrict_to(&coarse)?);
        let dr = lq_norm(&sa.rho().sub(sb.rho())?, gamma)?;
        let dm = lq_norm(
            &sa.momentum().sub(sb.momentum())?,
            2.0 * gamma / (gamma + 1.0),
        )?;
        de += b.weight * dr.powf(r);
        me += b.weight * dm.powf(r);
    }
    Ok(StrongErrorRow {
        level: index,
        samples: level.samples,
        cells: level.cells,
        density_error: de,
        momentum_error: me,
    })
}

fn run_ladder(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    cfg.validate()?;
    let provenance = provenance(cfg)?;
    let mut levels = Vec::with_capacity(cfg.ladder.len());
    let mut ensembles: Vec<Ensemble> = Vec::with_capacity(cfg.ladder.len());
    for (i, level) in cfg.ladder.iter().enumerate() {
        let ens = level_ensemble(cfg, level, exec)?;
        levels.push(summarize_level(cfg, i, level, &ens)?);
        ensembles.push(ens);
    }

    let mut cross = CrossLevel::default();
    for i in 1..ensembles.len() {
        let (a, b) = pair_levels(&ensembles[i - 1], &ensembles[i])?;
        let diagnostic = convergence_in_probability_diagnostic(
            &a,
            &b,
            &cfg.statistics.eps_grid,
            cfg.statistics.diagnostic_q,
        )?;
        cross.diagnostics.push(LevelPairDiagnostic {
            coarse: i - 1,
            fine: i,
            diagnostic,
        });
    }
    if cfg.mode == EnsembleMode::Strong {
        let reference = match &cfg.reference {
            Some(r) => level_ensemble(cfg, r, exec)?,
            None => ensembles[ensembles.len() - 1].clone(),
        };
        for (i, (level, ens)) in cfg.ladder.iter().zip(&ensembles).enumerate() {
            cross
                .strong_errors
                .push(strong_error(cfg, i, level, ens, &reference)?);
        }
    }
    if cfg.convergence.is_some() {
        cross.deterministic = Some(run_deterministic_convergence(cfg)?);
    }
    let report = ExperimentReport {
        provenance,
        levels,
        cross_level: cross,
    };
    if let Some(dir) = &cfg.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}

/// Monte-Carlo study over the ladder.
pub fn run_weak(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    if cfg.mode != EnsembleMode::Weak {
        return Err(Error::Config("run_weak needs mode = \"weak\"".into()));
    }
    run_ladder(cfg, exec)
}

/// Collocation study over the ladder.
pub fn run_strong(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    if cfg.mode != EnsembleMode::Strong {
        return Err(Error::Config("run_strong needs mode = \"strong\"".into()));
    }
    run_ladder(cfg, exec)
}

/// Runs the configured manufactured or self-convergence study.
pub fn run_deterministic_convergence(cfg: &ExperimentConfig) -> Result<ErrorTable> {
    let study = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| Error::Config("no [convergence] study configured".into()))?;
    let scheme = cfg.scheme.clone();
    match study {
        crate::experiments::ConvergenceStudy::Manufactured { solution, cells } => {
            manufactured_convergence(solution, cells, &scheme)
        }
        crate::experiments::ConvergenceStudy::SelfConvergence {
            cells,
            reference_cells,
            latent,
        } => {
            let spec = cfg.spec()?;
            let omega = match latent {
                Some(c) => LatentPoint::new(c.clone())?,
                None => LatentPoint::center(spec.latent_dim),
            };
            let data = spec.realize_data(&omega)?;
            let scheme = cfg.effective_scheme();
            self_convergence(&data, spec.dim, cells, *reference_cells, &scheme)
        }
    }
}

/// Runs the convergence study alone and writes `convergence.csv` when an
/// output directory is configured.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ErrorTable> {
    cfg.validate()?;
    let table = run_deterministic_convergence(cfg)?;
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
        table.write_csv(std::io::BufWriter::new(std::fs::File::create(
            dir.join("convergence.csv"),
        )?))?;
        std::fs::write(
            dir.join("convergence.json"),
            serde_json::to_string_pretty(&table)? + "\n",
        )?;
    }
    Ok(table)
}
