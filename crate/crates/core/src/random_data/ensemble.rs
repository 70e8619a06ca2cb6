use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::physics::DataRecord;
use crate::random_data::{sample_latent, CollocationPartition, DistributionSpec, LatentPoint};
use crate::solver::{solve, SchemeConfig, SolveReport};
use crate::torus_mesh::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    /// Monte-Carlo samples with equal weights `1/N`.
    Weak,
    /// Collocation cells weighted by their probability.
    Strong,
}

#[derive(Debug, Clone)]
pub struct Member {
    pub latent: LatentPoint,
    pub data: Arc<DataRecord>,
    pub report: Arc<SolveReport>,
    pub weight: f64,
}

/// Weighted collection of solved data records.
#[derive(Debug, Clone)]
pub struct Ensemble {
    mode: EnsembleMode,
    members: Vec<Member>,
    partition: Option<Arc<CollocationPartition>>,
}

const WEIGHT_TOL: f64 = 1e-12;

impl Ensemble {
    /// Checks that the ensemble is nonempty with positive weights summing to one.
    pub fn new(mode: EnsembleMode, members: Vec<Member>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if members.iter().any(|m| !(m.weight > 0.0)) {
            return Err(Error::Domain("ensemble weights must be positive".into()));
        }
        let total: f64 = members.iter().map(|m| m.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL * members.len() as f64 {
            return Err(Error::Domain(format!("ensemble weights sum to {total}")));
        }
        Ok(Self {
            mode,
            members,
            partition: None,
        })
    }

    /// Solves every record on `grid` and wraps the results.
    pub fn solve_records(
        mode: EnsembleMode,
        latents: Vec<LatentPoint>,
        records: Vec<Arc<DataRecord>>,
        weights: Vec<f64>,
        grid: &GridSpec,
        cfg: &SchemeConfig,
        exec: Execution,
    ) -> Result<Self> {
        let reports = exec.map(&records, |d| solve(d, grid, cfg).map(Arc::new));
        let members = latents
            .into_iter()
            .zip(records)
            .zip(reports)
            .zip(weights)
            .map(|(((latent, data), report), weight)| {
                Ok(Member {
                    latent,
                    data,
                    report: report?,
                    weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mode, members)
    }

    /// Monte-Carlo ensemble of `n` members from the stream `seed`.
    pub fn weak(
        spec: &DistributionSpec,
        seed: u64,
        n: usize,
        grid: &GridSpec,
        cfg: &SchemeConfig,
        exec: Execution,
    ) -> Result<Self> {
        let latents = sample_latent(seed, spec.latent_dim, n)?;
        let records = exec.map(&latents, |p| spec.realize_data(p).map(Arc::new));
        let records = records.into_iter().collect::<Result<Vec<_>>>()?;
        Self::solve_records(
            EnsembleMode::Weak,
            latents,
            records,
            vec![1.0 / n as f64; n],
            grid,
            cfg,
            exec,
        )
    }

    /// Collocation ensemble with one member per partition cell.
    pub fn strong(
        spec: &DistributionSpec,
        partition: Arc<CollocationPartition>,
        grid: &GridSpec,
        cfg: &SchemeConfig,
        exec: Execution,
    ) -> Result<Self> {
        let collocated = crate::random_data::collocate_data(spec, partition.clone())?;
        let latents = partition.points().to_vec();
        let mut e = Self::solve_records(
            EnsembleMode::Strong,
            latents,
            collocated.records,
            partition.weights(),
            grid,
            cfg,
            exec,
        )?;
        e.partition = Some(partition);
        Ok(e)
    }

    pub fn with_partition(mut self, partition: Arc<CollocationPartition>) -> Result<Self> {
        if partition.len() != self.members.len() {
            return Err(Error::Pairing(
                "partition size differs from member count".into(),
            ));
        }
        self.partition = Some(partition);
        Ok(self)
    }

    pub fn mode(&self) -> EnsembleMode {
        self.mode
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn partition(&self) -> Option<&Arc<CollocationPartition>> {
        self.partition.as_ref()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.weight).collect()
    }

    /// Total weight of members whose solve did not complete.
    pub fn unresolved_weight(&self) -> f64 {
        self.members
            .iter()
            .filter(|m| !m.report.status.is_completed())
            .fold(0.0, |s, m| s + m.weight)
    }

    /// Member representing `omega`: the cell containing it for a
    /// collocation ensemble, or the member drawn at exactly `omega`.
    pub fn evaluate_at(&self, omega: &LatentPoint) -> Result<&Member> {
        match &self.partition {
            Some(p) => Ok(&self.members[p.locate(omega)?]),
            None => self
                .members
                .iter()
                .find(|m| m.latent == *omega)
                .ok_or_else(|| {
                    Error::Pairing(format!("no member at latent point {:?}", omega.coords()))
                }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_data::spec::tests::example_spec;
    use crate::random_data::{build_partition, PointRule};

    #[test]
    fn weights_checked() {
        let spec = example_spec();
        let grid = GridSpec::unit(1, 8).unwrap();
        let cfg = SchemeConfig {
            final_time: 0.01,
            ..Default::default()
        };
        let e = Ensemble::weak(&spec, 1, 4, &grid, &cfg, Execution::Sequential).unwrap();
        assert!(e.weights().iter().all(|w| *w == 0.25));
        let mut members = e.members().to_vec();
        members[0].weight = 0.5;
        assert!(Ensemble::new(EnsembleMode::Weak, members).is_err());
        assert!(matches!(
            Ensemble::new(EnsembleMode::Weak, vec![]),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn strong_members_follow_cells() {
        let spec = example_spec();
        let grid = GridSpec::unit(1, 8).unwrap();
        let cfg = SchemeConfig {
            final_time: 0.01,
            ..Default::default()
        };
        let p = Arc::new(build_partition(2, 2, PointRule::Center).unwrap());
        let e = Ensemble::strong(&spec, p, &grid, &cfg, Execution::Sequential).unwrap();
        assert_eq!(e.len(), 4);
        let m = e
            .evaluate_at(&LatentPoint::new(vec![0.9, 0.1]).unwrap())
            .unwrap();
        assert_eq!(m.latent.coords(), &[0.75, 0.25]);
        assert_eq!(e.unresolved_weight(), 0.0);
    }

    #[test]
    fn parallel_matches_sequential() {
        let spec = example_spec();
        let grid = GridSpec::unit(1, 8).unwrap();
        let cfg = SchemeConfig {
            final_time: 0.01,
            ..Default::default()
        };
        let a = Ensemble::weak(&spec, 5, 6, &grid, &cfg, Execution::Sequential).unwrap();
        let b = Ensemble::weak(&spec, 5, 6, &grid, &cfg, Execution::threads(3)).unwrap();
        for (x, y) in a.members().iter().zip(b.members()) {
            assert_eq!(x.report, y.report);
        }
    }
}
