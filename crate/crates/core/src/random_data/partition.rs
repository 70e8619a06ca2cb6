use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::physics::{data_distance, DataRecord, DEFAULT_SOBOLEV_ORDER};
use crate::random_data::{DistributionSpec, LatentPoint};

/// Largest partition [`build_partition`] will create.
pub const MAX_PARTITION_CELLS: usize = 1 << 20;

/// Where each cell's collocation point sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PointRule {
    #[default]
    Center,
    RandomInCell {
        seed: u64,
    },
}

/// Uniform tensor partition of `[0,1]^K` into `per_axis^K` boxes. Cell `n`
/// has multi-index digits in base `per_axis`, coordinate 0 fastest. Boxes
/// are half-open except at the upper face of the cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationPartition {
    latent_dim: usize,
    per_axis: usize,
    rule: PointRule,
    points: Vec<LatentPoint>,
}

pub fn build_partition(
    latent_dim: usize,
    per_axis: usize,
    rule: PointRule,
) -> Result<CollocationPartition> {
    if per_axis == 0 {
        return Err(domain("need at least one cell per axis"));
    }
    let cells = (per_axis as u128)
        .checked_pow(latent_dim as u32)
        .unwrap_or(u128::MAX);
    if cells > MAX_PARTITION_CELLS as u128 {
        return Err(Error::PartitionSize {
            cells,
            limit: MAX_PARTITION_CELLS,
        });
    }
    let cells = cells as usize;
    let points = (0..cells)
        .map(|n| {
            let mut rng = match rule {
                PointRule::Center => None,
                PointRule::RandomInCell { seed } => {
                    let mut r = ChaCha8Rng::seed_from_u64(seed);
                    r.set_stream(n as u64);
                    Some(r)
                }
            };
            let coords = digits(n, per_axis, latent_dim)
                .into_iter()
                .map(|i| {
                    let offset = rng.as_mut().map_or(0.5, |r| r.random::<f64>());
                    (i as f64 + offset) / per_axis as f64
                })
                .collect();
            LatentPoint { coords }
        })
        .collect();
    Ok(CollocationPartition {
        latent_dim,
        per_axis,
        rule,
        points,
    })
}

fn digits(mut n: usize, base: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let d = n % base;
            n /= base;
            d
        })
        .collect()
}

impl CollocationPartition {
    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn rule(&self) -> PointRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatentPoint] {
        &self.points
    }

    /// Probability `|Omega_n|` of every cell.
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![self.weight(); self.points.len()]
    }

    /// `(lower, upper)` corners of cell `n`.
    pub fn cell_bounds(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let w = 1.0 / self.per_axis as f64;
        let d = digits(n, self.per_axis, self.latent_dim);
        (
            d.iter().map(|i| *i as f64 * w).collect(),
            d.iter().map(|i| (*i + 1) as f64 * w).collect(),
        )
    }

    /// Index of the cell containing `omega`.
    pub fn locate(&self, omega: &LatentPoint) -> Result<usize> {
        if omega.dim() != self.latent_dim {
            return Err(domain(
                "latent point dimension does not match the partition",
            ));
        }
        let mut n = 0;
        let mut stride = 1;
        for &c in omega.coords() {
            let i = ((c * self.per_axis as f64).floor() as usize).min(self.per_axis - 1);
            n += i * stride;
            stride *= self.per_axis;
        }
        Ok(n)
    }
}

/// Piecewise-constant data map: every cell carries the record realized at
/// its collocation point.
#[derive(Debug, Clone)]
pub struct CollocatedData {
    pub partition: Arc<CollocationPartition>,
    pub records: Vec<Arc<DataRecord>>,
}

impl CollocatedData {
    pub fn at(&self, omega: &LatentPoint) -> Result<&Arc<DataRecord>> {
        Ok(&self.records[self.partition.locate(omega)?])
    }
}

pub fn collocate_data(
    spec: &DistributionSpec,
    partition: Arc<CollocationPartition>,
) -> Result<CollocatedData> {
    if partition.latent_dim() != spec.latent_dim {
        return Err(domain(
            "partition and spec have different latent dimensions",
        ));
    }
    let records = partition
        .points()
        .iter()
        .map(|p| spec.realize_data(p).map(Arc::new))
        .collect::<Result<_>>()?;
    Ok(CollocatedData { partition, records })
}

/// `max_omega dist(data_N(omega), data(omega))` over the tensor lattice
/// `j / resolution`, `j = 0..=resolution`, which contains every cell face
/// when `resolution` is a multiple of the partition size per axis.
pub fn sup_data_error(
    spec: &DistributionSpec,
    collocated: &CollocatedData,
    resolution: usize,
) -> Result<f64> {
    let k = spec.latent_dim;
    let nodes = resolution + 1;
    let total = (nodes as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > MAX_PARTITION_CELLS as u128 {
        return Err(Error::PartitionSize {
            cells: total,
            limit: MAX_PARTITION_CELLS,
        });
    }
    let mut worst: f64 = 0.0;
    for n in 0..total as usize {
        let coords = digits(n, nodes, k)
            .into_iter()
            .map(|j| j as f64 / resolution as f64)
            .collect();
        let omega = LatentPoint { coords };
        let exact = spec.realize_data(&omega)?;
        worst = worst.max(data_distance(
            collocated.at(&omega)?,
            &exact,
            DEFAULT_SOBOLEV_ORDER,
        )?);
    }
    Ok(worst)
}
