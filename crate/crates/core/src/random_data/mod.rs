//! Probabilistic data layer: maps from the latent cube `[0,1]^K` into the
//! admissible set, Monte-Carlo sample streams and collocation partitions.
//!
//! The probability space is the latent cube with Lebesgue measure.

mod ensemble;
mod partition;
mod quadrature;
pub(crate) mod spec;

pub use ensemble::{Ensemble, EnsembleMode, Member};
pub use partition::{
    build_partition, collocate_data, sup_data_error, CollocatedData, CollocationPartition,
    PointRule, MAX_PARTITION_CELLS,
};
pub use quadrature::{gauss_legendre, latent_expectation};
pub use spec::{
    AffineCoef, DistributionSpec, ParamTransform, RandomFieldSpec, RandomForcingSpec, RandomMode,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A point `omega` of the latent cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentPoint {
    coords: Vec<f64>,
}

impl LatentPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(domain(format!("latent coordinate {c} outside [0, 1]")));
        }
        Ok(Self { coords })
    }

    pub fn center(k: usize) -> Self {
        Self {
            coords: vec![0.5; k],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Latent point number `index` of the stream `seed`. Each index owns an
/// independent ChaCha stream, so the point does not depend on how many
/// points are drawn or in which order.
pub fn sample_latent_member(seed: u64, k: usize, index: u64) -> LatentPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    LatentPoint {
        coords: (0..k).map(|_| rng.random::<f64>()).collect(),
    }
}

/// `n` i.i.d. uniform points of `[0,1]^k`.
pub fn sample_latent(seed: u64, k: usize, n: usize) -> Result<Vec<LatentPoint>> {
    if n == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    Ok((0..n as u64)
        .map(|i| sample_latent_member(seed, k, i))
        .collect())
}
