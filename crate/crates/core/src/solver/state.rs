use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::torus_mesh::{Field, GridSpec, Quantity};

/// Discrete density and momentum `m = rho u` at one time. Velocity is
/// recovered as `m / rho`, which is well defined since `rho > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    rho: Field,
    momentum: Field,
    time: f64,
}

impl FluidState {
    pub fn new(rho: Field, momentum: Field, time: f64) -> Result<Self> {
        if rho.components() != 1 {
            return Err(shape("density must be a scalar field"));
        }
        if momentum.grid() != rho.grid() || momentum.components() != rho.grid().dim() {
            return Err(shape(
                "momentum must be a d-component field on the density grid",
            ));
        }
        if let Some(r) = rho.values().iter().find(|r| !(**r > 0.0)) {
            return Err(Error::Admissibility(format!("non-positive density {r}")));
        }
        Ok(Self {
            rho,
            momentum,
            time,
        })
    }

    pub fn from_velocity(rho: Field, velocity: &Field, time: f64) -> Result<Self> {
        if velocity.grid() != rho.grid() || velocity.components() != rho.grid().dim() {
            return Err(shape(
                "velocity must be a d-component field on the density grid",
            ));
        }
        let nc = velocity.components();
        let m: Vec<f64> = velocity
            .values()
            .chunks(nc)
            .zip(rho.values())
            .flat_map(|(u, r)| u.iter().map(move |v| v * r))
            .collect();
        let momentum = Field::from_values(*rho.grid(), nc, m)?;
        Self::new(rho, momentum, time)
    }

    pub(crate) fn from_parts_unchecked(rho: Field, momentum: Field, time: f64) -> Self {
        Self {
            rho,
            momentum,
            time,
        }
    }

    pub fn rho(&self) -> &Field {
        &self.rho
    }

    pub fn momentum(&self) -> &Field {
        &self.momentum
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &GridSpec {
        self.rho.grid()
    }

    pub fn velocity(&self) -> Field {
        let nc = self.momentum.components();
        let values = self
            .momentum
            .values()
            .chunks(nc)
            .zip(self.rho.values())
            .flat_map(|(m, r)| m.iter().map(move |v| v / r))
            .collect();
        Field::from_raw(*self.rho.grid(), nc, values)
    }

    pub fn quantity(&self, q: Quantity) -> Field {
        match q {
            Quantity::Density => self.rho.clone(),
            Quantity::Momentum => self.momentum.clone(),
            Quantity::Velocity => self.velocity(),
        }
    }

    /// Total mass `int rho`.
    pub fn mass(&self) -> f64 {
        self.rho.integral()[0]
    }

    /// `max(max |rho|, max |u|)` over cells.
    pub fn linf(&self) -> f64 {
        let r = self.rho.magnitudes().fold(0.0, f64::max);
        let u = self.velocity().magnitudes().fold(0.0, f64::max);
        r.max(u)
    }

    /// Conservative restriction of density and momentum to a coarser grid.
    pub fn restrict_to(&self, grid: &GridSpec) -> Result<FluidState> {
        Ok(FluidState {
            rho: self.rho.restrict_or_prolong(grid)?,
            momentum: self.momentum.restrict_or_prolong(grid)?,
            time: self.time,
        })
    }
}
