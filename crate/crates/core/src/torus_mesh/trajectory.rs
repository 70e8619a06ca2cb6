use serde::{Deserialize, Serialize};

use super::spectral::{dft, neg_sobolev_norm_sq};
use super::{lq_norm, require_same_grid, Field, GridSpec};
use crate::error::{domain, shape, Result};
use crate::solver::FluidState;

/// Which solution field a statistic acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Density,
    Momentum,
    Velocity,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Density => "density",
            Quantity::Momentum => "momentum",
            Quantity::Velocity => "velocity",
        }
    }
}

/// Time history of fluid states on one grid, `t_0 = 0 < t_1 < ... < t_M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    grid: GridSpec,
    states: Vec<FluidState>,
}

impl Trajectory {
    pub fn new(initial: FluidState) -> Self {
        Self {
            grid: *initial.rho().grid(),
            states: vec![initial],
        }
    }

    pub fn push(&mut self, state: FluidState) -> Result<()> {
        require_same_grid(&self.grid, state.rho().grid())?;
        let last = self
            .states
            .last()
            .map(|s| s.time())
            .unwrap_or(f64::NEG_INFINITY);
        if !(state.time() > last) {
            return Err(domain(format!(
                "trajectory times must increase: {} after {}",
                state.time(),
                last
            )));
        }
        self.states.push(state);
        Ok(())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn states(&self) -> &[FluidState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time()).collect()
    }

    pub fn final_state(&self) -> &FluidState {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    pub fn field(&self, quantity: Quantity, level: usize) -> Field {
        self.states[level].quantity(quantity)
    }

    /// Restricts every snapshot onto a coarser nested grid.
    pub fn restrict_to(&self, grid: &GridSpec) -> Result<Trajectory> {
        if grid == &self.grid {
            return Ok(self.clone());
        }
        let states = self
            .states
            .iter()
            .map(|s| s.restrict_to(grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            grid: *grid,
            states,
        })
    }

    /// `L^2(0,T; W^{-m,2})` norm of one quantity, trapezoid rule in time.
    pub fn neg_sobolev_norm(&self, quantity: Quantity, m: u32) -> Result<f64> {
        if (m as usize) <= self.grid.dim() + 1 {
            return Err(domain(format!(
                "negative Sobolev order must exceed d + 1, got {m}"
            )));
        }
        let values: Vec<f64> = self
            .states
            .iter()
            .map(|s| neg_sobolev_norm_sq(&dft(&s.quantity(quantity)), m))
            .collect();
        Ok(trapezoid(&self.times(), &values).sqrt())
    }

    /// Space-time `L^q((0,T) x T^d)` norm of `quantity(self) - quantity(other)`,
    /// after restricting both to the coarser grid. Time levels must coincide.
    pub fn lq_distance(&self, other: &Trajectory, quantity: Quantity, q: f64) -> Result<f64> {
        let (a, b) = common_grid_pair(self, other)?;
        let mut per_level = Vec::with_capacity(a.len());
        for (sa, sb) in a.states.iter().zip(&b.states) {
            let diff = sa.quantity(quantity).sub(&sb.quantity(quantity))?;
            per_level.push(lq_norm(&diff, q)?);
        }
        if q.is_infinite() {
            return Ok(per_level.into_iter().fold(0.0, f64::max));
        }
        let powered: Vec<f64> = per_level.iter().map(|v| v.powf(q)).collect();
        Ok(trapezoid(&a.times(), &powered).powf(1.0 / q))
    }

    /// Space-time `L^q` norm of one quantity.
    pub fn lq_norm(&self, quantity: Quantity, q: f64) -> Result<f64> {
        let per_level = self
            .states
            .iter()
            .map(|s| lq_norm(&s.quantity(quantity), q))
            .collect::<Result<Vec<_>>>()?;
        if q.is_infinite() {
            return Ok(per_level.into_iter().fold(0.0, f64::max));
        }
        let powered: Vec<f64> = per_level.iter().map(|v| v.powf(q)).collect();
        Ok(trapezoid(&self.times(), &powered).powf(1.0 / q))
    }

    pub fn same_times(&self, other: &Trajectory) -> bool {
        self.len() == other.len()
            && self
                .states
                .iter()
                .zip(&other.states)
                .all(|(a, b)| (a.time() - b.time()).abs() <= 1e-12 * (1.0 + a.time().abs()))
    }
}

/// Brings two trajectories onto the coarser of their grids.
pub(crate) fn common_grid_pair(a: &Trajectory, b: &Trajectory) -> Result<(Trajectory, Trajectory)> {
    if !a.same_times(b) {
        return Err(shape(format!(
            "trajectories have different time levels ({} vs {} snapshots)",
            a.len(),
            b.len()
        )));
    }
    if !a.grid.is_nested_with(&b.grid) {
        return Err(shape(format!(
            "grids not nested: {:?} vs {:?}",
            a.grid, b.grid
        )));
    }
    let coarse = if a.grid.cells() <= b.grid.cells() {
        a.grid
    } else {
        b.grid
    };
    Ok((a.restrict_to(&coarse)?, b.restrict_to(&coarse)?))
}

/// Trapezoid rule; zero for a single sample.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn state(grid: GridSpec, rho: f64, u: f64, t: f64) -> FluidState {
        FluidState::from_velocity(
            Field::constant(grid, &[rho]),
            &Field::constant(grid, &vec![u; grid.dim()]),
            t,
        )
        .unwrap()
    }

    #[test]
    fn times_must_increase() {
        let g = GridSpec::unit(1, 4).unwrap();
        let mut tr = Trajectory::new(state(g, 1.0, 0.0, 0.0));
        tr.push(state(g, 1.0, 0.0, 0.5)).unwrap();
        assert!(tr.push(state(g, 1.0, 0.0, 0.5)).is_err());
    }

    #[test]
    fn constant_distance() {
        let g = GridSpec::unit(1, 4).unwrap();
        let mut a = Trajectory::new(state(g, 1.0, 0.0, 0.0));
        a.push(state(g, 1.0, 0.0, 0.5)).unwrap();
        let fine = GridSpec::unit(1, 8).unwrap();
        let mut b = Trajectory::new(state(fine, 1.5, 0.0, 0.0));
        b.push(state(fine, 1.5, 0.0, 0.5)).unwrap();
        // |0.5| over (0, 0.5) x T^1: (0.5 * 0.5^2)^(1/2)
        let d = a.lq_distance(&b, Quantity::Density, 2.0).unwrap();
        assert_relative_eq!(d, (0.5f64 * 0.25).sqrt(), max_relative = 1e-14);
        assert_eq!(a.lq_distance(&a, Quantity::Momentum, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn trajectory_neg_sobolev_constant_in_time() {
        let g = GridSpec::unit(1, 8).unwrap();
        let mut a = Trajectory::new(state(g, 2.0, 0.0, 0.0));
        a.push(state(g, 2.0, 0.0, 0.25)).unwrap();
        // L2 in time of the constant 2 over [0, 0.25]
        assert_relative_eq!(
            a.neg_sobolev_norm(Quantity::Density, 3).unwrap(),
            1.0,
            max_relative = 1e-14
        );
    }
}
