//! Continuum quantities: barotropic pressure law, pressure potential,
//! viscous stress, total energy, and the data record with its admissible set.

mod data;

pub use data::{
    data_distance, validate_admissible, AdmissibleBounds, Constraint, DataRecord, Forcing,
    FourierField, FourierMode, Verdict, DEFAULT_SOBOLEV_ORDER,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Error, Result};
use crate::solver::FluidState;
use crate::torus_mesh::neumaier_sum;

/// `p(rho) = a rho^gamma`.
pub fn pressure(rho: f64, a: f64, gamma: f64) -> Result<f64> {
    if rho.is_nan() || rho < 0.0 {
        return Err(domain(format!("pressure needs rho >= 0, got {rho}")));
    }
    Ok(a * rho.powf(gamma))
}

/// Pressure potential `P(rho) = a rho^gamma / (gamma - 1)`, the convex
/// solution of `P'(rho) rho - P(rho) = p(rho)` with `P(0) = 0`.
pub fn pressure_potential(rho: f64, a: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(domain(format!(
            "pressure potential needs gamma > 1, got {gamma}"
        )));
    }
    if rho.is_nan() || rho < 0.0 {
        return Err(domain(format!(
            "pressure potential needs rho >= 0, got {rho}"
        )));
    }
    Ok(a * rho.powf(gamma) / (gamma - 1.0))
}

/// Sound speed `sqrt(p'(rho)) = sqrt(a gamma rho^(gamma-1))`.
pub fn sound_speed(rho: f64, a: f64, gamma: f64) -> f64 {
    (a * gamma * rho.powf(gamma - 1.0)).sqrt()
}

/// Viscosity multiplying `u_xx` in one dimension. The stress law degenerates
/// for `d = 1`; the 1-D reduction uses `mu + eta`.
pub fn effective_viscosity_1d(mu: f64, eta: f64) -> f64 {
    mu + eta
}

/// Coefficient of `grad div u` in `div S` for `d >= 2`:
/// `div S = mu lap u + (mu (1 - 2/d) + eta) grad div u`.
pub fn grad_div_coefficient(mu: f64, eta: f64, dim: usize) -> f64 {
    mu * (1.0 - 2.0 / dim as f64) + eta
}

/// Viscous stress at one point, a `d x d` matrix (upper-left block of `m`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressTensor {
    pub dim: usize,
    pub m: [[f64; 2]; 2],
}

impl StressTensor {
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.m[0][1] - self.m[1][0]).abs() <= tol
    }
}

/// `S = mu (grad u + grad u^T - (2/d) div u I) + eta div u I`.
///
/// `grad_u[i][j] = d u_i / d x_j`. In one dimension the deviatoric part
/// vanishes identically and the effective coefficient
/// [`effective_viscosity_1d`] is used instead: `S = (mu + eta) u_x`.
pub fn viscous_stress(
    grad_u: [[f64; 2]; 2],
    mu: f64,
    eta: f64,
    dim: usize,
) -> Result<StressTensor> {
    match dim {
        1 => Ok(StressTensor {
            dim,
            m: [
                [effective_viscosity_1d(mu, eta) * grad_u[0][0], 0.0],
                [0.0, 0.0],
            ],
        }),
        2 => {
            let div = grad_u[0][0] + grad_u[1][1];
            let mut m = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] = mu * (grad_u[i][j] + grad_u[j][i]);
                }
                m[i][i] += (eta - mu * 2.0 / dim as f64) * div;
            }
            Ok(StressTensor { dim, m })
        }
        _ => Err(shape(format!(
            "stress assembly supports d = 1, 2; got {dim}"
        ))),
    }
}

/// Stress at every cell from centred differences of the velocity field.
pub fn stress_field(state: &FluidState, mu: f64, eta: f64) -> Result<Vec<StressTensor>> {
    let u = state.velocity();
    let grid = *u.grid();
    let d = grid.dim();
    let h = grid.spacing();
    (0..grid.cell_count())
        .map(|cell| {
            let mut g = [[0.0; 2]; 2];
            for j in 0..d {
                let up = u.cell(grid.neighbor(cell, j, 1));
                let dn = u.cell(grid.neighbor(cell, j, -1));
                for i in 0..d {
                    g[i][j] = (up[i] - dn[i]) / (2.0 * h);
                }
            }
            viscous_stress(g, mu, eta, d)
        })
        .collect()
}

/// `int [ rho |u|^2 / 2 + P(rho) ] dx` by the midpoint rule.
pub fn total_energy(state: &FluidState, a: f64, gamma: f64) -> Result<f64> {
    let rho = state.rho();
    if let Some((cell, r)) = rho.values().iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
        return Err(Error::Admissibility(format!("density {r} at cell {cell}")));
    }
    Ok(energy_unchecked(state, a, gamma))
}

pub(crate) fn energy_unchecked(state: &FluidState, a: f64, gamma: f64) -> f64 {
    let rho = state.rho().values();
    let m = state.momentum();
    let nc = m.components();
    let pot = a / (gamma - 1.0);
    let vol = state.rho().grid().cell_volume();
    vol * neumaier_sum(rho.iter().zip(m.values().chunks(nc)).map(|(&r, mc)| {
        let m2: f64 = mc.iter().map(|v| v * v).sum();
        0.5 * m2 / r + pot * r.powf(gamma)
    }))
}
