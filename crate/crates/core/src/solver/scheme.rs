//! The implicit upwind finite-volume scheme.
//!
//! Unknowns at the new time level are `(rho, u)` on cell centres. With
//! face velocities `w = (u_K + u_L) / 2` the scheme reads
//!
//! ```text
//! (rho - rho_old)/dt + div_h Up[rho, w]                       = s_rho
//! (rho u - m_old)/dt + div_h Up[rho u, w] + grad_h p(rho)     = visc_h(u) + rho g + s_m
//! ```
//!
//! `Up` is the upwind flux (face average when `w = 0`), `grad_h` the centred
//! gradient, and `visc_h` is `(mu + eta) u_xx` in 1-D and
//! `mu lap_h u + (mu (1 - 2/d) + eta) grad_h div_h u` in 2-D. The pairing
//! of `grad_h` with `div_h` and the upwind fluxes make the discrete energy
//! non-increasing when `g = 0`. The system is solved by a Jacobi-Picard
//! fixed point; the density is finally recomputed in flux form so that mass
//! is conserved to round-off.

use crate::error::{Error, Result};
use crate::physics::{effective_viscosity_1d, grad_div_coefficient, DataRecord};
use crate::solver::{FluidState, SchemeConfig, SourceTerms};
use crate::torus_mesh::{Field, GridSpec};

#[inline]
fn upwind(w: f64, own: f64, other: f64) -> f64 {
    if w > 0.0 {
        w * own
    } else if w < 0.0 {
        w * other
    } else {
        0.5 * w * (own + other)
    }
}

/// Precomputed neighbour tables and coefficients for one grid and data record.
pub(crate) struct Operator {
    grid: GridSpec,
    dim: usize,
    h: f64,
    /// `nbr[cell][axis] = (minus, plus)`.
    nbr: Vec<[(usize, usize); 2]>,
    a: f64,
    gamma: f64,
    mu: f64,
    /// 1-D: `mu + eta`; 2-D: coefficient of `grad div`.
    lambda: f64,
}

/// Right-hand data held fixed during one step.
pub(crate) struct StepInputs<'a> {
    pub old: &'a FluidState,
    pub dt: f64,
    /// `g(t_new)` at cell centres.
    pub forcing: Option<&'a Field>,
    pub mass_source: Option<&'a [f64]>,
    pub momentum_source: Option<&'a [f64]>,
}

impl Operator {
    pub fn new(grid: &GridSpec, data: &DataRecord) -> Self {
        let dim = grid.dim();
        let nbr = (0..grid.cell_count())
            .map(|c| {
                let mut t = [(c, c); 2];
                for (axis, e) in t.iter_mut().enumerate().take(dim) {
                    *e = (grid.neighbor(c, axis, -1), grid.neighbor(c, axis, 1));
                }
                t
            })
            .collect();
        let lambda = if dim == 1 {
            effective_viscosity_1d(data.mu, data.eta)
        } else {
            grad_div_coefficient(data.mu, data.eta, dim)
        };
        Self {
            grid: *grid,
            dim,
            h: grid.spacing(),
            nbr,
            a: data.a,
            gamma: data.gamma,
            mu: data.mu,
            lambda,
        }
    }

    fn cells(&self) -> usize {
        self.grid.cell_count()
    }

    /// Velocity at the `+axis` face of every cell.
    fn face_velocities(&self, u: &[f64]) -> Vec<[f64; 2]> {
        let d = self.dim;
        (0..self.cells())
            .map(|c| {
                let mut w = [0.0; 2];
                for (axis, wa) in w.iter_mut().enumerate().take(d) {
                    let p = self.nbr[c][axis].1;
                    *wa = 0.5 * (u[c * d + axis] + u[p * d + axis]);
                }
                w
            })
            .collect()
    }

    fn pressure(&self, rho: &[f64]) -> Vec<f64> {
        rho.iter().map(|r| self.a * r.powf(self.gamma)).collect()
    }

    /// Net outward upwind mass flux per cell divided by `h`.
    fn mass_divergence(&self, rho: &[f64], faces: &[[f64; 2]]) -> Vec<f64> {
        let n = self.cells();
        let mut flux = vec![[0.0; 2]; n];
        for c in 0..n {
            for axis in 0..self.dim {
                let p = self.nbr[c][axis].1;
                flux[c][axis] = upwind(faces[c][axis], rho[c], rho[p]);
            }
        }
        (0..n)
            .map(|c| {
                let mut s = 0.0;
                for axis in 0..self.dim {
                    let m = self.nbr[c][axis].0;
                    s += flux[c][axis] - flux[m][axis];
                }
                s / self.h
            })
            .collect()
    }

    /// Full viscous operator applied to `u` (component-interleaved).
    fn viscous(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let h2 = self.h * self.h;
        let n = self.cells();
        let mut out = vec![0.0; n * d];
        if d == 1 {
            for c in 0..n {
                let (m, p) = self.nbr[c][0];
                out[c] = self.lambda * (u[p] - 2.0 * u[c] + u[m]) / h2;
            }
            return out;
        }
        let div: Vec<f64> = (0..n)
            .map(|c| {
                (0..d)
                    .map(|j| u[self.nbr[c][j].1 * d + j] - u[self.nbr[c][j].0 * d + j])
                    .sum::<f64>()
                    / (2.0 * self.h)
            })
            .collect();
        for c in 0..n {
            for i in 0..d {
                let mut lap = -2.0 * d as f64 * u[c * d + i];
                for j in 0..d {
                    let (m, p) = self.nbr[c][j];
                    lap += u[m * d + i] + u[p * d + i];
                }
                let (m, p) = self.nbr[c][i];
                out[c * d + i] =
                    self.mu * lap / h2 + self.lambda * (div[p] - div[m]) / (2.0 * self.h);
            }
        }
        out
    }

    /// Diagonal of the (negated) viscous operator per component.
    fn viscous_diagonal(&self) -> f64 {
        let h2 = self.h * self.h;
        if self.dim == 1 {
            2.0 * self.lambda / h2
        } else {
            2.0 * self.dim as f64 * self.mu / h2 + self.lambda / (2.0 * h2)
        }
    }

    /// One Jacobi-Picard sweep: returns the new iterate `(rho, u)`.
    fn sweep(&self, inp: &StepInputs<'_>, rho_k: &[f64], u_k: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.cells();
        let d = self.dim;
        let h = self.h;
        let dt = inp.dt;
        let rho_old = inp.old.rho().values();
        let m_old = inp.old.momentum().values();
        let faces = self.face_velocities(u_k);

        let mut rho = vec![0.0; n];
        for c in 0..n {
            let mut num = rho_old[c] / dt + inp.mass_source.map_or(0.0, |s| s[c]);
            let mut den = 1.0 / dt;
            for axis in 0..d {
                let (m, p) = self.nbr[c][axis];
                let wr = faces[c][axis];
                if wr > 0.0 {
                    den += wr / h;
                } else if wr < 0.0 {
                    num -= wr * rho_k[p] / h;
                }
                let wl = faces[m][axis];
                if wl < 0.0 {
                    den -= wl / h;
                } else if wl > 0.0 {
                    num += wl * rho_k[m] / h;
                }
            }
            rho[c] = num / den;
        }

        let p = self.pressure(&rho);
        let visc = self.viscous(u_k);
        let vdiag = self.viscous_diagonal();
        let mut u = vec![0.0; n * d];
        for c in 0..n {
            let mut diag = rho[c] / dt + vdiag;
            let mut inflow = [0.0; 2];
            for axis in 0..d {
                let (m, pp) = self.nbr[c][axis];
                let wr = faces[c][axis];
                if wr > 0.0 {
                    diag += wr * rho[c] / h;
                } else if wr < 0.0 {
                    for i in 0..d {
                        inflow[i] -= wr * rho[pp] * u_k[pp * d + i] / h;
                    }
                }
                let wl = faces[m][axis];
                if wl < 0.0 {
                    diag -= wl * rho[c] / h;
                } else if wl > 0.0 {
                    for i in 0..d {
                        inflow[i] += wl * rho[m] * u_k[m * d + i] / h;
                    }
                }
            }
            for i in 0..d {
                let (m, pp) = self.nbr[c][i];
                let mut rhs = m_old[c * d + i] / dt + inflow[i] - (p[pp] - p[m]) / (2.0 * h);
                rhs += visc[c * d + i] + vdiag * u_k[c * d + i];
                if let Some(g) = inp.forcing {
                    rhs += rho[c] * g.values()[c * d + i];
                }
                if let Some(s) = inp.momentum_source {
                    rhs += s[c * d + i];
                }
                u[c * d + i] = rhs / diag;
            }
        }
        (rho, u)
    }

    /// Flux-form density update `rho_old - dt div Up[rho, w(u)] + dt s`.
    fn conservative_density(&self, inp: &StepInputs<'_>, rho: &[f64], u: &[f64]) -> Vec<f64> {
        let faces = self.face_velocities(u);
        let div = self.mass_divergence(rho, &faces);
        let rho_old = inp.old.rho().values();
        (0..self.cells())
            .map(|c| rho_old[c] - inp.dt * div[c] + inp.dt * inp.mass_source.map_or(0.0, |s| s[c]))
            .collect()
    }

    /// Scaled defects `(dt * continuity, dt / rho * momentum)`, max-norm.
    pub fn residual(&self, inp: &StepInputs<'_>, rho: &[f64], u: &[f64]) -> f64 {
        let n = self.cells();
        let d = self.dim;
        let h = self.h;
        let dt = inp.dt;
        let rho_old = inp.old.rho().values();
        let m_old = inp.old.momentum().values();
        let faces = self.face_velocities(u);
        let mdiv = self.mass_divergence(rho, &faces);
        let p = self.pressure(rho);
        let visc = self.viscous(u);

        // momentum flux divergence per component
        let mut mflux = vec![[[0.0; 2]; 2]; n];
        for c in 0..n {
            for axis in 0..d {
                let pp = self.nbr[c][axis].1;
                let w = faces[c][axis];
                for i in 0..d {
                    mflux[c][axis][i] = upwind(w, rho[c] * u[c * d + i], rho[pp] * u[pp * d + i]);
                }
            }
        }

        let mut worst: f64 = 0.0;
        for c in 0..n {
            let r = rho[c] - rho_old[c] + dt * (mdiv[c] - inp.mass_source.map_or(0.0, |s| s[c]));
            worst = worst.max(r.abs());
            for i in 0..d {
                let mut div = 0.0;
                for axis in 0..d {
                    let m = self.nbr[c][axis].0;
                    div += mflux[c][axis][i] - mflux[m][axis][i];
                }
                div /= h;
                let (m, pp) = self.nbr[c][i];
                let mut defect = (rho[c] * u[c * d + i] - m_old[c * d + i]) / dt
                    + div
                    + (p[pp] - p[m]) / (2.0 * h)
                    - visc[c * d + i];
                if let Some(g) = inp.forcing {
                    defect -= rho[c] * g.values()[c * d + i];
                }
                if let Some(s) = inp.momentum_source {
                    defect -= s[c * d + i];
                }
                worst = worst.max((dt / rho[c] * defect).abs());
            }
        }
        worst
    }

    /// Explicit (forward Euler) evaluation of the same spatial operator.
    fn explicit(&self, inp: &StepInputs<'_>) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let rho_old = inp.old.rho().values();
        let u_old = inp.old.velocity().into_values();
        let rho = self.conservative_density(inp, rho_old, &u_old);
        // momentum defect at the old state with zero time derivative
        let n = self.cells();
        let faces = self.face_velocities(&u_old);
        let p = self.pressure(rho_old);
        let visc = self.viscous(&u_old);
        let m_old = inp.old.momentum().values();
        let mut u = vec![0.0; n * d];
        for c in 0..n {
            for i in 0..d {
                let mut div = 0.0;
                for axis in 0..d {
                    let (m, pp) = self.nbr[c][axis];
                    div += upwind(faces[c][axis], m_old[c * d + i], m_old[pp * d + i])
                        - upwind(faces[m][axis], m_old[m * d + i], m_old[c * d + i]);
                }
                let (m, pp) = self.nbr[c][i];
                let mut rate = -div / self.h - (p[pp] - p[m]) / (2.0 * self.h) + visc[c * d + i];
                if let Some(g) = inp.forcing {
                    rate += rho_old[c] * g.values()[c * d + i];
                }
                if let Some(s) = inp.momentum_source {
                    rate += s[c * d + i];
                }
                u[c * d + i] = (m_old[c * d + i] + inp.dt * rate) / rho[c];
            }
        }
        (rho, u)
    }

    /// Advances one step. Returns the new state and the Picard iteration count.
    pub fn advance(
        &self,
        inp: &StepInputs<'_>,
        cfg: &SchemeConfig,
        t_new: f64,
    ) -> Result<(FluidState, usize)> {
        let (rho, u, iterations) = if cfg.implicit {
            self.solve_implicit(inp, cfg)?
        } else {
            let (rho, u) = self.explicit(inp);
            (rho, u, 1)
        };
        let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::Vacuum {
                min_density: min,
                time: t_new,
            });
        }
        let d = self.dim;
        let m: Vec<f64> = u
            .chunks(d)
            .zip(&rho)
            .flat_map(|(uc, r)| uc.iter().map(move |v| v * r))
            .collect();
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NoConvergence {
                iterations,
                last_update: f64::NAN,
            });
        }
        let state = FluidState::from_parts_unchecked(
            Field::from_raw(self.grid, 1, rho),
            Field::from_raw(self.grid, d, m),
            t_new,
        );
        Ok((state, iterations))
    }

    fn solve_implicit(
        &self,
        inp: &StepInputs<'_>,
        cfg: &SchemeConfig,
    ) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let mut rho = inp.old.rho().values().to_vec();
        let mut u = inp.old.velocity().into_values();
        let mut last_update = f64::INFINITY;
        for iter in 1..=cfg.picard_max_iter {
            let (rho_n, u_n) = self.sweep(inp, &rho, &u);
            let dr = rho_n
                .iter()
                .zip(&rho)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let du = u_n
                .iter()
                .zip(&u)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            last_update = dr.max(du);
            if !last_update.is_finite() || rho_n.iter().any(|r| !(*r > 0.0)) {
                break;
            }
            rho = rho_n;
            u = u_n;
            if last_update <= cfg.picard_tol {
                let rho_c = self.conservative_density(inp, &rho, &u);
                if rho_c.iter().all(|r| *r > 0.0)
                    && self.residual(inp, &rho_c, &u) <= cfg.picard_tol
                {
                    return Ok((rho_c, u, iter));
                }
            }
        }
        Err(Error::NoConvergence {
            iterations: cfg.picard_max_iter,
            last_update,
        })
    }
}

/// Builds the per-step inputs from optional source terms.
pub(crate) fn sample_sources(
    grid: &GridSpec,
    sources: Option<&dyn SourceTerms>,
    t: f64,
) -> (Option<Vec<f64>>, Option<Vec<f64>>) {
    match sources {
        None => (None, None),
        Some(s) => {
            let d = grid.dim();
            let mut mass = vec![0.0; grid.cell_count()];
            let mut mom = vec![0.0; grid.cell_count() * d];
            for c in 0..grid.cell_count() {
                let x = grid.center(c);
                mass[c] = s.mass(t, x);
                s.momentum(t, x, &mut mom[c * d..(c + 1) * d]);
            }
            (Some(mass), Some(mom))
        }
    }
}
