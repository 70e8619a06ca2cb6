//! Manufactured-solution and self-convergence studies.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::physics::{DataRecord, Forcing, FourierField, FourierMode};
use crate::solver::{solve, solve_with_sources, SchemeConfig, SolveReport, SourceTerms, Status};
use crate::torus_mesh::{trapezoid, GridSpec, Quantity, Trajectory};

/// The 1-D family `rho = 1 + A sin(2 pi (x - t))`, `u = B cos(2 pi x)` on the
/// unit circle. The pair does not satisfy continuity by itself, so both a
/// mass and a momentum source are supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSolution {
    pub rho_amplitude: f64,
    pub u_amplitude: f64,
    pub mu: f64,
    pub eta: f64,
    pub a: f64,
    pub gamma: f64,
}

impl Default for ManufacturedSolution {
    fn default() -> Self {
        Self {
            rho_amplitude: 0.1,
            u_amplitude: 0.1,
            mu: 0.01,
            eta: 0.0,
            a: 1.0,
            gamma: 1.4,
        }
    }
}

impl ManufacturedSolution {
    pub fn density(&self, t: f64, x: f64) -> f64 {
        1.0 + self.rho_amplitude * (2.0 * PI * (x - t)).sin()
    }

    pub fn velocity(&self, x: f64) -> f64 {
        self.u_amplitude * (2.0 * PI * x).cos()
    }

    pub fn data(&self) -> Result<DataRecord> {
        DataRecord::new(
            FourierField {
                dim: 1,
                period: 1.0,
                mean: vec![1.0],
                modes: vec![FourierMode {
                    k: [1, 0],
                    cos: vec![0.0],
                    sin: vec![self.rho_amplitude],
                }],
            },
            FourierField {
                dim: 1,
                period: 1.0,
                mean: vec![0.0],
                modes: vec![FourierMode {
                    k: [1, 0],
                    cos: vec![self.u_amplitude],
                    sin: vec![0.0],
                }],
            },
            self.mu,
            self.eta,
            self.a,
            self.gamma,
            Forcing::zero(1, 1.0, 1.0),
        )
    }

    fn derivatives(&self, t: f64, x: f64) -> [f64; 6] {
        let (s, c) = (2.0 * PI * (x - t)).sin_cos();
        let (sx, cx) = (2.0 * PI * x).sin_cos();
        let rho = 1.0 + self.rho_amplitude * s;
        let rho_x = 2.0 * PI * self.rho_amplitude * c;
        let rho_t = -rho_x;
        let u = self.u_amplitude * cx;
        let u_x = -2.0 * PI * self.u_amplitude * sx;
        let u_xx = -4.0 * PI * PI * self.u_amplitude * cx;
        [rho, rho_t, rho_x, u, u_x, u_xx]
    }
}

impl SourceTerms for ManufacturedSolution {
    fn mass(&self, t: f64, x: [f64; 2]) -> f64 {
        let [rho, rho_t, rho_x, u, u_x, ..] = self.derivatives(t, x[0]);
        rho_t + rho_x * u + rho * u_x
    }

    fn momentum(&self, t: f64, x: [f64; 2], out: &mut [f64]) {
        let [rho, rho_t, rho_x, u, u_x, u_xx] = self.derivatives(t, x[0]);
        let dp = self.a * self.gamma * rho.powf(self.gamma - 1.0);
        let nu = self.mu + self.eta;
        out[0] = rho_t * u + rho_x * u * u + 2.0 * rho * u * u_x + dp * rho_x - nu * u_xx;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub cells: usize,
    pub h: f64,
    pub error: f64,
    /// `log2(e_{h} / e_{h/2})` against the previous (coarser) row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn from_errors(grids: &[GridSpec], errors: &[f64]) -> Self {
        let mut rows: Vec<ErrorRow> = Vec::with_capacity(errors.len());
        for (g, &e) in grids.iter().zip(errors) {
            let order = rows.last().map(|prev| {
                if prev.error == 0.0 && e == 0.0 {
                    0.0
                } else {
                    (prev.error / e).log2() / (prev.h / g.spacing()).log2()
                }
            });
            rows.push(ErrorRow {
                cells: g.cells(),
                h: g.spacing(),
                error: e,
                order,
            });
        }
        Self { rows }
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cells", "h", "error", "order"])?;
        for r in &self.rows {
            w.write_record([
                r.cells.to_string(),
                format!("{:e}", r.h),
                format!("{:e}", r.error),
                r.order.map(|o| format!("{o}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn require_completed(rep: &SolveReport, cells: usize) -> Result<()> {
    if rep.status != Status::Completed {
        return Err(domain(format!(
            "solve on {cells} cells ended with {:?}",
            rep.status
        )));
    }
    Ok(())
}

/// `int_0^T int |rho_h - rho| + |u_h - u| dx dt` against the exact solution
/// at cell centres.
pub fn manufactured_error(mms: &ManufacturedSolution, traj: &Trajectory) -> f64 {
    let grid = traj.grid();
    let vol = grid.cell_volume();
    let per_level: Vec<f64> = traj
        .states()
        .iter()
        .map(|s| {
            let t = s.time();
            let u = s.velocity();
            let mut e = 0.0;
            for c in 0..grid.cell_count() {
                let x = grid.center(c)[0];
                e += (s.rho().values()[c] - mms.density(t, x)).abs()
                    + (u.values()[c] - mms.velocity(x)).abs();
            }
            e * vol
        })
        .collect();
    trapezoid(&traj.times(), &per_level)
}

/// Solves the manufactured problem on each grid and tabulates the
/// space-time `L^1` error of `rho` plus `u`.
pub fn manufactured_convergence(
    mms: &ManufacturedSolution,
    cells: &[usize],
    cfg: &SchemeConfig,
) -> Result<ErrorTable> {
    let data = mms.data()?;
    let cfg = SchemeConfig {
        output_interval: None,
        ..cfg.clone()
    };
    let mut grids = Vec::new();
    let mut errors = Vec::new();
    for &n in cells {
        let grid = GridSpec::unit(1, n)?;
        let rep = solve_with_sources(&data, &grid, &cfg, Some(mms))?;
        require_completed(&rep, n)?;
        errors.push(manufactured_error(mms, &rep.trajectory));
        grids.push(grid);
    }
    Ok(ErrorTable::from_errors(&grids, &errors))
}

/// Space-time `L^1` distance of density plus velocity after restriction
/// to the coarser grid.
pub fn trajectory_l1_error(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    Ok(a.lq_distance(b, Quantity::Density, 1.0)? + a.lq_distance(b, Quantity::Velocity, 1.0)?)
}

/// Self-convergence study: errors on `cells` against a reference solve on
/// `reference_cells`. Snapshots default to ten equal intervals.
pub fn self_convergence(
    data: &DataRecord,
    dim: usize,
    cells: &[usize],
    reference_cells: usize,
    cfg: &SchemeConfig,
) -> Result<ErrorTable> {
    let mut cfg = cfg.clone();
    cfg.output_interval.get_or_insert(cfg.final_time / 10.0);
    let period = data.period();
    let reference_grid = GridSpec::new(dim, reference_cells, period)?;
    let reference = solve(data, &reference_grid, &cfg)?;
    require_completed(&reference, reference_cells)?;
    let mut grids = Vec::new();
    let mut errors = Vec::new();
    for &n in cells {
        let grid = GridSpec::new(dim, n, period)?;
        let rep = solve(data, &grid, &cfg)?;
        require_completed(&rep, n)?;
        errors.push(trajectory_l1_error(&rep.trajectory, &reference.trajectory)?);
        grids.push(grid);
    }
    Ok(ErrorTable::from_errors(&grids, &errors))
}
