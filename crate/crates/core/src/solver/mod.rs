//! Implicit upwind finite-volume solver for the barotropic Navier-Stokes
//! system on the periodic torus.

mod manufactured;
mod scheme;
mod state;

pub use manufactured::{
    manufactured_convergence, self_convergence, ErrorRow, ErrorTable, ManufacturedSolution,
};
pub use state::FluidState;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::physics::{energy_unchecked, sound_speed, DataRecord};
use crate::torus_mesh::{Field, GridSpec, Trajectory};
use scheme::{sample_sources, Operator, StepInputs};

/// Mass and momentum source terms added to the right-hand side, evaluated
/// at cell centres at the new time level. Used for manufactured solutions.
pub trait SourceTerms: Sync {
    fn mass(&self, t: f64, x: [f64; 2]) -> f64;
    fn momentum(&self, t: f64, x: [f64; 2], out: &mut [f64]);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub cfl: f64,
    pub final_time: f64,
    /// Fully implicit update solved by Picard iteration. `false` gives the
    /// explicit (forward Euler) variant, useful only for comparison.
    #[serde(alias = "theta_implicit")]
    pub implicit: bool,
    pub linf_ceiling: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Store snapshots only at multiples of this interval (and at the end).
    /// Steps are clipped to land on them, so runs on different grids share
    /// their snapshot times.
    pub output_interval: Option<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            final_time: 0.1,
            implicit: true,
            linf_ceiling: 1e4,
            picard_tol: 1e-10,
            picard_max_iter: 100,
            output_interval: None,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::Config("final_time must be positive".into()));
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iter == 0 {
            return Err(Error::Config(
                "picard_tol must be positive and picard_max_iter >= 1".into(),
            ));
        }
        if !(self.linf_ceiling > 0.0) {
            return Err(Error::Config("linf_ceiling must be positive".into()));
        }
        if let Some(dt) = self.output_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config("output_interval must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    AbortedLinf,
    AbortedVacuum,
    NoConvergence,
}

impl Status {
    pub fn is_completed(self) -> bool {
        self == Status::Completed
    }
}

/// Outcome of one solve. The history vectors have one entry per time
/// level (the initial state included), aligned with `step_times`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    pub step_times: Vec<f64>,
    pub linf_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    pub mass_history: Vec<f64>,
    pub status: Status,
    pub steps: usize,
    pub picard_iterations: usize,
}

/// Compact JSON-friendly summary of a [`SolveReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: Status,
    pub steps: usize,
    pub final_time: f64,
    pub final_energy: f64,
    pub max_linf: f64,
    pub mass_drift: f64,
    pub picard_iterations: usize,
}

impl SolveReport {
    pub fn max_linf(&self) -> f64 {
        self.linf_history.iter().copied().fold(0.0, f64::max)
    }

    /// Largest relative deviation of the mass from its initial value.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass_history[0];
        self.mass_history
            .iter()
            .map(|m| (m - m0).abs() / m0.abs())
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            status: self.status,
            steps: self.steps,
            final_time: *self.step_times.last().unwrap_or(&0.0),
            final_energy: *self.energy_history.last().unwrap_or(&0.0),
            max_linf: self.max_linf(),
            mass_drift: self.mass_drift(),
            picard_iterations: self.picard_iterations,
        }
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }
}

/// Initial state: the data fields sampled at cell centres.
pub fn initial_state(data: &DataRecord, grid: &GridSpec) -> Result<FluidState> {
    if data.dim() != grid.dim() || (data.period() - grid.period()).abs() > 1e-12 * grid.period() {
        return Err(crate::error::shape("data and grid live on different tori"));
    }
    FluidState::from_velocity(data.rho0.sample(grid)?, &data.u0.sample(grid)?, 0.0)
}

/// Stable time step `cfl * min(h / (|u|max + c_max), h^2 rho_min / (2d (2 mu + eta)))`.
pub fn cfl_dt(state: &FluidState, data: &DataRecord, cfl: f64) -> f64 {
    let grid = state.grid();
    let h = grid.spacing();
    let d = grid.dim() as f64;
    let rho = state.rho();
    let umax = state.velocity().magnitudes().fold(0.0, f64::max);
    let cmax = rho
        .values()
        .iter()
        .map(|r| sound_speed(*r, data.a, data.gamma))
        .fold(0.0, f64::max);
    let hyperbolic = h / (umax + cmax);
    let parabolic = h * h * rho.min() / (2.0 * d * (2.0 * data.mu + data.eta));
    cfl * hyperbolic.min(parabolic)
}

fn forcing_at(data: &DataRecord, profile: &Option<Field>, t: f64) -> Option<Field> {
    profile
        .as_ref()
        .map(|g| g.scale(data.forcing.envelope_at(t)))
}

fn forcing_profile(data: &DataRecord, grid: &GridSpec) -> Result<Option<Field>> {
    if data.forcing.is_zero() {
        Ok(None)
    } else {
        Ok(Some(data.forcing.field.sample(grid)?))
    }
}

/// One time step of length `dt` from `state`.
pub fn step(
    state: &FluidState,
    data: &DataRecord,
    dt: f64,
    cfg: &SchemeConfig,
) -> Result<FluidState> {
    step_with_sources(state, data, dt, cfg, None).map(|(s, _)| s)
}

fn step_with_sources(
    state: &FluidState,
    data: &DataRecord,
    dt: f64,
    cfg: &SchemeConfig,
    sources: Option<&dyn SourceTerms>,
) -> Result<(FluidState, usize)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(domain(format!("time step must be positive, got {dt}")));
    }
    let grid = state.grid();
    let op = Operator::new(grid, data);
    let t_new = state.time() + dt;
    let g = forcing_at(data, &forcing_profile(data, grid)?, t_new);
    let (ms, mm) = sample_sources(grid, sources, t_new);
    let inp = StepInputs {
        old: state,
        dt,
        forcing: g.as_ref(),
        mass_source: ms.as_deref(),
        momentum_source: mm.as_deref(),
    };
    op.advance(&inp, cfg, t_new)
}

/// Max-norm defect of the implicit system for the pair `(prev, next)` with
/// `dt = next.time - prev.time`. The continuity defect is multiplied by
/// `dt`, the momentum defect by `dt / rho`, so both are increments.
pub fn scheme_residual(data: &DataRecord, prev: &FluidState, next: &FluidState) -> Result<f64> {
    crate::torus_mesh::require_same_grid(prev.grid(), next.grid())?;
    let dt = next.time() - prev.time();
    if !(dt > 0.0) {
        return Err(domain("states must be in increasing time order"));
    }
    let grid = prev.grid();
    let op = Operator::new(grid, data);
    let g = forcing_at(data, &forcing_profile(data, grid)?, next.time());
    let inp = StepInputs {
        old: prev,
        dt,
        forcing: g.as_ref(),
        mass_source: None,
        momentum_source: None,
    };
    Ok(op.residual(&inp, next.rho().values(), next.velocity().values()))
}

/// Integrates the data from `t = 0` to `cfg.final_time` on `grid`.
pub fn solve(data: &DataRecord, grid: &GridSpec, cfg: &SchemeConfig) -> Result<SolveReport> {
    solve_with_sources(data, grid, cfg, None)
}

pub fn solve_with_sources(
    data: &DataRecord,
    grid: &GridSpec,
    cfg: &SchemeConfig,
    sources: Option<&dyn SourceTerms>,
) -> Result<SolveReport> {
    cfg.validate()?;
    data.check()?;
    let mut state = initial_state(data, grid)?;
    let op = Operator::new(grid, data);
    let profile = forcing_profile(data, grid)?;
    let t_end = cfg.final_time;
    let eps = 1e-12 * t_end;

    let mut report = SolveReport {
        trajectory: Trajectory::new(state.clone()),
        step_times: vec![0.0],
        linf_history: vec![state.linf()],
        energy_history: vec![energy_unchecked(&state, data.a, data.gamma)],
        mass_history: vec![state.mass()],
        status: Status::Completed,
        steps: 0,
        picard_iterations: 0,
    };
    if report.linf_history[0] > cfg.linf_ceiling {
        report.status = Status::AbortedLinf;
        return Ok(report);
    }

    let mut snapshot = 1usize;
    while state.time() < t_end - eps {
        let t = state.time();
        let target = match cfg.output_interval {
            Some(iv) => (snapshot as f64 * iv).min(t_end),
            None => t_end,
        };
        let mut dt = cfl_dt(&state, data, cfg.cfl);
        let mut at_target = false;
        if t + dt >= target - eps {
            dt = target - t;
            at_target = true;
        } else if t + 2.0 * dt > target {
            // split the remainder evenly rather than leave a sliver
            dt = 0.5 * (target - t);
        }
        let t_new = if at_target { target } else { t + dt };
        let g = forcing_at(data, &profile, t_new);
        let (ms, mm) = sample_sources(grid, sources, t_new);
        let inp = StepInputs {
            old: &state,
            dt: t_new - t,
            forcing: g.as_ref(),
            mass_source: ms.as_deref(),
            momentum_source: mm.as_deref(),
        };
        let next = match op.advance(&inp, cfg, t_new) {
            Ok((next, iters)) => {
                report.picard_iterations += iters;
                next
            }
            Err(Error::Vacuum { .. }) => {
                report.status = Status::AbortedVacuum;
                break;
            }
            Err(Error::NoConvergence { .. }) => {
                report.status = Status::NoConvergence;
                break;
            }
            Err(e) => return Err(e),
        };
        report.steps += 1;
        let linf = next.linf();
        report.step_times.push(t_new);
        report.linf_history.push(linf);
        report
            .energy_history
            .push(energy_unchecked(&next, data.a, data.gamma));
        report.mass_history.push(next.mass());
        let aborted = !(linf <= cfg.linf_ceiling);
        if at_target {
            snapshot += 1;
        }
        if cfg.output_interval.is_none() || at_target || aborted {
            report.trajectory.push(next.clone())?;
        }
        state = next;
        if aborted {
            report.status = Status::AbortedLinf;
            break;
        }
    }
    Ok(report)
}

/// Rigorous bound on `sup |g|` over the forcing horizon.
pub fn forcing_bound(data: &DataRecord) -> f64 {
    data.forcing.envelope_bound() * data.forcing.field.sup_bound()
}

/// Energy bound predicted by the discrete Gronwall estimate of the scheme.
///
/// Testing the momentum update with `u` bounds the forcing work by
/// `g_bar * (E + M/2)` at the new level, so
/// `(E_{k+1} + M/2)(1 - dt_k g_bar) <= E_k + M/2` whenever `dt_k g_bar < 1`.
/// Returns the bound at every entry of `step_times`, or `None` once a step
/// violates `dt_k g_bar < 1`.
pub fn gronwall_energy_bound(
    e0: f64,
    mass: f64,
    g_bar: f64,
    step_times: &[f64],
) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(step_times.len());
    let mut bound = Some(e0 + 0.5 * mass);
    out.push(Some(e0));
    for w in step_times.windows(2) {
        let x = (w[1] - w[0]) * g_bar;
        bound = bound.and_then(|b| if x < 1.0 { Some(b / (1.0 - x)) } else { None });
        out.push(bound.map(|b| b - 0.5 * mass));
    }
    out
}

/// Constant `C(T, g_bar)` with `E(t_k) <= C (1 + E(0))` for all steps of
/// length at most `dt_max`.
pub fn gronwall_constant(final_time: f64, g_bar: f64, mass: f64, dt_max: f64) -> Result<f64> {
    let x = g_bar * dt_max;
    if !(x < 1.0) {
        return Err(domain("gronwall bound needs dt_max * g_bar < 1"));
    }
    Ok((0.5 * mass).max(1.0) * (g_bar * final_time / (1.0 - x)).exp())
}
