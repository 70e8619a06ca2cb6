use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::total_energy;
use crate::random_data::{Ensemble, Member};
use crate::solver::{forcing_bound, gronwall_constant};
use crate::statistics::resolved_weights;
use crate::torus_mesh::Quantity;

/// Weighted probability that paired members differ by more than each `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceInProbability {
    pub q: f64,
    pub eps: Vec<f64>,
    pub exceedance: Vec<f64>,
    /// Distance per member pair (`inf` when either solve did not complete).
    pub distances: Vec<f64>,
}

impl ConvergenceInProbability {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps", "exceedance"])?;
        for (e, p) in self.eps.iter().zip(&self.exceedance) {
            w.write_record([format!("{e:e}"), format!("{p:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Space-time `L^q` distance of density plus velocity, on the coarser grid.
pub fn member_distance(a: &Member, b: &Member, q: f64) -> Result<f64> {
    if !a.report.status.is_completed() || !b.report.status.is_completed() {
        return Ok(f64::INFINITY);
    }
    let (ta, tb) = (&a.report.trajectory, &b.report.trajectory);
    Ok(ta.lq_distance(tb, Quantity::Density, q)? + ta.lq_distance(tb, Quantity::Velocity, q)?)
}

/// Members are paired by position and must share latent points and weights.
pub fn convergence_in_probability_diagnostic(
    level_a: &Ensemble,
    level_b: &Ensemble,
    eps_grid: &[f64],
    q: f64,
) -> Result<ConvergenceInProbability> {
    if level_a.len() != level_b.len() {
        return Err(Error::Pairing(format!(
            "{} vs {} members",
            level_a.len(),
            level_b.len()
        )));
    }
    let mut distances = Vec::with_capacity(level_a.len());
    for (a, b) in level_a.members().iter().zip(level_b.members()) {
        if a.latent != b.latent || a.weight != b.weight {
            return Err(Error::Pairing(
                "members are not paired by latent point".into(),
            ));
        }
        distances.push(member_distance(a, b, q)?);
    }
    let exceedance = eps_grid
        .iter()
        .map(|&e| {
            level_a
                .members()
                .iter()
                .zip(&distances)
                .filter(|(_, d)| **d > e)
                .fold(0.0, |s, (m, _)| s + m.weight)
                .min(1.0)
        })
        .collect();
    Ok(ConvergenceInProbability {
        q,
        eps: eps_grid.to_vec(),
        exceedance,
        distances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMomentBound {
    pub times: Vec<f64>,
    /// `sum_n w_n E_n(t)` at each stored time.
    pub mean_energy: Vec<f64>,
    /// `sup_t` of the mean energy.
    pub bound: f64,
    pub attained_at: f64,
    /// `sum_n w_n C_n (1 + E_n(0))` from the discrete Gronwall estimate.
    pub gronwall_bound: Option<f64>,
    pub resolved_weight: f64,
}

/// Supremum over stored times of the expected energy, over completed members.
pub fn energy_moment_bound(ensemble: &Ensemble) -> Result<EnergyMomentBound> {
    let (weights, resolved, _) = resolved_weights(ensemble);
    if weights.is_empty() {
        return Err(crate::error::domain("no completed member"));
    }
    let members = ensemble.members();
    let first = &members[weights[0].0].report.trajectory;
    let times = first.times();
    let mut mean = vec![0.0; times.len()];
    let mut gronwall = Some(0.0);
    for (i, w) in &weights {
        let m = &members[*i];
        let traj = &m.report.trajectory;
        if !traj.same_times(first) {
            return Err(Error::Pairing("members store different time levels".into()));
        }
        for (acc, s) in mean.iter_mut().zip(traj.states()) {
            *acc += w * total_energy(s, m.data.a, m.data.gamma)?;
        }
        let st = &m.report.step_times;
        let dt_max = st.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
        let mass = m.report.mass_history[0];
        let e0 = m.report.energy_history[0];
        let c = gronwall_constant(
            *st.last().unwrap_or(&0.0),
            forcing_bound(&m.data),
            mass,
            dt_max,
        )
        .ok();
        gronwall = gronwall.zip(c).map(|(g, c)| g + w * c * (1.0 + e0));
    }
    let (k, bound) = mean
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bk, bv), (k, v)| {
            if *v > bv {
                (k, *v)
            } else {
                (bk, bv)
            }
        });
    Ok(EnergyMomentBound {
        attained_at: times[k],
        times,
        mean_energy: mean,
        bound,
        gronwall_bound: gronwall,
        resolved_weight: resolved,
    })
}
