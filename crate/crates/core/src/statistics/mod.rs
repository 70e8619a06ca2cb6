//! Ensemble statistics: boundedness in probability, empirical means of
//! test functionals and fields, r-barycenters, a Cauchy-in-probability
//! diagnostic and the expected-energy bound.
//!
//! Members whose solve did not complete enter boundedness reports but are
//! left out of means and barycenters; their weight is reported as
//! `unresolved` and the remaining weights are renormalised.

mod barycenter;
mod diagnostics;
mod functional;

pub use barycenter::{
    barycenter_objective, barycenter_of_fields, r_barycenter, BarycenterOptions, BarycenterResult,
};
pub use diagnostics::{
    convergence_in_probability_diagnostic, energy_moment_bound, member_distance,
    ConvergenceInProbability, EnergyMomentBound,
};
pub use functional::{
    empirical_data_mean, empirical_field_mean, empirical_functional_mean, empirical_mean_by,
    DataFunctional, DataProbe, FieldMean, FunctionalMean, Part, Probe, Shape, TestFunctional,
    TimeSelector,
};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::random_data::{Ensemble, EnsembleMode, Member};
use crate::solver::Status;

/// Probability that `max_t |(rho, u)|_inf` exceeds each threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub mode: EnsembleMode,
    pub thresholds: Vec<f64>,
    pub exceedance: Vec<f64>,
}

impl BoundednessReport {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["threshold", "exceedance"])?;
        for (m, p) in self.thresholds.iter().zip(&self.exceedance) {
            w.write_record([format!("{m:e}"), format!("{p:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest recorded `L^inf` norm of a member; a solve stopped by the
/// ceiling counts as unbounded.
pub fn member_linf(member: &Member) -> f64 {
    if member.report.status == Status::AbortedLinf {
        f64::INFINITY
    } else {
        member.report.max_linf()
    }
}

/// Weak mode: `#{n : max linf_n > M} / N`. Strong mode: sum of the weights
/// of exceeding members.
pub fn boundedness_in_probability(
    ensemble: &Ensemble,
    thresholds: &[f64],
) -> Result<BoundednessReport> {
    if ensemble.is_empty() {
        return Err(crate::Error::EmptyEnsemble);
    }
    if thresholds.iter().any(|m| m.is_nan()) {
        return Err(domain("threshold is NaN"));
    }
    let maxima: Vec<f64> = ensemble.members().iter().map(member_linf).collect();
    let exceedance = thresholds
        .iter()
        .map(|&m| match ensemble.mode() {
            EnsembleMode::Weak => {
                maxima.iter().filter(|x| **x > m).count() as f64 / maxima.len() as f64
            }
            EnsembleMode::Strong => ensemble
                .members()
                .iter()
                .zip(&maxima)
                .filter(|(_, x)| **x > m)
                .fold(0.0, |s, (mem, _)| s + mem.weight)
                .min(1.0),
        })
        .collect();
    Ok(BoundednessReport {
        mode: ensemble.mode(),
        thresholds: thresholds.to_vec(),
        exceedance,
    })
}

/// Weights of completed members renormalised to one, together with the
/// total weight of members left out.
pub(crate) fn resolved_weights(ensemble: &Ensemble) -> (Vec<(usize, f64)>, f64, f64) {
    let resolved: Vec<(usize, f64)> = ensemble
        .members()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.report.status.is_completed())
        .map(|(i, m)| (i, m.weight))
        .collect();
    let mass: f64 = resolved.iter().map(|(_, w)| w).sum();
    let unresolved = ensemble.unresolved_weight();
    (
        resolved.into_iter().map(|(i, w)| (i, w / mass)).collect(),
        mass,
        unresolved,
    )
}
