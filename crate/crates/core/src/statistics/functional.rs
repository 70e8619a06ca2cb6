use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::physics::{DataRecord, FourierField};
use crate::random_data::{Ensemble, Member};
use crate::statistics::resolved_weights;
use crate::torus_mesh::{dft, trapezoid, Field, GridSpec, Quantity, Trajectory};

/// Which time level(s) of a trajectory a probe reads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum TimeSelector {
    #[default]
    Final,
    /// Trapezoid average over the stored time levels.
    Average,
    /// The stored level at this time (within `1e-9`).
    Time { t: f64 },
}

impl TimeSelector {
    pub(crate) fn level(&self, traj: &Trajectory) -> Result<usize> {
        match *self {
            TimeSelector::Final | TimeSelector::Average => Ok(traj.len() - 1),
            TimeSelector::Time { t } => traj
                .states()
                .iter()
                .position(|s| (s.time() - t).abs() <= 1e-9)
                .ok_or_else(|| domain(format!("no stored time level at t = {t}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
    Abs,
}

impl Part {
    fn pick(self, re: f64, im: f64) -> f64 {
        match self {
            Part::Re => re,
            Part::Im => im,
            Part::Abs => re.hypot(im),
        }
    }
}

/// Linear or norm-type readout of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum Probe {
    /// Normalised DFT coefficient `f_hat_k` (so `k = 0` is the mean).
    FourierCoefficient {
        quantity: Quantity,
        #[serde(default)]
        component: usize,
        k: [i64; 2],
        part: Part,
        #[serde(default)]
        time: TimeSelector,
    },
    /// `L^2`-in-time `W^{-m,2}` norm.
    NegSobolev { quantity: Quantity, m: u32 },
}

/// Bounded continuous outer function.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Identity,
    Tanh {
        scale: f64,
    },
    Clamp {
        lo: f64,
        hi: f64,
    },
}

impl Shape {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Shape::Identity => x,
            Shape::Tanh { scale } => (x / scale).tanh(),
            Shape::Clamp { lo, hi } => x.clamp(lo, hi),
        }
    }
}

/// `shape(probe(trajectory))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctional {
    pub name: String,
    #[serde(flatten)]
    pub probe: Probe,
    #[serde(default)]
    pub outer: Shape,
}

fn coefficient(field: &Field, component: usize, k: [i64; 2], part: Part) -> Result<f64> {
    if component >= field.components() {
        return Err(domain(format!("component {component} out of range")));
    }
    let spec = dft(field);
    let c = spec.coefficient(component, k).ok_or_else(|| {
        domain(format!(
            "wave vector {k:?} not resolved on {:?}",
            field.grid()
        ))
    })?;
    Ok(part.pick(c.re, c.im))
}

impl TestFunctional {
    pub fn probe_value(&self, traj: &Trajectory) -> Result<f64> {
        match &self.probe {
            Probe::FourierCoefficient {
                quantity,
                component,
                k,
                part,
                time,
            } => match time {
                TimeSelector::Average => {
                    let vals = (0..traj.len())
                        .map(|l| coefficient(&traj.field(*quantity, l), *component, *k, *part))
                        .collect::<Result<Vec<_>>>()?;
                    let times = traj.times();
                    let span = times[times.len() - 1] - times[0];
                    if span > 0.0 {
                        Ok(trapezoid(&times, &vals) / span)
                    } else {
                        Ok(vals[0])
                    }
                }
                sel => coefficient(
                    &traj.field(*quantity, sel.level(traj)?),
                    *component,
                    *k,
                    *part,
                ),
            },
            Probe::NegSobolev { quantity, m } => traj.neg_sobolev_norm(*quantity, *m),
        }
    }

    pub fn evaluate(&self, traj: &Trajectory) -> Result<f64> {
        Ok(self.outer.apply(self.probe_value(traj)?))
    }
}

/// Readout of a data record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "datum", rename_all = "snake_case")]
pub enum DataProbe {
    Mu,
    Eta,
    A,
    Rho0Mean,
    /// Cosine amplitude of `rho0` at wave vector `k`.
    Rho0Cos {
        k: [i32; 2],
    },
    U0Cos {
        component: usize,
        k: [i32; 2],
    },
    /// Spatial mean of the forcing profile, first component.
    ForcingMean,
}

fn cos_amplitude(f: &FourierField, component: usize, k: [i32; 2]) -> f64 {
    f.modes
        .iter()
        .filter(|m| m.k == k)
        .fold(0.0, |s, m| s + m.cos.get(component).copied().unwrap_or(0.0))
}

impl DataProbe {
    pub fn value(&self, d: &DataRecord) -> f64 {
        match *self {
            DataProbe::Mu => d.mu,
            DataProbe::Eta => d.eta,
            DataProbe::A => d.a,
            DataProbe::Rho0Mean => d.rho0.mean[0],
            DataProbe::Rho0Cos { k } => cos_amplitude(&d.rho0, 0, k),
            DataProbe::U0Cos { component, k } => cos_amplitude(&d.u0, component, k),
            DataProbe::ForcingMean => d.forcing.field.mean[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataFunctional {
    pub name: String,
    #[serde(flatten)]
    pub probe: DataProbe,
    #[serde(default)]
    pub outer: Shape,
}

impl DataFunctional {
    pub fn evaluate(&self, d: &DataRecord) -> f64 {
        self.outer.apply(self.probe.value(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalMean {
    pub name: String,
    /// `None` when no member completed.
    pub value: Option<f64>,
    pub resolved_weight: f64,
    pub unresolved_weight: f64,
}

/// Weighted mean of `f` over completed members, renormalised.
pub fn empirical_mean_by(
    ensemble: &Ensemble,
    name: &str,
    f: impl Fn(&Member) -> Result<f64>,
) -> Result<FunctionalMean> {
    let (weights, resolved, unresolved) = resolved_weights(ensemble);
    let value = if weights.is_empty() {
        None
    } else {
        let mut acc = 0.0;
        for (i, w) in weights {
            acc += w * f(&ensemble.members()[i])?;
        }
        Some(acc)
    };
    Ok(FunctionalMean {
        name: name.to_string(),
        value,
        resolved_weight: resolved,
        unresolved_weight: unresolved,
    })
}

/// `sum_n w_n F(traj_n)` over completed members.
pub fn empirical_functional_mean(
    ensemble: &Ensemble,
    functional: &TestFunctional,
) -> Result<FunctionalMean> {
    empirical_mean_by(ensemble, &functional.name, |m| {
        functional.evaluate(&m.report.trajectory)
    })
}

/// `sum_n w_n F(data_n)` over all members (data are always available).
pub fn empirical_data_mean(ensemble: &Ensemble, functional: &DataFunctional) -> FunctionalMean {
    let value = ensemble
        .members()
        .iter()
        .map(|m| m.weight * functional.evaluate(&m.data))
        .sum();
    FunctionalMean {
        name: functional.name.clone(),
        value: Some(value),
        resolved_weight: 1.0,
        unresolved_weight: 0.0,
    }
}

/// Weighted pointwise mean field per stored time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMean {
    pub quantity: Quantity,
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    pub resolved_weight: f64,
    pub unresolved_weight: f64,
}

/// Coarsest grid among the trajectories; all must be nested with it.
pub(crate) fn coarsest_grid<'a>(trajs: impl Iterator<Item = &'a Trajectory>) -> Result<GridSpec> {
    let grids: Vec<GridSpec> = trajs.map(|t| *t.grid()).collect();
    let coarse = *grids
        .iter()
        .min_by_key(|g| g.cells())
        .ok_or(Error::EmptyEnsemble)?;
    if grids.iter().any(|g| !g.is_nested_with(&coarse)) {
        return Err(crate::error::shape("member grids are not nested"));
    }
    Ok(coarse)
}

pub fn empirical_field_mean(ensemble: &Ensemble, quantity: Quantity) -> Result<FieldMean> {
    let (weights, resolved, unresolved) = resolved_weights(ensemble);
    if weights.is_empty() {
        return Err(domain("no completed member to average"));
    }
    let members = ensemble.members();
    let first = &members[weights[0].0].report.trajectory;
    let grid = coarsest_grid(weights.iter().map(|(i, _)| &members[*i].report.trajectory))?;
    for (i, _) in &weights {
        if !members[*i].report.trajectory.same_times(first) {
            return Err(Error::Pairing("members store different time levels".into()));
        }
    }
    let times = first.times();
    let mut fields = Vec::with_capacity(times.len());
    for level in 0..times.len() {
        let mut acc: Option<Field> = None;
        for (i, w) in &weights {
            let f = members[*i]
                .report
                .trajectory
                .field(quantity, level)
                .restrict_or_prolong(&grid)?;
            acc = Some(match acc {
                None => f.scale(*w),
                Some(a) => f.axpy(*w, &a)?,
            });
        }
        fields.push(acc.expect("at least one member"));
    }
    Ok(FieldMean {
        quantity,
        grid,
        times,
        fields,
        resolved_weight: resolved,
        unresolved_weight: unresolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::physics::AdmissibleBounds;
    use crate::random_data::{
        AffineCoef, DistributionSpec, EnsembleMode, ParamTransform, RandomFieldSpec,
    };
    use crate::solver::{SchemeConfig, Status};
    use crate::statistics::tests::synthetic_member;
    use std::sync::Arc;

    fn random_a_spec() -> DistributionSpec {
        DistributionSpec {
            latent_dim: 1,
            dim: 1,
            period: 1.0,
            gamma: 1.4,
            bounds: AdmissibleBounds::new(0.5, 0.05, 0.5, 2.0, 1.0).unwrap(),
            mu: ParamTransform::Constant { value: 0.05 },
            eta: ParamTransform::Constant { value: 0.0 },
            a: ParamTransform::Uniform {
                coord: 0,
                lo: 0.5,
                hi: 2.0,
            },
            rho0: RandomFieldSpec {
                mean: vec![AffineCoef::constant(1.2)],
                modes: vec![crate::random_data::RandomMode {
                    k: [1, 0],
                    cos: vec![AffineCoef::constant(0.3)],
                    sin: vec![AffineCoef::constant(0.0)],
                }],
            },
            u0: RandomFieldSpec::constant(vec![0.0]),
            forcing: None,
        }
    }

    fn mean_density() -> TestFunctional {
        TestFunctional {
            name: "mean_rho".into(),
            probe: Probe::FourierCoefficient {
                quantity: Quantity::Density,
                component: 0,
                k: [0, 0],
                part: Part::Re,
                time: TimeSelector::Final,
            },
            outer: Shape::Clamp { lo: 0.0, hi: 10.0 },
        }
    }

    #[test]
    fn clamp_of_mean_density_is_conserved_mass() {
        let grid = GridSpec::unit(1, 16).unwrap();
        let cfg = SchemeConfig {
            final_time: 0.05,
            ..Default::default()
        };
        let e = Ensemble::weak(&random_a_spec(), 3, 8, &grid, &cfg, Execution::Sequential).unwrap();
        let m = empirical_functional_mean(&e, &mean_density()).unwrap();
        assert!((m.value.unwrap() - 1.2).abs() < 1e-13);
    }

    #[test]
    fn constant_functional_and_linearity() {
        let grid = GridSpec::unit(1, 16).unwrap();
        let cfg = SchemeConfig {
            final_time: 0.02,
            ..Default::default()
        };
        let e = Ensemble::weak(&random_a_spec(), 4, 5, &grid, &cfg, Execution::Sequential).unwrap();
        assert_eq!(
            empirical_mean_by(&e, "one", |_| Ok(1.0)).unwrap().value,
            Some(1.0)
        );
        let f = TestFunctional {
            name: "c1".into(),
            probe: Probe::FourierCoefficient {
                quantity: Quantity::Momentum,
                component: 0,
                k: [1, 0],
                part: Part::Im,
                time: TimeSelector::Average,
            },
            outer: Shape::Tanh { scale: 0.1 },
        };
        let g = TestFunctional {
            name: "neg".into(),
            probe: Probe::NegSobolev {
                quantity: Quantity::Density,
                m: 3,
            },
            outer: Shape::Identity,
        };
        let (alpha, beta) = (0.7, -2.5);
        let combo = empirical_mean_by(&e, "combo", |m| {
            Ok(alpha * f.evaluate(&m.report.trajectory)?
                + beta * g.evaluate(&m.report.trajectory)?)
        })
        .unwrap();
        let sep = alpha * empirical_functional_mean(&e, &f).unwrap().value.unwrap()
            + beta * empirical_functional_mean(&e, &g).unwrap().value.unwrap();
        assert!((combo.value.unwrap() - sep).abs() <= 1e-15 * (1.0 + sep.abs()) * 4.0);
    }

    #[test]
    fn field_means() {
        let grid = GridSpec::unit(1, 8).unwrap();
        let cfg = SchemeConfig {
            final_time: 0.02,
            output_interval: Some(0.01),
            ..Default::default()
        };
        let e = Ensemble::weak(&random_a_spec(), 1, 1, &grid, &cfg, Execution::Sequential).unwrap();
        let fm = empirical_field_mean(&e, Quantity::Density).unwrap();
        assert_eq!(fm.fields.len(), 3);
        assert_eq!(
            &fm.fields[2],
            e.members()[0].report.trajectory.final_state().rho()
        );

        let mut plus = synthetic_member(1.0, Status::Completed, 0.5);
        let mut minus = synthetic_member(1.0, Status::Completed, 0.5);
        let f = Field::from_fn(GridSpec::unit(1, 4).unwrap(), 1, |x, v| {
            v[0] = (6.0 * x[0]).sin()
        });
        let mut r = (*plus.report).clone();
        r.trajectory = Trajectory::new(
            crate::solver::FluidState::new(Field::constant(*f.grid(), &[1.0]), f.clone(), 0.0)
                .unwrap(),
        );
        plus.report = Arc::new(r.clone());
        r.trajectory = Trajectory::new(
            crate::solver::FluidState::new(Field::constant(*f.grid(), &[1.0]), f.scale(-1.0), 0.0)
                .unwrap(),
        );
        minus.report = Arc::new(r);
        let e = Ensemble::new(EnsembleMode::Weak, vec![plus, minus]).unwrap();
        let fm = empirical_field_mean(&e, Quantity::Momentum).unwrap();
        assert!(fm.fields[0].values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unresolved_members_excluded() {
        let members = vec![
            synthetic_member(1.0, Status::Completed, 0.25),
            synthetic_member(1.0, Status::NoConvergence, 0.75),
        ];
        let e = Ensemble::new(EnsembleMode::Strong, members).unwrap();
        let m = empirical_mean_by(&e, "x", |_| Ok(2.0)).unwrap();
        assert_eq!(m.value, Some(2.0));
        assert_eq!(m.unresolved_weight, 0.75);
        assert_eq!(m.resolved_weight, 0.25);
    }

    #[test]
    fn data_functional_reads_parameters() {
        let f = DataFunctional {
            name: "a".into(),
            probe: DataProbe::A,
            outer: Shape::Tanh { scale: 2.0 },
        };
        let d = DataRecord::uniform(1, 1.0, &[0.0], 0.1, 0.0, 1.5, 2.0, 1.0).unwrap();
        assert_eq!(f.evaluate(&d), (0.75f64).tanh());
    }
}
