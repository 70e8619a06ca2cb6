//! The data record `[rho0, u0, mu, eta, a, g]` and the admissible set.
//!
//! Initial fields and the forcing are band-limited real Fourier series, so a
//! single record can be sampled on any grid of a refinement ladder.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Result};
use crate::torus_mesh::{Field, GridSpec};

/// Sobolev order of the data-space surrogate norm (the data class needs `k >= 5`).
pub const DEFAULT_SOBOLEV_ORDER: u32 = 5;

/// One real Fourier mode `cos * cos(2 pi k.x / L) + sin * sin(2 pi k.x / L)`,
/// amplitudes given per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: [i32; 2],
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

/// Band-limited real field `mean + sum of modes` on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierField {
    pub dim: usize,
    pub period: f64,
    pub mean: Vec<f64>,
    #[serde(default)]
    pub modes: Vec<FourierMode>,
}

impl FourierField {
    pub fn constant(dim: usize, period: f64, mean: Vec<f64>) -> Self {
        Self {
            dim,
            period,
            mean,
            modes: Vec::new(),
        }
    }

    pub fn components(&self) -> usize {
        self.mean.len()
    }

    pub fn check(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(domain(format!(
                "field dimension must be 1 or 2, got {}",
                self.dim
            )));
        }
        if !(self.period > 0.0) {
            return Err(domain("field period must be positive"));
        }
        let nc = self.components();
        if nc == 0 {
            return Err(shape("field needs at least one component"));
        }
        for m in &self.modes {
            if m.cos.len() != nc || m.sin.len() != nc {
                return Err(shape(format!("mode {:?} has wrong component count", m.k)));
            }
            if self.dim == 1 && m.k[1] != 0 {
                return Err(shape(format!("1-D field with 2-D wave vector {:?}", m.k)));
            }
        }
        let all = self
            .mean
            .iter()
            .chain(self.modes.iter().flat_map(|m| m.cos.iter().chain(&m.sin)));
        if all.clone().any(|v| !v.is_finite()) {
            return Err(domain("non-finite Fourier coefficient"));
        }
        Ok(())
    }

    fn phase(&self, k: [i32; 2], x: [f64; 2]) -> f64 {
        2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1]) / self.period
    }

    /// Evaluates every component at `x`, writing into `out`.
    pub fn eval_into(&self, x: [f64; 2], out: &mut [f64]) {
        out.copy_from_slice(&self.mean);
        for m in &self.modes {
            let (s, c) = self.phase(m.k, x).sin_cos();
            for (i, o) in out.iter_mut().enumerate() {
                *o += m.cos[i] * c + m.sin[i] * s;
            }
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.components()];
        self.eval_into(x, &mut out);
        out
    }

    /// Point values at the cell centres of `grid`.
    pub fn sample(&self, grid: &GridSpec) -> Result<Field> {
        if grid.dim() != self.dim || grid.period() != self.period {
            return Err(shape(format!(
                "field on T^{} (L={}) sampled on {:?}",
                self.dim, self.period, grid
            )));
        }
        Ok(Field::from_fn(*grid, self.components(), |x, v| {
            self.eval_into(x, v)
        }))
    }

    fn max_wavenumber(&self) -> usize {
        self.modes
            .iter()
            .map(|m| m.k[0].unsigned_abs().max(m.k[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Evaluates `f` over a dense node lattice `i L / n` fine enough to
    /// resolve every mode, returning the extreme of `f` according to `pick`.
    fn dense_extreme(
        &self,
        f: impl Fn(&[f64]) -> f64,
        pick: fn(f64, f64) -> f64,
        init: f64,
    ) -> f64 {
        let n = 32.max(8 * (self.max_wavenumber() + 1));
        let ny = if self.dim == 2 { n } else { 1 };
        let mut buf = vec![0.0; self.components()];
        let mut acc = init;
        for iy in 0..ny {
            for ix in 0..n {
                let x = [
                    ix as f64 * self.period / n as f64,
                    iy as f64 * self.period / n as f64,
                ];
                self.eval_into(x, &mut buf);
                acc = pick(acc, f(&buf));
            }
        }
        acc
    }

    /// Infimum of the first component over a dense node lattice.
    pub fn dense_min(&self) -> f64 {
        self.dense_extreme(|v| v[0], f64::min, f64::INFINITY)
    }

    /// Supremum of the pointwise Euclidean magnitude over a dense node lattice.
    pub fn dense_sup_magnitude(&self) -> f64 {
        self.dense_extreme(
            |v| v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            f64::max,
            0.0,
        )
    }

    /// Rigorous lower bound of the first component: `mean - sum sqrt(a^2 + b^2)`.
    pub fn lower_bound(&self) -> f64 {
        self.mean[0]
            - self
                .modes
                .iter()
                .map(|m| m.cos[0].hypot(m.sin[0]))
                .sum::<f64>()
    }

    /// Rigorous upper bound of the pointwise magnitude.
    pub fn sup_bound(&self) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        norm(&self.mean).sqrt()
            + self
                .modes
                .iter()
                .map(|m| (norm(&m.cos) + norm(&m.sin)).sqrt())
                .sum::<f64>()
    }

    /// Coefficients keyed by canonical wave vector (`k` and `-k` merged).
    fn canonical(&self) -> BTreeMap<[i32; 2], (Vec<f64>, Vec<f64>)> {
        let nc = self.components();
        let mut out: BTreeMap<[i32; 2], (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        out.insert([0, 0], (self.mean.clone(), vec![0.0; nc]));
        for m in &self.modes {
            let flip = m.k[0] < 0 || (m.k[0] == 0 && m.k[1] < 0);
            let key = if flip { [-m.k[0], -m.k[1]] } else { m.k };
            let e = out
                .entry(key)
                .or_insert_with(|| (vec![0.0; nc], vec![0.0; nc]));
            for i in 0..nc {
                e.0[i] += m.cos[i];
                // sin(-theta) = -sin(theta); the zero mode has no sine part
                if key != [0, 0] {
                    e.1[i] += if flip { -m.sin[i] } else { m.sin[i] };
                }
            }
        }
        out
    }

    /// `(L^2 norm, H^s norm)` of `self - other` computed from coefficients.
    pub fn difference_norms(&self, other: &FourierField, s: u32) -> Result<(f64, f64)> {
        if self.dim != other.dim
            || self.period != other.period
            || self.components() != other.components()
        {
            return Err(shape("comparing Fourier fields of different shape"));
        }
        let a = self.canonical();
        let mut b = other.canonical();
        let vol = self.period.powi(self.dim as i32);
        let scale = 2.0 * PI / self.period;
        let mut l2 = 0.0;
        let mut hs = 0.0;
        let mut add =
            |k: [i32; 2], cos: &[f64], sin: &[f64], other: Option<&(Vec<f64>, Vec<f64>)>| {
                let mut e = 0.0;
                for i in 0..cos.len() {
                    let (oc, os) = other.map(|o| (o.0[i], o.1[i])).unwrap_or((0.0, 0.0));
                    let dc = cos[i] - oc;
                    let ds = sin[i] - os;
                    e += if k == [0, 0] {
                        dc * dc
                    } else {
                        0.5 * (dc * dc + ds * ds)
                    };
                }
                let k2 = ((k[0] as f64).powi(2) + (k[1] as f64).powi(2)) * scale * scale;
                l2 += vol * e;
                hs += vol * e * (1.0 + k2).powi(s as i32);
            };
        for (k, (c, sn)) in &a {
            add(*k, c, sn, b.get(k));
            b.remove(k);
        }
        for (k, (c, sn)) in &b {
            add(*k, c, sn, None);
        }
        Ok((l2.sqrt(), hs.sqrt()))
    }
}

/// Forcing `g(t, x) = envelope(t) * G(x)` (force per unit mass) with a
/// polynomial envelope, admissible on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    pub field: FourierField,
    /// Polynomial coefficients `c_0 + c_1 t + ...`.
    pub envelope: Vec<f64>,
    pub horizon: f64,
}

impl Forcing {
    pub fn zero(dim: usize, period: f64, horizon: f64) -> Self {
        Self {
            field: FourierField::constant(dim, period, vec![0.0; dim]),
            envelope: vec![1.0],
            horizon,
        }
    }

    pub fn envelope_at(&self, t: f64) -> f64 {
        self.envelope.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn is_zero(&self) -> bool {
        self.envelope.iter().all(|c| *c == 0.0)
            || (self.field.mean.iter().all(|v| *v == 0.0)
                && self
                    .field
                    .modes
                    .iter()
                    .all(|m| m.cos.iter().chain(&m.sin).all(|v| *v == 0.0)))
    }

    /// Max of `|envelope|` over `[0, horizon]` on a dense node set.
    pub fn envelope_sup(&self) -> f64 {
        const NODES: usize = 256;
        (0..=NODES)
            .map(|i| {
                self.envelope_at(self.horizon * i as f64 / NODES as f64)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Rigorous bound of `|envelope|` on `[0, horizon]`.
    pub fn envelope_bound(&self) -> f64 {
        self.envelope
            .iter()
            .enumerate()
            .map(|(j, c)| c.abs() * self.horizon.powi(j as i32))
            .sum()
    }

    /// `sup |g|` over `[0, horizon] x T^d`.
    pub fn sup_norm(&self) -> f64 {
        self.envelope_sup() * self.field.dense_sup_magnitude()
    }

    /// Values at cell centres at time `t`.
    pub fn sample(&self, grid: &GridSpec, t: f64) -> Result<Field> {
        Ok(self.field.sample(grid)?.scale(self.envelope_at(t)))
    }

    /// Spatial profile evaluated at time `t` as a Fourier field.
    pub fn at_time(&self, t: f64) -> FourierField {
        let e = self.envelope_at(t);
        let mut f = self.field.clone();
        f.mean.iter_mut().for_each(|v| *v *= e);
        for m in &mut f.modes {
            m.cos
                .iter_mut()
                .chain(m.sin.iter_mut())
                .for_each(|v| *v *= e);
        }
        f
    }
}

/// One point of the data space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRecord {
    pub rho0: FourierField,
    pub u0: FourierField,
    pub mu: f64,
    pub eta: f64,
    pub a: f64,
    pub gamma: f64,
    pub forcing: Forcing,
}

impl DataRecord {
    /// Builds a record, checking shapes and the structural invariants
    /// (`inf rho0 > 0`, `mu > 0`, `eta >= 0`, `a > 0`, `gamma > 1`).
    pub fn new(
        rho0: FourierField,
        u0: FourierField,
        mu: f64,
        eta: f64,
        a: f64,
        gamma: f64,
        forcing: Forcing,
    ) -> Result<Self> {
        let rec = Self {
            rho0,
            u0,
            mu,
            eta,
            a,
            gamma,
            forcing,
        };
        rec.check()?;
        Ok(rec)
    }

    pub fn check(&self) -> Result<()> {
        self.rho0.check()?;
        self.u0.check()?;
        self.forcing.field.check()?;
        let d = self.rho0.dim;
        if self.rho0.components() != 1 {
            return Err(shape("rho0 must be scalar"));
        }
        for (name, f) in [("u0", &self.u0), ("forcing", &self.forcing.field)] {
            if f.dim != d || f.period != self.rho0.period || f.components() != d {
                return Err(shape(format!(
                    "{name} must be a {d}-component field on the same torus as rho0"
                )));
            }
        }
        if !(self.forcing.horizon > 0.0) || self.forcing.envelope.iter().any(|c| !c.is_finite()) {
            return Err(domain(
                "forcing envelope must be finite with positive horizon",
            ));
        }
        if !(self.rho0_inf() > 0.0) {
            return Err(domain(format!(
                "inf rho0 = {} must be positive",
                self.rho0_inf()
            )));
        }
        if !(self.mu > 0.0) || !(self.eta >= 0.0) || !(self.a > 0.0) || !(self.gamma > 1.0) {
            return Err(domain(format!(
                "need mu > 0, eta >= 0, a > 0, gamma > 1; got mu={}, eta={}, a={}, gamma={}",
                self.mu, self.eta, self.a, self.gamma
            )));
        }
        if ![self.mu, self.eta, self.a, self.gamma]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(domain("non-finite scalar datum"));
        }
        Ok(())
    }

    /// Constant state `rho = rho_bar, u = u_bar`, no forcing.
    pub fn uniform(
        dim: usize,
        rho_bar: f64,
        u_bar: &[f64],
        mu: f64,
        eta: f64,
        a: f64,
        gamma: f64,
        horizon: f64,
    ) -> Result<Self> {
        Self::new(
            FourierField::constant(dim, 1.0, vec![rho_bar]),
            FourierField::constant(dim, 1.0, u_bar.to_vec()),
            mu,
            eta,
            a,
            gamma,
            Forcing::zero(dim, 1.0, horizon),
        )
    }

    pub fn dim(&self) -> usize {
        self.rho0.dim
    }

    pub fn period(&self) -> f64 {
        self.rho0.period
    }

    pub fn rho0_inf(&self) -> f64 {
        self.rho0.dense_min()
    }

    pub fn g_sup(&self) -> f64 {
        self.forcing.sup_norm()
    }
}

/// Deterministic constants of the admissible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleBounds {
    pub rho_lower: f64,
    pub mu_lower: f64,
    pub a_lower: f64,
    pub a_upper: f64,
    pub g_sup: f64,
}

impl AdmissibleBounds {
    pub fn new(
        rho_lower: f64,
        mu_lower: f64,
        a_lower: f64,
        a_upper: f64,
        g_sup: f64,
    ) -> Result<Self> {
        let b = Self {
            rho_lower,
            mu_lower,
            a_lower,
            a_upper,
            g_sup,
        };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.rho_lower > 0.0
            && self.mu_lower > 0.0
            && self.a_lower > 0.0
            && self.a_lower <= self.a_upper
            && self.g_sup > 0.0
            && self.a_upper.is_finite()
            && self.g_sup.is_finite();
        if !ok {
            return Err(domain(format!("invalid admissible bounds {self:?}")));
        }
        Ok(())
    }
}

/// The first admissibility constraint a record violates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "constraint")]
pub enum Constraint {
    Density { inf_rho0: f64, bound: f64 },
    ShearViscosity { mu: f64, bound: f64 },
    BulkViscosity { eta: f64 },
    PressureCoefficient { a: f64, lower: f64, upper: f64 },
    Forcing { sup_g: f64, bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Admissible,
    Rejected(Constraint),
}

impl Verdict {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Verdict::Admissible)
    }
}

/// Membership in the closed admissible set; all inequalities are non-strict.
pub fn validate_admissible(data: &DataRecord, bounds: &AdmissibleBounds) -> Verdict {
    let inf_rho0 = data.rho0_inf();
    if !(inf_rho0 >= bounds.rho_lower) {
        return Verdict::Rejected(Constraint::Density {
            inf_rho0,
            bound: bounds.rho_lower,
        });
    }
    if !(data.mu >= bounds.mu_lower) {
        return Verdict::Rejected(Constraint::ShearViscosity {
            mu: data.mu,
            bound: bounds.mu_lower,
        });
    }
    if !(data.eta >= 0.0) {
        return Verdict::Rejected(Constraint::BulkViscosity { eta: data.eta });
    }
    if !(bounds.a_lower <= data.a && data.a <= bounds.a_upper) {
        return Verdict::Rejected(Constraint::PressureCoefficient {
            a: data.a,
            lower: bounds.a_lower,
            upper: bounds.a_upper,
        });
    }
    let sup_g = data.g_sup();
    if !(sup_g <= bounds.g_sup) {
        return Verdict::Rejected(Constraint::Forcing {
            sup_g,
            bound: bounds.g_sup,
        });
    }
    Verdict::Admissible
}

/// Surrogate data-space distance: absolute differences of `mu, eta, a` plus,
/// for each of `rho0`, `u0` and `g`, the `L^2` and `H^s` norms of the
/// difference (for `g`, the max over a time node set of `[0, horizon]`).
pub fn data_distance(x: &DataRecord, y: &DataRecord, s: u32) -> Result<f64> {
    let mut d = (x.mu - y.mu).abs() + (x.eta - y.eta).abs() + (x.a - y.a).abs();
    for (f, g) in [(&x.rho0, &y.rho0), (&x.u0, &y.u0)] {
        let (l2, hs) = f.difference_norms(g, s)?;
        d += l2 + hs;
    }
    if x.forcing != y.forcing {
        const NODES: usize = 16;
        let horizon = x.forcing.horizon.max(y.forcing.horizon);
        let mut worst: f64 = 0.0;
        for i in 0..=NODES {
            let t = horizon * i as f64 / NODES as f64;
            let (l2, hs) = x
                .forcing
                .at_time(t)
                .difference_norms(&y.forcing.at_time(t), s)?;
            worst = worst.max(l2 + hs);
        }
        d += worst;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bounds() -> AdmissibleBounds {
        AdmissibleBounds::new(0.5, 0.01, 1.0, 2.0, 1.0).unwrap()
    }

    fn record(rho_mean: f64, amp: f64, mu: f64, eta: f64, a: f64, g_amp: f64) -> DataRecord {
        let rho0 = FourierField {
            dim: 1,
            period: 1.0,
            mean: vec![rho_mean],
            modes: vec![FourierMode {
                k: [1, 0],
                cos: vec![0.0],
                sin: vec![amp],
            }],
        };
        let g = FourierField {
            dim: 1,
            period: 1.0,
            mean: vec![0.0],
            modes: vec![FourierMode {
                k: [2, 0],
                cos: vec![g_amp],
                sin: vec![0.0],
            }],
        };
        DataRecord::new(
            rho0,
            FourierField::constant(1, 1.0, vec![0.0]),
            mu,
            eta,
            a,
            1.4,
            Forcing {
                field: g,
                envelope: vec![1.0],
                horizon: 0.5,
            },
        )
        .unwrap()
    }

    #[test]
    fn rejects_low_density() {
        let v = validate_admissible(&record(0.25, 0.0, 0.02, 0.0, 1.5, 0.5), &bounds());
        assert!(matches!(v, Verdict::Rejected(Constraint::Density { .. })));
    }

    #[test]
    fn accepts_exactly_on_bounds() {
        // sin has its minimum -1 on the node lattice, so inf rho0 = 0.75 - 0.25 = 0.5
        let on = record(0.75, 0.25, 0.01, 0.0, 1.0, 1.0);
        assert_eq!(on.rho0_inf(), 0.5);
        assert_eq!(validate_admissible(&on, &bounds()), Verdict::Admissible);
        let top = record(0.5, 0.0, 0.01, 0.0, 2.0, 1.0);
        assert!(validate_admissible(&top, &bounds()).is_admissible());
    }

    #[test]
    fn zero_bulk_viscosity_allowed() {
        assert!(
            validate_admissible(&record(1.0, 0.1, 0.02, 0.0, 1.5, 0.0), &bounds()).is_admissible()
        );
    }

    #[test]
    fn reports_first_violation() {
        let r = record(1.0, 0.0, 0.001, 0.0, 3.0, 2.0);
        assert!(matches!(
            validate_admissible(&r, &bounds()),
            Verdict::Rejected(Constraint::ShearViscosity { .. })
        ));
        let r = record(1.0, 0.0, 0.1, 0.0, 1.0, 2.0);
        assert!(matches!(
            validate_admissible(&r, &bounds()),
            Verdict::Rejected(Constraint::Forcing { .. })
        ));
    }

    #[test]
    fn record_invariants() {
        assert!(DataRecord::uniform(1, 1.0, &[0.0], 0.0, 0.0, 1.0, 2.0, 1.0).is_err());
        assert!(DataRecord::uniform(1, 1.0, &[0.0], 0.1, -0.1, 1.0, 2.0, 1.0).is_err());
        assert!(DataRecord::uniform(1, 1.0, &[0.0], 0.1, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(DataRecord::uniform(1, -1.0, &[0.0], 0.1, 0.0, 1.0, 2.0, 1.0).is_err());
        assert!(DataRecord::uniform(2, 1.0, &[0.0], 0.1, 0.0, 1.0, 2.0, 1.0).is_err());
        assert!(DataRecord::uniform(2, 1.0, &[0.0, 1.0], 0.1, 0.0, 1.0, 2.0, 1.0).is_ok());
    }

    #[test]
    fn distance_of_shifted_mode() {
        let x = record(1.0, 0.1, 0.02, 0.0, 1.5, 0.0);
        let y = record(1.0, 0.2, 0.03, 0.0, 1.5, 0.0);
        // |d mu| + L2 of 0.1 sin(2 pi x) + H^0 of the same
        let l2 = 0.1 / 2f64.sqrt();
        assert!((data_distance(&x, &y, 0).unwrap() - (0.01 + 2.0 * l2)).abs() < 1e-14);
        assert_eq!(data_distance(&x, &x, 5).unwrap(), 0.0);
    }

    #[test]
    fn negative_wavevector_merges() {
        let a = FourierField {
            dim: 1,
            period: 1.0,
            mean: vec![0.0],
            modes: vec![FourierMode {
                k: [-1, 0],
                cos: vec![1.0],
                sin: vec![2.0],
            }],
        };
        let b = FourierField {
            dim: 1,
            period: 1.0,
            mean: vec![0.0],
            modes: vec![FourierMode {
                k: [1, 0],
                cos: vec![1.0],
                sin: vec![-2.0],
            }],
        };
        assert_eq!(a.difference_norms(&b, 3).unwrap(), (0.0, 0.0));
        for x in [0.1, 0.37] {
            assert!((a.eval([x, 0.0])[0] - b.eval([x, 0.0])[0]).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn verdict_matches_inequalities(
            mean in 0.2f64..2.0, amp in 0.0f64..0.5, mu in 0.0001f64..0.05, eta in 0.0f64..0.1,
            a in 0.5f64..2.5, g_amp in 0.0f64..1.5,
        ) {
            prop_assume!(mean - amp > 0.0);
            let r = record(mean, amp, mu, eta, a, g_amp);
            let b = bounds();
            let direct = r.rho0_inf() >= b.rho_lower && r.mu >= b.mu_lower && r.eta >= 0.0
                && b.a_lower <= r.a && r.a <= b.a_upper && r.g_sup() <= b.g_sup;
            prop_assert_eq!(validate_admissible(&r, &b).is_admissible(), direct);
        }

        #[test]
        fn rigorous_bounds_bracket_dense(mean in 0.5f64..2.0, a1 in -0.2f64..0.2, b1 in -0.2f64..0.2, b3 in -0.1f64..0.1) {
            let f = FourierField { dim: 2, period: 1.0, mean: vec![mean], modes: vec![
                FourierMode { k: [1, 1], cos: vec![a1], sin: vec![b1] },
                FourierMode { k: [0, 3], cos: vec![0.0], sin: vec![b3] },
            ]};
            prop_assert!(f.lower_bound() <= f.dense_min() + 1e-15);
            prop_assert!(f.sup_bound() + 1e-15 >= f.dense_sup_magnitude());
        }
    }
}
