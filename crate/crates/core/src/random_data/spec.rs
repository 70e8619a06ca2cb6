use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::physics::{
    validate_admissible, AdmissibleBounds, DataRecord, Forcing, FourierField, FourierMode, Verdict,
    DEFAULT_SOBOLEV_ORDER,
};
use crate::random_data::LatentPoint;

fn invalid(msg: impl Into<String>) -> Error {
    Error::Distribution(msg.into())
}

/// Inverse-CDF transform of one latent coordinate onto a scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamTransform {
    Constant {
        value: f64,
    },
    Uniform {
        coord: usize,
        lo: f64,
        hi: f64,
    },
    TruncatedNormal {
        coord: usize,
        mean: f64,
        std: f64,
        lo: f64,
        hi: f64,
    },
}

impl ParamTransform {
    fn coord(&self) -> Option<usize> {
        match self {
            ParamTransform::Constant { .. } => None,
            ParamTransform::Uniform { coord, .. }
            | ParamTransform::TruncatedNormal { coord, .. } => Some(*coord),
        }
    }

    /// `(min, max)` of the transform over `[0, 1]`.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            ParamTransform::Constant { value } => (value, value),
            ParamTransform::Uniform { lo, hi, .. }
            | ParamTransform::TruncatedNormal { lo, hi, .. } => (lo, hi),
        }
    }

    fn check(&self, name: &str, k: usize) -> Result<()> {
        if let Some(c) = self.coord() {
            if c >= k {
                return Err(invalid(format!(
                    "{name} uses latent coordinate {c} but K = {k}"
                )));
            }
        }
        match *self {
            ParamTransform::Constant { value } if !value.is_finite() => {
                Err(invalid(format!("{name}: non-finite")))
            }
            ParamTransform::Uniform { lo, hi, .. }
                if !(lo <= hi && lo.is_finite() && hi.is_finite()) =>
            {
                Err(invalid(format!("{name}: need finite lo <= hi")))
            }
            ParamTransform::TruncatedNormal {
                mean, std, lo, hi, ..
            } if !(std > 0.0
                && lo < hi
                && mean.is_finite()
                && lo.is_finite()
                && hi.is_finite()) =>
            {
                Err(invalid(format!("{name}: need std > 0 and finite lo < hi")))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, omega: &[f64]) -> f64 {
        match *self {
            ParamTransform::Constant { value } => value,
            ParamTransform::Uniform { coord, lo, hi } => lo + (hi - lo) * omega[coord],
            ParamTransform::TruncatedNormal {
                coord,
                mean,
                std,
                lo,
                hi,
            } => {
                let n = Normal::standard();
                let (fa, fb) = (n.cdf((lo - mean) / std), n.cdf((hi - mean) / std));
                let z = n.inverse_cdf(fa + omega[coord] * (fb - fa));
                (mean + std * z).clamp(lo, hi)
            }
        }
    }

    /// Bound on `|d apply / d omega_coord|`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            ParamTransform::Constant { .. } => 0.0,
            ParamTransform::Uniform { lo, hi, .. } => hi - lo,
            ParamTransform::TruncatedNormal {
                mean, std, lo, hi, ..
            } => {
                let n = Normal::standard();
                let (alpha, beta) = ((lo - mean) / std, (hi - mean) / std);
                // the inverse-CDF slope is std * Z / phi(z), largest where phi is smallest
                std * (n.cdf(beta) - n.cdf(alpha)) / n.pdf(alpha).min(n.pdf(beta))
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AffineRepr {
    Fixed(f64),
    Full {
        base: f64,
        #[serde(default)]
        slope: f64,
        #[serde(default)]
        coord: Option<usize>,
    },
}

/// Coefficient `base + slope * omega[coord]`. A bare number in a config
/// is read as a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "AffineRepr")]
pub struct AffineCoef {
    pub base: f64,
    pub slope: f64,
    pub coord: Option<usize>,
}

impl From<AffineRepr> for AffineCoef {
    fn from(r: AffineRepr) -> Self {
        match r {
            AffineRepr::Fixed(base) => AffineCoef::constant(base),
            AffineRepr::Full { base, slope, coord } => AffineCoef { base, slope, coord },
        }
    }
}

impl AffineCoef {
    pub fn constant(base: f64) -> Self {
        Self {
            base,
            slope: 0.0,
            coord: None,
        }
    }

    pub fn affine(base: f64, slope: f64, coord: usize) -> Self {
        Self {
            base,
            slope,
            coord: Some(coord),
        }
    }

    pub fn eval(&self, omega: &[f64]) -> f64 {
        match self.coord {
            Some(c) => self.base + self.slope * omega[c],
            None => self.base,
        }
    }

    fn min(&self) -> f64 {
        if self.coord.is_some() {
            self.base.min(self.base + self.slope)
        } else {
            self.base
        }
    }

    fn max_abs(&self) -> f64 {
        if self.coord.is_some() {
            self.base.abs().max((self.base + self.slope).abs())
        } else {
            self.base.abs()
        }
    }

    /// Derivative with respect to latent coordinate `j`.
    fn slope_in(&self, j: usize) -> f64 {
        if self.coord == Some(j) {
            self.slope
        } else {
            0.0
        }
    }

    fn check(&self, k: usize) -> Result<()> {
        if let Some(c) = self.coord {
            if c >= k {
                return Err(invalid(format!(
                    "coefficient uses latent coordinate {c} but K = {k}"
                )));
            }
        }
        if !self.base.is_finite() || !self.slope.is_finite() {
            return Err(invalid("non-finite coefficient"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomMode {
    pub k: [i32; 2],
    pub cos: Vec<AffineCoef>,
    pub sin: Vec<AffineCoef>,
}

/// A Fourier field whose coefficients are affine in the latent coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFieldSpec {
    pub mean: Vec<AffineCoef>,
    #[serde(default)]
    pub modes: Vec<RandomMode>,
}

impl RandomFieldSpec {
    pub fn constant(mean: Vec<f64>) -> Self {
        Self {
            mean: mean.into_iter().map(AffineCoef::constant).collect(),
            modes: Vec::new(),
        }
    }

    fn coefs(&self) -> impl Iterator<Item = &AffineCoef> {
        self.mean
            .iter()
            .chain(self.modes.iter().flat_map(|m| m.cos.iter().chain(&m.sin)))
    }

    fn map(&self, dim: usize, period: f64, f: impl Fn(&AffineCoef) -> f64) -> FourierField {
        FourierField {
            dim,
            period,
            mean: self.mean.iter().map(&f).collect(),
            modes: self
                .modes
                .iter()
                .map(|m| FourierMode {
                    k: m.k,
                    cos: m.cos.iter().map(&f).collect(),
                    sin: m.sin.iter().map(&f).collect(),
                })
                .collect(),
        }
    }

    pub fn realize(&self, dim: usize, period: f64, omega: &[f64]) -> FourierField {
        self.map(dim, period, |c| c.eval(omega))
    }

    /// Field of partial derivatives with respect to latent coordinate `j`.
    fn slope_field(&self, dim: usize, period: f64, j: usize) -> FourierField {
        self.map(dim, period, |c| c.slope_in(j))
    }

    /// Field of coefficient magnitudes maximised over the cube.
    fn majorant(&self, dim: usize, period: f64) -> FourierField {
        self.map(dim, period, AffineCoef::max_abs)
    }

    fn check(&self, name: &str, dim: usize, components: usize, k: usize) -> Result<()> {
        for c in self.coefs() {
            c.check(k)?;
        }
        if self.mean.len() != components
            || self
                .modes
                .iter()
                .any(|m| m.cos.len() != components || m.sin.len() != components)
        {
            return Err(invalid(format!(
                "{name} needs {components} component(s) in every coefficient list"
            )));
        }
        if dim == 1 && self.modes.iter().any(|m| m.k[1] != 0) {
            return Err(invalid(format!("{name}: 1-D field with 2-D wave vector")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomForcingSpec {
    pub field: RandomFieldSpec,
    #[serde(default = "unit_envelope")]
    pub envelope: Vec<f64>,
    pub horizon: f64,
}

fn unit_envelope() -> Vec<f64> {
    vec![1.0]
}

/// Declarative map `[0,1]^K -> A_D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub latent_dim: usize,
    pub dim: usize,
    #[serde(default = "unit_period")]
    pub period: f64,
    pub gamma: f64,
    pub bounds: AdmissibleBounds,
    pub mu: ParamTransform,
    pub eta: ParamTransform,
    pub a: ParamTransform,
    pub rho0: RandomFieldSpec,
    pub u0: RandomFieldSpec,
    pub forcing: Option<RandomForcingSpec>,
}

fn unit_period() -> f64 {
    1.0
}

impl DistributionSpec {
    /// Validates shapes and proves, with rigorous coefficient bounds, that
    /// the image of the whole cube lies in the admissible set.
    pub fn validate(&self) -> Result<()> {
        let k = self.latent_dim;
        if !(self.dim == 1 || self.dim == 2) || !(self.period > 0.0) {
            return Err(invalid("dim must be 1 or 2 and period positive"));
        }
        self.bounds.check().map_err(|e| invalid(e.to_string()))?;
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma must exceed 1"));
        }
        self.mu.check("mu", k)?;
        self.eta.check("eta", k)?;
        self.a.check("a", k)?;
        self.rho0.check("rho0", self.dim, 1, k)?;
        self.u0.check("u0", self.dim, self.dim, k)?;
        if let Some(f) = &self.forcing {
            f.field.check("forcing", self.dim, self.dim, k)?;
            if !(f.horizon > 0.0) || f.envelope.iter().any(|c| !c.is_finite()) {
                return Err(invalid(
                    "forcing needs a finite envelope and positive horizon",
                ));
            }
        }

        let b = &self.bounds;
        if self.mu.range().0 < b.mu_lower {
            return Err(invalid(format!(
                "mu can reach {} < {}",
                self.mu.range().0,
                b.mu_lower
            )));
        }
        if self.eta.range().0 < 0.0 {
            return Err(invalid("eta can become negative"));
        }
        let (alo, ahi) = self.a.range();
        if alo < b.a_lower || ahi > b.a_upper {
            return Err(invalid(format!(
                "a ranges over [{alo}, {ahi}], outside [{}, {}]",
                b.a_lower, b.a_upper
            )));
        }
        let mut rho_major = self.rho0.majorant(self.dim, self.period);
        rho_major.mean[0] = self.rho0.mean[0].min();
        let rho_inf = rho_major.lower_bound();
        if rho_inf < b.rho_lower {
            return Err(invalid(format!(
                "inf rho0 can reach {rho_inf} < {}",
                b.rho_lower
            )));
        }
        let g_bound = self.forcing_bound();
        if g_bound > b.g_sup {
            return Err(invalid(format!(
                "sup |g| can reach {g_bound} > {}",
                b.g_sup
            )));
        }
        Ok(())
    }

    /// Rigorous bound on `sup |g|` over the cube, the horizon and the torus.
    pub fn forcing_bound(&self) -> f64 {
        match &self.forcing {
            None => 0.0,
            Some(f) => {
                let envelope = Forcing {
                    field: FourierField::constant(self.dim, self.period, vec![0.0]),
                    envelope: f.envelope.clone(),
                    horizon: f.horizon,
                };
                envelope.envelope_bound() * f.field.majorant(self.dim, self.period).sup_bound()
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Data record at `omega`. `self` must have passed [`Self::validate`].
    pub fn realize_data(&self, omega: &LatentPoint) -> Result<DataRecord> {
        if omega.dim() != self.latent_dim {
            return Err(invalid(format!(
                "latent point has {} coordinates, spec needs {}",
                omega.dim(),
                self.latent_dim
            )));
        }
        let w = omega.coords();
        let forcing = match &self.forcing {
            None => Forcing::zero(self.dim, self.period, 1.0),
            Some(f) => Forcing {
                field: f.field.realize(self.dim, self.period, w),
                envelope: f.envelope.clone(),
                horizon: f.horizon,
            },
        };
        let rec = DataRecord::new(
            self.rho0.realize(self.dim, self.period, w),
            self.u0.realize(self.dim, self.period, w),
            self.mu.apply(w),
            self.eta.apply(w),
            self.a.apply(w),
            self.gamma,
            forcing,
        )?;
        match validate_admissible(&rec, &self.bounds) {
            Verdict::Admissible => Ok(rec),
            Verdict::Rejected(c) => Err(invalid(format!("realized record not admissible: {c:?}"))),
        }
    }

    /// Per-coordinate Lipschitz constants of `omega -> data` in the
    /// surrogate distance [`crate::physics::data_distance`].
    pub fn lipschitz_constants(&self) -> Vec<f64> {
        let s = DEFAULT_SOBOLEV_ORDER;
        let zero = |c: usize| FourierField::constant(self.dim, self.period, vec![0.0; c]);
        let field_norm = |f: &FourierField| {
            let (l2, hs) = f
                .difference_norms(&zero(f.components()), s)
                .expect("shapes agree");
            l2 + hs
        };
        let env = self.forcing.as_ref().map(|f| {
            Forcing {
                field: zero(self.dim),
                envelope: f.envelope.clone(),
                horizon: f.horizon,
            }
            .envelope_bound()
        });
        (0..self.latent_dim)
            .map(|j| {
                let mut l = 0.0;
                for t in [&self.mu, &self.eta, &self.a] {
                    if t.coord() == Some(j) {
                        l += t.lipschitz();
                    }
                }
                l += field_norm(&self.rho0.slope_field(self.dim, self.period, j));
                l += field_norm(&self.u0.slope_field(self.dim, self.period, j));
                if let (Some(f), Some(e)) = (&self.forcing, env) {
                    l += e * field_norm(&f.field.slope_field(self.dim, self.period, j));
                }
                l
            })
            .collect()
    }

    /// `L_map = sum_j L_j`, so `dist <= L_map * |omega - omega'|_inf`.
    pub fn lipschitz_constant(&self) -> f64 {
        self.lipschitz_constants().iter().sum()
    }

    /// True when no parameter or coefficient depends on the latent point.
    pub fn is_deterministic(&self) -> bool {
        self.lipschitz_constants().iter().all(|l| *l == 0.0)
    }
}
