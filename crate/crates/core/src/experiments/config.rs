use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random_data::{DistributionSpec, EnsembleMode, PointRule};
use crate::solver::{ManufacturedSolution, SchemeConfig};
use crate::statistics::{BarycenterOptions, DataFunctional, TestFunctional, TimeSelector};
use crate::torus_mesh::Quantity;

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// One rung of the refinement ladder. In weak mode `samples` is the number
/// of Monte-Carlo draws; in strong mode it is the number of partition cells
/// per latent axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub samples: usize,
    pub cells: usize,
}

/// `h = h0 / 2^l` with `N = N0 4^l` (weak) or `N0 2^l` cells per axis (strong).
pub fn balanced_ladder(
    mode: EnsembleMode,
    samples0: usize,
    cells0: usize,
    levels: usize,
) -> Vec<LevelSpec> {
    let growth: usize = match mode {
        EnsembleMode::Weak => 4,
        EnsembleMode::Strong => 2,
    };
    (0..levels as u32)
        .map(|l| LevelSpec {
            samples: samples0 * growth.pow(l),
            cells: cells0 << l,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionSource {
    Inline(Box<DistributionSpec>),
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarycenterRequest {
    pub quantity: Quantity,
    pub r: f64,
    pub q: f64,
    #[serde(default)]
    pub time: TimeSelector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatisticsRequest {
    /// Thresholds `M` of the boundedness report.
    pub m_grid: Vec<f64>,
    /// Tolerances `eps` of the convergence-in-probability diagnostic.
    pub eps_grid: Vec<f64>,
    /// Exponent of the space-time distance used by the diagnostic.
    pub diagnostic_q: f64,
    pub field_means: Vec<Quantity>,
    pub functionals: Vec<TestFunctional>,
    pub data_functionals: Vec<DataFunctional>,
    pub barycenters: Vec<BarycenterRequest>,
    pub barycenter_options: BarycenterOptions,
    /// Exponent `r` of the strong expectation-norm error.
    pub strong_error_r: f64,
    /// Latent quadrature nodes per axis for exact data expectations.
    pub quadrature_nodes: usize,
}

impl Default for StatisticsRequest {
    fn default() -> Self {
        Self {
            m_grid: vec![1.0, 2.0, 5.0, 10.0, 100.0, 1e3, 1e4],
            eps_grid: vec![1e-4, 1e-3, 1e-2, 1e-1],
            diagnostic_q: 2.0,
            field_means: vec![Quantity::Density, Quantity::Momentum],
            functionals: Vec::new(),
            data_functionals: Vec::new(),
            barycenters: Vec::new(),
            barycenter_options: BarycenterOptions::default(),
            strong_error_r: 1.0,
            quadrature_nodes: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvergenceStudy {
    /// 1-D forced manufactured solution against its exact values.
    Manufactured {
        #[serde(default)]
        solution: ManufacturedSolution,
        cells: Vec<usize>,
    },
    /// Errors against a fine reference solve of the record realized at
    /// `latent` (default: the cube centre).
    SelfConvergence {
        cells: Vec<usize>,
        reference_cells: usize,
        #[serde(default)]
        latent: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: EnsembleMode,
    pub ladder: Vec<LevelSpec>,
    /// Extra strong-mode level used as the reference for cross-level errors;
    /// the finest ladder level is used when absent.
    #[serde(default)]
    pub reference: Option<LevelSpec>,
    #[serde(default)]
    pub scheme: SchemeConfig,
    /// Snapshot count when `scheme.output_interval` is unset.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    pub distribution: DistributionSource,
    #[serde(default)]
    pub statistics: StatisticsRequest,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// A level whose unresolved weight exceeds this is marked tainted.
    #[serde(default = "default_failure_budget")]
    pub failure_budget: f64,
    #[serde(default)]
    pub point_rule: PointRule,
    #[serde(default)]
    pub convergence: Option<ConvergenceStudy>,
}

fn default_snapshots() -> usize {
    10
}

fn default_failure_budget() -> f64 {
    0.1
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`. A distribution
    /// given by path is resolved relative to the config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        if let DistributionSource::File { path: p } = &cfg.distribution {
            let full = match path.parent() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p.clone(),
            };
            let text = std::fs::read_to_string(&full)?;
            let spec = if full.extension().is_some_and(|e| e == "json") {
                DistributionSpec::from_json(&text)?
            } else {
                DistributionSpec::from_toml(&text)?
            };
            cfg.distribution = DistributionSource::Inline(Box::new(spec));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn spec(&self) -> Result<&DistributionSpec> {
        match &self.distribution {
            DistributionSource::Inline(s) => Ok(s),
            DistributionSource::File { path } => Err(invalid(format!(
                "distribution file {} has not been loaded",
                path.display()
            ))),
        }
    }

    /// Scheme settings with snapshot times fixed, so levels share them.
    pub fn effective_scheme(&self) -> SchemeConfig {
        let mut s = self.scheme.clone();
        s.output_interval
            .get_or_insert(s.final_time / self.snapshots.max(1) as f64);
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        let spec = self.spec()?;
        spec.validate()?;
        if self.ladder.is_empty() {
            return Err(invalid("ladder must have at least one level"));
        }
        for l in &self.ladder {
            if l.samples == 0 || l.cells < 2 {
                return Err(invalid(format!(
                    "level {l:?} needs samples >= 1 and cells >= 2"
                )));
            }
        }
        for w in self.ladder.windows(2) {
            if w[1].samples < w[0].samples || w[1].cells < w[0].cells {
                return Err(invalid("ladder must have nondecreasing samples and cells"));
            }
            if w[1].cells % w[0].cells != 0 {
                return Err(invalid("ladder grids must be nested"));
            }
        }
        if let Some(r) = &self.reference {
            let last = self.ladder[self.ladder.len() - 1];
            if self.mode == EnsembleMode::Weak {
                return Err(invalid("a reference level is only used in strong mode"));
            }
            if r.cells % last.cells != 0 || r.samples < last.samples {
                return Err(invalid(
                    "reference level must refine the finest ladder level",
                ));
            }
        }
        if let Some(f) = &spec.forcing {
            if f.horizon < self.scheme.final_time {
                return Err(invalid("forcing horizon ends before final_time"));
            }
        }
        if !(0.0..=1.0).contains(&self.failure_budget) {
            return Err(invalid("failure_budget must lie in [0, 1]"));
        }
        if self.snapshots == 0 {
            return Err(invalid("snapshots must be positive"));
        }
        let st = &self.statistics;
        if !(st.diagnostic_q >= 1.0) || !(st.strong_error_r > 0.0) || st.quadrature_nodes == 0 {
            return Err(invalid(
                "need diagnostic_q >= 1, strong_error_r > 0, quadrature_nodes >= 1",
            ));
        }
        for b in &st.barycenters {
            if !(b.r > 1.0) || !(b.q >= 1.0) {
                return Err(invalid(format!(
                    "barycenter needs r > 1 and q >= 1, got r={}, q={}",
                    b.r, b.q
                )));
            }
        }
        Ok(())
    }
}
