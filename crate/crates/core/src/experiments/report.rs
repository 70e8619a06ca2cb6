use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::random_data::EnsembleMode;
use crate::solver::{ErrorTable, Status};
use crate::statistics::{
    BoundednessReport, ConvergenceInProbability, EnergyMomentBound, FunctionalMean,
};
use crate::torus_mesh::{write_field_csv, Field, Quantity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical JSON form of the resolved config.
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub mode: EnsembleMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub latent: Vec<f64>,
    pub weight: f64,
    pub status: Status,
    pub steps: usize,
    pub max_linf: f64,
    pub final_energy: f64,
    pub mass_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeanSummary {
    pub quantity: Quantity,
    pub times: Vec<f64>,
    /// `L^2` norm of the mean field at each time.
    pub l2_norms: Vec<f64>,
    #[serde(skip)]
    pub final_field: Option<Field>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycenterSummary {
    pub quantity: Quantity,
    pub r: f64,
    pub q: f64,
    pub time: Option<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub first_order_residual: f64,
    pub converged: bool,
    #[serde(skip)]
    pub minimizer: Option<Field>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataFunctionalRow {
    #[serde(flatten)]
    pub mean: FunctionalMean,
    pub exact: Option<f64>,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub samples: usize,
    pub members: usize,
    pub cells: usize,
    pub h: f64,
    pub tainted: bool,
    pub unresolved_weight: f64,
    pub status_counts: BTreeMap<String, usize>,
    pub boundedness: BoundednessReport,
    pub functional_means: Vec<FunctionalMean>,
    pub data_means: Vec<DataFunctionalRow>,
    pub field_means: Vec<FieldMeanSummary>,
    pub barycenters: Vec<BarycenterSummary>,
    pub energy: Option<EnergyMomentBound>,
    /// Strong mode: sup over a latent lattice of the collocated data error
    /// and its Lipschitz bound.
    pub collocation_error: Option<f64>,
    pub collocation_bound: Option<f64>,
    pub member_summaries: Vec<MemberSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPairDiagnostic {
    pub coarse: usize,
    pub fine: usize,
    pub diagnostic: ConvergenceInProbability,
}

/// Expectation-norm error of one level against the reference level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongErrorRow {
    pub level: usize,
    pub samples: usize,
    pub cells: usize,
    /// `E |rho_l(T) - rho_ref(T)|_{L^gamma}^r`.
    pub density_error: f64,
    /// `E |m_l(T) - m_ref(T)|_{L^{2 gamma/(gamma+1)}}^r`.
    pub momentum_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CrossLevel {
    pub diagnostics: Vec<LevelPairDiagnostic>,
    pub strong_errors: Vec<StrongErrorRow>,
    pub deterministic: Option<ErrorTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub levels: Vec<LevelReport>,
    pub cross_level: CrossLevel,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<fs::File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(fs::File::create(
        path,
    )?)))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.json`, cross-level CSV tables and one `level_XX`
    /// directory per ladder level.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json()? + "\n")?;

        let mut w = csv_writer(&dir.join("diagnostics.csv"))?;
        w.write_record(["coarse", "fine", "eps", "exceedance"])?;
        for d in &self.cross_level.diagnostics {
            for (e, p) in d.diagnostic.eps.iter().zip(&d.diagnostic.exceedance) {
                w.write_record([
                    d.coarse.to_string(),
                    d.fine.to_string(),
                    format!("{e:e}"),
                    format!("{p:e}"),
                ])?;
            }
        }
        w.flush()?;

        if !self.cross_level.strong_errors.is_empty() {
            let mut w = csv_writer(&dir.join("strong_errors.csv"))?;
            w.write_record([
                "level",
                "samples",
                "cells",
                "density_error",
                "momentum_error",
            ])?;
            for r in &self.cross_level.strong_errors {
                w.write_record([
                    r.level.to_string(),
                    r.samples.to_string(),
                    r.cells.to_string(),
                    format!("{:e}", r.density_error),
                    format!("{:e}", r.momentum_error),
                ])?;
            }
            w.flush()?;
        }
        if let Some(t) = &self.cross_level.deterministic {
            t.write_csv(BufWriter::new(fs::File::create(
                dir.join("convergence.csv"),
            )?))?;
        }

        let mut w = csv_writer(&dir.join("functionals.csv"))?;
        w.write_record([
            "level",
            "name",
            "kind",
            "value",
            "exact",
            "error",
            "unresolved_weight",
        ])?;
        for l in &self.levels {
            for m in &l.functional_means {
                w.write_record([
                    l.level.to_string(),
                    m.name.clone(),
                    "solution".into(),
                    opt(m.value),
                    String::new(),
                    String::new(),
                    format!("{:e}", m.unresolved_weight),
                ])?;
            }
            for d in &l.data_means {
                w.write_record([
                    l.level.to_string(),
                    d.mean.name.clone(),
                    "data".into(),
                    opt(d.mean.value),
                    opt(d.exact),
                    opt(d.error),
                    format!("{:e}", d.mean.unresolved_weight),
                ])?;
            }
        }
        w.flush()?;

        for l in &self.levels {
            l.write(&dir.join(format!("level_{:02}", l.level)))?;
        }
        Ok(())
    }
}

impl LevelReport {
    fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.boundedness.write_csv(BufWriter::new(fs::File::create(
            dir.join("boundedness.csv"),
        )?))?;

        let mut w = csv_writer(&dir.join("members.csv"))?;
        w.write_record([
            "member",
            "latent",
            "weight",
            "status",
            "steps",
            "max_linf",
            "final_energy",
            "mass_drift",
        ])?;
        for (i, m) in self.member_summaries.iter().enumerate() {
            let latent: Vec<String> = m.latent.iter().map(|c| format!("{c:e}")).collect();
            w.write_record([
                i.to_string(),
                latent.join(" "),
                format!("{:e}", m.weight),
                serde_json::to_value(m.status)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                m.steps.to_string(),
                format!("{:e}", m.max_linf),
                format!("{:e}", m.final_energy),
                format!("{:e}", m.mass_drift),
            ])?;
        }
        w.flush()?;

        if let Some(e) = &self.energy {
            let mut w = csv_writer(&dir.join("energy.csv"))?;
            w.write_record(["time", "mean_energy"])?;
            for (t, v) in e.times.iter().zip(&e.mean_energy) {
                w.write_record([format!("{t:e}"), format!("{v:e}")])?;
            }
            w.flush()?;
        }

        let mut w = csv_writer(&dir.join("barycenters.csv"))?;
        w.write_record([
            "quantity",
            "r",
            "q",
            "time",
            "objective",
            "iterations",
            "first_order_residual",
            "converged",
        ])?;
        for b in &self.barycenters {
            w.write_record([
                b.quantity.name().to_string(),
                b.r.to_string(),
                b.q.to_string(),
                opt(b.time),
                format!("{:e}", b.objective),
                b.iterations.to_string(),
                format!("{:e}", b.first_order_residual),
                b.converged.to_string(),
            ])?;
            if let Some(f) = &b.minimizer {
                let name = format!("barycenter_{}_r{}_q{}.csv", b.quantity.name(), b.r, b.q);
                write_field_csv(f, BufWriter::new(fs::File::create(dir.join(name))?))?;
            }
        }
        w.flush()?;

        for fm in &self.field_means {
            if let Some(f) = &fm.final_field {
                let name = format!("mean_{}.csv", fm.quantity.name());
                write_field_csv(f, BufWriter::new(fs::File::create(dir.join(name))?))?;
            }
        }
        Ok(())
    }
}
