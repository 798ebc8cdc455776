//! Ablation grids: train a matrix of variants under shared seeds and emit a
//! machine-readable table plus the per-variant training curves.

use std::time::Instant;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::evaluate::evaluate;
use crate::harness::preprocess::CacheBundle;
use crate::harness::train::train;
use crate::models::autoencoder::Operator;
use crate::spiral::OrderingMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    /// Spiral vs Chebyshev at latent sizes 8, 16, 32 (six parameter-matched
    /// variants).
    Operator,
    /// The four spiral ordering modes at the configured operator and latent.
    Ordering,
    /// Latent sizes 8, 16, 32 at the configured operator.
    Latent,
}

impl AblationAxis {
    pub fn parse(s: &str) -> Result<AblationAxis> {
        match s {
            "operator" => Ok(AblationAxis::Operator),
            "ordering" => Ok(AblationAxis::Ordering),
            "latent" => Ok(AblationAxis::Latent),
            other => Err(Error::Config(format!("unknown ablation axis '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AblationAxis::Operator => "operator",
            AblationAxis::Ordering => "ordering",
            AblationAxis::Latent => "latent",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: String,
    pub params: usize,
    pub test_mm: f64,
    pub wall_secs: f64,
}

pub struct AblationReport {
    pub axis: AblationAxis,
    pub rows: Vec<AblationRow>,
    /// (variant, metrics CSV) per variant, plot-ready.
    pub curves: Vec<(String, String)>,
}

impl AblationReport {
    pub fn table_csv(&self) -> String {
        let mut out = String::from("variant,params,test_mm,wall_secs\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.3}\n",
                r.variant, r.params, r.test_mm, r.wall_secs
            ));
        }
        out
    }
}

const LATENT_GRID: [usize; 3] = [8, 16, 32];

fn variants(cfg: &RunConfig, axis: AblationAxis) -> Vec<(String, RunConfig)> {
    let mut out = Vec::new();
    match axis {
        AblationAxis::Operator => {
            for op in [Operator::Spiral, Operator::Cheb] {
                for latent in LATENT_GRID {
                    let mut v = cfg.clone();
                    v.operator = op;
                    v.latent = latent;
                    v.ordering = OrderingMode::Fixed;
                    out.push((format!("{}_latent{latent}", op.as_str()), v));
                }
            }
        }
        AblationAxis::Ordering => {
            for mode in [
                OrderingMode::Fixed,
                OrderingMode::RandMesh,
                OrderingMode::RandEpoch,
                OrderingMode::RandMeshAndEpoch,
            ] {
                let mut v = cfg.clone();
                v.operator = Operator::Spiral;
                v.ordering = mode;
                out.push((mode.as_str().to_string(), v));
            }
        }
        AblationAxis::Latent => {
            for latent in LATENT_GRID {
                let mut v = cfg.clone();
                v.latent = latent;
                out.push((format!("latent{latent}"), v));
            }
        }
    }
    out
}

/// Trains every variant of `axis` under the shared seed and evaluates each
/// on the test split with the fixed ordering.
pub fn run_ablation(
    dataset: &Dataset,
    bundle: &CacheBundle,
    cfg: &RunConfig,
    axis: AblationAxis,
) -> Result<AblationReport> {
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (variant, vcfg) in variants(cfg, axis) {
        let start = Instant::now();
        let outcome = train(dataset, bundle, &vcfg)?;
        let (model, stats) = outcome
            .checkpoint
            .clone()
            .into_model(&bundle.hierarchy, &bundle.tables)?;
        let eval = evaluate(&model, &stats, dataset, "test", vcfg.batch)?;
        rows.push(AblationRow {
            variant: variant.clone(),
            params: model.param_count(),
            test_mm: eval.mean_mm,
            wall_secs: start.elapsed().as_secs_f64(),
        });
        curves.push((variant, outcome.metrics_csv()));
    }
    Ok(AblationReport { axis, rows, curves })
}

/// Writes `table.csv` plus one `curve_<variant>.csv` per variant.
pub fn write_ablation_artifacts(report: &AblationReport, dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let write = |name: String, body: &str| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(path.display().to_string(), e))
    };
    write("table.csv".into(), &report.table_csv())?;
    for (variant, csv) in &report.curves {
        write(format!("curve_{variant}.csv"), csv)?;
    }
    Ok(())
}
