//! Noise sweep with per-cell checkpoints.
//!
//! Each finished cell is written to `<out>/checkpoints/cell-<i>-<j>.json`
//! together with a key hashing everything that determines its value. A rerun
//! with the same inputs reuses matching checkpoints and only computes the
//! missing cells; the heatmap and summary are written once every cell exists.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use touchdown_core::eval::{run_sweep_cell, SweepCell};
use touchdown_core::{
    generate_fit_dataset, EstimatorConfig, ModelFile, NoiseLevels, ScenarioConfig, SweepConfig,
    SweepReport,
};

use crate::args::OutputFormat;
use crate::commands::json_line;
use crate::{emit, write_file, CliError};

pub const HEATMAP_FORMAT: &str = "touchdown-heatmap";
pub const SWEEP_FORMAT: &str = "touchdown-sweep";
const CELL_FORMAT: &str = "touchdown-sweep-cell";
const VERSION: u32 = 1;

/// Everything a sweep depends on.
#[derive(Debug, Clone)]
pub struct Plan {
    pub scenario: ScenarioConfig,
    pub estimator: EstimatorConfig,
    pub sweep: SweepConfig,
    /// Pre-fitted model; `None` fits on the scenario's noise-free pools.
    pub model: Option<ModelFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    key: String,
    cell: SweepCell,
}

impl Plan {
    fn estimator(&self) -> &EstimatorConfig {
        self.model.as_ref().map_or(&self.estimator, |m| &m.config)
    }

    /// SHA-256 over the canonical JSON of the inputs.
    pub fn key(&self) -> String {
        let model = self
            .model
            .as_ref()
            .map(|m| json!({ "provenance": m.provenance, "config_hash": m.config_hash }));
        let doc = json!({
            "scenario": self.scenario,
            "estimator": self.estimator(),
            "sweep": self.sweep,
            "model": model,
        });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }

    fn model(&self) -> Result<ModelFile, CliError> {
        if let Some(m) = &self.model {
            return Ok(m.clone());
        }
        let clean = self.scenario.with_noise(NoiseLevels::default(), self.scenario.seed);
        let (c, n) = generate_fit_dataset(&clean, self.estimator.leg_aggregation)
            .map_err(touchdown_core::Error::from)?;
        Ok(ModelFile::fit(&c, &n, &self.estimator)?)
    }
}

fn cell_path(dir: &Path, i: usize, j: usize) -> PathBuf {
    dir.join(format!("cell-{i}-{j}.json"))
}

fn load_checkpoint(path: &Path, key: &str) -> Option<SweepCell> {
    let text = fs::read_to_string(path).ok()?;
    match serde_json::from_str::<Checkpoint>(&text) {
        Ok(c) if c.format == CELL_FORMAT && c.version == VERSION && c.key == key => Some(c.cell),
        Ok(_) => {
            warn!("{}: stale checkpoint, recomputing", path.display());
            None
        }
        Err(e) => {
            warn!("{}: unreadable checkpoint ({e}), recomputing", path.display());
            None
        }
    }
}

/// Outcome of one invocation.
#[derive(Debug)]
pub enum Progress {
    Complete(SweepReport),
    Partial { done: usize, total: usize },
}

/// Computes missing cells (at most `max_new` of them) and assembles the report
/// when all cells exist.
pub fn compute(plan: &Plan, out: &Path, max_new: Option<usize>) -> Result<Progress, CliError> {
    plan.sweep.validate().map_err(touchdown_core::Error::from)?;
    plan.scenario.validate().map_err(touchdown_core::Error::from)?;
    let key = plan.key();
    let dir = out.join("checkpoints");
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let coords = plan.sweep.cells();
    let mut cells: Vec<Option<SweepCell>> = coords
        .iter()
        .map(|&(i, j)| load_checkpoint(&cell_path(&dir, i, j), &key))
        .collect();
    let reused = cells.iter().filter(|c| c.is_some()).count();
    let pending: Vec<usize> = (0..coords.len())
        .filter(|&k| cells[k].is_none())
        .take(max_new.unwrap_or(usize::MAX))
        .collect();
    info!("sweep: {reused} cells from checkpoints, {} to compute", pending.len());

    if !pending.is_empty() {
        let model = plan.model()?;
        let config = plan.estimator();
        let fresh = pending
            .par_iter()
            .map(|&k| {
                let (i, j) = coords[k];
                let cell = run_sweep_cell(
                    &plan.scenario,
                    &model.models,
                    config,
                    &plan.sweep,
                    plan.sweep.torque_sigmas[i],
                    plan.sweep.accel_sigmas[j],
                )
                .map_err(touchdown_core::Error::from)?;
                let cp = Checkpoint {
                    format: CELL_FORMAT.into(),
                    version: VERSION,
                    key: key.clone(),
                    cell,
                };
                let text = serde_json::to_string(&cp).expect("checkpoint serializes");
                write_file(&cell_path(&dir, i, j), &text)?;
                Ok((k, cp.cell))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        for (k, cell) in fresh {
            cells[k] = Some(cell);
        }
    }

    let done = cells.iter().filter(|c| c.is_some()).count();
    if done < cells.len() {
        return Ok(Progress::Partial {
            done,
            total: cells.len(),
        });
    }
    let cells = cells.into_iter().map(|c| c.expect("all cells present")).collect();
    Ok(Progress::Complete(SweepReport::from_cells(
        &plan.sweep,
        plan.estimator().threshold,
        cells,
    )))
}

pub fn heatmap_text(report: &SweepReport) -> String {
    format!("# {HEATMAP_FORMAT} v{VERSION}\n{}", report.heatmap_csv())
}

pub fn run(
    plan: &Plan,
    out: &Path,
    max_new: Option<usize>,
    format: OutputFormat,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let report = match compute(plan, out, max_new)? {
        Progress::Complete(r) => r,
        Progress::Partial { done, total } => {
            warn!("sweep stopped with {done} of {total} cells; rerun to resume");
            return Ok(());
        }
    };
    let heatmap = heatmap_text(&report);
    let summary = json_line(&json!({
        "format": SWEEP_FORMAT,
        "version": VERSION,
        "key": plan.key(),
        "report": report,
    }));
    write_file(&out.join("heatmap.csv"), &heatmap)?;
    write_file(&out.join("sweep.json"), &summary)?;
    let text = match format {
        OutputFormat::Csv => heatmap,
        OutputFormat::Summary => summary,
    };
    emit(stdout, None, &text)
}
