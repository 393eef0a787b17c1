use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cvdistill_core::{snu_to_db, DistillationResult};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Variance in dB, or NaN for a non-positive input.
pub fn db(v: f64) -> f64 {
    snu_to_db(v).unwrap_or(f64::NAN)
}

/// Standard error of a variance converted to dB by the first-order delta method.
pub fn db_error(variance: f64, standard_error: f64) -> f64 {
    10.0 / std::f64::consts::LN_10 * standard_error / variance
}

#[derive(Debug, Serialize)]
pub struct AnalyticReport {
    pub threshold_snu: f64,
    pub keep_side: String,
    pub tap_angle_deg: f64,
    pub verification_angle_deg: f64,
    pub distilled_mean_snu: f64,
    pub distilled_variance_snu: f64,
    pub distilled_variance_db: f64,
    pub success_probability: f64,
    pub unselected_variance_snu: f64,
    pub unselected_variance_db: f64,
    pub tap_variance_snu: f64,
    pub tap_variance_db: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulationReport {
    pub samples: usize,
    pub seed: u64,
    pub threshold_snu: f64,
    pub accepted: usize,
    pub success_probability: f64,
    pub success_probability_stderr: f64,
    pub distilled_mean_snu: f64,
    pub distilled_variance_snu: f64,
    pub distilled_variance_db: f64,
    pub standard_error_snu: f64,
    pub standard_error_db: f64,
    pub unselected_variance_snu: f64,
    pub unselected_variance_db: f64,
    pub analytic_variance_snu: Option<f64>,
    pub analytic_variance_db: Option<f64>,
    pub analytic_success_probability: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct IngestReport {
    pub record_file: String,
    pub raw_samples: usize,
    pub samples_per_bin: usize,
    pub skipped_samples: usize,
    pub candidate_bins: usize,
    pub rejected_bins: usize,
    pub selected_modulation: String,
    pub pairs: usize,
    pub threshold_snu: f64,
    pub keep_side: String,
    pub unselected_variance_snu: f64,
    pub unselected_variance_db: f64,
    pub accepted: usize,
    pub success_probability: f64,
    pub distilled_mean_snu: f64,
    pub distilled_variance_snu: f64,
    pub distilled_variance_db: f64,
    pub standard_error_snu: f64,
    pub standard_error_db: f64,
}

pub fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::validation(e.to_string()))?;
    println!("{text}");
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::validation(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// A CSV table with a header row; `None` cells are left empty.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        let io = |e: csv::Error| CliError::io(path, e);
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(
                row.iter()
                    .map(|v| v.map(|v| v.to_string()).unwrap_or_default()),
            )
            .map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }
}

/// The distillation columns shared by the sweep tables.
pub fn result_cells(r: Option<&DistillationResult>) -> Vec<Option<f64>> {
    match r {
        Some(r) => vec![
            Some(r.distilled_mean),
            Some(r.distilled_variance),
            Some(db(r.distilled_variance)),
            Some(r.success_probability),
        ],
        None => vec![None, None, None, Some(0.0)],
    }
}

pub fn write_grid(path: &Path, grid: &cvdistill_core::WignerGrid) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    grid.write_csv(&mut w)?;
    w.flush().map_err(|e| CliError::io(path, e))
}
