//! Per-run artifacts: `trace.json`, `front.csv`, `reductions.csv`, `summary.json`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bo::RunResult;

pub const TRACE_FILE: &str = "trace.json";
pub const FRONT_FILE: &str = "front.csv";
pub const REDUCTIONS_FILE: &str = "reductions.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("missing artifact {0}")]
    Missing(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub hypervolume: f64,
    pub reference: Vec<f64>,
    pub objective_labels: Vec<String>,
    pub evaluations: Vec<usize>,
    pub evaluations_saved: Vec<usize>,
    pub final_active: Vec<usize>,
    pub removed: Vec<usize>,
    pub reduction_iterations: Vec<usize>,
    pub front_size: usize,
}

impl RunSummary {
    pub fn from_result(result: &RunResult) -> Self {
        RunSummary {
            hypervolume: result.hypervolume,
            reference: result.reference.clone(),
            objective_labels: result.objective_labels.clone(),
            evaluations: result.evaluations.clone(),
            evaluations_saved: result.evaluations_saved(),
            final_active: result.final_active.clone(),
            removed: result.reduction_log.iter().map(|e| e.removed).collect(),
            reduction_iterations: result.reduction_log.iter().map(|e| e.iteration).collect(),
            front_size: result.front.len(),
        }
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let io_err = |source| ReportError::Io { path: path.to_path_buf(), source };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn to_json_bytes<T: Serialize>(value: &T, path: &Path) -> Result<Vec<u8>, ReportError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| ReportError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, ReportError> {
    let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| ReportError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), ReportError> {
    write_atomic(path, &csv_bytes(path, header, rows)?)
}

/// Writes the four run artifacts into `dir`, creating it if needed.
pub fn write_run(dir: &Path, result: &RunResult) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;

    let trace = dir.join(TRACE_FILE);
    write_atomic(&trace, &to_json_bytes(result, &trace)?)?;

    let front = dir.join(FRONT_FILE);
    let d = result.config.problem.dim();
    let mut header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    header.extend(result.objective_labels.iter().cloned());
    let rows: Vec<Vec<String>> = result
        .front
        .inputs
        .iter()
        .zip(&result.front.points)
        .map(|(x, y)| x.iter().chain(y).map(f64::to_string).collect())
        .collect();
    write_csv(&front, &header, &rows)?;

    let reductions = dir.join(REDUCTIONS_FILE);
    let header: Vec<String> = ["iteration", "removed", "kept", "distance"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = result
        .reduction_log
        .iter()
        .map(|e| {
            vec![
                e.iteration.to_string(),
                e.removed.to_string(),
                e.kept.to_string(),
                e.distance.to_string(),
            ]
        })
        .collect();
    write_csv(&reductions, &header, &rows)?;

    let summary = dir.join(SUMMARY_FILE);
    write_atomic(&summary, &to_json_bytes(&RunSummary::from_result(result), &summary)?)
}

/// Loads `trace.json` from a run directory.
pub fn read_run(dir: &Path) -> Result<RunResult, ReportError> {
    let path = dir.join(TRACE_FILE);
    if !path.is_file() {
        return Err(ReportError::Missing(path));
    }
    let text = fs::read(&path).map_err(|source| ReportError::Io { path: path.clone(), source })?;
    serde_json::from_slice(&text).map_err(|source| ReportError::Json { path, source })
}
