//! Sweeps over `(delta_start, epsilon)` and seeds, plus reduction-free baselines.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use maobo_core::benchmarks::make_problem;
use maobo_core::bo::{run, RunConfig, RunResult};
use maobo_core::report::{write_csv, write_run, RunSummary};
use rayon::prelude::*;

use crate::config::ExperimentConfig;

pub const TABLE_FILE: &str = "table.csv";
pub const THREADS_ENV: &str = "MAOBO_THREADS";

pub const TABLE_COLUMNS: [&str; 10] = [
    "mode",
    "delta_start",
    "epsilon",
    "seed",
    "hypervolume",
    "reduction_iterations",
    "removed_objectives",
    "relative_gap",
    "evaluations_saved",
    "status",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellMode {
    Baseline,
    Reduction { delta_start: usize, epsilon: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub mode: CellMode,
    pub seed: u64,
}

impl Cell {
    pub fn dir_name(&self) -> String {
        match self.mode {
            CellMode::Baseline => format!("seed{}/baseline", self.seed),
            CellMode::Reduction { delta_start, epsilon } => {
                format!("seed{}/delta{delta_start}_eps{epsilon}", self.seed)
            }
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            CellMode::Baseline => write!(f, "baseline seed={}", self.seed),
            CellMode::Reduction { delta_start, epsilon } => {
                write!(f, "delta_start={delta_start} epsilon={epsilon} seed={}", self.seed)
            }
        }
    }
}

#[derive(Debug)]
pub struct CellOutcome {
    pub cell: Cell,
    pub result: Result<RunResult, String>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub reference: Vec<f64>,
    pub cells: Vec<CellOutcome>,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }

    pub fn baseline(&self, seed: u64) -> Option<&RunResult> {
        self.cells
            .iter()
            .find(|c| c.cell.seed == seed && c.cell.mode == CellMode::Baseline)
            .and_then(|c| c.result.as_ref().ok())
    }

    /// `|h − h_r| / h` against the same seed's baseline.
    pub fn relative_gap(&self, outcome: &CellOutcome) -> Option<f64> {
        let run = outcome.result.as_ref().ok()?;
        if outcome.cell.mode == CellMode::Baseline {
            return None;
        }
        let base = self.baseline(outcome.cell.seed)?;
        Some((base.hypervolume - run.hypervolume).abs() / base.hypervolume)
    }
}

/// Cells in table order: per seed, the baseline first, then the grid.
/// With `baseline_only`, only baselines are produced.
pub fn plan_cells(config: &ExperimentConfig, baseline_only: bool) -> Vec<Cell> {
    let mut cells = Vec::new();
    for seed in config.seeds() {
        if config.sweep.baseline || baseline_only {
            cells.push(Cell { mode: CellMode::Baseline, seed });
        }
        if baseline_only {
            continue;
        }
        for &delta_start in &config.sweep.delta_start {
            for &epsilon in &config.sweep.epsilon {
                cells.push(Cell {
                    mode: CellMode::Reduction { delta_start, epsilon },
                    seed,
                });
            }
        }
    }
    cells
}

pub fn cell_config(base: &RunConfig, cell: &Cell) -> RunConfig {
    let mut c = base.clone();
    c.seed = cell.seed;
    match cell.mode {
        CellMode::Baseline => c.reduction = false,
        CellMode::Reduction { delta_start, epsilon } => {
            c.reduction = true;
            c.delta_start = delta_start;
            c.epsilon = epsilon;
        }
    }
    c
}

/// Reference point shared by every cell: the configured one, or one placed
/// from noiseless Sobol samples of the problem.
pub fn shared_reference(config: &ExperimentConfig) -> anyhow::Result<Vec<f64>> {
    if let Some(r) = &config.reference {
        return Ok(r.clone());
    }
    let problem = make_problem(&config.problem.resolve()?)?;
    Ok(problem.reference_from_grid(config.sweep.reference_samples)?)
}

pub fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

/// Runs every cell. Failed cells are recorded, the rest still run.
pub fn run_sweep(config: &ExperimentConfig, baseline_only: bool) -> anyhow::Result<SweepOutcome> {
    let mut base = config.run_config()?;
    let reference = shared_reference(config)?;
    base.reference = Some(reference.clone());
    let cells = plan_cells(config, baseline_only);
    let pool = thread_pool()?;
    let outcomes = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let result = run(&cell_config(&base, cell)).map_err(|e| e.to_string());
                match &result {
                    Ok(r) => log::info!("{cell}: hypervolume {:.6e}", r.hypervolume),
                    Err(e) => log::error!("{cell}: {e}"),
                }
                CellOutcome { cell: *cell, result }
            })
            .collect()
    });
    Ok(SweepOutcome {
        reference,
        cells: outcomes,
    })
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

pub fn table_rows(outcome: &SweepOutcome) -> Vec<Vec<String>> {
    outcome
        .cells
        .iter()
        .map(|o| {
            let (mode, ds, eps) = match o.cell.mode {
                CellMode::Baseline => ("baseline".to_string(), String::new(), String::new()),
                CellMode::Reduction { delta_start, epsilon } => {
                    ("reduction".to_string(), delta_start.to_string(), epsilon.to_string())
                }
            };
            let mut row = vec![mode, ds, eps, o.cell.seed.to_string()];
            match &o.result {
                Ok(r) => {
                    let summary = RunSummary::from_result(r);
                    row.push(r.hypervolume.to_string());
                    row.push(join(&summary.reduction_iterations));
                    row.push(join(&summary.removed));
                    row.push(outcome.relative_gap(o).map(|g| g.to_string()).unwrap_or_default());
                    row.push(join(&summary.evaluations_saved));
                    row.push("ok".into());
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), 5));
                    row.push(format!("failed: {e}"));
                }
            }
            row
        })
        .collect()
}

/// Writes per-cell artifacts under `out/cells/` and `out/table.csv`.
pub fn write_sweep(out: &Path, outcome: &SweepOutcome) -> anyhow::Result<PathBuf> {
    for o in &outcome.cells {
        if let Ok(r) = &o.result {
            write_run(&out.join("cells").join(o.cell.dir_name()), r)?;
        }
    }
    let header: Vec<String> = TABLE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let path = out.join(TABLE_FILE);
    write_csv(&path, &header, &table_rows(outcome))?;
    Ok(path)
}
