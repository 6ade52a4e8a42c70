//! Plot-ready CSVs from a finished run: posterior mean surfaces at the
//! iterations where similarities were computed, and a hypervolume series.

use std::path::{Path, PathBuf};

use anyhow::Context;
use maobo_core::benchmarks::make_problem;
use maobo_core::bo::{fit_active_models, probe_grid, Dataset, OptState, RunResult};
use maobo_core::pareto::{hypervolume, pareto_front};
use maobo_core::qmc::scale_to_box;
use maobo_core::report::{read_run, write_csv};

pub const HYPERVOLUME_FILE: &str = "hypervolume.csv";

/// Iterations with logged pairwise distances, plus the final one.
pub fn logged_iterations(result: &RunResult) -> Vec<usize> {
    let mut its: Vec<usize> = result
        .trace
        .iter()
        .filter(|r| !r.distances.is_empty())
        .map(|r| r.iteration)
        .collect();
    its.push(result.dataset.len());
    its.dedup();
    its
}

/// Objectives modelled at iteration `t`, before any removal made at `t`.
pub fn active_before(result: &RunResult, t: usize) -> Vec<usize> {
    match result.trace.iter().find(|r| r.iteration == t) {
        Some(rec) => {
            let mut active = rec.active.clone();
            if let Some(e) = rec.removed {
                active.push(e.removed);
                active.sort_unstable();
            }
            active
        }
        None => result.final_active.clone(),
    }
}

fn prefix(dataset: &Dataset, t: usize) -> Dataset {
    Dataset {
        x: dataset.x[..t].to_vec(),
        y: dataset.y[..t].to_vec(),
    }
}

/// Hypervolume of the noiseless front of the first `t` observed inputs, for
/// every `t` from the end of the initial design to the budget.
pub fn hypervolume_series(result: &RunResult) -> anyhow::Result<Vec<(usize, f64)>> {
    let problem = make_problem(&result.config.problem)?;
    let values: Vec<Vec<f64>> = result
        .dataset
        .x
        .iter()
        .map(|x| problem.eval(x))
        .collect::<Result<_, _>>()?;
    (result.n_init..=values.len())
        .map(|t| {
            let seen = &values[..t];
            let front: Vec<Vec<f64>> = pareto_front(seen).into_iter().map(|i| seen[i].clone()).collect();
            Ok((t, hypervolume(&front, &result.reference)?))
        })
        .collect()
}

/// Writes every plot file into `out` and returns their paths.
pub fn emit(run_dir: &Path, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let result = read_run(run_dir)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let config = &result.config;
    let bounds = &config.problem.bounds;
    let d = bounds.len();
    let grid = probe_grid(config);
    let mut rows_x: Vec<Vec<f64>> = (0..grid.nrows())
        .map(|i| scale_to_box(&grid.row(i).iter().copied().collect::<Vec<_>>(), bounds))
        .collect();
    let mut order: Vec<usize> = (0..rows_x.len()).collect();
    if d == 1 {
        order.sort_by(|&a, &b| rows_x[a][0].total_cmp(&rows_x[b][0]));
    }
    rows_x = order.iter().map(|&i| rows_x[i].clone()).collect();
    let mut header: Vec<String> = if d == 1 {
        vec!["x".into()]
    } else {
        (0..d).map(|j| format!("x{j}")).collect()
    };
    header.extend(["mu".to_string(), "variance".to_string()]);

    let mut written = Vec::new();
    for t in logged_iterations(&result) {
        let mut state = OptState::new(prefix(&result.dataset, t), result.noise_sigmas.clone());
        state.iteration = t;
        state.active = active_before(&result, t);
        fit_active_models(&mut state, config)?;
        for (model, &j) in state.models.iter().zip(&state.active) {
            let post = model.predict(&grid)?;
            let rows: Vec<Vec<String>> = order
                .iter()
                .zip(&rows_x)
                .map(|(&i, x)| {
                    x.iter()
                        .chain([&post.mean[i], &post.variance[i]])
                        .map(f64::to_string)
                        .collect()
                })
                .collect();
            let path = out.join(format!("posterior_t{t}_obj{j}.csv"));
            write_csv(&path, &header, &rows)?;
            written.push(path);
        }
    }

    let series = hypervolume_series(&result)?;
    let path = out.join(HYPERVOLUME_FILE);
    let rows: Vec<Vec<String>> = series.iter().map(|(t, h)| vec![t.to_string(), h.to_string()]).collect();
    write_csv(&path, &["iteration".into(), "hypervolume".into()], &rows)?;
    written.push(path);
    Ok(written)
}
