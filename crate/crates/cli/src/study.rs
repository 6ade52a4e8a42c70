//! Pairwise similarity of GPs fit to pairs of analytic functions.

use std::f64::consts::PI;

use anyhow::Context;
use maobo_core::benchmarks::Benchmark;
use maobo_core::gp::{fit_map, FitOptions, GpModel, KernelFamily, PredictiveSummary};
use maobo_core::qmc::{scale_to_box, Sobol};
use maobo_core::report::write_csv;
use maobo_core::seeds::derive_seed;
use maobo_core::similarity::{gp_distance, SimilarityConfig, SimilarityReport};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const STUDY_STREAM: u64 = 0x5354;

/// A function sampled on its own box; GPs are fit in unit-cube coordinates so
/// functions on different boxes share one probe grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyFunction {
    pub function: Benchmark,
    pub bounds: Vec<(f64, f64)>,
}

impl StudyFunction {
    pub fn on_default_box(function: Benchmark) -> Self {
        StudyFunction {
            bounds: function.default_box(),
            function,
        }
    }

    pub fn on_box(function: Benchmark, bounds: Vec<(f64, f64)>) -> Self {
        StudyFunction { function, bounds }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyPair {
    pub name: String,
    pub f: StudyFunction,
    pub g: StudyFunction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub samples: usize,
    pub probe_points_per_dim: usize,
    pub seeds: Vec<u64>,
    pub kernel: KernelFamily,
    pub restarts: usize,
    pub similarity: SimilarityConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            samples: 200,
            probe_points_per_dim: 500,
            seeds: (0..5).collect(),
            kernel: KernelFamily::SquaredExponential,
            restarts: 5,
            similarity: SimilarityConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub pair: String,
    pub seed: u64,
    #[serde(flatten)]
    pub report: SimilarityReport,
}

/// The function pairs compared in the reference study. The Ackley pairs use
/// a box around the origin where the cosine ripples are resolvable from 200
/// samples.
pub fn default_pairs() -> Vec<StudyPair> {
    let ackley_box = vec![(-0.4, 0.4); 2];
    let ackley = |a: f64, c: f64| StudyFunction::on_box(Benchmark::Ackley { a, b: 0.2, c }, ackley_box.clone());
    let plain = StudyFunction::on_default_box;
    vec![
        StudyPair {
            name: "michalewicz_m50_vs_m100".into(),
            f: plain(Benchmark::Michalewicz { m: 50.0 }),
            g: plain(Benchmark::Michalewicz { m: 100.0 }),
        },
        StudyPair {
            name: "michalewicz_m100_vs_parabola".into(),
            f: plain(Benchmark::Michalewicz { m: 100.0 }),
            g: plain(Benchmark::Parabola),
        },
        StudyPair {
            name: "sphere_vs_ellipsoid".into(),
            f: plain(Benchmark::Sphere),
            g: plain(Benchmark::Ellipsoid),
        },
        StudyPair {
            name: "ellipsoid_vs_styblinski_tang".into(),
            f: plain(Benchmark::Ellipsoid),
            g: plain(Benchmark::StyblinskiTang),
        },
        StudyPair {
            name: "griewank_vs_levy".into(),
            f: plain(Benchmark::Griewank),
            g: plain(Benchmark::Levy),
        },
        StudyPair {
            name: "ackley_a70_vs_a100".into(),
            f: ackley(70.0, 2.0 * PI),
            g: ackley(100.0, 2.0 * PI),
        },
        StudyPair {
            name: "ackley_c_pi_vs_6pi".into(),
            f: ackley(20.0, PI),
            g: ackley(20.0, 6.0 * PI),
        },
    ]
}

/// Unit-cube probe grid of `per_dim · d` points.
pub fn study_grid(d: usize, per_dim: usize, seed: u64) -> DMatrix<f64> {
    let pts = Sobol::scrambled(d, derive_seed(seed, STUDY_STREAM, 1)).points(per_dim * d);
    DMatrix::from_fn(pts.len(), d, |i, j| pts[i][j])
}

/// Fits a GP to `samples` noiseless evaluations of `f` at scrambled Sobol points.
pub fn fit_function(f: &StudyFunction, config: &StudyConfig, seed: u64) -> anyhow::Result<GpModel> {
    let d = f.bounds.len();
    anyhow::ensure!(
        f.function.dim() == d,
        "{} is {}-dimensional but its box has {d} dimensions",
        f.function,
        f.function.dim()
    );
    let unit = Sobol::scrambled(d, derive_seed(seed, STUDY_STREAM, 0)).points(config.samples);
    let x = DMatrix::from_fn(unit.len(), d, |i, j| unit[i][j]);
    let y = unit
        .iter()
        .map(|u| f.function.eval(&scale_to_box(u, &f.bounds)))
        .collect::<Result<Vec<f64>, _>>()?;
    let opts = FitOptions {
        restarts: config.restarts,
        seed: derive_seed(seed, STUDY_STREAM, 2),
        input_widths: Some(vec![1.0; d]),
        ..Default::default()
    };
    Ok(fit_map(&x, &DVector::from_vec(y), config.kernel, &opts)?)
}

pub fn summarize(f: &StudyFunction, config: &StudyConfig, seed: u64) -> anyhow::Result<PredictiveSummary> {
    let model = fit_function(f, config, seed)?;
    let grid = study_grid(f.bounds.len(), config.probe_points_per_dim, seed);
    Ok(model.predict(&grid)?)
}

/// Distance for every pair and seed. Each distinct function is fit once per seed.
pub fn run_study(pairs: &[StudyPair], config: &StudyConfig) -> anyhow::Result<Vec<StudyRow>> {
    config.similarity.validate()?;
    let mut functions: Vec<&StudyFunction> = Vec::new();
    for p in pairs {
        anyhow::ensure!(
            p.f.bounds.len() == p.g.bounds.len(),
            "pair {} compares functions of different input dimension",
            p.name
        );
        for f in [&p.f, &p.g] {
            if !functions.contains(&f) {
                functions.push(f);
            }
        }
    }
    let jobs: Vec<(usize, u64)> = config
        .seeds
        .iter()
        .flat_map(|&s| (0..functions.len()).map(move |i| (i, s)))
        .collect();
    let fitted: Vec<PredictiveSummary> = jobs
        .par_iter()
        .map(|&(i, s)| summarize(functions[i], config, s))
        .collect::<anyhow::Result<_>>()?;
    let lookup = |f: &StudyFunction, s: u64| {
        let i = functions.iter().position(|g| *g == f).expect("function registered");
        let j = jobs.iter().position(|&(fi, fs)| fi == i && fs == s).expect("job registered");
        &fitted[j]
    };
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        for p in pairs {
            let report = gp_distance(lookup(&p.f, seed), lookup(&p.g, seed), &config.similarity)?;
            rows.push(StudyRow {
                pair: p.name.clone(),
                seed,
                report,
            });
        }
    }
    Ok(rows)
}

/// Per-pair mean of each report field over seeds, in first-seen pair order.
pub fn mean_by_pair(rows: &[StudyRow]) -> Vec<(String, SimilarityReport)> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.pair.as_str()) {
            names.push(&r.pair);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let group: Vec<&SimilarityReport> = rows.iter().filter(|r| r.pair == name).map(|r| &r.report).collect();
            let n = group.len() as f64;
            let avg = |f: fn(&SimilarityReport) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            let mut mean = *group[0];
            mean.s1 = avg(|r| r.s1);
            mean.s2 = avg(|r| r.s2);
            mean.s3 = avg(|r| r.s3);
            mean.total = avg(|r| r.total);
            mean.rho = avg(|r| r.rho);
            mean.d1 = avg(|r| r.d1);
            mean.d2 = avg(|r| r.d2);
            mean.affine.a = avg(|r| r.affine.a);
            mean.affine.b = avg(|r| r.affine.b);
            mean.affine.clamped = group.iter().any(|r| r.affine.clamped);
            mean.degenerate = group.iter().any(|r| r.degenerate);
            (name.to_string(), mean)
        })
        .collect()
}

pub const STUDY_FILE: &str = "similarity.csv";
pub const STUDY_MEAN_FILE: &str = "similarity_mean.csv";

const REPORT_COLUMNS: [&str; 11] = ["total", "s1", "s2", "s3", "d1", "d2", "rho", "a", "b", "clamped", "degenerate"];

fn report_fields(r: &SimilarityReport) -> Vec<String> {
    vec![
        r.total.to_string(),
        r.s1.to_string(),
        r.s2.to_string(),
        r.s3.to_string(),
        r.d1.to_string(),
        r.d2.to_string(),
        r.rho.to_string(),
        r.affine.a.to_string(),
        r.affine.b.to_string(),
        r.affine.clamped.to_string(),
        r.degenerate.to_string(),
    ]
}

/// Writes per-seed rows and per-pair means as CSV into `out`.
pub fn write_study(out: &std::path::Path, rows: &[StudyRow]) -> anyhow::Result<()> {
    std::fs::create_dir_all(out)?;
    let mut header = vec!["pair".to_string(), "seed".to_string()];
    header.extend(REPORT_COLUMNS.iter().map(|s| s.to_string()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.pair.clone(), r.seed.to_string()];
            v.extend(report_fields(&r.report));
            v
        })
        .collect();
    write_csv(&out.join(STUDY_FILE), &header, &body)?;

    let mut header = vec!["pair".to_string()];
    header.extend(REPORT_COLUMNS.iter().map(|s| s.to_string()));
    let body: Vec<Vec<String>> = mean_by_pair(rows)
        .into_iter()
        .map(|(name, r)| {
            let mut v = vec![name];
            v.extend(report_fields(&r));
            v
        })
        .collect();
    write_csv(&out.join(STUDY_MEAN_FILE), &header, &body)?;
    Ok(())
}

pub fn load_study_config(path: &std::path::Path) -> anyhow::Result<StudyConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: StudyConfig = toml::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    config.similarity.validate()?;
    anyhow::ensure!(config.samples >= 2, "invalid `samples`: need at least 2");
    anyhow::ensure!(!config.seeds.is_empty(), "invalid `seeds`: must not be empty");
    anyhow::ensure!(config.probe_points_per_dim > 0, "invalid `probe_points_per_dim`: must be positive");
    anyhow::ensure!(config.restarts > 0, "invalid `restarts`: must be positive");
    Ok(config)
}
