//! Experiment configuration files (TOML).
//!
//! ```toml
//! problem = "branin3"
//! max_evaluations = 25
//! seed = 0
//! delta_start = 10
//! epsilon = 0.1
//!
//! [sweep]
//! delta_start = [10, 15, 20]
//! epsilon = [0.05, 0.1, 0.2]
//! seeds = [0, 1, 2]
//! baseline = true
//! ```
//!
//! `problem` is either a preset name or a table with `objectives`, `bounds`,
//! `noise` and `shared_noise`. Unknown keys are rejected everywhere.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use maobo_core::benchmarks::{preset, ProblemSpec};
use maobo_core::bo::{AcquisitionConfig, ModelConfig, RunConfig};
use maobo_core::similarity::SimilarityConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Preset(String),
    Spec(ProblemSpec),
}

impl ProblemSource {
    pub fn resolve(&self) -> Result<ProblemSpec, ConfigError> {
        match self {
            ProblemSource::Preset(name) => preset(name).map_err(|e| invalid("problem", e.to_string())),
            ProblemSource::Spec(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub delta_start: Vec<usize>,
    pub epsilon: Vec<f64>,
    /// Empty means the top-level `seed` alone.
    pub seeds: Vec<u64>,
    /// Also run every seed with reduction disabled.
    pub baseline: bool,
    /// Noiseless Sobol samples used to place the shared reference point.
    pub reference_samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            delta_start: vec![10, 15, 20],
            epsilon: vec![0.05, 0.1, 0.2],
            seeds: Vec::new(),
            baseline: true,
            reference_samples: 2048,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub max_evaluations: usize,
    pub seed: u64,
    #[serde(default = "defaults::n_init")]
    pub n_init: usize,
    #[serde(default = "defaults::delta_start")]
    pub delta_start: usize,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "defaults::yes")]
    pub reduction: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub similarity: SimilarityConfig,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

mod defaults {
    pub fn n_init() -> usize {
        5
    }
    pub fn delta_start() -> usize {
        10
    }
    pub fn epsilon() -> f64 {
        0.1
    }
    pub fn yes() -> bool {
        true
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes to TOML")
    }

    /// Seeds of the sweep, falling back to the single top-level seed.
    pub fn seeds(&self) -> Vec<u64> {
        if self.sweep.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.sweep.seeds.clone()
        }
    }

    /// The single-run configuration described by the top-level keys.
    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let mut c = RunConfig::new(self.problem.resolve()?, self.max_evaluations, self.seed);
        c.n_init = self.n_init;
        c.delta_start = self.delta_start;
        c.epsilon = self.epsilon;
        c.reduction = self.reduction;
        c.reference = self.reference.clone();
        c.similarity = self.similarity.clone();
        c.acquisition = self.acquisition.clone();
        c.model = self.model.clone();
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let problem = self.problem.resolve()?;
        problem.validate().map_err(|e| invalid("problem", e.to_string()))?;
        if self.max_evaluations == 0 {
            return Err(invalid("max_evaluations", "must be positive"));
        }
        if self.n_init < 2 {
            return Err(invalid("n_init", format!("{} is below the minimum of 2", self.n_init)));
        }
        if self.n_init > self.max_evaluations {
            return Err(invalid(
                "n_init",
                format!("{} exceeds max_evaluations = {}", self.n_init, self.max_evaluations),
            ));
        }
        check_epsilon("epsilon", self.epsilon)?;
        self.similarity
            .validate()
            .map_err(|e| invalid("similarity", e.to_string()))?;
        if self.acquisition.candidates == 0 {
            return Err(invalid("acquisition.candidates", "must be positive"));
        }
        if self.acquisition.samples == 0 {
            return Err(invalid("acquisition.samples", "must be positive"));
        }
        if self.model.restarts == 0 {
            return Err(invalid("model.restarts", "must be positive"));
        }
        if self.model.probe_points_per_dim == 0 {
            return Err(invalid("model.probe_points_per_dim", "must be positive"));
        }
        if let Some(r) = &self.reference {
            if r.len() != problem.num_objectives() {
                return Err(invalid(
                    "reference",
                    format!("has {} entries but the problem has {} objectives", r.len(), problem.num_objectives()),
                ));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(invalid("reference", "entries must be finite"));
            }
        }
        if self.sweep.delta_start.is_empty() {
            return Err(invalid("sweep.delta_start", "must not be empty"));
        }
        if self.sweep.epsilon.is_empty() {
            return Err(invalid("sweep.epsilon", "must not be empty"));
        }
        for (i, e) in self.sweep.epsilon.iter().enumerate() {
            check_epsilon(&format!("sweep.epsilon[{i}]"), *e)?;
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.sweep.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(invalid("sweep.seeds", format!("seed {dup} appears more than once")));
        }
        if self.sweep.reference_samples == 0 && self.reference.is_none() {
            return Err(invalid("sweep.reference_samples", "must be positive when no reference is given"));
        }
        Ok(())
    }
}

fn check_epsilon(field: &str, e: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&e) {
        Ok(())
    } else {
        Err(invalid(field, format!("{e} is outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use maobo_core::benchmarks::Benchmark;

    const MINIMAL: &str = "problem = \"branin3\"\nmax_evaluations = 25\nseed = 3\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.n_init, 5);
        assert_eq!(c.similarity.eps1, 0.25);
        assert_eq!(c.similarity.eps2, 0.0);
        assert_eq!(c.similarity.delta_tol, 0.0);
        assert_eq!(c.seeds(), vec![3]);
        let run = c.run_config().unwrap();
        assert_eq!(run.problem.num_objectives(), 3);
        assert_eq!(run.seed, 3);
    }

    #[test]
    fn epsilon_out_of_range_names_the_field() {
        let err = ExperimentConfig::parse(&format!("{MINIMAL}epsilon = 1.5\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("epsilon") && msg.contains("[0, 1]"), "{msg}");
        let err = ExperimentConfig::parse(&format!("{MINIMAL}[sweep]\nepsilon = [0.1, 2.0]\n")).unwrap_err();
        assert!(err.to_string().contains("sweep.epsilon[1]"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let err = ExperimentConfig::parse(&format!("{MINIMAL}\n[model]\nkernal = \"matern52\"\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kernal") && msg.contains("line 6"), "{msg}");
        assert!(ExperimentConfig::parse(&format!("{MINIMAL}bogus = 1\n")).is_err());
    }

    #[test]
    fn duplicate_seeds_rejected() {
        let err = ExperimentConfig::parse(&format!("{MINIMAL}[sweep]\nseeds = [1, 2, 1]\n")).unwrap_err();
        assert!(err.to_string().contains("sweep.seeds"));
    }

    #[test]
    fn explicit_problem_and_round_trip() {
        let text = r#"
max_evaluations = 20
seed = 1
epsilon = 0.05

[problem]
bounds = [[0.0, 1.0], [0.0, 1.0]]
shared_noise = true
noise = { kind = "absolute", sigma = 0.0 }
objectives = [
    { function = "sphere" },
    { function = "michalewicz2d{m=100}", scale = 2.0, offset = 1.0 },
]

[similarity]
d1_mode = { kind = "p_norm", p = 2.0 }

[sweep]
seeds = [4, 5]
baseline = false
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        let spec = c.problem.resolve().unwrap();
        assert_eq!(spec.objectives[1].function, Benchmark::Michalewicz2d { m: 100.0 });
        assert!(spec.shared_noise);
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        let again = ExperimentConfig::parse(&ExperimentConfig::parse(MINIMAL).unwrap().to_toml()).unwrap();
        assert_eq!(again, ExperimentConfig::parse(MINIMAL).unwrap());
    }

    #[test]
    fn unknown_preset_is_a_problem_error() {
        let err = ExperimentConfig::parse("problem = \"nope\"\nmax_evaluations = 5\nseed = 0\n").unwrap_err();
        assert!(err.to_string().contains("problem"));
    }
}
