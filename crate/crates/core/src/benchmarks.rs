//! Analytic test functions and multi-objective problems built from them.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmc::{scale_to_box, Sobol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchmarkError {
    #[error("unknown benchmark `{0}`")]
    UnknownName(String),
    #[error("bad parameter list in `{0}`: {1}")]
    BadParams(String, String),
    #[error("`{name}` takes {expected}-dimensional input, got {found}")]
    DimensionMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Benchmark {
    /// One-dimensional `−sin(x)·sin(x²/π)^{2m}`.
    Michalewicz { m: f64 },
    /// One-dimensional `x²`.
    Parabola,
    StyblinskiTang,
    Ellipsoid,
    /// `x² + y²`, also the degree-two paraboloid.
    Sphere,
    /// `x⁴ + y⁴`, the degree-four paraboloid.
    Quartic,
    Griewank,
    Levy,
    Ackley { a: f64, b: f64, c: f64 },
    Branin,
    Michalewicz2d { m: f64 },
    Beale,
    /// `x·exp(−x² − y²)`.
    Gramacy,
}

impl Benchmark {
    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Michalewicz { .. } => "michalewicz",
            Benchmark::Parabola => "parabola",
            Benchmark::StyblinskiTang => "styblinski_tang",
            Benchmark::Ellipsoid => "ellipsoid",
            Benchmark::Sphere => "sphere",
            Benchmark::Quartic => "quartic",
            Benchmark::Griewank => "griewank",
            Benchmark::Levy => "levy",
            Benchmark::Ackley { .. } => "ackley",
            Benchmark::Branin => "branin",
            Benchmark::Michalewicz2d { .. } => "michalewicz2d",
            Benchmark::Beale => "beale",
            Benchmark::Gramacy => "gramacy",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Benchmark::Michalewicz { .. } | Benchmark::Parabola => 1,
            _ => 2,
        }
    }

    pub fn default_box(&self) -> Vec<(f64, f64)> {
        match self {
            Benchmark::Michalewicz { .. } => vec![(0.0, PI)],
            Benchmark::Parabola => vec![(-2.0, 2.0)],
            Benchmark::Branin => vec![(-5.0, 10.0), (0.0, 15.0)],
            Benchmark::Michalewicz2d { .. } => vec![(0.0, PI); 2],
            Benchmark::Beale => vec![(-4.5, 4.5); 2],
            Benchmark::Gramacy => vec![(-2.0, 4.0); 2],
            _ => vec![(-5.0, 5.0); 2],
        }
    }

    /// Known global minimizer, where one is standard.
    pub fn minimizer(&self) -> Option<Vec<f64>> {
        match self {
            Benchmark::Parabola => Some(vec![0.0]),
            Benchmark::Sphere
            | Benchmark::Ellipsoid
            | Benchmark::Quartic
            | Benchmark::Griewank
            | Benchmark::Ackley { .. } => Some(vec![0.0, 0.0]),
            Benchmark::StyblinskiTang => Some(vec![-2.903_534; 2]),
            Benchmark::Levy => Some(vec![1.0, 1.0]),
            Benchmark::Branin => Some(vec![PI, 2.275]),
            Benchmark::Beale => Some(vec![3.0, 0.5]),
            Benchmark::Gramacy => Some(vec![-(0.5f64).sqrt(), 0.0]),
            Benchmark::Michalewicz { .. } | Benchmark::Michalewicz2d { .. } => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, BenchmarkError> {
        if x.len() != self.dim() {
            return Err(BenchmarkError::DimensionMismatch {
                name: self.name().into(),
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match *self {
            Benchmark::Michalewicz { m } => michalewicz_term(x[0], 1.0, m),
            Benchmark::Parabola => x[0] * x[0],
            Benchmark::StyblinskiTang => {
                0.5 * x.iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>()
            }
            Benchmark::Ellipsoid => {
                // Σ_i Σ_{j ≤ i} x_j²
                let mut total = 0.0;
                let mut partial = 0.0;
                for v in x {
                    partial += v * v;
                    total += partial;
                }
                total
            }
            Benchmark::Sphere => x.iter().map(|v| v * v).sum(),
            Benchmark::Quartic => x.iter().map(|v| v.powi(4)).sum(),
            Benchmark::Griewank => {
                (x[0] * x[0] + x[1] * x[1]) / 4000.0 - x[0].cos() * (x[1] / 2f64.sqrt()).cos() + 1.0
            }
            Benchmark::Levy => {
                let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                (PI * w[0]).sin().powi(2)
                    + (w[0] - 1.0).powi(2) * (1.0 + 10.0 * (PI * w[0] + 1.0).sin().powi(2))
                    + (w[1] - 1.0).powi(2) * (1.0 + (2.0 * PI * w[1]).sin().powi(2))
            }
            Benchmark::Ackley { a, b, c } => {
                let d = x.len() as f64;
                let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
                let cs = x.iter().map(|v| (c * v).cos()).sum::<f64>() / d;
                -a * (-b * sq.sqrt()).exp() - cs.exp() + a + E
            }
            Benchmark::Branin => {
                let (u, v) = (x[0], x[1]);
                let t = v - 5.1 * u * u / (4.0 * PI * PI) + 5.0 * u / PI - 6.0;
                t * t + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * u.cos() + 10.0
            }
            Benchmark::Michalewicz2d { m } => {
                michalewicz_term(x[0], 1.0, m) + michalewicz_term(x[1], 2.0, m)
            }
            Benchmark::Beale => {
                let (u, v) = (x[0], x[1]);
                (1.5 - u + u * v).powi(2)
                    + (2.25 - u + u * v * v).powi(2)
                    + (2.625 - u + u * v.powi(3)).powi(2)
            }
            Benchmark::Gramacy => x[0] * (-x[0] * x[0] - x[1] * x[1]).exp(),
        }
    }
}

// −sin(x)·sin(i·x²/π)^{2m}
fn michalewicz_term(x: f64, i: f64, m: f64) -> f64 {
    -x.sin() * (i * x * x / PI).sin().abs().powf(2.0 * m)
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::Michalewicz { m } | Benchmark::Michalewicz2d { m } => {
                write!(f, "{}{{m={m}}}", self.name())
            }
            Benchmark::Ackley { a, b, c } => write!(f, "ackley{{a={a},b={b},c={c}}}"),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for Benchmark {
    type Err = BenchmarkError;

    /// Parses `name` or `name{key=value,...}`. Numeric values may be written
    /// as `pi`, `2pi`, `6*pi` and so on.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, params) = match s.find('{') {
            Some(open) => {
                let body = s[open + 1..]
                    .strip_suffix('}')
                    .ok_or_else(|| BenchmarkError::BadParams(s.into(), "missing closing `}`".into()))?;
                (&s[..open], parse_params(s, body)?)
            }
            None => (s, Vec::new()),
        };
        let mut params = Params { source: s, entries: params };
        let bench = match name.trim().to_ascii_lowercase().as_str() {
            "michalewicz" => Benchmark::Michalewicz { m: params.take("m", 10.0) },
            "michalewicz2d" => Benchmark::Michalewicz2d { m: params.take("m", 10.0) },
            "parabola" => Benchmark::Parabola,
            "styblinski_tang" | "styblinski-tang" | "styblinskitang" => Benchmark::StyblinskiTang,
            "ellipsoid" => Benchmark::Ellipsoid,
            "sphere" | "paraboloid2" => Benchmark::Sphere,
            "quartic" | "paraboloid4" => Benchmark::Quartic,
            "griewank" => Benchmark::Griewank,
            "levy" => Benchmark::Levy,
            "ackley" => Benchmark::Ackley {
                a: params.take("a", 20.0),
                b: params.take("b", 0.2),
                c: params.take("c", 2.0 * PI),
            },
            "branin" => Benchmark::Branin,
            "beale" => Benchmark::Beale,
            "gramacy" => Benchmark::Gramacy,
            other => return Err(BenchmarkError::UnknownName(other.into())),
        };
        params.finish()?;
        Ok(bench)
    }
}

struct Params<'a> {
    source: &'a str,
    entries: Vec<(String, f64)>,
}

impl Params<'_> {
    fn take(&mut self, key: &str, default: f64) -> f64 {
        match self.entries.iter().position(|(k, _)| k == key) {
            Some(i) => self.entries.remove(i).1,
            None => default,
        }
    }

    fn finish(self) -> Result<(), BenchmarkError> {
        match self.entries.first() {
            Some((k, _)) => Err(BenchmarkError::BadParams(self.source.into(), format!("unknown parameter `{k}`"))),
            None => Ok(()),
        }
    }
}

fn parse_params(source: &str, body: &str) -> Result<Vec<(String, f64)>, BenchmarkError> {
    let bad = |msg: String| BenchmarkError::BadParams(source.into(), msg);
    body.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{}`", pair.trim())))?;
            let value = parse_number(v.trim()).ok_or_else(|| bad(format!("`{}` is not a number", v.trim())))?;
            Ok((k.trim().to_string(), value))
        })
        .collect()
}

fn parse_number(s: &str) -> Option<f64> {
    let lower = s.to_ascii_lowercase();
    if let Some(head) = lower.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor = if head.is_empty() { 1.0 } else { head.parse::<f64>().ok()? };
        return Some(factor * PI);
    }
    lower.parse().ok().filter(|v: &f64| v.is_finite())
}

impl Serialize for Benchmark {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Benchmark {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One objective of a problem: `scale · f(x) + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub function: Benchmark,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
}

fn one() -> f64 {
    1.0
}

impl ObjectiveSpec {
    pub fn plain(function: Benchmark) -> Self {
        ObjectiveSpec {
            function,
            scale: 1.0,
            offset: 0.0,
        }
    }

    pub fn scaled(function: Benchmark, scale: f64) -> Self {
        ObjectiveSpec {
            function,
            scale,
            offset: 0.0,
        }
    }

    pub fn label(&self) -> String {
        match (self.scale, self.offset) {
            (s, o) if s == 1.0 && o == 0.0 => self.function.to_string(),
            (s, 0.0) => format!("{s}*{}", self.function),
            (s, o) => format!("{s}*{}+{o}", self.function),
        }
    }
}

/// Observation noise added to each evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    /// Standard deviation proportional to each objective's range over the initial design.
    Relative { fraction: f64 },
    /// The same standard deviation for every objective.
    Absolute { sigma: f64 },
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Relative { fraction: 0.01 }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::Absolute { sigma: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub objectives: Vec<ObjectiveSpec>,
    pub bounds: Vec<(f64, f64)>,
    #[serde(default)]
    pub noise: NoiseSpec,
    /// Use one standard-normal draw per evaluated row for all objectives.
    #[serde(default)]
    pub shared_noise: bool,
}

impl ProblemSpec {
    pub fn new(objectives: Vec<ObjectiveSpec>, bounds: Vec<(f64, f64)>) -> Self {
        ProblemSpec {
            objectives,
            bounds,
            noise: NoiseSpec::default(),
            shared_noise: false,
        }
    }

    pub fn validate(&self) -> Result<(), BenchmarkError> {
        let bad = |m: String| Err(BenchmarkError::InvalidProblem(m));
        if self.objectives.is_empty() {
            return bad("at least one objective is required".into());
        }
        let d = self.bounds.len();
        for o in &self.objectives {
            if o.function.dim() != d {
                return Err(BenchmarkError::DimensionMismatch {
                    name: o.function.to_string(),
                    expected: o.function.dim(),
                    found: d,
                });
            }
            if !(o.scale.is_finite() && o.offset.is_finite()) {
                return bad(format!("objective `{}` has a non-finite transform", o.label()));
            }
        }
        for (i, (lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("bounds[{i}] = ({lo}, {hi}) is not a proper interval"));
            }
        }
        match self.noise {
            NoiseSpec::Relative { fraction: v } | NoiseSpec::Absolute { sigma: v } if !(v >= 0.0 && v.is_finite()) => {
                bad(format!("noise level {v} must be non-negative"))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }
}

/// A validated problem that evaluates its objectives noiselessly.
#[derive(Clone, Debug)]
pub struct Problem {
    spec: ProblemSpec,
}

pub fn make_problem(spec: &ProblemSpec) -> Result<Problem, BenchmarkError> {
    spec.validate()?;
    Ok(Problem { spec: spec.clone() })
}

impl Problem {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn num_objectives(&self) -> usize {
        self.spec.objectives.len()
    }

    pub fn dim(&self) -> usize {
        self.spec.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.spec.bounds
    }

    pub fn eval_objective(&self, k: usize, x: &[f64]) -> Result<f64, BenchmarkError> {
        let o = &self.spec.objectives[k];
        Ok(o.scale * o.function.eval(x)? + o.offset)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, BenchmarkError> {
        (0..self.num_objectives()).map(|k| self.eval_objective(k, x)).collect()
    }

    /// Component-wise maximum plus 10% of the range over `n` Sobol points.
    pub fn reference_from_grid(&self, n: usize) -> Result<Vec<f64>, BenchmarkError> {
        let sobol = Sobol::new(self.dim());
        let mut lo = vec![f64::INFINITY; self.num_objectives()];
        let mut hi = vec![f64::NEG_INFINITY; self.num_objectives()];
        for u in sobol.points(n) {
            let y = self.eval(&scale_to_box(&u, self.bounds()))?;
            for k in 0..y.len() {
                lo[k] = lo[k].min(y[k]);
                hi[k] = hi[k].max(y[k]);
            }
        }
        Ok(hi.iter().zip(&lo).map(|(h, l)| h + 0.1 * (h - l)).collect())
    }
}

/// Box shared by the objectives of the `bowl4` preset.
pub const BOWL4_BOUNDS: (f64, f64) = (-0.5, 0.5);

/// Named multi-objective problems: `branin3`, `bowl4`, `michalewicz4{m=75}`.
pub fn preset(name: &str) -> Result<ProblemSpec, BenchmarkError> {
    let s = name.trim();
    let (base, m) = match s.find('{') {
        Some(open) => {
            let body = s[open + 1..]
                .strip_suffix('}')
                .ok_or_else(|| BenchmarkError::BadParams(s.into(), "missing closing `}`".into()))?;
            let mut params = Params { source: s, entries: parse_params(s, body)? };
            let m = params.take("m", 75.0);
            params.finish()?;
            (&s[..open], m)
        }
        None => (s, 75.0),
    };
    match base {
        "branin3" if m == 75.0 => Ok(ProblemSpec::new(
            vec![
                ObjectiveSpec::plain(Benchmark::Branin),
                ObjectiveSpec::scaled(Benchmark::Branin, 3.0),
                ObjectiveSpec::scaled(Benchmark::Branin, -1.0),
            ],
            Benchmark::Branin.default_box(),
        )),
        "bowl4" if m == 75.0 => Ok(ProblemSpec::new(
            vec![
                ObjectiveSpec::plain(Benchmark::Sphere),
                ObjectiveSpec::plain(Benchmark::Quartic),
                ObjectiveSpec::plain(Benchmark::Griewank),
                ObjectiveSpec::plain(Benchmark::Gramacy),
            ],
            vec![BOWL4_BOUNDS; 2],
        )),
        "michalewicz4" => Ok(ProblemSpec::new(
            vec![
                ObjectiveSpec::plain(Benchmark::Michalewicz2d { m }),
                ObjectiveSpec::plain(Benchmark::Michalewicz2d { m: 100.0 }),
                ObjectiveSpec::plain(Benchmark::Beale),
                ObjectiveSpec::plain(Benchmark::StyblinskiTang),
            ],
            vec![(0.0, PI); 2],
        )),
        "branin3" | "bowl4" => Err(BenchmarkError::BadParams(s.into(), "preset takes no parameters".into())),
        other => Err(BenchmarkError::UnknownName(other.into())),
    }
}
