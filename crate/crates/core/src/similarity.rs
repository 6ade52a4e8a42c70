//! Weighted-sum distance between two GP predictive summaries on a shared grid.
//!
//! The distance combines a mean-vector term (after fitting `f` onto `g` by a
//! positive affine map), a variance term, and one minus the Pearson
//! correlation of the two mean vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::PredictiveSummary;

const MIN_SLOPE: f64 = 1e-8;
const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 probe points, got {0}")]
    TooFewPoints(usize),
    #[error("summaries were computed on different probe grids")]
    GridMismatch,
    #[error("invalid similarity config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum D1Mode {
    /// Mean absolute difference over the combined range of both vectors.
    AvgRelativeDistance,
    /// `‖t − μ_g‖_p / m^{1/p}` over entries above tolerance, divided by the combined range.
    PNorm { p: f64 },
    /// Number of entries whose absolute difference exceeds the tolerance.
    CountExceeding,
    /// Fraction of entries whose absolute difference exceeds the tolerance.
    FractionExceeding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum D2Mode {
    FrobeniusEntrywise,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimilarityConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub d1_mode: D1Mode,
    pub delta_tol: f64,
    pub d2_mode: D2Mode,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            eps1: 0.25,
            eps2: 0.0,
            d1_mode: D1Mode::AvgRelativeDistance,
            delta_tol: 0.0,
            d2_mode: D2Mode::None,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<(), SimilarityError> {
        let bad = |msg: String| Err(SimilarityError::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.eps1) {
            return bad(format!("eps1 = {} must lie in [0, 1]", self.eps1));
        }
        if !(0.0..=1.0).contains(&self.eps2) {
            return bad(format!("eps2 = {} must lie in [0, 1]", self.eps2));
        }
        if self.eps1 + self.eps2 > 1.0 + 1e-12 {
            return bad(format!("eps1 + eps2 = {} must not exceed 1", self.eps1 + self.eps2));
        }
        if !(self.delta_tol >= 0.0 && self.delta_tol.is_finite()) {
            return bad(format!("delta_tol = {} must be non-negative", self.delta_tol));
        }
        if let D1Mode::PNorm { p } = self.d1_mode {
            if !(p >= 1.0 && p.is_finite()) {
                return bad(format!("d1 p-norm order {p} must be a finite number >= 1"));
            }
        }
        Ok(())
    }

    /// Weighted sum of the three components.
    pub fn combine(&self, d1: f64, d2: f64, rho: f64) -> (f64, f64, f64, f64) {
        let s1 = self.eps1 * d1;
        let s2 = self.eps2 * d2;
        let s3 = (1.0 - self.eps1 - self.eps2) * (1.0 - rho);
        (s1, s2, s3, s1 + s2 + s3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub a: f64,
    pub b: f64,
    /// True when the least-squares slope was non-positive or `μ_f` was constant.
    pub clamped: bool,
}

impl AffineFit {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| self.a * x + self.b).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub total: f64,
    #[serde(flatten)]
    pub affine: AffineFit,
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
    /// Either mean vector had (numerically) zero spread, so ρ was set to 0.
    pub degenerate: bool,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(SimilarityError::TooFewPoints(a.len()));
    }
    Ok(())
}

/// Least-squares `a, b` minimizing `‖a μ_f + b − μ_g‖²`, with the slope kept positive.
pub fn fit_affine(mu_f: &[f64], mu_g: &[f64]) -> Result<AffineFit, SimilarityError> {
    check_lengths(mu_f, mu_g)?;
    let (mf, mg) = (mean(mu_f), mean(mu_g));
    let sxx: f64 = mu_f.iter().map(|x| (x - mf).powi(2)).sum();
    let sxy: f64 = mu_f.iter().zip(mu_g).map(|(x, y)| (x - mf) * (y - mg)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    if slope.is_finite() && slope > 0.0 {
        Ok(AffineFit {
            a: slope,
            b: mg - slope * mf,
            clamped: false,
        })
    } else {
        Ok(AffineFit {
            a: MIN_SLOPE,
            b: mg - MIN_SLOPE * mf,
            clamped: true,
        })
    }
}

/// Distance between the transformed mean `t = T(μ_f)` and `μ_g`.
pub fn mean_distance_d1(t: &[f64], mu_g: &[f64], cfg: &SimilarityConfig) -> Result<f64, SimilarityError> {
    check_lengths(t, mu_g)?;
    let m = t.len() as f64;
    let diffs: Vec<f64> = t
        .iter()
        .zip(mu_g)
        .map(|(a, b)| (a - b).abs())
        .map(|d| if d > cfg.delta_tol { d } else { 0.0 })
        .collect();
    let exceeding = diffs.iter().filter(|d| **d > 0.0).count() as f64;
    let range = || {
        let (lo, hi) = t
            .iter()
            .chain(mu_g)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        hi - lo
    };
    Ok(match cfg.d1_mode {
        D1Mode::AvgRelativeDistance => {
            let r = range();
            if r > 0.0 { diffs.iter().sum::<f64>() / m / r } else { 0.0 }
        }
        D1Mode::PNorm { p } => {
            let r = range();
            let norm = (diffs.iter().map(|d| d.powf(p)).sum::<f64>() / m).powf(1.0 / p);
            if r > 0.0 { norm / r } else { 0.0 }
        }
        D1Mode::CountExceeding => exceeding,
        D1Mode::FractionExceeding => exceeding / m,
    })
}

/// Sample Pearson correlation clamped to `[-1, 1]`. The flag is set (and ρ = 0)
/// when either vector is constant.
pub fn pearson(mu_f: &[f64], mu_g: &[f64]) -> Result<(f64, bool), SimilarityError> {
    check_lengths(mu_f, mu_g)?;
    let (mf, mg) = (mean(mu_f), mean(mu_g));
    let n = mu_f.len() as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in mu_f.iter().zip(mu_g) {
        let (dx, dy) = (x - mf, y - mg);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let (sf, sg) = ((sxx / (n - 1.0)).sqrt(), (syy / (n - 1.0)).sqrt());
    if sf < DEGENERATE_STD || sg < DEGENERATE_STD {
        return Ok((0.0, true));
    }
    Ok(((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0), false))
}

/// Entrywise 2-norm of the variance difference divided by `m`.
pub fn cov_distance_d2(v_f: &[f64], v_g: &[f64], cfg: &SimilarityConfig) -> Result<f64, SimilarityError> {
    if v_f.len() != v_g.len() {
        return Err(SimilarityError::LengthMismatch(v_f.len(), v_g.len()));
    }
    Ok(match cfg.d2_mode {
        D2Mode::None => 0.0,
        D2Mode::FrobeniusEntrywise if v_f.is_empty() => 0.0,
        D2Mode::FrobeniusEntrywise => {
            let ss: f64 = v_f.iter().zip(v_g).map(|(a, b)| (a - b).powi(2)).sum();
            ss.sqrt() / v_f.len() as f64
        }
    })
}

/// Distance of `f` from `g`. Asymmetric: the affine map fits `f` onto `g`.
pub fn gp_distance(
    f: &PredictiveSummary,
    g: &PredictiveSummary,
    cfg: &SimilarityConfig,
) -> Result<SimilarityReport, SimilarityError> {
    if f.grid != g.grid {
        return Err(SimilarityError::GridMismatch);
    }
    cfg.validate()?;
    let affine = fit_affine(&f.mean, &g.mean)?;
    let d1 = mean_distance_d1(&affine.apply(&f.mean), &g.mean, cfg)?;
    let d2 = cov_distance_d2(&f.variance, &g.variance, cfg)?;
    let (rho, degenerate) = pearson(&f.mean, &g.mean)?;
    let (s1, s2, s3, total) = cfg.combine(d1, d2, rho);
    Ok(SimilarityReport {
        s1,
        s2,
        s3,
        total,
        affine,
        rho,
        d1,
        d2,
        degenerate,
    })
}
