use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GpError;

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    SquaredExponential,
    /// Matérn with smoothness ν = 5/2.
    Matern52,
}

/// Stationary covariance with per-dimension (ARD) lengthscales and additive
/// white noise on the diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelSpec {
    pub fn new(
        family: KernelFamily,
        lengthscales: Vec<f64>,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self, GpError> {
        if lengthscales.is_empty() {
            return Err(GpError::InvalidInput("kernel needs at least one lengthscale".into()));
        }
        if lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(GpError::InvalidInput(format!(
                "lengthscales must be positive and finite, got {lengthscales:?}"
            )));
        }
        if !(signal_variance.is_finite() && signal_variance > 0.0) {
            return Err(GpError::InvalidInput(format!(
                "signal variance must be positive, got {signal_variance}"
            )));
        }
        if !(noise_variance.is_finite() && noise_variance >= 0.0) {
            return Err(GpError::InvalidInput(format!(
                "noise variance must be non-negative, got {noise_variance}"
            )));
        }
        Ok(KernelSpec {
            family,
            lengthscales,
            signal_variance,
            noise_variance,
        })
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Hyperparameters in log space: `[ln ℓ_1 .. ln ℓ_d, ln σ_f², ln σ_n²]`.
    pub fn log_params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        p.push(self.signal_variance.ln());
        p.push(self.noise_variance.ln());
        p
    }

    pub fn from_log_params(family: KernelFamily, params: &[f64]) -> Result<Self, GpError> {
        let d = params.len().checked_sub(2).filter(|d| *d > 0).ok_or_else(|| {
            GpError::InvalidInput(format!("expected at least 3 log parameters, got {}", params.len()))
        })?;
        KernelSpec::new(
            family,
            params[..d].iter().map(|p| p.exp()).collect(),
            params[d].exp(),
            params[d + 1].exp(),
        )
    }

    /// Covariance between two points; `same_point` adds the noise term.
    pub fn eval(&self, x: &[f64], x2: &[f64], same_point: bool) -> Result<f64, GpError> {
        if x.len() != self.dim() || x2.len() != self.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.dim(),
                found: if x.len() != self.dim() { x.len() } else { x2.len() },
            });
        }
        if x.iter().chain(x2).any(|v| !v.is_finite()) {
            return Err(GpError::InvalidInput("non-finite kernel input".into()));
        }
        let noise = if same_point { self.noise_variance } else { 0.0 };
        Ok(self.signal(self.scaled_sq_dist(x, x2)) + noise)
    }

    pub(crate) fn scaled_sq_dist(&self, x: &[f64], x2: &[f64]) -> f64 {
        x.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let t = (a - b) / l;
                t * t
            })
            .sum()
    }

    /// Noise-free covariance as a function of the scaled squared distance.
    pub(crate) fn signal(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::SquaredExponential => self.signal_variance * (-0.5 * r2).exp(),
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                self.signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * (-SQRT5 * r).exp()
            }
        }
    }

    /// ∂k/∂(ln ℓ_i) = `lengthscale_factor(r²) · (Δ_i/ℓ_i)²`.
    pub(crate) fn lengthscale_factor(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::SquaredExponential => self.signal_variance * (-0.5 * r2).exp(),
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                5.0 / 3.0 * self.signal_variance * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
            }
        }
    }

    /// Noise-free Gram matrix over the rows of `x`.
    pub fn gram(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let rows = row_vectors(x);
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = self.signal_variance;
            for j in 0..i {
                let v = self.signal(self.scaled_sq_dist(&rows[i], &rows[j]));
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Cross-covariance between rows of `a` (m×d) and rows of `b` (n×d).
    pub fn cross(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let ra = row_vectors(a);
        let rb = row_vectors(b);
        DMatrix::from_fn(ra.len(), rb.len(), |i, j| {
            self.signal(self.scaled_sq_dist(&ra[i], &rb[j]))
        })
    }
}

pub(crate) fn row_vectors(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}
