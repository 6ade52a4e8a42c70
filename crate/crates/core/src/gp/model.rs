use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::{row_vectors, KernelSpec};
use super::GpError;

/// Jitter ladder tried, in order, when `K + σ_n²I` fails to factorize.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Affine map between the caller's targets and the standardized targets the
/// zero-mean GP is trained on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetScaling {
    pub mean: f64,
    pub std: f64,
}

impl TargetScaling {
    pub const IDENTITY: TargetScaling = TargetScaling { mean: 0.0, std: 1.0 };

    /// Sample mean and standard deviation; constant targets get `std = 1`.
    pub fn fit(y: &[f64]) -> Self {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = if y.len() > 1 {
            y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        TargetScaling {
            mean,
            std: if std > 1e-12 { std } else { 1.0 },
        }
    }
}

/// Posterior mean and latent variance of a GP over a probe grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveSummary {
    pub grid: DMatrix<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl PredictiveSummary {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// A GP conditioned on training data, with the factorization of
/// `K + σ_n²I` cached.
#[derive(Clone, Debug)]
pub struct GpModel {
    kernel: KernelSpec,
    train_x: DMatrix<f64>,
    train_y: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    scaling: TargetScaling,
}

impl GpModel {
    /// Conditions the zero-mean GP on `(x, y)` exactly as given.
    pub fn new(kernel: KernelSpec, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self, GpError> {
        Self::with_scaling(kernel, x, y, TargetScaling::IDENTITY)
    }

    /// `y` are the already standardized targets; predictions are mapped back
    /// through `scaling`.
    pub fn with_scaling(
        kernel: KernelSpec,
        x: DMatrix<f64>,
        y: DVector<f64>,
        scaling: TargetScaling,
    ) -> Result<Self, GpError> {
        let n = x.nrows();
        if n == 0 {
            return Err(GpError::InsufficientData { needed: 1, found: 0 });
        }
        if x.ncols() != kernel.dim() {
            return Err(GpError::DimensionMismatch {
                expected: kernel.dim(),
                found: x.ncols(),
            });
        }
        if y.len() != n {
            return Err(GpError::InvalidInput(format!("{n} inputs but {} targets", y.len())));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(GpError::InvalidInput("training data must be finite".into()));
        }

        let mut k = kernel.gram(&x);
        for i in 0..n {
            k[(i, i)] += kernel.noise_variance;
        }
        let (chol, jitter) = factorize(k)?;
        let alpha = chol.solve(&y);
        Ok(GpModel {
            kernel,
            train_x: x,
            train_y: y,
            chol,
            alpha,
            jitter,
            scaling,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn train_x(&self) -> &DMatrix<f64> {
        &self.train_x
    }

    /// Targets the GP was conditioned on (standardized when fit by MAP).
    pub fn train_y(&self) -> &DVector<f64> {
        &self.train_y
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Lower-triangular factor of `K + σ_n²I` (+ jitter).
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn scaling(&self) -> TargetScaling {
        self.scaling
    }

    pub fn n(&self) -> usize {
        self.train_x.nrows()
    }

    /// Posterior mean and latent variance at each row of `grid`, in the
    /// caller's target units.
    pub fn predict(&self, grid: &DMatrix<f64>) -> Result<PredictiveSummary, GpError> {
        if grid.ncols() != self.kernel.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.kernel.dim(),
                found: grid.ncols(),
            });
        }
        let k_star = self.kernel.cross(&self.train_x, grid); // n×m
        let mean_std = k_star.tr_mul(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k_star)
            .expect("Cholesky factor has a non-zero diagonal");
        let s = self.scaling;
        let mean = mean_std.iter().map(|m| s.mean + s.std * m).collect();
        let variance = v
            .column_iter()
            .map(|col| {
                let latent = self.kernel.signal_variance - col.norm_squared();
                latent.max(0.0) * s.std * s.std
            })
            .collect();
        Ok(PredictiveSummary {
            grid: grid.clone(),
            mean,
            variance,
        })
    }

    /// Log marginal likelihood of the conditioned targets.
    pub fn log_marginal(&self) -> f64 {
        let n = self.n() as f64;
        let half_logdet: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * self.train_y.dot(&self.alpha) - half_logdet - 0.5 * n * (2.0 * PI).ln()
    }

    /// Gradient of [`log_marginal`](Self::log_marginal) with respect to
    /// [`KernelSpec::log_params`].
    pub fn log_marginal_grad(&self) -> Vec<f64> {
        let n = self.n();
        let d = self.kernel.dim();
        let k_inv = self.chol.inverse();
        let a = &self.alpha;
        let rows = row_vectors(&self.train_x);
        let ls = &self.kernel.lengthscales;

        // ½ tr(W ∂K), W = ααᵀ − K⁻¹, summed over the symmetric pairs.
        let mut grad = vec![0.0; d + 2];
        let mut q = vec![0.0; d];
        for i in 0..n {
            for j in 0..=i {
                let w = a[i] * a[j] - k_inv[(i, j)];
                let weight = if i == j { 0.5 * w } else { w };
                let mut r2 = 0.0;
                for l in 0..d {
                    let t = (rows[i][l] - rows[j][l]) / ls[l];
                    q[l] = t * t;
                    r2 += q[l];
                }
                let k = self.kernel.signal(r2);
                grad[d] += weight * k;
                if i != j {
                    let f = self.kernel.lengthscale_factor(r2);
                    for l in 0..d {
                        grad[l] += weight * f * q[l];
                    }
                }
            }
        }
        let trace_w: f64 = (0..n).map(|i| a[i] * a[i] - k_inv[(i, i)]).sum();
        grad[d + 1] = 0.5 * trace_w * self.kernel.noise_variance;
        grad
    }
}

fn factorize(mut k: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    let n = k.nrows();
    let mut applied = 0.0;
    for &jitter in &JITTER_LADDER {
        for i in 0..n {
            k[(i, i)] += jitter - applied;
        }
        applied = jitter;
        if let Some(chol) = Cholesky::new(k.clone()) {
            if chol.l_dirty().diagonal().iter().all(|v| v.is_finite() && *v > 0.0) {
                return Ok((chol, jitter));
            }
        }
    }
    Err(GpError::Numerical(format!(
        "covariance matrix ({n}×{n}) is not positive definite even with jitter {:e}",
        JITTER_LADDER[JITTER_LADDER.len() - 1]
    )))
}
