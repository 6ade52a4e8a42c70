use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{KernelFamily, KernelSpec};
use super::model::{GpModel, TargetScaling};
use super::GpError;
use crate::lbfgs::{self, LbfgsOptions};
use crate::seeds::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Width of the input domain per dimension; the data range is used when absent.
    pub input_widths: Option<Vec<f64>>,
    /// Box on every raw hyperparameter (lengthscales, σ_f², σ_n²).
    pub param_bounds: (f64, f64),
    pub max_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 5,
            seed: 0,
            input_widths: None,
            param_bounds: (1e-3, 1e3),
            max_iters: 200,
        }
    }
}

/// Maximum-marginal-likelihood hyperparameters from several L-BFGS restarts
/// in log space. Targets are standardized before fitting.
pub fn fit_map(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    family: KernelFamily,
    opts: &FitOptions,
) -> Result<GpModel, GpError> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(GpError::InsufficientData { needed: 2, found: n });
    }
    if y.len() != n {
        return Err(GpError::InvalidInput(format!("{n} inputs but {} targets", y.len())));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(GpError::InvalidInput("training data must be finite".into()));
    }
    if opts.restarts == 0 {
        return Err(GpError::InvalidInput("at least one restart is required".into()));
    }

    let scaling = TargetScaling::fit(y.as_slice());
    let ys = y.map(|v| (v - scaling.mean) / scaling.std);
    let widths: Vec<f64> = match &opts.input_widths {
        Some(w) if w.len() == d => w.clone(),
        Some(w) => {
            return Err(GpError::DimensionMismatch {
                expected: d,
                found: w.len(),
            })
        }
        None => x
            .column_iter()
            .map(|c| {
                let w = c.max() - c.min();
                if w > 1e-12 { w } else { 1.0 }
            })
            .collect(),
    };
    let var_y: f64 = 1.0; // standardized
    let (lo, hi) = opts.param_bounds;
    let log_bounds = vec![(lo.ln(), hi.ln()); d + 2];

    let objective = |p: &[f64]| -> Option<(f64, Vec<f64>)> {
        let kernel = KernelSpec::from_log_params(family, p).ok()?;
        let model = GpModel::new(kernel, x.clone(), ys.clone()).ok()?;
        let grad = model.log_marginal_grad();
        Some((-model.log_marginal(), grad.into_iter().map(|g| -g).collect()))
    };

    let attempts: Vec<Result<(f64, Vec<f64>), String>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 0x6670, r as u64));
            let mut start: Vec<f64> = widths
                .iter()
                .map(|w| w.ln() + rng.random_range(0.05f64.ln()..2f64.ln()))
                .collect();
            start.push(var_y.ln());
            start.push((1e-2 * var_y).ln());
            let lbfgs_opts = LbfgsOptions {
                max_iters: opts.max_iters,
                grad_tol: 1e-5,
                bounds: Some(log_bounds.clone()),
                ..Default::default()
            };
            lbfgs::minimize(objective, start, &lbfgs_opts)
                .map(|m| (-m.value, m.x))
                .map_err(|e| format!("restart {r}: {e}"))
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut failures = Vec::new();
    for attempt in attempts {
        match attempt {
            Ok((lml, p)) if best.as_ref().is_none_or(|(b, _)| lml > *b) => best = Some((lml, p)),
            Ok(_) => {}
            Err(e) => failures.push(e),
        }
    }
    let (_, params) = best.ok_or_else(|| {
        GpError::Numerical(format!(
            "all {} restarts failed on {n}×{d} data: {}",
            opts.restarts,
            failures.join("; ")
        ))
    })?;
    let kernel = KernelSpec::from_log_params(family, &params)?;
    GpModel::with_scaling(kernel, x.clone(), ys, scaling)
}
