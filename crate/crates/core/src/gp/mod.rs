//! Exact zero-mean Gaussian process regression.

mod fit;
mod kernel;
mod model;

pub use fit::{fit_map, FitOptions};
pub use kernel::{KernelFamily, KernelSpec};
pub use model::{GpModel, PredictiveSummary, TargetScaling, JITTER_LADDER};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least {needed} training points, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Covariance between two points. Thin wrapper over [`KernelSpec::eval`].
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], x2: &[f64], same_point: bool) -> Result<f64, GpError> {
    spec.eval(x, x2, same_point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn random_data(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (DMatrix<f64>, DVector<f64>) {
        let x = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>());
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        (x, y)
    }

    fn random_kernel(rng: &mut ChaCha8Rng, family: KernelFamily, d: usize) -> KernelSpec {
        KernelSpec::new(
            family,
            (0..d).map(|_| rng.random_range(0.2..1.5)).collect(),
            rng.random_range(0.5..2.0),
            rng.random_range(0.01..0.3),
        )
        .unwrap()
    }

    fn dense_cov(k: &KernelSpec, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        DMatrix::from_fn(n, n, |i, j| {
            let a: Vec<f64> = x.row(i).iter().copied().collect();
            let b: Vec<f64> = x.row(j).iter().copied().collect();
            kernel_eval(k, &a, &b, i == j).unwrap()
        })
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
    }

    #[test]
    fn factorization_reconstructs_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, y) = random_data(&mut rng, 7, 2);
        let k = random_kernel(&mut rng, KernelFamily::Matern52, 2);
        let cov = dense_cov(&k, &x);
        let m = GpModel::new(k, x, y.clone()).unwrap();
        let l = m.chol_factor();
        assert!((&l * l.transpose() - &cov).norm() <= 1e-8 * cov.norm());
        assert!((&cov * m.alpha() - &y).norm() <= 1e-8 * y.norm());
    }

    #[test]
    fn predict_matches_dense_inverse() {
        for family in [KernelFamily::SquaredExponential, KernelFamily::Matern52] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let (x, y) = random_data(&mut rng, 5, 2);
            let k = random_kernel(&mut rng, family, 2);
            let grid = DMatrix::from_fn(9, 2, |_, _| rng.random::<f64>());
            let cov_inv = dense_cov(&k, &x).try_inverse().unwrap();
            let m = GpModel::new(k.clone(), x.clone(), y.clone()).unwrap();
            let p = m.predict(&grid).unwrap();
            for s in 0..grid.nrows() {
                let g: Vec<f64> = grid.row(s).iter().copied().collect();
                let ks = DVector::from_fn(5, |i, _| {
                    let xi: Vec<f64> = x.row(i).iter().copied().collect();
                    kernel_eval(&k, &xi, &g, false).unwrap()
                });
                let mean = (ks.transpose() * &cov_inv * &y)[0];
                let var = k.signal_variance - (ks.transpose() * &cov_inv * &ks)[0];
                assert!(rel_close(p.mean[s], mean, 1e-8), "{} vs {}", p.mean[s], mean);
                assert!(rel_close(p.variance[s], var, 1e-8), "{} vs {}", p.variance[s], var);
            }
        }
    }

    #[test]
    fn log_marginal_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, y) = random_data(&mut rng, 6, 2);
        let k = random_kernel(&mut rng, KernelFamily::SquaredExponential, 2);
        let cov = dense_cov(&k, &x);
        let quad = (y.transpose() * cov.clone().try_inverse().unwrap() * &y)[0];
        let oracle = -0.5 * quad - 0.5 * cov.determinant().ln() - 3.0 * (2.0 * PI).ln();
        let m = GpModel::new(k, x, y).unwrap();
        assert!(rel_close(m.log_marginal(), oracle, 1e-8));
    }

    fn finite_difference_check(family: KernelFamily, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = random_data(&mut rng, 8, 2);
        let k = random_kernel(&mut rng, family, 2);
        let theta = k.log_params();
        let grad = GpModel::new(k, x.clone(), y.clone()).unwrap().log_marginal_grad();
        let h = 1e-5;
        for j in 0..theta.len() {
            let lml = |delta: f64| {
                let mut t = theta.clone();
                t[j] += delta;
                let k = KernelSpec::from_log_params(family, &t).unwrap();
                GpModel::new(k, x.clone(), y.clone()).unwrap().log_marginal()
            };
            let fd = (lml(h) - lml(-h)) / (2.0 * h);
            assert!(
                (grad[j] - fd).abs() <= 1e-4 * fd.abs().max(1e-3),
                "{family:?} seed {seed} component {j}: analytic {} vs fd {fd}",
                grad[j]
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..25 {
            finite_difference_check(KernelFamily::SquaredExponential, seed);
            finite_difference_check(KernelFamily::Matern52, seed);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn gradient_property(seed in any::<u64>(), matern in any::<bool>()) {
            let family = if matern { KernelFamily::Matern52 } else { KernelFamily::SquaredExponential };
            finite_difference_check(family, seed);
        }

        #[test]
        fn variance_never_grows_with_data(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y) = random_data(&mut rng, 6, 2);
            let k = random_kernel(&mut rng, KernelFamily::Matern52, 2);
            let grid = DMatrix::from_fn(20, 2, |_, _| rng.random::<f64>());
            let small = GpModel::new(k.clone(), x.rows(0, 5).into_owned(), y.rows(0, 5).into_owned()).unwrap();
            let big = GpModel::new(k, x, y).unwrap();
            let (vs, vb) = (small.predict(&grid).unwrap(), big.predict(&grid).unwrap());
            for (a, b) in vs.variance.iter().zip(&vb.variance) {
                prop_assert!(*b <= a + 1e-8);
            }
        }

        #[test]
        fn noiseless_interpolation(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y) = random_data(&mut rng, 6, 2);
            let k = KernelSpec::new(KernelFamily::SquaredExponential, vec![0.3, 0.3], 1.0, 0.0).unwrap();
            let m = GpModel::new(k, x.clone(), y.clone()).unwrap();
            let p = m.predict(&x).unwrap();
            for (a, b) in p.mean.iter().zip(y.iter()) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }

        #[test]
        fn kernel_is_symmetric(a in prop::collection::vec(-10.0..10.0f64, 2), b in prop::collection::vec(-10.0..10.0f64, 2)) {
            for family in [KernelFamily::SquaredExponential, KernelFamily::Matern52] {
                let k = KernelSpec::new(family, vec![0.7, 1.9], 1.4, 0.1).unwrap();
                prop_assert_eq!(k.eval(&a, &b, false).unwrap(), k.eval(&b, &a, false).unwrap());
            }
        }
    }

    #[test]
    fn map_fit_beats_generating_hyperparameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100;
        let truth = KernelSpec::new(KernelFamily::SquaredExponential, vec![0.5], 1.0, 0.01).unwrap();
        let x = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>() * 5.0);
        let l = GpModel::new(truth.clone(), x.clone(), DVector::zeros(n)).unwrap().chol_factor();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = l * z;

        let fitted = fit_map(&x, &y, KernelFamily::SquaredExponential, &FitOptions::default()).unwrap();
        // Compare on the standardized targets the fit actually used.
        let s = fitted.scaling();
        let std_truth = KernelSpec::new(
            KernelFamily::SquaredExponential,
            truth.lengthscales.clone(),
            truth.signal_variance / (s.std * s.std),
            truth.noise_variance / (s.std * s.std),
        )
        .unwrap();
        let at_truth = GpModel::new(std_truth, x, fitted.train_y().clone()).unwrap().log_marginal();
        assert!(fitted.log_marginal() >= at_truth - 1e-6, "{} < {}", fitted.log_marginal(), at_truth);

        let g = fitted.log_marginal_grad();
        let noise = fitted.kernel().noise_variance;
        if noise > 1.01e-3 && noise < 0.99e3 {
            assert!(g[2].abs() < 1e-3, "noise gradient {}", g[2]);
        }
    }

    #[test]
    fn map_fit_recovers_linear_function() {
        let x = DMatrix::from_fn(11, 1, |i, _| i as f64 / 10.0);
        let y = DVector::from_fn(11, |i, _| i as f64 / 10.0);
        let m = fit_map(&x, &y, KernelFamily::Matern52, &FitOptions::default()).unwrap();
        let mid = DMatrix::from_fn(10, 1, |i, _| (i as f64 + 0.5) / 10.0);
        let p = m.predict(&mid).unwrap();
        for (i, mu) in p.mean.iter().enumerate() {
            assert!((mu - (i as f64 + 0.5) / 10.0).abs() < 1e-2, "{i}: {mu}");
        }
    }

    #[test]
    fn duplicate_inputs_with_conflicting_targets() {
        let x = DMatrix::from_row_slice(3, 1, &[0.2, 0.2, 0.8]);
        let y = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let m = fit_map(&x, &y, KernelFamily::SquaredExponential, &FitOptions::default()).unwrap();
        assert!(m.kernel().noise_variance > 0.0);
    }

    #[test]
    fn fit_rejects_tiny_or_bad_data() {
        let opts = FitOptions::default();
        let x = DMatrix::from_row_slice(1, 1, &[0.2]);
        assert!(matches!(
            fit_map(&x, &DVector::from_vec(vec![1.0]), KernelFamily::Matern52, &opts),
            Err(GpError::InsufficientData { .. })
        ));
        let x = DMatrix::from_row_slice(2, 1, &[0.2, f64::INFINITY]);
        assert!(matches!(
            fit_map(&x, &DVector::from_vec(vec![1.0, 2.0]), KernelFamily::Matern52, &opts),
            Err(GpError::InvalidInput(_))
        ));
    }

    #[test]
    fn fit_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y) = random_data(&mut rng, 15, 2);
        let opts = FitOptions { seed: 9, ..Default::default() };
        let a = fit_map(&x, &y, KernelFamily::Matern52, &opts).unwrap();
        let b = fit_map(&x, &y, KernelFamily::Matern52, &opts).unwrap();
        assert_eq!(a.kernel(), b.kernel());
    }
}
