//! Limited-memory BFGS with an Armijo backtracking line search and optional box
//! projection. Used for maximizing the GP marginal likelihood in log space.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LbfgsError {
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
    #[error("starting point has {found} coordinates but bounds cover {expected}")]
    BoundsMismatch { expected: usize, found: usize },
}

#[derive(Clone, Debug)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop once the projected gradient's largest component falls below this.
    pub grad_tol: f64,
    /// Stop once an iteration improves the objective by less than this (relative).
    pub f_tol: f64,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 8,
            max_iters: 200,
            grad_tol: 1e-6,
            f_tol: 1e-12,
            bounds: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `objective`, which returns `None` where it cannot be evaluated.
/// Failed evaluations during the line search are treated as `+inf`.
pub fn minimize<F>(mut objective: F, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<Minimum, LbfgsError>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    if let Some(b) = &opts.bounds {
        if b.len() != n {
            return Err(LbfgsError::BoundsMismatch {
                expected: b.len(),
                found: n,
            });
        }
    }
    let project = |x: &mut [f64]| {
        if let Some(b) = &opts.bounds {
            for (xi, &(lo, hi)) in x.iter_mut().zip(b) {
                *xi = xi.clamp(lo, hi);
            }
        }
    };

    let mut x = x0;
    project(&mut x);
    let (mut f, mut g) = match objective(&x) {
        Some((f, g)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => (f, g),
        _ => return Err(LbfgsError::NonFiniteStart),
    };

    let mut history: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        let pg = projected_gradient(&x, &g, opts.bounds.as_deref());
        if inf_norm(&pg) < opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let free: Vec<bool> = pg.iter().zip(&g).map(|(p, g)| *p != 0.0 || *g == 0.0).collect();
        let mut dir = two_loop(&pg, &history, &free);
        freeze_active(&x, &mut dir, opts.bounds.as_deref());
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            history.clear();
            dir = pg.iter().map(|v| -v).collect();
            slope = dot(&dir, &g);
            if slope >= 0.0 {
                converged = true;
                break;
            }
        }

        let mut step = if history.is_empty() {
            (1.0 / inf_norm(&dir)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        let mut previous: Option<Vec<f64>> = None;
        for _ in 0..50 {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            project(&mut trial);
            if previous.as_ref() == Some(&trial) {
                step *= 0.5;
                continue;
            }
            previous = Some(trial.clone());
            if let Some((ft, gt)) = objective(&trial) {
                let decrease = dot(&g, &sub(&trial, &x)).min(0.0);
                if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= f + 1e-4 * decrease {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // The line search cannot make progress; x is as good as it gets.
            converged = true;
            break;
        };

        let s = sub(&x_new, &x);
        let y = sub(&g_new, &g);
        if dot(&s, &y) > 1e-12 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y));
        }

        let improvement = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        if improvement.abs() <= opts.f_tol * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(Minimum {
        x,
        value: f,
        gradient: g,
        iterations,
        converged,
    })
}

// Two-loop recursion restricted to the free coordinates: pairs are masked so
// that variables held at a bound do not distort the curvature estimate.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>)>, free: &[bool]) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(x, f)| if *f { *x } else { 0.0 }).collect() };
    let pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = history
        .iter()
        .filter_map(|(s, y)| {
            let (s, y) = (mask(s), mask(y));
            let sy = dot(&s, &y);
            (sy > 1e-12).then(|| (s, y, 1.0 / sy))
        })
        .collect();
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.last() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

// Gradient with components zeroed where a bound blocks descent.
fn projected_gradient(x: &[f64], g: &[f64], bounds: Option<&[(f64, f64)]>) -> Vec<f64> {
    match bounds {
        None => g.to_vec(),
        Some(b) => x
            .iter()
            .zip(g)
            .zip(b)
            .map(|((&xi, &gi), &(lo, hi))| {
                if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) {
                    0.0
                } else {
                    gi
                }
            })
            .collect(),
    }
}

fn freeze_active(x: &[f64], dir: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for ((di, &xi), &(lo, hi)) in dir.iter_mut().zip(x).zip(b) {
            if (xi <= lo && *di < 0.0) || (xi >= hi && *di > 0.0) {
                *di = 0.0;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        Some((f, g))
    }

    #[test]
    fn solves_rosenbrock() {
        let opts = LbfgsOptions {
            grad_tol: 1e-8,
            ..Default::default()
        };
        let m = minimize(rosenbrock, vec![-1.2, 1.0], &opts).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-5, "{:?}", m);
        assert!((m.x[1] - 1.0).abs() < 1e-5, "{:?}", m);
    }

    #[test]
    fn respects_bounds() {
        // Unconstrained minimum at (3, -2); box keeps x0 <= 1.
        let f = |x: &[f64]| {
            Some((
                (x[0] - 3.0).powi(2) + (x[1] + 2.0).powi(2),
                vec![2.0 * (x[0] - 3.0), 2.0 * (x[1] + 2.0)],
            ))
        };
        let opts = LbfgsOptions {
            bounds: Some(vec![(-1.0, 1.0), (-5.0, 5.0)]),
            ..Default::default()
        };
        let m = minimize(f, vec![0.0, 0.0], &opts).unwrap();
        assert_eq!(m.x[0], 1.0);
        assert!((m.x[1] + 2.0).abs() < 1e-6);
        assert!(m.converged);
    }

    #[test]
    fn failed_evaluations_shrink_the_step() {
        // Undefined for x < 0.5; minimum at 1.
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                None
            } else {
                Some(((x[0] - 1.0).powi(2), vec![2.0 * (x[0] - 1.0)]))
            }
        };
        let m = minimize(f, vec![4.0], &LbfgsOptions::default()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_start() {
        let f = |_: &[f64]| None;
        assert_eq!(
            minimize(f, vec![0.0], &LbfgsOptions::default()).unwrap_err(),
            LbfgsError::NonFiniteStart
        );
    }
}
