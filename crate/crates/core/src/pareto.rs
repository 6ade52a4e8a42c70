//! Pareto dominance (minimization), non-dominated filtering and hypervolume.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest objective count handled by the exact sweep.
pub const MAX_EXACT_OBJECTIVES: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParetoError {
    #[error("objective vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("exact hypervolume supports at most {MAX_EXACT_OBJECTIVES} objectives, got {0}; use hypervolume_mc")]
    UnsupportedDimension(usize),
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool, ParetoError> {
    if a.len() != b.len() {
        return Err(ParetoError::LengthMismatch(a.len(), b.len()));
    }
    Ok(dominates_unchecked(a, b))
}

fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

/// Indices of rows not dominated by any other row, in ascending order.
/// Duplicate rows are all kept.
pub fn pareto_front(rows: &[Vec<f64>]) -> Vec<usize> {
    (0..rows.len())
        .filter(|&i| !rows.iter().any(|r| dominates_unchecked(r, &rows[i])))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub reference: Vec<f64>,
}

impl ParetoFront {
    /// Keeps the non-dominated subset of `points`; `inputs` may be empty.
    pub fn from_points(points: Vec<Vec<f64>>, inputs: Vec<Vec<f64>>, reference: Vec<f64>) -> Self {
        let keep = pareto_front(&points);
        let inputs = if inputs.len() == points.len() {
            keep.iter().map(|&i| inputs[i].clone()).collect()
        } else {
            Vec::new()
        };
        ParetoFront {
            points: keep.iter().map(|&i| points[i].clone()).collect(),
            inputs,
            reference,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Exact volume dominated by `points` and bounded by `reference`.
/// Points not strictly below the reference in every objective are dropped.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> Result<f64, ParetoError> {
    let k = reference.len();
    if k > MAX_EXACT_OBJECTIVES {
        return Err(ParetoError::UnsupportedDimension(k));
    }
    if let Some(p) = points.iter().find(|p| p.len() != k) {
        return Err(ParetoError::LengthMismatch(p.len(), k));
    }
    let inside: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(a, r)| a < r))
        .cloned()
        .collect();
    if inside.len() < points.len() {
        log::warn!(
            "{} of {} points lie outside the reference box and were ignored",
            points.len() - inside.len(),
            points.len()
        );
    }
    if k == 0 || inside.is_empty() {
        return Ok(0.0);
    }
    Ok(sweep(inside, reference))
}

pub fn front_hypervolume(front: &ParetoFront) -> Result<f64, ParetoError> {
    hypervolume(&front.points, &front.reference)
}

// Slices along the last objective: between consecutive sorted values the
// dominated region is the (k−1)-volume of the points seen so far.
fn sweep(mut points: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    let k = reference.len();
    if k == 1 {
        let best = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        return reference[0] - best;
    }
    let keep = pareto_front(&points);
    points = keep.into_iter().map(|i| points[i].clone()).collect();
    points.sort_by(|a, b| a[k - 1].total_cmp(&b[k - 1]));
    let mut volume = 0.0;
    let mut slice: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        slice.push(p[..k - 1].to_vec());
        let upper = points.get(i + 1).map_or(reference[k - 1], |q| q[k - 1]);
        let height = upper - p[k - 1];
        if height > 0.0 {
            volume += height * sweep(slice.clone(), &reference[..k - 1]);
        }
    }
    volume
}

/// Monte Carlo estimate `(volume, standard error)` over the box between the
/// component-wise minimum of the points and the reference.
pub fn hypervolume_mc(points: &[Vec<f64>], reference: &[f64], samples: usize, seed: u64) -> (f64, f64) {
    let inside: Vec<&Vec<f64>> = points
        .iter()
        .filter(|p| p.len() == reference.len() && p.iter().zip(reference).all(|(a, r)| a < r))
        .collect();
    if inside.is_empty() || samples == 0 {
        return (0.0, 0.0);
    }
    let lower: Vec<f64> = (0..reference.len())
        .map(|j| inside.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let box_volume: f64 = lower.iter().zip(reference).map(|(l, r)| r - l).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = vec![0.0; reference.len()];
    let mut hits = 0usize;
    for _ in 0..samples {
        for ((s, l), r) in sample.iter_mut().zip(&lower).zip(reference) {
            *s = l + rng.random::<f64>() * (r - l);
        }
        if inside.iter().any(|p| p.iter().zip(&sample).all(|(a, s)| a <= s)) {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    (
        box_volume * frac,
        box_volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
    )
}
