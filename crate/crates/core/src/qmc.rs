//! Sobol low-discrepancy points with a seeded random digital shift.
//!
//! Direction numbers are the Joe–Kuo set for the first eight dimensions, which
//! is plenty for the two-dimensional benchmark problems used here. The digital
//! shift (XOR with a per-dimension random word) keeps the net structure intact
//! while making every seed produce a different point set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Highest supported dimension.
pub const MAX_DIMS: usize = 8;

const BITS: usize = 32;

// (degree s, polynomial coefficients a, initial direction integers m_1..m_s) for dims 2..=8.
const JOE_KUO: [(usize, u32, &[u32]); MAX_DIMS - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

#[derive(Clone, Debug)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    shift: Vec<u32>,
}

impl Sobol {
    /// Unscrambled sequence.
    pub fn new(dims: usize) -> Self {
        assert!(
            (1..=MAX_DIMS).contains(&dims),
            "Sobol sequence supports 1..={MAX_DIMS} dimensions, got {dims}"
        );
        let directions = (0..dims).map(direction_numbers).collect();
        Sobol {
            directions,
            shift: vec![0; dims],
        }
    }

    /// Sequence with a digital shift drawn from `seed`.
    pub fn scrambled(dims: usize, seed: u64) -> Self {
        let mut sobol = Sobol::new(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in sobol.shift.iter_mut() {
            *s = rng.random();
        }
        sobol
    }

    pub fn dims(&self) -> usize {
        self.directions.len()
    }

    /// The `index`-th point in `[0, 1)^d`.
    pub fn point(&self, index: u32) -> Vec<f64> {
        self.directions
            .iter()
            .zip(&self.shift)
            .map(|(v, &shift)| {
                let mut bits = 0u32;
                let mut i = index;
                let mut b = 0;
                while i != 0 {
                    if i & 1 == 1 {
                        bits ^= v[b];
                    }
                    i >>= 1;
                    b += 1;
                }
                f64::from(bits ^ shift) / 4_294_967_296.0
            })
            .collect()
    }

    /// The first `n` points.
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        (0..n as u32).map(|i| self.point(i)).collect()
    }
}

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut value = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                value ^= v[k - j];
            }
        }
        v[k] = value;
    }
    v
}

/// Maps a unit-cube point onto the box `bounds`.
pub fn scale_to_box(unit: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    unit.iter()
        .zip(bounds)
        .map(|(&u, &(lo, hi))| lo + u * (hi - lo))
        .collect()
}

/// Inverse of [`scale_to_box`].
pub fn scale_to_unit(x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect()
}
