//! Reproducible sampling of chart and phase-space points.
//!
//! Random points come from ChaCha8, a counter-based generator whose output
//! stream is fixed by the 64-bit seed on every platform. Deterministic grids
//! use the Halton sequence in the first three prime bases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const HALTON_BASES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// Axis-aligned sampling region, one closed interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    pub bounds: Vec<(f64, f64)>,
}

impl SampleBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self { bounds }
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            bounds: vec![(-half_width, half_width); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn lerp(&self, unit: &[f64]) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(unit)
            .map(|(&(lo, hi), &u)| lo + (hi - lo) * u)
            .collect()
    }

    pub fn uniform(&self, rng: &mut SampleRng) -> Vec<f64> {
        let unit: Vec<f64> = (0..self.dim()).map(|_| rng.random::<f64>()).collect();
        self.lerp(&unit)
    }

    /// The `count` first Halton points mapped into the box (index 0 is skipped).
    pub fn halton(&self, count: usize) -> Vec<Vec<f64>> {
        (1..=count as u64)
            .map(|i| {
                let unit: Vec<f64> = (0..self.dim())
                    .map(|d| radical_inverse(i, HALTON_BASES[d % HALTON_BASES.len()]))
                    .collect();
                self.lerp(&unit)
            })
            .collect()
    }

    /// Verification grid: `10^min(dim, 3)` Halton points followed by `random` uniform points.
    pub fn verification_points(&self, random: usize, rng: &mut SampleRng) -> Vec<Vec<f64>> {
        let grid = 10usize.pow(self.dim().min(3) as u32);
        let mut points = self.halton(grid);
        points.extend((0..random).map(|_| self.uniform(rng)));
        points
    }
}
