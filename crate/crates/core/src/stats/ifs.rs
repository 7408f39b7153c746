//! Affine iterated function systems with known dimension, used to calibrate the estimators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Maps `x -> a x + b` on `R^k`, with `a` given row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineIfs {
    pub name: String,
    pub dim: usize,
    pub maps: Vec<(Vec<f64>, Vec<f64>)>,
    /// Exact dimension of the attractor when known.
    pub dimension: Option<f64>,
}

impl AffineIfs {
    fn diagonal(name: &str, scales: &[f64], offsets: &[Vec<f64>], dimension: f64) -> Self {
        let k = scales.len();
        let mut a = vec![0.0; k * k];
        for i in 0..k {
            a[i * k + i] = scales[i];
        }
        AffineIfs { name: name.into(), dim: k, maps: offsets.iter().map(|b| (a.clone(), b.clone())).collect(), dimension: Some(dimension) }
    }

    pub fn apply(&self, m: usize, x: &[f64]) -> Vec<f64> {
        let (a, b) = &self.maps[m];
        (0..self.dim).map(|i| (0..self.dim).map(|j| a[i * self.dim + j] * x[j]).sum::<f64>() + b[i]).collect()
    }

    /// Points of the attractor by the chaos game.
    pub fn chaos_game(&self, n_points: usize, n_transient: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = vec![0.0; self.dim];
        let mut out = Vec::with_capacity(n_points);
        for k in 0..n_transient + n_points {
            x = self.apply(rng.gen_range(0..self.maps.len()), &x);
            if k >= n_transient {
                out.push(x.clone());
            }
        }
        out
    }

    /// Extreme singular values of each linear part.
    pub fn singular_values(&self) -> Vec<(f64, f64)> {
        self.maps
            .iter()
            .map(|(a, _)| {
                let s = nalgebra::DMatrix::from_row_slice(self.dim, self.dim, a).singular_values();
                (s.min(), s.max())
            })
            .collect()
    }

    pub fn sierpinski() -> Self {
        let h = 0.5;
        Self::diagonal("sierpinski", &[h, h], &[vec![0.0, 0.0], vec![h, 0.0], vec![0.25, h]], 3f64.ln() / 2f64.ln())
    }

    pub fn cantor_dust() -> Self {
        let t = 1.0 / 3.0;
        let offs: Vec<Vec<f64>> = [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (2.0, 2.0)].iter().map(|&(a, b)| vec![a * t, b * t]).collect();
        Self::diagonal("cantor_dust", &[t, t], &offs, 4f64.ln() / 3f64.ln())
    }

    /// Unequal ratios `1/2` and `1/4` on the line: `2^-D + 4^-D = 1`.
    pub fn uneven_cantor() -> Self {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        // 4^-D = (2^-D)^2, so 2^-D is the golden ratio conjugate
        let dim = -golden.ln() / 2f64.ln();
        AffineIfs {
            name: "uneven_cantor".into(),
            dim: 1,
            maps: vec![(vec![0.5], vec![0.0]), (vec![0.25], vec![0.75])],
            dimension: Some(dim),
        }
    }

    /// Interval times the middle-thirds Cantor set: contractions 1/2 and 1/3.
    pub fn interval_times_cantor() -> Self {
        let offs: Vec<Vec<f64>> = [(0.0, 0.0), (0.5, 0.0), (0.0, 2.0 / 3.0), (0.5, 2.0 / 3.0)].iter().map(|&(a, b)| vec![a, b]).collect();
        Self::diagonal("interval_times_cantor", &[0.5, 1.0 / 3.0], &offs, 1.0 + 2f64.ln() / 3f64.ln())
    }

    pub fn middle_thirds() -> Self {
        let t = 1.0 / 3.0;
        AffineIfs { name: "middle_thirds".into(), dim: 1, maps: vec![(vec![t], vec![0.0]), (vec![t], vec![2.0 * t])], dimension: Some(2f64.ln() / 3f64.ln()) }
    }

    /// Fixtures satisfying the open set condition, with known dimension.
    pub fn fixtures() -> Vec<AffineIfs> {
        vec![Self::sierpinski(), Self::cantor_dust(), Self::uneven_cantor(), Self::interval_times_cantor(), Self::middle_thirds()]
    }
}
