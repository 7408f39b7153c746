//! The avalanche from the marginally stable state: every site at `E_c`, one site excited.

use serde::{Deserialize, Serialize};

use super::sweep::{loglog_fit, LogLogFit};
use crate::error::{Result, ZhangError};
use crate::lattice::{build_lattice, Lattice, ModelParams};
use crate::relaxation::{compute_bounds, Kernel, Stamp};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalAvalanche {
    pub d: usize,
    pub l: usize,
    pub center: usize,
    pub duration: u64,
    pub size: u64,
    pub tau_bound: f64,
    /// Overcritical sites at each stage.
    pub front: Vec<usize>,
    /// Largest Manhattan distance from the center among the overcritical sites of each stage.
    pub reach: Vec<usize>,
    /// Energies after each stage, when requested.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub frames: Vec<Vec<f64>>,
}

impl MaximalAvalanche {
    pub fn tau_over_l(&self) -> f64 {
        self.duration as f64 / self.l as f64
    }

    pub fn size_over_quarter_l2(&self) -> f64 {
        self.size as f64 / (self.l * self.l) as f64 * 4.0
    }
}

/// Runs the single avalanche; `keep_frames` stores the energy field after every stage.
pub fn maximal_avalanche<S: Scalar>(params: &ModelParams, lattice: &Lattice, keep_frames: bool) -> Result<MaximalAvalanche> {
    let k = Kernel::<S>::new(params, lattice);
    let bound = compute_bounds(params, lattice).tau_m;
    let center = lattice.center_site();
    let mut x = vec![k.ec.clone(); lattice.n];
    x[center] = x[center].clone() + k.delta.clone();
    let mut stamp = Stamp::new(lattice.n);
    let mut excited = k.excited(&x);
    let (mut duration, mut size) = (0u64, 0u64);
    let mut front = Vec::new();
    let mut reach = Vec::new();
    let mut frames = Vec::new();
    while !excited.is_empty() {
        duration += 1;
        if duration as f64 > bound {
            return Err(ZhangError::Internal(format!("avalanche longer than the bound {bound}")));
        }
        size += excited.len() as u64;
        front.push(excited.len());
        reach.push(excited.iter().map(|&i| lattice.manhattan_distance(center, i)).collect::<Result<Vec<_>>>()?.into_iter().max().unwrap_or(0));
        k.topple(&mut x, &excited, lattice);
        if keep_frames {
            frames.push(x.iter().map(|v| v.to_f64()).collect());
        }
        excited = k.next_excited(&x, &excited, lattice, &mut stamp);
    }
    Ok(MaximalAvalanche { d: lattice.d, l: lattice.l, center, duration, size, tau_bound: bound, front, reach, frames })
}

/// Maximal avalanches over side lengths with the fits `tau ~ L^g_tau` and `s ~ L^(d + g_s)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalScaling {
    pub runs: Vec<MaximalAvalanche>,
    pub tau_fit: LogLogFit,
    pub size_fit: LogLogFit,
    pub gamma_tau: f64,
    pub gamma_s: f64,
}

pub fn maximal_scaling(d: usize, sides: &[usize], params: &ModelParams) -> Result<MaximalScaling> {
    let mut runs = Vec::with_capacity(sides.len());
    for &l in sides {
        let lat = build_lattice(d, l)?;
        runs.push(maximal_avalanche::<f64>(params, &lat, false)?);
    }
    let xs: Vec<f64> = sides.iter().map(|&l| l as f64).collect();
    let tau_fit = loglog_fit(&xs, &runs.iter().map(|r| r.duration as f64).collect::<Vec<_>>())?;
    let size_fit = loglog_fit(&xs, &runs.iter().map(|r| r.size as f64).collect::<Vec<_>>())?;
    let gamma_tau = tau_fit.slope;
    let gamma_s = size_fit.slope - d as f64;
    Ok(MaximalScaling { runs, tau_fit, size_fit, gamma_tau, gamma_s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    #[test]
    fn single_site_is_bounded() {
        let p = ModelParams::new(rat(7, 1), rat(1, 2)).unwrap();
        let lat = build_lattice(1, 1).unwrap();
        let r = maximal_avalanche::<Rational>(&p, &lat, false).unwrap();
        assert_eq!((r.duration, r.size), (1, 1));
        assert!(r.duration as f64 <= r.tau_bound);
    }

    #[test]
    fn first_stage_is_a_rhombus() {
        let p = ModelParams::new(rat(7, 1), rat(1, 2)).unwrap();
        let lat = build_lattice(2, 11).unwrap();
        let r = maximal_avalanche::<Rational>(&p, &lat, true).unwrap();
        // the wave front is the Manhattan sphere of radius t, the interior blinks behind it
        for t in 0..5 {
            assert_eq!(r.reach[t], t);
            assert!(r.front[t] >= 4 * t);
        }
        assert!(r.duration as f64 <= r.tau_bound);
    }
}
