//! Nearly-Zhang models: small random perturbations of the affine pieces.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, ZhangError};
use crate::geometry::ContinuityAtlas;
use crate::scalar::{f64_to_rational, Rational};

/// Adds independent uniform noise in `[-magnitude, magnitude]` to every entry of each non-identity
/// `L` and offset. Domains are unchanged.
///
/// Images of many pieces touch the faces `x_k = E_c`, so each perturbed offset is then shifted by the
/// smallest translation that brings the images of the domain vertices back into the state space.
/// Fails when a perturbed `L` has spectral radius `>= 1` or an image is too wide to fit.
pub fn perturb_model(atlas: &ContinuityAtlas, magnitude: f64, seed: u64) -> Result<ContinuityAtlas> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(ZhangError::Domain(format!("perturbation magnitude must be finite and >= 0, got {magnitude}")));
    }
    let mut out = atlas.clone();
    if magnitude == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = atlas.domain();
    for site in 0..atlas.n {
        for (j, piece) in out.pieces[site].iter_mut().enumerate() {
            if piece.size == 0 {
                continue;
            }
            let mut noise = || -> Rational { f64_to_rational(rng.gen_range(-magnitude..=magnitude)) };
            for r in 0..atlas.n {
                for c in 0..atlas.n {
                    let v = piece.linear.get(r, c).clone() + noise();
                    piece.linear.set(r, c, v);
                }
            }
            for v in piece.offset.iter_mut() {
                *v += noise();
            }
            let rho = piece.linear.to_f64().spectral_radius();
            if rho >= 1.0 {
                return Err(ZhangError::Domain(format!("perturbed L of piece {j} at site {site} has spectral radius {rho}")));
            }
            let images: Vec<Vec<Rational>> = piece.domain.closure().vertices().iter().map(|v| piece.apply(v)).collect();
            for k in 0..atlas.n {
                let lo = images.iter().map(|y| y[k].clone()).min();
                let hi = images.iter().map(|y| y[k].clone()).max();
                let (Some(lo), Some(hi)) = (lo, hi) else { continue };
                if hi.clone() - lo.clone() > atlas.params.ec {
                    return Err(ZhangError::Domain(format!("perturbed piece {j} at site {site} has an image wider than the state space")));
                }
                if hi > atlas.params.ec {
                    piece.offset[k] -= hi - atlas.params.ec.clone();
                } else if lo < Rational::zero() {
                    piece.offset[k] -= lo;
                }
            }
            for v in piece.domain.closure().vertices() {
                if !dom.contains_point(&piece.apply(&v)) {
                    return Err(ZhangError::Internal(format!("perturbed piece {j} at site {site} still leaves the state space")));
                }
            }
        }
    }
    Ok(out)
}
