//! Avalanche-type domains on a grid of parameters.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::atlas::build_atlas;
use crate::lattice::{Lattice, ModelParams};
use crate::scalar::Rational;

/// Full-dimensional avalanche patterns of the atlas, as `(site, overcritical sets)`.
pub type Signature = BTreeSet<(usize, Vec<Vec<usize>>)>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BifurcationPoint {
    #[serde(with = "crate::lattice::rational_string")]
    pub eps: Rational,
    #[serde(with = "crate::lattice::rational_string")]
    pub ec: Rational,
    /// Index of the signature in [`BifurcationScan::signatures`], `None` when the atlas was cut short.
    pub domain: Option<usize>,
    pub pieces: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BifurcationScan {
    pub points: Vec<BifurcationPoint>,
    pub signatures: Vec<Signature>,
}

/// Signature of the depth-capped atlas at every grid point; equal indices mean the same domain.
pub fn bifurcation_scan(grid: &[(Rational, Rational)], lattice: &Lattice, depth: usize, piece_budget: usize) -> BifurcationScan {
    let mut signatures: Vec<Signature> = Vec::new();
    let mut points = Vec::with_capacity(grid.len());
    for (eps, ec) in grid {
        let params = match ModelParams::new(ec.clone(), eps.clone()) {
            Ok(p) => p,
            Err(_) => {
                points.push(BifurcationPoint { eps: eps.clone(), ec: ec.clone(), domain: None, pieces: 0 });
                continue;
            }
        };
        let (domain, pieces) = match build_atlas(&params, lattice, depth, piece_budget) {
            Ok(atlas) if atlas.complete => {
                let sig: Signature = (0..atlas.n)
                    .flat_map(|i| atlas.full_dimensional(i).map(move |(_, p)| (i, p.avalanche.clone())).collect::<Vec<_>>())
                    .collect();
                let idx = match signatures.iter().position(|s| *s == sig) {
                    Some(k) => k,
                    None => {
                        signatures.push(sig);
                        signatures.len() - 1
                    }
                };
                (Some(idx), atlas.total_full_count())
            }
            _ => (None, 0),
        };
        points.push(BifurcationPoint { eps: eps.clone(), ec: ec.clone(), domain, pieces });
    }
    BifurcationScan { points, signatures }
}
