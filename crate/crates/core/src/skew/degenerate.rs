//! Parameters where some avalanche matrix `L` is singular.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{run_orbit, ExcitationSource, RecordOptions};
use crate::lattice::{Lattice, ModelParams};
use crate::matrix::Matrix;
use crate::relaxation::EnergyVector;
use crate::scalar::{rat_from_usize, Rational};

/// An overcritical set whose toppling matrix is singular at `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternRoot {
    pub set: Vec<usize>,
    pub eps: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegeneracyReport {
    /// Some realized avalanche has `det L = 0`.
    pub degenerate: bool,
    /// Some enumerated pattern is singular at `eps`, realized or not.
    pub pattern_singular: bool,
    /// Reason the parameters are non-degenerate without search, if any.
    pub guaranteed: Option<String>,
    /// Patterns singular exactly at `eps`.
    pub matching: Vec<PatternRoot>,
    /// All roots in `(0, 1)` of the enumerated patterns, one per distinct value.
    pub roots: Vec<PatternRoot>,
    pub patterns_checked: usize,
    /// False when the enumeration stopped at `search_depth` before exhausting connected sets.
    pub complete: bool,
    pub sampled_events: u64,
}

/// `det S(C)` as a polynomial in `eps` (coefficient of `eps^k` at index `k`).
pub fn det_polynomial(set: &[usize], lattice: &Lattice) -> Vec<Rational> {
    let k = set.len();
    let xs: Vec<Rational> = (0..=k).map(rat_from_usize).collect();
    let ys: Vec<Rational> = xs.iter().map(|e| pattern_det(set, lattice, e)).collect();
    interpolate(&xs, &ys)
}

/// `det(eps I + (1 - eps)/(2d) A_CC)`, the determinant of the toppling matrix of `C`.
pub fn pattern_det(set: &[usize], lattice: &Lattice, eps: &Rational) -> Rational {
    let share = (Rational::one() - eps.clone()) / rat_from_usize(2 * lattice.d);
    let m = Matrix::from_fn(set.len(), set.len(), |a, b| {
        if a == b {
            eps.clone()
        } else if lattice.are_neighbors(set[a], set[b]) {
            share.clone()
        } else {
            Rational::zero()
        }
    });
    m.determinant()
}

fn interpolate(xs: &[Rational], ys: &[Rational]) -> Vec<Rational> {
    let n = xs.len();
    let mut out = vec![Rational::zero(); n];
    for i in 0..n {
        // basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j)
        let mut basis = vec![Rational::one()];
        let mut denom = Rational::one();
        for j in 0..n {
            if j == i {
                continue;
            }
            let mut next = vec![Rational::zero(); basis.len() + 1];
            for (k, c) in basis.iter().enumerate() {
                next[k + 1] += c.clone();
                next[k] -= c.clone() * xs[j].clone();
            }
            basis = next;
            denom *= xs[i].clone() - xs[j].clone();
        }
        for (k, c) in basis.iter().enumerate() {
            out[k] += c.clone() * ys[i].clone() / denom.clone();
        }
    }
    while out.len() > 1 && out.last().is_some_and(|c| c.is_zero()) {
        out.pop();
    }
    out
}

/// Roots in `(0, 1)` from the negative eigenvalues `lambda` of `A_CC`: `eps = -lambda / (2d - lambda)`.
fn pattern_roots(set: &[usize], lattice: &Lattice) -> Vec<f64> {
    let k = set.len();
    let a = nalgebra::DMatrix::from_fn(k, k, |x, y| if x != y && lattice.are_neighbors(set[x], set[y]) { 1.0 } else { 0.0 });
    let two_d = 2.0 * lattice.d as f64;
    let mut out: Vec<f64> = a
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&l: &&f64| l < -1e-12)
        .map(|&l: &f64| -l / (two_d - l))
        .collect();
    out.sort_by(|x, y| x.total_cmp(y));
    out
}

/// Connected vertex sets of size at most `max_size`, each listed once in sorted order.
fn connected_sets(lattice: &Lattice, max_size: usize, budget: usize) -> (Vec<Vec<usize>>, bool) {
    let mut out = Vec::new();
    let mut complete = true;
    for v in 0..lattice.n {
        // extension with vertices greater than v only
        let mut stack = vec![(vec![v], lattice.neighbors[v].iter().copied().filter(|&u| u > v).collect::<BTreeSet<usize>>())];
        while let Some((set, ext)) = stack.pop() {
            out.push(set.clone());
            if out.len() >= budget {
                return (out, false);
            }
            if set.len() == max_size {
                if !ext.is_empty() {
                    complete = false;
                }
                continue;
            }
            let mut ext = ext;
            while let Some(&w) = ext.iter().next() {
                ext.remove(&w);
                let mut next_ext = ext.clone();
                for &u in &lattice.neighbors[w] {
                    if u > v && !set.contains(&u) && !set.iter().any(|&s| lattice.neighbors[s].contains(&u)) && u != w {
                        next_ext.insert(u);
                    }
                }
                let mut s2 = set.clone();
                s2.push(w);
                stack.push((s2, next_ext));
            }
        }
    }
    for s in &mut out {
        s.sort_unstable();
    }
    (out, complete)
}

/// Degeneracy test: singular toppling patterns at `eps`, confirmed against sampled avalanches.
pub fn detect_degenerate_params(params: &ModelParams, lattice: &Lattice, search_depth: usize, samples: u64, seed: u64) -> DegeneracyReport {
    let half = Rational::new(1.into(), 2.into());
    let eps = &params.eps;
    let guaranteed = if *eps >= half {
        Some("eps >= 1/2".to_string())
    } else if eps.is_zero() {
        None
    } else if params.ec >= params.adjacency_threshold() {
        Some("E_c >= eps/(1-eps): overcritical sites are never adjacent".to_string())
    } else {
        None
    };
    let (sets, complete) = connected_sets(lattice, search_depth.max(1), 200_000);
    let mut matching = Vec::new();
    let mut roots: Vec<PatternRoot> = Vec::new();
    for set in &sets {
        for r in pattern_roots(set, lattice) {
            if !roots.iter().any(|p| (p.eps - r).abs() < 1e-12) {
                roots.push(PatternRoot { set: set.clone(), eps: r });
            }
        }
        if pattern_det(set, lattice, eps).is_zero() {
            matching.push(PatternRoot { set: set.clone(), eps: crate::scalar::rational_to_f64(eps) });
        }
    }
    roots.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    // avalanches actually realized along a driven orbit
    let mut degenerate = false;
    let mut sampled = 0;
    if eps.is_zero() {
        degenerate = true;
    } else if !matching.is_empty() && guaranteed.is_none() {
        let x0 = EnergyVector::<f64>::zeros(lattice.n);
        if let Ok(orbit) = run_orbit(&x0, &ExcitationSource::iid(seed), params, lattice, samples, RecordOptions::SETS) {
            for rec in orbit.flatten() {
                sampled += 1;
                if rec.overcritical_sets.iter().any(|c| {
                    let mut c = c.clone();
                    c.sort_unstable();
                    pattern_det(&c, lattice, eps).is_zero()
                }) {
                    degenerate = true;
                    break;
                }
            }
        }
    }
    DegeneracyReport {
        degenerate,
        pattern_singular: !matching.is_empty(),
        guaranteed,
        matching,
        roots,
        patterns_checked: sets.len(),
        complete,
        sampled_events: sampled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::scalar::rat;

    #[test]
    fn two_site_kernel() {
        let lat = build_lattice(1, 2).unwrap();
        // det [[e, (1-e)/2], [(1-e)/2, e]] = e^2 - (1-e)^2/4 = (3e^2 + 2e - 1)/4
        assert_eq!(det_polynomial(&[0, 1], &lat), vec![rat(-1, 4), rat(1, 2), rat(3, 4)]);
        let p = ModelParams::new(rat(1, 3), rat(1, 3)).unwrap();
        let r = detect_degenerate_params(&p, &lat, 4, 1000, 1);
        assert!(r.degenerate);
        assert_eq!(r.matching[0].set, vec![0, 1]);
        assert!(r.roots.iter().any(|x| (x.eps - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn guaranteed_regions() {
        let lat = build_lattice(1, 3).unwrap();
        let p = ModelParams::new(rat(1, 10), rat(1, 2)).unwrap();
        let r = detect_degenerate_params(&p, &lat, 4, 1000, 1);
        assert!(!r.degenerate && r.guaranteed.is_some());
        let p = ModelParams::new(rat(1, 2), rat(1, 3)).unwrap();
        assert!(!detect_degenerate_params(&p, &lat, 4, 1000, 1).degenerate);
    }

    #[test]
    fn connected_sets_of_a_path() {
        let lat = build_lattice(1, 4).unwrap();
        let (sets, complete) = connected_sets(&lat, 4, 1000);
        assert!(complete);
        // 4 + 3 + 2 + 1 intervals
        assert_eq!(sets.len(), 10);
        let lat = build_lattice(2, 2).unwrap();
        let (sets, _) = connected_sets(&lat, 4, 1000);
        // 4 singles, 4 edges, 4 paths of three, 1 square
        assert_eq!(sets.len(), 13);
    }
}
