//! Exact continuity pieces of the return maps `F_i`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{Constraint, HPolytope};
use super::region::Region;
use crate::error::{Result, ZhangError};
use crate::lattice::{Lattice, ModelParams};
use crate::matrix::Matrix;
use crate::relaxation::{set_matrix, Kernel};
use crate::scalar::Rational;

type Q = Rational;

/// One continuity piece `M_ij` with its affine map `x -> L x + offset`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Piece {
    pub site: usize,
    pub domain: HPolytope,
    #[serde(with = "crate::lattice::rational_matrix_string")]
    pub linear: Matrix<Q>,
    #[serde(with = "crate::lattice::rational_vec_string")]
    pub offset: Vec<Q>,
    /// Overcritical sets in topple order.
    pub avalanche: Vec<Vec<usize>>,
    pub size: usize,
    pub duration: usize,
    pub full_dimensional: bool,
}

impl Piece {
    pub fn apply(&self, x: &[Q]) -> Vec<Q> {
        let mut y = self.linear.mul_vec(x);
        for (a, b) in y.iter_mut().zip(&self.offset) {
            *a += b.clone();
        }
        y
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.domain.contains_point(x)
    }

    pub fn interior(&self) -> HPolytope {
        self.domain.interior()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuityAtlas {
    pub n: usize,
    pub d: usize,
    pub l: usize,
    pub params: ModelParams,
    pub pieces: Vec<Vec<Piece>>,
    /// False when the depth cap or the piece budget cut the enumeration short.
    pub complete: bool,
}

impl ContinuityAtlas {
    pub fn full_dimensional(&self, site: usize) -> impl Iterator<Item = (usize, &Piece)> {
        self.pieces[site].iter().enumerate().filter(|(_, p)| p.full_dimensional)
    }

    pub fn full_count(&self, site: usize) -> usize {
        self.full_dimensional(site).count()
    }

    pub fn total_full_count(&self) -> usize {
        (0..self.n).map(|i| self.full_count(i)).sum()
    }

    /// The piece of site `i` containing `x`.
    pub fn locate(&self, site: usize, x: &[Q]) -> Option<usize> {
        self.pieces[site].iter().position(|p| p.contains(x))
    }

    pub fn domain(&self) -> HPolytope {
        HPolytope::cube(self.n, &Q::zero(), &self.params.ec)
    }

    /// Whether `c` is one of the faces `x_k = 0`, `x_k = E_c` of the state space.
    pub fn is_boundary_face(&self, c: &Constraint) -> bool {
        let c = c.normalized();
        let nz: Vec<usize> = (0..c.a.len()).filter(|&k| !c.a[k].is_zero()).collect();
        if nz.len() != 1 {
            return false;
        }
        let v = &c.a[nz[0]];
        (v.is_one() && c.b == self.params.ec) || (*v == -Q::one() && c.b.is_zero())
    }
}

/// Enumerates the pieces of every `F_i` on `[0, E_c]^N`.
pub fn build_atlas(params: &ModelParams, lattice: &Lattice, tau_cap: usize, piece_budget: usize) -> Result<ContinuityAtlas> {
    let n = lattice.n;
    if n > 12 {
        return Err(ZhangError::Budget(format!("exact atlas limited to N <= 12, got N = {n}")));
    }
    let kernel: Kernel<Q> = Kernel::new(params, lattice);
    let mut complete = true;
    let mut pieces = Vec::with_capacity(n);
    let mut nodes = 0usize;
    for site in 0..n {
        let mut found: Vec<Piece> = Vec::new();
        let mut offset = vec![Q::zero(); n];
        offset[site] = params.delta.clone();
        let mut stack = vec![(HPolytope::cube(n, &Q::zero(), &params.ec), Matrix::<Q>::identity(n), offset, Vec::<Vec<usize>>::new())];
        while let Some((dom, a, c, sig)) = stack.pop() {
            nodes += 1;
            if nodes > piece_budget {
                complete = false;
                break;
            }
            // split on which sites of y = A x + c exceed E_c
            let mut parts: Vec<(HPolytope, Vec<usize>)> = vec![(dom, Vec::new())];
            for k in 0..n {
                let row: Vec<Q> = a.row(k).to_vec();
                let rhs = params.ec.clone() - c[k].clone();
                let below = Constraint::new(row.clone(), rhs.clone(), false);
                let above = Constraint::new(row.iter().map(|v| -v.clone()).collect(), -rhs, true);
                let mut next = Vec::with_capacity(parts.len() * 2);
                for (p, set) in parts {
                    if below.is_trivial() {
                        if below.trivially_true() {
                            next.push((p, set));
                        } else {
                            let mut s = set;
                            s.push(k);
                            next.push((p, s));
                        }
                        continue;
                    }
                    let lo = p.with(below.clone());
                    if !lo.is_empty() {
                        next.push((lo, set.clone()));
                    }
                    let hi = p.with(above.clone());
                    if !hi.is_empty() {
                        let mut s = set;
                        s.push(k);
                        next.push((hi, s));
                    }
                }
                parts = next;
            }
            for (p, set) in parts.into_iter().rev() {
                let p = p.simplified();
                if set.is_empty() {
                    let size = sig.iter().map(|s: &Vec<usize>| s.len()).sum();
                    let full = p.is_full_dimensional();
                    found.push(Piece {
                        site,
                        domain: p,
                        linear: a.clone(),
                        offset: c.clone(),
                        duration: sig.len(),
                        size,
                        avalanche: sig.clone(),
                        full_dimensional: full,
                    });
                } else if sig.len() >= tau_cap {
                    complete = false;
                } else {
                    let s = set_matrix::<Q>(&set, &kernel, lattice);
                    let mut sig2 = sig.clone();
                    sig2.push(set);
                    stack.push((p, s.matmul(&a), s.mul_vec(&c), sig2));
                }
            }
        }
        found.sort_by(|x, y| {
            (!x.full_dimensional, x.size, x.duration, &x.avalanche).cmp(&(!y.full_dimensional, y.size, y.duration, &y.avalanche))
        });
        pieces.push(found);
    }
    Ok(ContinuityAtlas { n, d: lattice.d, l: lattice.l, params: params.clone(), pieces, complete })
}

/// Image of a region inside the domain of `piece`.
pub fn image_region(piece: &Piece, region: &Region) -> Region {
    region.image(&piece.linear, &piece.offset)
}

/// Open cell of the common refinement of all full-dimensional pieces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cell {
    /// Index of the piece of each site that contains the cell.
    pub pieces: Vec<usize>,
    pub poly: HPolytope,
}

/// Nonempty open intersections `int M_{1 j_1} ∩ ... ∩ int M_{N j_N}`.
pub fn refine_cells(atlas: &ContinuityAtlas) -> Vec<Cell> {
    let mut cells = vec![Cell { pieces: Vec::new(), poly: atlas.domain().interior() }];
    for site in 0..atlas.n {
        let mut next = Vec::new();
        for cell in &cells {
            for (j, piece) in atlas.full_dimensional(site) {
                let p = cell.poly.intersect(&piece.interior());
                if p.is_full_dimensional() {
                    let mut pieces = cell.pieces.clone();
                    pieces.push(j);
                    next.push(Cell { pieces, poly: p.simplified() });
                }
            }
        }
        cells = next;
    }
    cells
}

/// Faces of the cells that are not faces of the state space: the singularity set `S(F)`.
pub fn singular_faces(atlas: &ContinuityAtlas, cell: &Cell) -> Vec<Constraint> {
    cell.poly.constraints.iter().filter(|c| !atlas.is_boundary_face(c)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::scalar::rat;

    #[test]
    fn example_two_site_atlas() {
        let lat = build_lattice(1, 2).unwrap();
        let p = ModelParams::new(rat(7, 2), rat(1, 2)).unwrap();
        let atlas = build_atlas(&p, &lat, 64, 100_000).unwrap();
        assert!(atlas.complete);
        assert_eq!(atlas.full_count(0), 3);
        assert_eq!(atlas.full_count(1), 3);
        let sizes: Vec<usize> = atlas.full_dimensional(0).map(|(_, p)| p.size).collect();
        assert_eq!(sizes, vec![0, 1, 2]);
        let cells = refine_cells(&atlas);
        assert!(cells.len() >= 3);
    }
}
