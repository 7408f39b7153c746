//! Exact spatial cylinders: sets of states following a fixed word of pieces.

use num_traits::{Signed, Zero};

use crate::geometry::{Constraint, ContinuityAtlas, HPolytope};
use crate::matrix::Matrix;
use crate::scalar::Rational;

type Q = Rational;

/// Open set of states whose first `word.len()` events use the listed `(site, piece)` pairs.
#[derive(Clone, Debug)]
pub struct Cylinder {
    pub word: Vec<(usize, usize)>,
    pub domain: HPolytope,
    /// The composed map on the cylinder is `x -> linear x + offset`.
    pub linear: Matrix<Q>,
    pub offset: Vec<Q>,
}

impl Cylinder {
    pub fn root(atlas: &ContinuityAtlas) -> Self {
        Cylinder {
            word: Vec::new(),
            domain: atlas.domain().interior(),
            linear: Matrix::identity(atlas.n),
            offset: vec![Q::zero(); atlas.n],
        }
    }

    pub fn sites(&self) -> Vec<usize> {
        self.word.iter().map(|w| w.0).collect()
    }

    /// Nonempty children for exciting `site` next.
    pub fn children(&self, atlas: &ContinuityAtlas, site: usize) -> Vec<Cylinder> {
        let mut out = Vec::new();
        let lt = self.linear.transpose();
        'piece: for (j, piece) in atlas.full_dimensional(site) {
            let mut dom = self.domain.clone();
            for c in &piece.interior().constraints {
                // a . (A x + c) < b  <=>  (A^T a) . x < b - a . c
                let a = lt.mul_vec(&c.a);
                let b = c.b.clone() - crate::geometry::poly::dot(&c.a, &self.offset);
                let pulled = Constraint::new(a, b, c.strict);
                if pulled.is_trivial() {
                    if pulled.trivially_true() {
                        continue;
                    }
                    continue 'piece;
                }
                dom = dom.with(pulled);
            }
            if dom.is_empty() {
                continue;
            }
            let dom = dom.simplified();
            let mut word = self.word.clone();
            word.push((site, j));
            let linear = piece.linear.matmul(&self.linear);
            let offset = piece.apply(&self.offset);
            out.push(Cylinder { word, domain: dom, linear, offset });
        }
        out
    }
}

/// Largest number of closures among `cyls` sharing a vertex of one of them.
pub fn vertex_multiplicity(cyls: &[&Cylinder]) -> usize {
    if cyls.len() <= 1 {
        return cyls.len();
    }
    let closures: Vec<HPolytope> = cyls.iter().map(|c| c.domain.closure()).collect();
    let mut best = 1;
    let mut seen: Vec<Vec<Q>> = Vec::new();
    for cl in &closures {
        for v in cl.vertices() {
            if seen.contains(&v) {
                continue;
            }
            let m = closures.iter().filter(|o| o.contains_point(&v)).count();
            best = best.max(m);
            seen.push(v);
        }
    }
    best
}

/// Whether every entry of `m` has absolute column sums below `c`.
pub fn norm1_below(m: &Matrix<Q>, c: &Q) -> bool {
    m.column_abs_sums().iter().all(|s| s.abs() < *c)
}
