//! Local germs of polytopes at singular points, used to exhibit essential singularities.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::atlas::{Cell, ContinuityAtlas};
use super::poly::{order_polygon, Constraint, HPolytope};
use crate::scalar::Rational;

type Q = Rational;

/// A polytope germ: the set `apex + poly` near `apex`, with `poly` in relative coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Germ {
    #[serde(with = "crate::lattice::rational_vec_string")]
    pub apex: Vec<Q>,
    pub poly: HPolytope,
}

/// Finite orbit of germs returning to its start after splitting on a singularity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    /// `p_0, p_1, ..., p_k = p_0`
    pub apex_orbit: Vec<WPoint>,
    /// Sites excited at each step.
    pub word: Vec<usize>,
    /// Cell whose germ is followed before each step.
    pub cells: Vec<usize>,
    /// Steps after which the image germ was split between several cells.
    pub straddles: Vec<usize>,
    /// Relative vertex loops of each image germ before splitting (planar case).
    pub images: Vec<Vec<WPoint>>,
    /// Relative vertex loops of the followed part after splitting.
    pub followed: Vec<Vec<WPoint>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WPoint(#[serde(with = "crate::lattice::rational_vec_string")] pub Vec<Q>);

/// Homogeneous cone of `cell` at `p`, or `None` when `p` is not in the closure.
pub fn local_cone(cell: &Cell, p: &[Q]) -> Option<HPolytope> {
    let mut cone = Vec::new();
    for c in &cell.poly.constraints {
        let s = c.slack(p);
        if s.is_positive() {
            return None;
        }
        if s.is_zero() {
            cone.push(Constraint::new(c.a.clone(), Q::zero(), c.strict));
        }
    }
    Some(HPolytope { dim: p.len(), constraints: cone })
}

fn tangent_cone(poly: &HPolytope) -> HPolytope {
    let origin = vec![Q::zero(); poly.dim];
    HPolytope {
        dim: poly.dim,
        constraints: poly.constraints.iter().filter(|c| c.slack(&origin).is_zero()).cloned().collect(),
    }
}

fn relative_box(n: usize) -> HPolytope {
    HPolytope::cube(n, &-Q::one(), &Q::one()).interior()
}

/// Image of a relative polytope under an invertible linear map.
fn linear_image(poly: &HPolytope, inv_t: &crate::matrix::Matrix<Q>) -> HPolytope {
    HPolytope {
        dim: poly.dim,
        constraints: poly.constraints.iter().map(|c| Constraint::new(inv_t.mul_vec(&c.a), c.b.clone(), c.strict).normalized()).collect(),
    }
}

fn relative_loop(poly: &HPolytope) -> Vec<WPoint> {
    let mut v = poly.vertices();
    if poly.dim == 2 {
        order_polygon(&mut v);
    }
    v.into_iter().map(WPoint).collect()
}

/// Splits a germ among the cells whose closure contains its apex.
fn split(cells: &[Cell], apex: &[Q], poly: &HPolytope) -> Vec<(usize, HPolytope)> {
    let mut out = Vec::new();
    for (z, cell) in cells.iter().enumerate() {
        let Some(cone) = local_cone(cell, apex) else { continue };
        let part = poly.intersect(&cone);
        if part.is_full_dimensional() {
            out.push((z, part.interior().simplified()));
        }
    }
    out
}

/// Candidate apexes: vertices of the arrangement of all cell faces inside the closed state space.
pub fn arrangement_vertices(atlas: &ContinuityAtlas, cells: &[Cell]) -> Vec<Vec<Q>> {
    let n = atlas.n;
    let mut lines: Vec<Constraint> = Vec::new();
    for c in cells.iter().flat_map(|c| c.poly.constraints.iter()) {
        let c = c.normalized().closed();
        let flipped = c.negated().normalized().closed();
        if !lines.iter().any(|l| (l.a == c.a && l.b == c.b) || (l.a == flipped.a && l.b == flipped.b)) {
            lines.push(c);
        }
    }
    let dom = atlas.domain();
    let mut pts: Vec<Vec<Q>> = Vec::new();
    if n == 0 {
        return pts;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if lines.len() < n {
        return pts;
    }
    loop {
        let rows: Vec<Vec<Q>> = idx.iter().map(|&k| lines[k].a.clone()).collect();
        let rhs: Vec<Q> = idx.iter().map(|&k| lines[k].b.clone()).collect();
        if let Some(x) = crate::matrix::Matrix::from_rows(rows).solve(&rhs) {
            if dom.contains_point(&x) && !pts.contains(&x) {
                pts.push(x);
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                pts.sort();
                return pts;
            }
            i -= 1;
            if idx[i] < lines.len() - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Points of the apex orbit graph, per depth, from which `start` is reached again by depth `max_len`.
fn returning_layers(atlas: &ContinuityAtlas, cells: &[Cell], start: &[Q], max_len: usize) -> Vec<BTreeSet<Vec<Q>>> {
    let dom = atlas.domain();
    let mut layers: Vec<BTreeSet<Vec<Q>>> = vec![BTreeSet::from([start.to_vec()])];
    let mut edges: Vec<Vec<(Vec<Q>, Vec<Q>)>> = Vec::new();
    for _ in 0..max_len {
        let mut next = BTreeSet::new();
        let mut e = Vec::new();
        for p in layers.last().unwrap() {
            for cell in cells.iter().filter(|c| local_cone(c, p).is_some()) {
                for site in 0..atlas.n {
                    let q = atlas.pieces[site][cell.pieces[site]].apply(p);
                    if dom.contains_point(&q) {
                        e.push((p.clone(), q.clone()));
                        next.insert(q);
                    }
                }
            }
        }
        layers.push(next);
        edges.push(e);
    }
    let mut good: Vec<BTreeSet<Vec<Q>>> = vec![BTreeSet::new(); max_len + 1];
    for t in (0..max_len).rev() {
        let mut g = BTreeSet::new();
        for (p, q) in &edges[t] {
            if q.as_slice() == start || good[t + 1].contains(q) {
                g.insert(p.clone());
            }
        }
        good[t] = g;
    }
    // a node at depth t may sit on the start apex itself only if it can also stop there
    for t in 1..=max_len {
        if layers[t].contains(start) {
            good[t].insert(start.to_vec());
        }
    }
    good
}

struct Node {
    apex: Vec<Q>,
    cell: usize,
    poly: HPolytope,
    word: Vec<usize>,
    cells: Vec<usize>,
    orbit: Vec<Vec<Q>>,
    straddles: Vec<usize>,
    images: Vec<HPolytope>,
    followed: Vec<HPolytope>,
}

/// Breadth-first search for a germ cycle through a splitting singularity.
///
/// Starting germs are the local cones of cells at each candidate apex, cut to a unit box.
/// Success means the germ returns to its apex with a tangent cone containing the start cone
/// after at least one split. `budget` bounds the number of germ steps.
pub fn find_witness(atlas: &ContinuityAtlas, cells: &[Cell], apexes: &[Vec<Q>], max_len: usize, budget: usize) -> Option<Witness> {
    let n = atlas.n;
    let mut inverses = Vec::new();
    for site in 0..n {
        inverses.push(
            atlas.pieces[site]
                .iter()
                .map(|p| p.linear.inverse().map(|m| m.transpose()))
                .collect::<Vec<_>>(),
        );
    }
    let mut steps = 0usize;
    for apex in apexes {
        let good = returning_layers(atlas, cells, apex, max_len);
        if good.iter().all(|g| g.is_empty()) {
            continue;
        }
        let starts = split(cells, apex, &relative_box(n));
        for (z0, g0) in starts {
            let cone0 = tangent_cone(&g0);
            // a germ is determined by its apex, cell and tangent cone
            let mut seen = BTreeSet::new();
            let mut frontier = vec![Node {
                apex: apex.clone(),
                cell: z0,
                poly: g0.clone(),
                word: Vec::new(),
                cells: Vec::new(),
                orbit: vec![apex.clone()],
                straddles: Vec::new(),
                images: Vec::new(),
                followed: Vec::new(),
            }];
            for _depth in 0..max_len {
                let mut next = Vec::new();
                for node in &frontier {
                    for site in 0..n {
                        steps += 1;
                        if steps > budget {
                            return None;
                        }
                        let pj = cells[node.cell].pieces[site];
                        let piece = &atlas.pieces[site][pj];
                        let Some(inv_t) = &inverses[site][pj] else { continue };
                        let new_apex = piece.apply(&node.apex);
                        if !good[node.word.len() + 1].contains(&new_apex) {
                            continue;
                        }
                        let img = linear_image(&node.poly, inv_t);
                        let parts = split(cells, &new_apex, &img);
                        let splits = parts.len() >= 2;
                        for (z, part) in parts {
                            let mut child = Node {
                                apex: new_apex.clone(),
                                cell: z,
                                poly: part.clone(),
                                word: node.word.clone(),
                                cells: node.cells.clone(),
                                orbit: node.orbit.clone(),
                                straddles: node.straddles.clone(),
                                images: node.images.clone(),
                                followed: node.followed.clone(),
                            };
                            child.word.push(site);
                            child.cells.push(node.cell);
                            child.orbit.push(new_apex.clone());
                            child.images.push(img.clone());
                            child.followed.push(part.clone());
                            if splits {
                                child.straddles.push(child.word.len() - 1);
                            }
                            if child.apex == *apex && !child.straddles.is_empty() && cone_contains(&tangent_cone(&part), &cone0) {
                                return Some(Witness {
                                    apex_orbit: child.orbit.into_iter().map(WPoint).collect(),
                                    word: child.word,
                                    cells: child.cells,
                                    straddles: child.straddles,
                                    images: child.images.iter().map(relative_loop).collect(),
                                    followed: child.followed.iter().map(relative_loop).collect(),
                                });
                            }
                            let key = (child.apex.clone(), z, cone_key(&part), child.straddles.is_empty());
                            if seen.insert(key) {
                                next.push(child);
                            }
                        }
                    }
                }
                frontier = next;
                if frontier.is_empty() {
                    break;
                }
            }
        }
    }
    None
}

fn cone_key(poly: &HPolytope) -> Vec<Constraint> {
    let mut k: Vec<Constraint> = tangent_cone(poly).constraints.iter().map(|c| c.normalized()).collect();
    k.sort();
    k.dedup();
    k
}

/// `inner ⊆ outer` for cones given by homogeneous constraints.
fn cone_contains(outer: &HPolytope, inner: &HPolytope) -> bool {
    outer.constraints.iter().all(|c| inner.with(c.negated()).is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::atlas::{build_atlas, refine_cells};
    use crate::lattice::{build_lattice, ModelParams};
    use crate::scalar::{rat, rat_int};

    #[test]
    fn cone_at_corner_of_square() {
        let lat = build_lattice(1, 2).unwrap();
        let p = ModelParams::parse("7/2", "1/2").unwrap();
        let atlas = build_atlas(&p, &lat, 64, 100_000).unwrap();
        let cells = refine_cells(&atlas);
        let origin = vec![rat_int(0), rat_int(0)];
        let parts = split(&cells, &origin, &relative_box(2));
        assert_eq!(parts.len(), 1);
        assert!(!arrangement_vertices(&atlas, &cells).is_empty());
    }

    #[test]
    fn seven_half_has_germ_cycle() {
        let lat = build_lattice(1, 2).unwrap();
        let p = ModelParams::parse("7", "1/2").unwrap();
        let atlas = build_atlas(&p, &lat, 64, 100_000).unwrap();
        let cells = refine_cells(&atlas);
        let mut apexes = arrangement_vertices(&atlas, &cells);
        apexes.reverse();
        let w = find_witness(&atlas, &cells, &apexes, 8, 200_000).expect("witness");
        let pt = |x: i64, y: i64| WPoint(vec![rat_int(x), rat_int(y)]);
        assert_eq!(w.apex_orbit, vec![pt(7, 6), pt(6, 4), pt(6, 5), pt(6, 6), pt(7, 6)]);
        assert_eq!(w.word, vec![0, 1, 1, 0]);
        let q = |a: i64, b: i64, c: i64, d: i64| WPoint(vec![rat(a, b), rat(c, d)]);
        let first = &w.images[0];
        for v in [q(1, 4, 1, 2), q(-5, 16, 3, 8), q(-9, 16, -1, 8), pt(0, 0)] {
            assert!(first.contains(&v), "{v:?}");
        }
        assert!(w.followed[0].contains(&q(0, 1, 4, 9)));
        assert!(!w.followed[0].contains(&q(1, 4, 1, 2)));
    }
}
