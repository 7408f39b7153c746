//! Forward images `U_n` of the regular set and their connected components.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::atlas::{refine_cells, singular_faces, Cell, ContinuityAtlas};
use super::poly::Constraint;
use super::region::{closures_meet, merge_convex, Region, RegionKey};
use crate::error::{Result, ZhangError};
use crate::scalar::Rational;

type Q = Rational;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaggedRegion {
    /// Cell of the refinement that contains the region.
    pub cell: usize,
    pub region: Region,
}

/// `U_n` as a list of relatively open polytopes, each inside one cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionSet {
    pub n: usize,
    pub regions: Vec<TaggedRegion>,
    /// Component id of each region (closure adjacency).
    pub component: Vec<usize>,
    pub n_components: usize,
}

impl RegionSet {
    pub fn members(&self, k: usize) -> impl Iterator<Item = &TaggedRegion> {
        self.regions.iter().zip(&self.component).filter(move |(_, c)| **c == k).map(|(r, _)| r)
    }

    /// Sum of the areas of the regions (planar case only; overlaps are counted twice).
    pub fn area_2d(&self) -> Option<Q> {
        let mut total = Q::from_integer(0.into());
        for r in &self.regions {
            total += r.region.area_2d()?;
        }
        Some(total)
    }

    pub fn max_dim(&self) -> usize {
        self.regions.iter().map(|r| r.region.dim()).max().unwrap_or(0)
    }
}

/// Per-level bookkeeping of an iteration run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelSummary {
    pub n: usize,
    pub regions: usize,
    pub max_dim: usize,
    pub touches_singular: bool,
    pub area: Option<f64>,
}

/// Incremental iteration `U_{n+1} = F(U_n) ∩ U`.
pub struct RegionIterator<'a> {
    pub atlas: &'a ContinuityAtlas,
    pub cells: Vec<Cell>,
    singular: Vec<Vec<Constraint>>,
    cell_boxes: Vec<Vec<(Q, Q)>>,
    pub n: usize,
    pub regions: Vec<TaggedRegion>,
}

impl<'a> RegionIterator<'a> {
    pub fn new(atlas: &'a ContinuityAtlas) -> Self {
        let cells = refine_cells(atlas);
        Self::with_cells(atlas, cells)
    }

    pub fn with_cells(atlas: &'a ContinuityAtlas, cells: Vec<Cell>) -> Self {
        let singular = cells.iter().map(|c| singular_faces(atlas, c)).collect();
        let regions = cells
            .iter()
            .enumerate()
            .map(|(k, c)| TaggedRegion { cell: k, region: Region::full(c.poly.clone()).canonical() })
            .collect();
        let cell_boxes = cells.iter().map(|c| Region::full(c.poly.clone()).bounding_box()).collect();
        RegionIterator { atlas, cells, singular, cell_boxes, n: 0, regions }
    }

    /// Continues from a set produced by an earlier iteration over the same atlas.
    pub fn resume(atlas: &'a ContinuityAtlas, set: &RegionSet) -> Self {
        let mut it = Self::new(atlas);
        it.regions = set.regions.clone();
        it.n = set.n;
        it
    }

    /// Advances one level. Fails with a budget error when more than `budget` regions appear.
    pub fn step(&mut self, budget: usize) -> Result<()> {
        let mut cand: BTreeMap<(usize, std::cmp::Reverse<usize>, RegionKey), Region> = BTreeMap::new();
        for tr in &self.regions {
            let cell = &self.cells[tr.cell];
            let verts = tr.region.vertices();
            for site in 0..self.atlas.n {
                let piece = &self.atlas.pieces[site][cell.pieces[site]];
                let img = tr.region.image(&piece.linear, &piece.offset);
                let img_verts: Vec<Vec<Q>> = verts.iter().map(|v| piece.apply(v)).collect();
                let img_box = vertex_box(&img_verts, self.atlas.n);
                for (z, target) in self.cells.iter().enumerate() {
                    if !boxes_meet(&img_box, &self.cell_boxes[z]) {
                        continue;
                    }
                    let part = img.intersect_polytope(&target.poly);
                    if part.is_empty() {
                        continue;
                    }
                    let part = part.canonical();
                    cand.entry((z, std::cmp::Reverse(part.dim()), part.key())).or_insert(part);
                    if cand.len() > budget {
                        return Err(ZhangError::Budget(format!("more than {budget} regions at level {}", self.n + 1)));
                    }
                }
            }
        }
        // make the pieces disjoint: subtract closures of pieces accepted earlier in the same cell
        let mut accepted: Vec<(TaggedRegion, Vec<(Q, Q)>)> = Vec::new();
        for ((z, _, _), r) in cand {
            let bb = r.bounding_box();
            let mut frags = vec![(r, bb)];
            for (acc, abb) in accepted.iter().filter(|(a, _)| a.cell == z) {
                let mut next = Vec::new();
                for (f, fbb) in frags {
                    if f.dim() > acc.region.dim() || !boxes_meet(&fbb, abb) {
                        next.push((f, fbb));
                    } else {
                        let pieces = f.minus_closure(&acc.region);
                        if pieces.len() == 1 && pieces[0] == f {
                            next.push((f, fbb));
                        } else {
                            next.extend(pieces.into_iter().map(|p| {
                                let b = p.bounding_box();
                                (p, b)
                            }));
                        }
                    }
                }
                frags = next;
                if frags.is_empty() {
                    break;
                }
            }
            for (f, bb) in frags {
                accepted.push((TaggedRegion { cell: z, region: f }, bb));
            }
            if accepted.len() > budget {
                return Err(ZhangError::Budget(format!("more than {budget} regions at level {}", self.n + 1)));
            }
        }
        self.regions = merge_pass(accepted);
        self.n += 1;
        Ok(())
    }

    /// Whether the closure of some region meets the singularity set.
    pub fn touches_singular(&self) -> bool {
        self.regions.iter().any(|tr| self.region_touches(tr))
    }

    fn region_touches(&self, tr: &TaggedRegion) -> bool {
        let closed = tr.region.closure();
        self.singular[tr.cell].iter().any(|c| !closed.intersect_halfspace(&c.negated().closed()).is_empty())
    }

    pub fn summary(&self) -> LevelSummary {
        let set = RegionSet { n: self.n, regions: self.regions.clone(), component: Vec::new(), n_components: 0 };
        LevelSummary {
            n: self.n,
            regions: self.regions.len(),
            max_dim: set.max_dim(),
            touches_singular: self.touches_singular(),
            area: set.area_2d().and_then(|a| a.to_f64()),
        }
    }

    pub fn snapshot(&self) -> RegionSet {
        let regions = self.regions.clone();
        let (component, n_components) = components(&regions);
        RegionSet { n: self.n, regions, component, n_components }
    }
}

/// Merges pairs of fragments of one cell whose union is convex until none is left.
fn merge_pass(mut items: Vec<(TaggedRegion, Vec<(Q, Q)>)>) -> Vec<TaggedRegion> {
    let mut alive = vec![true; items.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for a in 0..items.len() {
            if !alive[a] {
                continue;
            }
            for b in a + 1..items.len() {
                if !alive[b] || items[a].0.cell != items[b].0.cell || !boxes_meet(&items[a].1, &items[b].1) {
                    continue;
                }
                if let Some(m) = merge_convex(&items[a].0.region, &items[b].0.region) {
                    let m = m.canonical();
                    let bb = m.bounding_box();
                    items[a].0.region = m;
                    items[a].1 = bb;
                    alive[b] = false;
                    changed = true;
                }
            }
        }
    }
    let mut out: Vec<TaggedRegion> = items.into_iter().zip(alive).filter(|(_, a)| *a).map(|((r, _), _)| r).collect();
    out.sort_by(|x, y| (x.cell, std::cmp::Reverse(x.region.dim()), x.region.key()).cmp(&(y.cell, std::cmp::Reverse(y.region.dim()), y.region.key())));
    out
}

fn vertex_box(v: &[Vec<Q>], n: usize) -> Vec<(Q, Q)> {
    (0..n)
        .map(|k| {
            let lo = v.iter().map(|p| p[k].clone()).min().unwrap_or_else(|| Q::from_integer(0.into()));
            let hi = v.iter().map(|p| p[k].clone()).max().unwrap_or_else(|| Q::from_integer(0.into()));
            (lo, hi)
        })
        .collect()
}

fn boxes_meet(a: &[(Q, Q)], b: &[(Q, Q)]) -> bool {
    a.iter().zip(b).all(|((alo, ahi), (blo, bhi))| alo <= bhi && blo <= ahi)
}

/// Connected components of the union of closures, ordered by first member.
pub fn components(regions: &[TaggedRegion]) -> (Vec<usize>, usize) {
    let n = regions.len();
    let boxes: Vec<Vec<(Q, Q)>> = regions.iter().map(|r| r.region.bounding_box()).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for a in 0..n {
        for b in a + 1..n {
            if find(&mut parent, a) == find(&mut parent, b) {
                continue;
            }
            if boxes_meet(&boxes[a], &boxes[b]) && closures_meet(&regions[a].region, &regions[b].region) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut ids = BTreeMap::new();
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let r = find(&mut parent, a);
        let next = ids.len();
        out.push(*ids.entry(r).or_insert(next));
    }
    (out, ids.len())
}

/// `U_n` for the given atlas, with components.
pub fn iterate_regions(atlas: &ContinuityAtlas, n: usize, budget: usize) -> Result<RegionSet> {
    let mut it = RegionIterator::new(atlas);
    for _ in 0..n {
        it.step(budget)?;
    }
    Ok(it.snapshot())
}

/// Smallest `m <= max_n` with `closure(U_m) ∩ S(F) = ∅`, together with per-level summaries.
pub fn first_clean_level(atlas: &ContinuityAtlas, max_n: usize, budget: usize) -> (Option<RegionSet>, Vec<LevelSummary>, bool) {
    let mut it = RegionIterator::new(atlas);
    let mut levels = Vec::new();
    loop {
        let s = it.summary();
        let clean = !s.touches_singular;
        levels.push(s);
        if clean {
            return (Some(it.snapshot()), levels, true);
        }
        if it.n >= max_n {
            return (None, levels, true);
        }
        if it.step(budget).is_err() {
            return (None, levels, false);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::atlas::build_atlas;
    use crate::lattice::{build_lattice, ModelParams};

    #[test]
    fn two_site_regions_shrink_to_points() {
        let lat = build_lattice(1, 2).unwrap();
        let p = ModelParams::parse("7/2", "1/2").unwrap();
        let atlas = build_atlas(&p, &lat, 64, 100_000).unwrap();
        let (set, levels, _) = first_clean_level(&atlas, 12, 50_000);
        let set = set.expect("removable");
        assert!(levels.len() >= 2);
        assert_eq!(set.n_components, 3);
    }

    #[test]
    fn resumed_iteration_matches_a_fresh_one() {
        let lat = build_lattice(1, 2).unwrap();
        let p = ModelParams::parse("1/3", "1/2").unwrap();
        let atlas = build_atlas(&p, &lat, 64, 100_000).unwrap();
        let mut it = RegionIterator::resume(&atlas, &iterate_regions(&atlas, 2, 50_000).unwrap());
        it.step(50_000).unwrap();
        let fresh = iterate_regions(&atlas, 3, 50_000).unwrap();
        let keys = |s: &RegionSet| s.regions.iter().map(|t| (t.cell, t.region.key())).collect::<Vec<_>>();
        assert_eq!(it.n, 3);
        assert_eq!(keys(&it.snapshot()), keys(&fresh));
    }
}
