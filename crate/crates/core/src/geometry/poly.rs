//! Exact H-polytopes with strict and non-strict constraints.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{format_rational, Rational};

type Q = Rational;

/// `a · x < b` when `strict`, otherwise `a · x <= b`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(with = "crate::lattice::rational_vec_string")]
    pub a: Vec<Q>,
    #[serde(with = "crate::lattice::rational_string")]
    pub b: Q,
    pub strict: bool,
}

impl Constraint {
    pub fn new(a: Vec<Q>, b: Q, strict: bool) -> Self {
        Constraint { a, b, strict }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `a · x - b`
    pub fn slack(&self, x: &[Q]) -> Q {
        dot(&self.a, x) - self.b.clone()
    }

    pub fn satisfied(&self, x: &[Q]) -> bool {
        let s = self.slack(x);
        if self.strict {
            s.is_negative()
        } else {
            !s.is_positive()
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.a.iter().all(|v| v.is_zero())
    }

    /// For a constraint with zero normal: is it satisfied by every point?
    pub fn trivially_true(&self) -> bool {
        if self.strict {
            self.b.is_positive()
        } else {
            !self.b.is_negative()
        }
    }

    /// Complement half-space.
    pub fn negated(&self) -> Constraint {
        Constraint {
            a: self.a.iter().map(|v| -v.clone()).collect(),
            b: -self.b.clone(),
            strict: !self.strict,
        }
    }

    pub fn closed(&self) -> Constraint {
        Constraint { strict: false, ..self.clone() }
    }

    pub fn opened(&self) -> Constraint {
        Constraint { strict: true, ..self.clone() }
    }

    /// Positive rescaling so that the first nonzero normal entry has absolute value one.
    pub fn normalized(&self) -> Constraint {
        let Some(lead) = self.a.iter().find(|v| !v.is_zero()) else {
            return self.clone();
        };
        let s = lead.abs();
        Constraint {
            a: self.a.iter().map(|v| v.clone() / s.clone()).collect(),
            b: self.b.clone() / s,
            strict: self.strict,
        }
    }

    /// True when both bound the same hyperplane (up to positive scaling of the normal, either orientation).
    pub fn same_hyperplane(&self, other: &Constraint) -> bool {
        let p = self.normalized();
        let q = other.normalized();
        if p.a == q.a {
            return p.b == q.b;
        }
        let qn = q.negated();
        let qn = qn.normalized();
        let pn = p.negated().normalized();
        (pn.a == q.a && pn.b == q.b) || (qn.a == p.a && qn.b == p.b)
    }

    pub fn render(&self) -> String {
        let terms: Vec<String> = self.a.iter().map(format_rational).collect();
        format!("[{}]·x {} {}", terms.join(", "), if self.strict { "<" } else { "<=" }, format_rational(&self.b))
    }
}

pub fn dot(a: &[Q], x: &[Q]) -> Q {
    let mut acc = Q::zero();
    for (u, v) in a.iter().zip(x) {
        if !u.is_zero() && !v.is_zero() {
            acc += u.clone() * v.clone();
        }
    }
    acc
}

/// Finite intersection of half-spaces in `R^dim`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HPolytope {
    pub dim: usize,
    pub constraints: Vec<Constraint>,
}

impl HPolytope {
    pub fn universe(dim: usize) -> Self {
        HPolytope { dim, constraints: Vec::new() }
    }

    /// The closed box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: &Q, hi: &Q) -> Self {
        let mut constraints = Vec::with_capacity(2 * dim);
        for k in 0..dim {
            let mut e = vec![Q::zero(); dim];
            e[k] = Q::one();
            constraints.push(Constraint::new(e.clone(), hi.clone(), false));
            constraints.push(Constraint::new(e.iter().map(|v| -v.clone()).collect(), -lo.clone(), false));
        }
        HPolytope { dim, constraints }
    }

    pub fn with(&self, c: Constraint) -> Self {
        debug_assert_eq!(c.dim(), self.dim);
        let mut p = self.clone();
        p.constraints.push(c);
        p
    }

    pub fn intersect(&self, other: &HPolytope) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut p = self.clone();
        p.constraints.extend(other.constraints.iter().cloned());
        p
    }

    pub fn closure(&self) -> Self {
        HPolytope { dim: self.dim, constraints: self.constraints.iter().map(|c| c.closed()).collect() }
    }

    pub fn interior(&self) -> Self {
        HPolytope { dim: self.dim, constraints: self.constraints.iter().map(|c| c.opened()).collect() }
    }

    pub fn contains_point(&self, x: &[Q]) -> bool {
        self.constraints.iter().all(|c| c.satisfied(x))
    }

    pub fn is_empty(&self) -> bool {
        self.witness().is_none()
    }

    /// Bounded planar case: the centroid of the closure's vertices lies in the relative interior,
    /// which meets the set whenever the set is nonempty.
    fn planar_witness(&self) -> Option<Option<Vec<Q>>> {
        if self.dim != 2 || self.constraints.len() < 3 || !self.is_bounded() {
            return None;
        }
        let v = clip_polygon(&self.closure().constraints);
        if v.is_empty() {
            return Some(None);
        }
        let k = Q::from_integer((v.len() as i64).into());
        let c = vec![
            v.iter().fold(Q::zero(), |a, p| a + p[0].clone()) / k.clone(),
            v.iter().fold(Q::zero(), |a, p| a + p[1].clone()) / k,
        ];
        Some(self.contains_point(&c).then_some(c))
    }

    /// Nonempty interior in `R^dim`.
    pub fn is_full_dimensional(&self) -> bool {
        self.interior().is_empty_negated()
    }

    fn is_empty_negated(&self) -> bool {
        !self.is_empty()
    }

    /// A point of the polytope, chosen near the middle of each coordinate range.
    pub fn witness(&self) -> Option<Vec<Q>> {
        if let Some(w) = self.planar_witness() {
            return w;
        }
        fm_witness(self.dim, &self.constraints)
    }

    /// `other ⊆ self`
    pub fn contains(&self, other: &HPolytope) -> bool {
        self.constraints.iter().all(|c| other.with(c.negated()).is_empty())
    }

    /// Drops duplicate and redundant constraints. An empty polytope is returned as a single infeasible constraint.
    pub fn simplified(&self) -> Self {
        let mut cs = dedupe(self.constraints.iter().map(|c| c.normalized()).collect());
        if cs.iter().any(|c| c.is_trivial() && !c.trivially_true()) || self.is_empty() {
            return HPolytope::empty(self.dim);
        }
        cs.retain(|c| !c.is_trivial());
        if self.dim == 2 && self.is_bounded() && convex_hull_2d(&HPolytope { dim: 2, constraints: cs.clone() }.vertices()).len() >= 3 {
            // a facet carries two vertices; strict constraints through a single vertex still matter
            let poly = HPolytope { dim: 2, constraints: cs.clone() };
            let verts = poly.vertices();
            let on: Vec<Vec<usize>> =
                cs.iter().map(|c| (0..verts.len()).filter(|&k| c.slack(&verts[k]).is_zero()).collect()).collect();
            let strict_facet_at = |v: usize| cs.iter().zip(&on).any(|(c, o)| c.strict && o.len() >= 2 && o.contains(&v));
            let keep: Vec<bool> =
                cs.iter().zip(&on).map(|(c, o)| o.len() >= 2 || (c.strict && o.len() == 1 && !strict_facet_at(o[0]))).collect();
            let mut k = 0;
            cs.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            cs.sort();
            return HPolytope { dim: 2, constraints: cs };
        }
        let mut k = 0;
        while k < cs.len() {
            let c = cs[k].clone();
            let mut rest: Vec<Constraint> = cs.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, c)| c.clone()).collect();
            rest.push(c.negated());
            if fm_witness(self.dim, &rest).is_none() {
                cs.remove(k);
            } else {
                k += 1;
            }
        }
        cs.sort();
        HPolytope { dim: self.dim, constraints: cs }
    }

    pub fn empty(dim: usize) -> Self {
        HPolytope { dim, constraints: vec![Constraint::new(vec![Q::zero(); dim], -Q::one(), false)] }
    }

    /// Constraints that hold with equality on the whole polytope (assumed nonempty).
    pub fn implicit_equalities(&self) -> Vec<Constraint> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(k, c)| {
                if c.strict || c.is_trivial() {
                    return false;
                }
                let mut cs = self.constraints.clone();
                cs[*k] = c.opened();
                fm_witness(self.dim, &cs).is_none()
            })
            .map(|(_, c)| c.clone())
            .collect()
    }

    /// Vertices of the closure, assuming it is bounded.
    pub fn vertices(&self) -> Vec<Vec<Q>> {
        let d = self.dim;
        if d == 0 {
            return if self.is_empty() { Vec::new() } else { vec![Vec::new()] };
        }
        let closed = self.closure();
        let cs: Vec<Constraint> = dedupe(closed.constraints.iter().map(|c| c.normalized()).collect());
        if cs.iter().any(|c| c.is_trivial() && !c.trivially_true()) {
            return Vec::new();
        }
        let cs: Vec<Constraint> = cs.into_iter().filter(|c| !c.is_trivial()).collect();
        let mut out: Vec<Vec<Q>> = Vec::new();
        if cs.len() < d {
            return out;
        }
        let inside = |x: &[Q]| cs.iter().all(|c| !c.slack(x).is_positive());
        if d == 1 {
            for c in &cs {
                let x = vec![c.b.clone() / c.a[0].clone()];
                if inside(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
            out.sort();
            return out;
        }
        if d == 2 {
            return clip_polygon(&cs);
        }
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            let rows: Vec<Vec<Q>> = idx.iter().map(|&k| cs[k].a.clone()).collect();
            let rhs: Vec<Q> = idx.iter().map(|&k| cs[k].b.clone()).collect();
            let m = crate::matrix::Matrix::from_rows(rows);
            if let Some(x) = m.solve(&rhs) {
                if inside(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
            let mut i = d;
            loop {
                if i == 0 {
                    out.sort();
                    return out;
                }
                i -= 1;
                if idx[i] < cs.len() - d + i {
                    idx[i] += 1;
                    for j in i + 1..d {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Whether the recession cone of the closure is trivial (planar case exact, otherwise via projection).
    pub fn is_bounded(&self) -> bool {
        let cs: Vec<&Constraint> = self.constraints.iter().filter(|c| !c.is_trivial()).collect();
        match self.dim {
            0 => true,
            1 => cs.iter().any(|c| c.a[0].is_positive()) && cs.iter().any(|c| c.a[0].is_negative()),
            2 => {
                // a nonzero v with a·v <= 0 for all rows exists iff one of these 1-D systems is feasible
                let dir_feasible = |s: Q| -> bool {
                    // v = (s, t):  a1 t <= -a0 s
                    let rows: Vec<(Q, Q)> = cs.iter().map(|c| (c.a[1].clone(), -c.a[0].clone() * s.clone())).collect();
                    interval_feasible(&rows)
                };
                let vertical = |s: Q| cs.iter().all(|c| !(c.a[1].clone() * s.clone()).is_positive());
                !(dir_feasible(Q::one()) || dir_feasible(-Q::one()) || vertical(Q::one()) || vertical(-Q::one()))
            }
            d => {
                let cone: Vec<Constraint> = cs.iter().map(|c| Constraint::new(c.a.clone(), Q::zero(), false)).collect();
                (0..d).all(|k| {
                    [Q::one(), -Q::one()].iter().all(|s| {
                        let mut e = vec![Q::zero(); d];
                        e[k] = s.clone();
                        let mut sys = cone.clone();
                        // v_k * s >= 1
                        sys.push(Constraint::new(e.iter().map(|v| -v.clone()).collect(), -Q::one(), false));
                        fm_witness(d, &sys).is_none()
                    })
                })
            }
        }
    }

    /// Pulls the polytope back along `x = origin + B u` (columns of `B` given as `basis` vectors).
    pub fn pullback(&self, origin: &[Q], basis: &[Vec<Q>]) -> HPolytope {
        let k = basis.len();
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let a: Vec<Q> = basis.iter().map(|bv| dot(&c.a, bv)).collect();
                Constraint::new(a, c.b.clone() - dot(&c.a, origin), c.strict)
            })
            .collect();
        HPolytope { dim: k, constraints }
    }

    /// Projection onto the first `keep` coordinates.
    pub fn project_prefix(&self, keep: usize) -> HPolytope {
        let mut cs = self.constraints.clone();
        for v in (keep..self.dim).rev() {
            cs = fm_eliminate(&cs, v);
            if cs.iter().any(|c| c.is_trivial() && !c.trivially_true()) {
                return HPolytope::empty(keep);
            }
        }
        let cs = cs.into_iter().filter(|c| !c.is_trivial()).map(|c| Constraint::new(c.a[..keep].to_vec(), c.b, c.strict)).collect();
        HPolytope { dim: keep, constraints: cs }.simplified()
    }
}

/// Feasibility of `{t : coef * t <= rhs}` over all rows.
fn interval_feasible(rows: &[(Q, Q)]) -> bool {
    let mut lo: Option<Q> = None;
    let mut hi: Option<Q> = None;
    for (c, r) in rows {
        if c.is_zero() {
            if r.is_negative() {
                return false;
            }
        } else {
            let b = r.clone() / c.clone();
            if c.is_positive() {
                hi = Some(hi.map_or(b.clone(), |h: Q| h.min(b)));
            } else {
                lo = Some(lo.map_or(b.clone(), |l: Q| l.max(b)));
            }
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) => l <= h,
        _ => true,
    }
}

fn dedupe(mut cs: Vec<Constraint>) -> Vec<Constraint> {
    // same normal: keep the tighter bound; equal bounds prefer strict
    cs.sort_by(|p, q| p.a.cmp(&q.a).then_with(|| p.b.cmp(&q.b)).then_with(|| q.strict.cmp(&p.strict)));
    let mut out: Vec<Constraint> = Vec::with_capacity(cs.len());
    for c in cs {
        if let Some(last) = out.last() {
            if last.a == c.a {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Eliminates variable `v` (the coordinate stays in the vectors with coefficient zero).
fn fm_eliminate(cs: &[Constraint], v: usize) -> Vec<Constraint> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = Vec::new();
    for c in cs {
        match c.a[v].cmp(&Q::zero()) {
            Ordering::Greater => pos.push(c),
            Ordering::Less => neg.push(c),
            Ordering::Equal => out.push(c.clone()),
        }
    }
    for p in &pos {
        for n in &neg {
            let lp = -n.a[v].clone();
            let ln = p.a[v].clone();
            let a: Vec<Q> = p
                .a
                .iter()
                .zip(&n.a)
                .enumerate()
                .map(|(k, (x, y))| if k == v { Q::zero() } else { lp.clone() * x.clone() + ln.clone() * y.clone() })
                .collect();
            let b = lp.clone() * p.b.clone() + ln.clone() * n.b.clone();
            out.push(Constraint::new(a, b, p.strict || n.strict).normalized());
        }
    }
    dedupe(out.into_iter().map(|c| c.normalized()).collect())
}

/// Fourier–Motzkin feasibility with back-substitution of a witness.
fn fm_witness(dim: usize, cs: &[Constraint]) -> Option<Vec<Q>> {
    let mut stages: Vec<Vec<Constraint>> = Vec::with_capacity(dim + 1);
    let mut cur: Vec<Constraint> = dedupe(cs.iter().map(|c| c.normalized()).collect());
    for v in 0..dim {
        if cur.iter().any(|c| c.is_trivial() && !c.trivially_true()) {
            return None;
        }
        let next = fm_eliminate(&cur, v);
        stages.push(cur);
        cur = next;
    }
    if cur.iter().any(|c| !c.trivially_true()) {
        return None;
    }
    // back-substitute from the last eliminated variable
    let mut x = vec![Q::zero(); dim];
    for v in (0..dim).rev() {
        let stage = &stages[v];
        let mut lo: Option<(Q, bool)> = None;
        let mut hi: Option<(Q, bool)> = None;
        for c in stage {
            let coef = &c.a[v];
            if coef.is_zero() {
                continue;
            }
            // coef * x_v <= b - sum_{k>v} a_k x_k  (variables < v are still free but have zero coefficient here)
            let mut rest = c.b.clone();
            for k in v + 1..dim {
                if !c.a[k].is_zero() {
                    rest -= c.a[k].clone() * x[k].clone();
                }
            }
            let bound = rest / coef.clone();
            if coef.is_positive() {
                if hi.as_ref().map_or(true, |(h, hs)| bound < *h || (bound == *h && c.strict && !hs)) {
                    hi = Some((bound, c.strict));
                }
            } else if lo.as_ref().map_or(true, |(l, ls)| bound > *l || (bound == *l && c.strict && !ls)) {
                lo = Some((bound, c.strict));
            }
        }
        x[v] = match (lo, hi) {
            (Some((l, _)), Some((h, _))) => {
                if l == h {
                    l
                } else {
                    (l + h) / Q::from_integer(2.into())
                }
            }
            (Some((l, _)), None) => l + Q::one(),
            (None, Some((h, _))) => h - Q::one(),
            (None, None) => Q::zero(),
        };
    }
    debug_assert!(cs.iter().all(|c| c.satisfied(&x)), "witness violates constraints");
    Some(x)
}

/// Exact ordering of 2-D points counterclockwise around their centroid.
pub fn order_polygon(points: &mut [Vec<Q>]) {
    if points.len() < 3 {
        return;
    }
    let n = Q::from_integer((points.len() as i64).into());
    let cx = points.iter().fold(Q::zero(), |a, p| a + p[0].clone()) / n.clone();
    let cy = points.iter().fold(Q::zero(), |a, p| a + p[1].clone()) / n;
    let half = |p: &Vec<Q>| -> u8 {
        let dx = p[0].clone() - cx.clone();
        let dy = p[1].clone() - cy.clone();
        if dy.is_positive() || (dy.is_zero() && dx.is_positive()) {
            0
        } else {
            1
        }
    };
    points.sort_by(|p, q| {
        half(p).cmp(&half(q)).then_with(|| {
            let cross = (p[0].clone() - cx.clone()) * (q[1].clone() - cy.clone())
                - (p[1].clone() - cy.clone()) * (q[0].clone() - cx.clone());
            if cross.is_positive() {
                Ordering::Less
            } else if cross.is_negative() {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        })
    });
}

type Hom = [BigInt; 3];

fn hom_cross(p: &Hom, q: &Hom) -> Hom {
    [
        &p[1] * &q[2] - &p[2] * &q[1],
        &p[2] * &q[0] - &p[0] * &q[2],
        &p[0] * &q[1] - &p[1] * &q[0],
    ]
}

fn hom_dot(l: &Hom, p: &Hom) -> BigInt {
    &l[0] * &p[0] + &l[1] * &p[1] + &l[2] * &p[2]
}

/// Scales a point to primitive integers with positive weight.
fn hom_reduce(mut p: Hom) -> Hom {
    if p[2].is_negative() {
        for v in p.iter_mut() {
            *v = -v.clone();
        }
    }
    let g = p[0].gcd(&p[1]).gcd(&p[2]);
    if !g.is_zero() && !g.is_one() {
        for v in p.iter_mut() {
            *v = &*v / &g;
        }
    }
    p
}

/// Integer line `l0 x + l1 y + l2 <= 0` equivalent to the closed constraint.
fn hom_line(c: &Constraint) -> Hom {
    let den = c.a.iter().chain(std::iter::once(&c.b)).fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let scale = |v: &Q| (v * Q::from_integer(den.clone())).to_integer();
    [scale(&c.a[0]), scale(&c.a[1]), -scale(&c.b)]
}

/// Vertices of a bounded planar intersection of closed half-planes, by clipping a large box
/// in homogeneous integer coordinates.
fn clip_polygon(cs: &[Constraint]) -> Vec<Vec<Q>> {
    let big = BigInt::from(1u64 << 60);
    let one = BigInt::one();
    let mut poly: Vec<Hom> = vec![
        [-big.clone(), -big.clone(), one.clone()],
        [big.clone(), -big.clone(), one.clone()],
        [big.clone(), big.clone(), one.clone()],
        [-big.clone(), big.clone(), one.clone()],
    ];
    for c in cs {
        if poly.is_empty() {
            break;
        }
        let line = hom_line(c);
        let side: Vec<BigInt> = poly.iter().map(|p| hom_dot(&line, p)).collect();
        if side.iter().all(|v| !v.is_positive()) {
            continue;
        }
        let n = poly.len();
        let mut next: Vec<Hom> = Vec::with_capacity(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            let (sp, sq) = (&side[i], &side[j]);
            if !sp.is_positive() {
                next.push(poly[i].clone());
            }
            if (sp.is_negative() && sq.is_positive()) || (sp.is_positive() && sq.is_negative()) {
                let edge = hom_cross(&poly[i], &poly[j]);
                next.push(hom_reduce(hom_cross(&edge, &line)));
            }
        }
        next.dedup();
        if next.len() > 1 && next.first() == next.last() {
            next.pop();
        }
        poly = next;
    }
    let pts: Vec<Vec<Q>> = poly
        .into_iter()
        .map(|p| vec![Q::new(p[0].clone(), p[2].clone()), Q::new(p[1].clone(), p[2].clone())])
        .collect();
    let mut out = convex_hull_2d(&pts);
    out.sort();
    out
}

fn cross(o: &[Q], a: &[Q], b: &[Q]) -> Q {
    (a[0].clone() - o[0].clone()) * (b[1].clone() - o[1].clone()) - (a[1].clone() - o[1].clone()) * (b[0].clone() - o[0].clone())
}

/// Counterclockwise convex hull of planar points, collinear points dropped.
pub fn convex_hull_2d(points: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec<Q>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vec<Q>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Open polygon with the given counterclockwise vertices.
pub fn open_polygon(hull: &[Vec<Q>]) -> HPolytope {
    let n = hull.len();
    let constraints = (0..n)
        .map(|i| {
            let p = &hull[i];
            let q = &hull[(i + 1) % n];
            // interior on the left: (q - p) x (x - p) > 0
            let a = vec![q[1].clone() - p[1].clone(), p[0].clone() - q[0].clone()];
            let b = dot(&a, p);
            Constraint::new(a, b, true).normalized()
        })
        .collect();
    HPolytope { dim: 2, constraints }
}

/// Shoelace area of a 2-D polygon given in cyclic order.
pub fn polygon_area(points: &[Vec<Q>]) -> Q {
    let n = points.len();
    if n < 3 {
        return Q::zero();
    }
    let mut s = Q::zero();
    for i in 0..n {
        let p = &points[i];
        let q = &points[(i + 1) % n];
        s += p[0].clone() * q[1].clone() - p[1].clone() * q[0].clone();
    }
    (s / Q::from_integer(2.into())).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn c(a: &[i64], b: Q, strict: bool) -> Constraint {
        Constraint::new(a.iter().map(|v| rat_int(*v)).collect(), b, strict)
    }

    #[test]
    fn open_and_closed_emptiness() {
        // 0 <= x <= 0 is a point, 0 < x <= 0 is empty
        let p = HPolytope { dim: 1, constraints: vec![c(&[1], rat_int(0), false), c(&[-1], rat_int(0), false)] };
        assert_eq!(p.witness(), Some(vec![rat_int(0)]));
        assert!(!p.is_full_dimensional());
        let q = HPolytope { dim: 1, constraints: vec![c(&[1], rat_int(0), false), c(&[-1], rat_int(0), true)] };
        assert!(q.is_empty());
    }

    #[test]
    fn triangle_vertices_and_area() {
        let t = HPolytope {
            dim: 2,
            constraints: vec![c(&[-1, 0], rat_int(0), false), c(&[0, -1], rat_int(0), false), c(&[1, 1], rat_int(1), true)],
        };
        let w = t.witness().unwrap();
        assert!(t.contains_point(&w));
        let mut v = t.vertices();
        assert_eq!(v.len(), 3);
        order_polygon(&mut v);
        assert_eq!(polygon_area(&v), rat(1, 2));
    }

    #[test]
    fn redundancy_and_containment() {
        let sq = HPolytope::cube(2, &rat_int(0), &rat_int(1));
        let extra = sq.with(c(&[1, 1], rat_int(5), false));
        assert_eq!(extra.simplified().constraints.len(), 4);
        let small = HPolytope::cube(2, &rat(1, 4), &rat(1, 2));
        assert!(sq.contains(&small));
        assert!(!small.contains(&sq));
    }

    #[test]
    fn implicit_equality_detected() {
        let seg = HPolytope::cube(2, &rat_int(0), &rat_int(1)).with(c(&[1, -1], rat_int(0), false)).with(c(&[-1, 1], rat_int(0), false));
        assert_eq!(seg.implicit_equalities().len(), 2);
    }

    #[test]
    fn projection_of_square() {
        let sq = HPolytope::cube(2, &rat_int(0), &rat_int(2)).with(c(&[1, 1], rat_int(3), true));
        let p = sq.project_prefix(1);
        assert!(p.contains_point(&[rat_int(2)]));
        assert!(!p.contains_point(&[rat(5, 2)]));
    }
}
