//! Relatively open or closed polytopes living in an affine subspace of `R^N`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{convex_hull_2d, dot, open_polygon, order_polygon, polygon_area, Constraint, HPolytope};
use crate::matrix::Matrix;
use crate::scalar::Rational;

type Q = Rational;

/// `{ origin + Σ u_k basis_k : u ∈ poly }`. The basis vectors are linearly independent and
/// after canonicalisation the parameter polytope has nonempty interior in `R^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    #[serde(with = "crate::lattice::rational_vec_string")]
    pub origin: Vec<Q>,
    pub basis: Vec<RVec>,
    pub poly: HPolytope,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RVec(#[serde(with = "crate::lattice::rational_vec_string")] pub Vec<Q>);

/// Total order used for deduplication and deterministic output.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionKey {
    dim: usize,
    origin: Vec<Q>,
    basis: Vec<Vec<Q>>,
    constraints: Vec<Constraint>,
}

impl Region {
    pub fn full(poly: HPolytope) -> Self {
        let n = poly.dim;
        let basis = (0..n)
            .map(|k| {
                let mut e = vec![Q::zero(); n];
                e[k] = Q::one();
                RVec(e)
            })
            .collect();
        Region { origin: vec![Q::zero(); n], basis, poly }
    }

    pub fn point(p: Vec<Q>) -> Self {
        Region { origin: p, basis: Vec::new(), poly: HPolytope::universe(0) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.origin.len()
    }

    /// Dimension of the carrier. Equals the geometric dimension once canonical.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn embed(&self, u: &[Q]) -> Vec<Q> {
        let mut x = self.origin.clone();
        for (uk, bk) in u.iter().zip(&self.basis) {
            if uk.is_zero() {
                continue;
            }
            for (xi, bi) in x.iter_mut().zip(&bk.0) {
                *xi += uk.clone() * bi.clone();
            }
        }
        x
    }

    pub fn is_empty(&self) -> bool {
        self.poly.is_empty()
    }

    pub fn witness(&self) -> Option<Vec<Q>> {
        self.poly.witness().map(|u| self.embed(&u))
    }

    pub fn closure(&self) -> Region {
        Region { poly: self.poly.closure(), ..self.clone() }
    }

    pub fn basis_vecs(&self) -> Vec<Vec<Q>> {
        self.basis.iter().map(|b| b.0.clone()).collect()
    }

    pub fn intersect_polytope(&self, p: &HPolytope) -> Region {
        let pulled = p.pullback(&self.origin, &self.basis_vecs());
        Region { poly: self.poly.intersect(&pulled), ..self.clone() }
    }

    pub fn intersect_halfspace(&self, c: &Constraint) -> Region {
        let a: Vec<Q> = self.basis.iter().map(|b| dot(&c.a, &b.0)).collect();
        let pulled = Constraint::new(a, c.b.clone() - dot(&c.a, &self.origin), c.strict);
        Region { poly: self.poly.with(pulled), ..self.clone() }
    }

    /// Parameter coordinates of an ambient point, if it lies on the carrier.
    pub fn coordinates_of(&self, x: &[Q]) -> Option<Vec<Q>> {
        let k = self.dim();
        let n = self.ambient_dim();
        let diff: Vec<Q> = x.iter().zip(&self.origin).map(|(a, b)| a.clone() - b.clone()).collect();
        if k == 0 {
            return diff.iter().all(|v| v.is_zero()).then(Vec::new);
        }
        let b = Matrix::from_fn(n, k, |i, j| self.basis[j].0[i].clone());
        let rows = independent_rows(&b, k);
        let sub = Matrix::from_fn(k, k, |i, j| b.get(rows[i], j).clone());
        let rhs: Vec<Q> = rows.iter().map(|&r| diff[r].clone()).collect();
        let u = sub.solve(&rhs)?;
        (self.embed(&u) == x).then_some(u)
    }

    pub fn contains_point(&self, x: &[Q]) -> bool {
        self.coordinates_of(x).is_some_and(|u| self.poly.contains_point(&u))
    }

    /// Intersection with another region of the same ambient space.
    pub fn intersect(&self, other: &Region) -> Region {
        // parametrise the intersection of the two carriers inside self's carrier
        let k = self.dim();
        let n = self.ambient_dim();
        let m = other.dim();
        // solve origin_s + B_s u = origin_o + B_o w
        let cols = k + m;
        let sys = Matrix::from_fn(n, cols, |i, j| if j < k { self.basis[j].0[i].clone() } else { -other.basis[j - k].0[i].clone() });
        let rhs: Vec<Q> = (0..n).map(|i| other.origin[i].clone() - self.origin[i].clone()).collect();
        let Some(particular) = sys.solve_any(&rhs) else {
            return Region::empty(n);
        };
        let kernel = sys.kernel();
        // joint parameter z: (u, w) = particular + K z
        let kd = kernel.len();
        let joint_origin = particular;
        let lift = |z_poly: &HPolytope, offset: usize, width: usize| -> HPolytope {
            // constraint in u (or w) pulled back to z
            let cs = z_poly
                .constraints
                .iter()
                .map(|c| {
                    let a: Vec<Q> = (0..kd).map(|t| dot(&c.a, &kernel[t][offset..offset + width])).collect();
                    let b = c.b.clone() - dot(&c.a, &joint_origin[offset..offset + width]);
                    Constraint::new(a, b, c.strict)
                })
                .collect();
            HPolytope { dim: kd, constraints: cs }
        };
        let poly = lift(&self.poly, 0, k).intersect(&lift(&other.poly, k, m));
        let origin = self.embed(&joint_origin[..k]);
        let basis: Vec<RVec> = kernel
            .iter()
            .map(|z| {
                let mut v = vec![Q::zero(); n];
                for (t, coef) in z[..k].iter().enumerate() {
                    if coef.is_zero() {
                        continue;
                    }
                    for (vi, bi) in v.iter_mut().zip(&self.basis[t].0) {
                        *vi += coef.clone() * bi.clone();
                    }
                }
                RVec(v)
            })
            .collect();
        Region { origin, basis, poly }
    }

    pub fn empty(n: usize) -> Region {
        Region { origin: vec![Q::zero(); n], basis: Vec::new(), poly: HPolytope::empty(0) }
    }

    /// Image under `x -> L x + c`.
    pub fn image(&self, l: &Matrix<Q>, c: &[Q]) -> Region {
        let n = self.ambient_dim();
        let mut origin = l.mul_vec(&self.origin);
        for (o, ci) in origin.iter_mut().zip(c) {
            *o += ci.clone();
        }
        let lb: Vec<Vec<Q>> = self.basis.iter().map(|b| l.mul_vec(&b.0)).collect();
        let k = lb.len();
        if k == 0 {
            return Region { origin, basis: Vec::new(), poly: self.poly.clone() };
        }
        let m = Matrix::from_fn(n, k, |i, j| lb[j][i].clone());
        if m.rank() == k {
            return Region { origin, basis: lb.into_iter().map(RVec).collect(), poly: self.poly.clone() };
        }
        // collapse: u = (independent part) + kernel part, project the kernel directions out
        let kernel = m.kernel();
        let r = k - kernel.len();
        // change of coordinates u = T [v; z], where the last columns of T span the kernel
        let mut t_cols: Vec<Vec<Q>> = Vec::new();
        for j in 0..k {
            let mut e = vec![Q::zero(); k];
            e[j] = Q::one();
            let mut trial = t_cols.clone();
            trial.push(e.clone());
            trial.extend(kernel.iter().cloned());
            let tm = Matrix::from_fn(k, trial.len(), |a, b| trial[b][a].clone());
            if tm.rank() == trial.len() {
                t_cols.push(e);
            }
            if t_cols.len() == r {
                break;
            }
        }
        let mut all = t_cols.clone();
        all.extend(kernel.iter().cloned());
        let t = Matrix::from_fn(k, k, |a, b| all[b][a].clone());
        // poly in new coords: a·(T y) <= b
        let cs = self
            .poly
            .constraints
            .iter()
            .map(|c| Constraint::new(t.transpose().mul_vec(&c.a), c.b.clone(), c.strict))
            .collect();
        let moved = HPolytope { dim: k, constraints: cs };
        let projected = moved.project_prefix(r);
        let basis = t_cols.iter().map(|col| RVec(m.mul_vec(col))).collect();
        Region { origin, basis, poly: projected }
    }

    /// Reduces the carrier to the affine hull and rewrites in a unique form.
    pub fn canonical(&self) -> Region {
        let n = self.ambient_dim();
        let mut cur = self.clone();
        if cur.poly.is_empty() {
            return Region::empty(n);
        }
        // drop implicit equalities
        loop {
            let eqs = cur.poly.implicit_equalities();
            let Some(eq) = eqs.into_iter().next() else { break };
            cur = cur.restrict_to_hyperplane(&eq);
        }
        // canonical carrier via reduced row echelon form of the basis
        let k = cur.dim();
        if k == 0 {
            return Region { origin: cur.origin, basis: Vec::new(), poly: HPolytope::universe(0) };
        }
        let bt = Matrix::from_rows(cur.basis_vecs());
        let (r, pivots) = bt.rref();
        let rows: Vec<Vec<Q>> = (0..k).map(|i| r.row(i).to_vec()).collect();
        let mut origin = cur.origin.clone();
        for (i, &p) in pivots.iter().enumerate() {
            let op = cur.origin[p].clone();
            for (o, rv) in origin.iter_mut().zip(&rows[i]) {
                *o -= op.clone() * rv.clone();
            }
        }
        // new coordinates w_j = y_{p_j} = origin_{p_j} + B_{p_j,:} u  =>  u = Bp^{-1}(w - origin_p)
        let bp = Matrix::from_fn(k, k, |i, j| cur.basis[j].0[pivots[i]].clone());
        let inv = bp.inverse().expect("pivot rows invertible");
        let op: Vec<Q> = pivots.iter().map(|&p| cur.origin[p].clone()).collect();
        let shift = inv.mul_vec(&op);
        let cs = cur
            .poly
            .constraints
            .iter()
            .map(|c| {
                // a·u <= b, u = inv w - shift
                let a = inv.transpose().mul_vec(&c.a);
                Constraint::new(a, c.b.clone() + dot(&c.a, &shift), c.strict)
            })
            .collect();
        let poly = HPolytope { dim: k, constraints: cs }.simplified();
        Region { origin, basis: rows.into_iter().map(RVec).collect(), poly }
    }

    fn restrict_to_hyperplane(&self, eq: &Constraint) -> Region {
        // a·u = b inside parameter space
        let k = self.dim();
        let am = Matrix::from_rows(vec![eq.a.clone()]);
        let kernel = am.kernel();
        let lead = eq.a.iter().position(|v| !v.is_zero()).expect("nontrivial equality");
        let mut u0 = vec![Q::zero(); k];
        u0[lead] = eq.b.clone() / eq.a[lead].clone();
        let origin = self.embed(&u0);
        let basis: Vec<RVec> = kernel.iter().map(|z| RVec(self.embed(z).iter().zip(&self.origin).map(|(a, b)| a.clone() - b.clone()).collect())).collect();
        let cs = self
            .poly
            .constraints
            .iter()
            .map(|c| {
                let a: Vec<Q> = kernel.iter().map(|z| dot(&c.a, z)).collect();
                Constraint::new(a, c.b.clone() - dot(&c.a, &u0), c.strict)
            })
            .collect();
        Region { origin, basis, poly: HPolytope { dim: kernel.len(), constraints: cs } }
    }

    /// Key of the canonical form. Call on canonical regions.
    pub fn key(&self) -> RegionKey {
        RegionKey {
            dim: self.dim(),
            origin: self.origin.clone(),
            basis: self.basis_vecs(),
            constraints: self.poly.constraints.clone(),
        }
    }

    /// Vertices of the closure in ambient coordinates.
    pub fn vertices(&self) -> Vec<Vec<Q>> {
        let mut v: Vec<Vec<Q>> = self.poly.vertices().iter().map(|u| self.embed(u)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Vertices in cyclic order for 2-D regions, sorted otherwise.
    pub fn vertex_loop(&self) -> Vec<Vec<Q>> {
        let mut v = self.vertices();
        if self.ambient_dim() == 2 && self.dim() == 2 {
            order_polygon(&mut v);
        }
        v
    }

    /// Lebesgue measure for full-dimensional planar regions, zero for lower-dimensional ones.
    pub fn area_2d(&self) -> Option<Q> {
        if self.ambient_dim() != 2 {
            return None;
        }
        if self.dim() < 2 {
            return Some(Q::zero());
        }
        // the carrier map scales area by |det(basis)|
        let b = Matrix::from_fn(2, 2, |i, j| self.basis[j].0[i].clone());
        let mut pv = self.poly.vertices();
        order_polygon(&mut pv);
        Some(polygon_area(&pv) * num_traits::Signed::abs(&b.determinant()))
    }

    /// `self ⊆ other`, both canonical.
    pub fn is_subset_of(&self, other: &Region) -> bool {
        if self.dim() > other.dim() {
            return false;
        }
        if !self.carrier_within(other) {
            return false;
        }
        let amb = other.ambient_constraints();
        amb.iter().all(|c| self.intersect_halfspace(&c.negated()).is_empty())
    }

    /// Ambient half-spaces that, intersected with the carrier, cut out the region.
    pub fn ambient_constraints(&self) -> Vec<Constraint> {
        let n = self.ambient_dim();
        let k = self.dim();
        let b = Matrix::from_fn(n, k, |i, j| self.basis[j].0[i].clone());
        let rows = independent_rows(&b, k);
        let sub = Matrix::from_fn(k, k, |i, j| b.get(rows[i], j).clone());
        let inv = sub.inverse().expect("independent rows");
        // on the carrier, u = inv (x_rows - origin_rows)
        self.poly
            .constraints
            .iter()
            .map(|c| {
                let g = inv.transpose().mul_vec(&c.a);
                let mut a = vec![Q::zero(); n];
                let mut shift = Q::zero();
                for (t, &r) in rows.iter().enumerate() {
                    a[r] = g[t].clone();
                    shift += g[t].clone() * self.origin[r].clone();
                }
                Constraint::new(a, c.b.clone() + shift, c.strict)
            })
            .collect()
    }
}

fn add(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

fn independent_rows(b: &Matrix<Q>, k: usize) -> Vec<usize> {
    let mut rows: Vec<usize> = Vec::new();
    for i in 0..b.rows() {
        let mut trial = rows.clone();
        trial.push(i);
        let m = Matrix::from_fn(trial.len(), b.cols(), |a, c| b.get(trial[a], c).clone());
        if m.rank() == trial.len() {
            rows.push(i);
        }
        if rows.len() == k {
            break;
        }
    }
    rows
}

impl Region {
    /// Parameters coincide with ambient coordinates.
    pub fn is_identity_carrier(&self) -> bool {
        self.dim() == self.ambient_dim()
            && self.origin.iter().all(|v| v.is_zero())
            && self.basis.iter().enumerate().all(|(k, b)| b.0.iter().enumerate().all(|(j, v)| if j == k { v.is_one() } else { v.is_zero() }))
    }

    /// Whether the carrier of `self` lies inside the carrier of `other`.
    pub fn carrier_within(&self, other: &Region) -> bool {
        other.coordinates_of(&self.origin).is_some()
            && self.basis.iter().all(|b| other.coordinates_of(&add(&other.origin, &b.0)).is_some())
    }

    /// Exact bounding box of the closure.
    pub fn bounding_box(&self) -> Vec<(Q, Q)> {
        let v = self.vertices();
        (0..self.ambient_dim())
            .map(|k| {
                let lo = v.iter().map(|p| p[k].clone()).min().unwrap_or_else(Q::zero);
                let hi = v.iter().map(|p| p[k].clone()).max().unwrap_or_else(Q::zero);
                (lo, hi)
            })
            .collect()
    }

    /// Pieces of `self` outside the closure of `other`, up to sets contained in that closure's boundary.
    pub fn minus_closure(&self, other: &Region) -> Vec<Region> {
        if other.dim() == 0 || !self.carrier_within(other) {
            if self.dim() == 0 && other.closure().contains_point(&self.origin) {
                return Vec::new();
            }
            return vec![self.clone()];
        }
        let cs = other.ambient_constraints();
        let closed: Vec<Constraint> = cs.iter().map(|c| c.closed()).collect();
        let mut probe = self.clone();
        for c in &closed {
            probe = probe.intersect_halfspace(c);
        }
        if probe.is_empty() {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut acc = self.clone();
        for c in cs {
            let outside = acc.intersect_halfspace(&c.closed().negated());
            if !outside.is_empty() {
                out.push(outside.canonical());
            }
            acc = acc.intersect_halfspace(&c.opened());
            if acc.is_empty() {
                break;
            }
        }
        out
    }
}

/// Open region whose closure is the union of the closures of `a` and `b`, when that union is convex.
/// Handles segments on a common line and planar polygons; other cases return `None`.
pub fn merge_convex(a: &Region, b: &Region) -> Option<Region> {
    if a.dim() != b.dim() || a.origin != b.origin || a.basis != b.basis {
        return None;
    }
    match a.dim() {
        1 => {
            let (alo, ahi) = interval(&a.poly)?;
            let (blo, bhi) = interval(&b.poly)?;
            if ahi < blo || bhi < alo {
                return None;
            }
            let lo = alo.min(blo);
            let hi = ahi.max(bhi);
            let poly = HPolytope {
                dim: 1,
                constraints: vec![Constraint::new(vec![Q::one()], hi, true), Constraint::new(vec![-Q::one()], -lo, true)],
            };
            Some(Region { poly, ..a.clone() })
        }
        2 => {
            // disjoint convex polygons with convex union have a common edge line with opposite normals
            let opposite = a.poly.constraints.iter().any(|c| {
                let n = c.normalized().negated();
                b.poly.constraints.iter().any(|d| {
                    let d = d.normalized();
                    d.a == n.a && d.b == n.b
                })
            });
            if !opposite {
                return None;
            }
            let pa = a.poly.vertices();
            let pb = b.poly.vertices();
            let mut all = pa.clone();
            all.extend(pb.iter().cloned());
            let hull = convex_hull_2d(&all);
            let (mut pa, mut pb) = (pa, pb);
            order_polygon(&mut pa);
            order_polygon(&mut pb);
            if hull.len() < 3 || polygon_area(&hull) != polygon_area(&pa) + polygon_area(&pb) {
                return None;
            }
            Some(Region { poly: open_polygon(&hull).simplified(), ..a.clone() })
        }
        _ => None,
    }
}

fn interval(p: &HPolytope) -> Option<(Q, Q)> {
    let v = p.vertices();
    if v.len() != 2 {
        return None;
    }
    Some((v[0][0].clone(), v[1][0].clone()))
}

/// Closures intersect.
pub fn closures_meet(a: &Region, b: &Region) -> bool {
    if a.is_identity_carrier() {
        return !b.closure().intersect_polytope(&a.closure().poly).is_empty();
    }
    if b.is_identity_carrier() {
        return !a.closure().intersect_polytope(&b.closure().poly).is_empty();
    }
    !a.closure().intersect(&b.closure()).is_empty()
}
