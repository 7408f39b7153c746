//! Markov coding of `F` restricted to the closure of a clean `U_m`, and statistics of the chain.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::atlas::ContinuityAtlas;
use super::iterate::RegionSet;
use super::region::closures_meet;
use crate::matrix::Matrix;
use crate::scalar::{rat_from_usize, Rational};

type Q = Rational;

/// Largest chain for which exact rational eigen data is attempted.
pub const EXACT_CHAIN_LIMIT: usize = 1200;
/// Largest matrix for which the characteristic polynomial is computed.
pub const CHARPOLY_LIMIT: usize = 40;

/// 0/1 transition matrix on states `[i] × Y_k`, indexed `i * s + k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub r: usize,
    pub n_sites: usize,
    pub n_components: usize,
    /// Sorted column indices of the ones in each row.
    pub rows: Vec<Vec<usize>>,
    /// `(site, component)` of each state.
    pub labels: Vec<(usize, usize)>,
    /// Avalanche size and duration of `F_i` on `Y_k`.
    pub sizes: Vec<usize>,
    pub durations: Vec<usize>,
    /// Every row has exactly `N` ones and each `F_i(Y_k)` lies in a single component.
    pub valid: bool,
    /// False when the coding was built from a region set that still meets the singularities.
    pub certified: bool,
}

impl TransitionMatrix {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    pub fn dense(&self) -> Vec<Vec<u8>> {
        (0..self.r).map(|i| (0..self.r).map(|j| self.get(i, j) as u8).collect()).collect()
    }

    pub fn ones(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Rows as `(row, col)` pairs, 0-based.
    pub fn triplets(&self) -> Vec<(usize, usize)> {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&j| (i, j))).collect()
    }

    pub fn to_rational(&self) -> Matrix<Q> {
        Matrix::from_fn(self.r, self.r, |i, j| if self.get(i, j) { Q::one() } else { Q::zero() })
    }

    /// Builds a matrix directly from rows of ones, with labels `(i, k)` for `i * s + k`.
    pub fn from_rows(n_sites: usize, rows: Vec<Vec<usize>>, sizes: Vec<usize>, durations: Vec<usize>) -> Self {
        let r = rows.len();
        let s = r / n_sites.max(1);
        let labels = (0..r).map(|x| (x / s.max(1), x % s.max(1))).collect();
        let valid = rows.iter().all(|row| row.len() == n_sites);
        TransitionMatrix { r, n_sites, n_components: s, rows, labels, sizes, durations, valid, certified: true }
    }
}

/// Transition matrix `a_{(i,k),(j,l)} = 1` iff `F_i(Y_k)` meets `Y_l`.
pub fn markov_coding(atlas: &ContinuityAtlas, set: &RegionSet, certified: bool) -> TransitionMatrix {
    let n = atlas.n;
    let s = set.n_components;
    let cells = super::atlas::refine_cells(atlas);
    let boxes: Vec<Vec<(Q, Q)>> = set.regions.iter().map(|r| r.region.bounding_box()).collect();
    let mut rows = vec![Vec::new(); n * s];
    let mut sizes = vec![0; n * s];
    let mut durations = vec![0; n * s];
    let mut valid = true;
    for site in 0..n {
        for k in 0..s {
            let state = site * s + k;
            let mut targets = BTreeSet::new();
            let mut labels = BTreeSet::new();
            for (idx, tr) in set.regions.iter().enumerate() {
                if set.component[idx] != k {
                    continue;
                }
                let piece = &atlas.pieces[site][cells[tr.cell].pieces[site]];
                labels.insert((piece.size, piece.duration));
                let img = tr.region.image(&piece.linear, &piece.offset);
                let ibox = img.bounding_box();
                for (j, other) in set.regions.iter().enumerate() {
                    if targets.contains(&set.component[j]) || !boxes_meet(&ibox, &boxes[j]) {
                        continue;
                    }
                    if closures_meet(&img, &other.region) {
                        targets.insert(set.component[j]);
                    }
                }
            }
            if targets.len() != 1 || labels.len() != 1 {
                valid = false;
            }
            let (sz, du) = labels.into_iter().next().unwrap_or((0, 0));
            sizes[state] = sz;
            durations[state] = du;
            let mut row: Vec<usize> = (0..n).flat_map(|j| targets.iter().map(move |&l| j * s + l)).collect();
            row.sort_unstable();
            rows[state] = row;
        }
    }
    TransitionMatrix { r: n * s, n_sites: n, n_components: s, rows, labels: (0..n * s).map(|x| (x / s, x % s)).collect(), sizes, durations, valid, certified }
}

fn boxes_meet(a: &[(Q, Q)], b: &[(Q, Q)]) -> bool {
    a.iter().zip(b).all(|((alo, ahi), (blo, bhi))| alo <= bhi && blo <= ahi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainStatistics {
    pub transitive: bool,
    /// Sizes of the closed communicating classes.
    pub closed_classes: Vec<usize>,
    /// Exact spectral radius when certified.
    pub radius_exact: Option<u64>,
    /// Collatz–Wielandt bounds on the spectral radius.
    pub radius_lower: f64,
    pub radius_upper: f64,
    pub radius: f64,
    pub entropy: f64,
    pub parry: Vec<f64>,
    #[serde(with = "opt_rational_vec")]
    pub parry_exact: Option<Vec<Q>>,
    #[serde(with = "opt_rational")]
    pub mean_size: Option<Q>,
    pub mean_size_f64: f64,
    #[serde(with = "opt_rational")]
    pub mean_duration: Option<Q>,
    pub mean_duration_f64: f64,
    /// Integer roots of the characteristic polynomial with multiplicity; `None` when it does not split.
    pub integer_spectrum: Option<Vec<i64>>,
    pub warnings: Vec<String>,
}

/// Transitivity, spectral radius, Parry measure and mean avalanche size and duration.
pub fn chain_statistics(a: &TransitionMatrix) -> ChainStatistics {
    let mut warnings = Vec::new();
    let transitive = is_transitive(&a.rows);
    if !transitive {
        warnings.push("transition matrix is not transitive; stationary data refers to the unique closed class if any".into());
    }
    let sums: Vec<usize> = a.rows.iter().map(|r| r.len()).collect();
    let (lo, hi) = (*sums.iter().min().unwrap_or(&0), *sums.iter().max().unwrap_or(&0));
    let (radius_exact, radius_lower, radius_upper, parry_f, parry_q) = if lo == hi {
        // constant row sums: the all-ones vector is a Perron vector, Parry = stationary law of A / N
        let q = if a.r <= EXACT_CHAIN_LIMIT { stationary_exact(&a.rows) } else { None };
        let f = match &q {
            Some(v) => v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
            None => stationary_float(&a.rows),
        };
        (Some(lo as u64), lo as f64, hi as f64, f, q)
    } else {
        let (l, u, v) = perron_bounds(a);
        let exact = if (u - l).abs() < 1e-12 && (l - l.round()).abs() < 1e-12 { Some(l.round() as u64) } else { None };
        (exact, l, u, parry_general(a, &v), None)
    };
    let radius = radius_exact.map(|r| r as f64).unwrap_or((radius_lower + radius_upper) / 2.0);
    let mean = |lab: &[usize]| -> (Option<Q>, f64) {
        let f = parry_f.iter().zip(lab).map(|(p, &s)| p * s as f64).sum();
        let q = parry_q.as_ref().map(|p| p.iter().zip(lab).map(|(p, &s)| p.clone() * rat_from_usize(s)).fold(Q::zero(), |x, y| x + y));
        (q, f)
    };
    let (mean_size, mean_size_f64) = mean(&a.sizes);
    let (mean_duration, mean_duration_f64) = mean(&a.durations);
    let integer_spectrum = if a.r <= CHARPOLY_LIMIT { integer_roots(&a.to_rational().characteristic_polynomial()) } else { None };
    ChainStatistics {
        transitive,
        closed_classes: closed_classes(&a.rows).iter().map(|c| c.len()).collect(),
        radius_exact,
        radius_lower,
        radius_upper,
        radius,
        entropy: radius.ln(),
        parry: parry_f,
        parry_exact: parry_q,
        mean_size,
        mean_size_f64,
        mean_duration,
        mean_duration_f64,
        integer_spectrum,
        warnings,
    }
}

/// Strong connectivity by forward and backward reachability from state 0.
pub fn is_transitive(rows: &[Vec<usize>]) -> bool {
    let r = rows.len();
    if r == 0 {
        return false;
    }
    let mut back = vec![Vec::new(); r];
    for (i, row) in rows.iter().enumerate() {
        for &j in row {
            back[j].push(i);
        }
    }
    let reach = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; r];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen.into_iter().all(|b| b)
    };
    reach(rows) && reach(&back)
}

/// Strongly connected components with no outgoing edges, each sorted.
pub fn closed_classes(rows: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let r = rows.len();
    // iterative Tarjan
    let mut index = vec![usize::MAX; r];
    let mut low = vec![0; r];
    let mut on = vec![false; r];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; r];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    for root in 0..r {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work = vec![(root, 0usize)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on[root] = true;
        while let Some(&mut (v, ref mut e)) = work.last_mut() {
            if *e < rows[v].len() {
                let w = rows[v][*e];
                *e += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on[w] = true;
                    work.push((w, 0));
                } else if on[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(u, _)) = work.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut c = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on[w] = false;
                        comp[w] = comps.len();
                        c.push(w);
                        if w == v {
                            break;
                        }
                    }
                    c.sort_unstable();
                    comps.push(c);
                }
            }
        }
    }
    let mut out: Vec<Vec<usize>> = comps
        .iter()
        .enumerate()
        .filter(|(k, c)| c.iter().all(|&v| rows[v].iter().all(|&w| comp[w] == *k)))
        .map(|(_, c)| c.clone())
        .collect();
    out.sort();
    out
}

/// Stationary law of the uniform random walk on the rows, by sparse exact elimination.
fn stationary_exact(rows: &[Vec<usize>]) -> Option<Vec<Q>> {
    let r = rows.len();
    // equations: sum_k pi_k P_kl - pi_l = 0 for l < r-1, and sum pi = 1
    let mut eqs: Vec<BTreeMap<usize, Q>> = vec![BTreeMap::new(); r];
    for (k, row) in rows.iter().enumerate() {
        let w = Q::one() / rat_from_usize(row.len());
        for &l in row {
            *eqs[l].entry(k).or_insert_with(Q::zero) += w.clone();
        }
    }
    for (l, eq) in eqs.iter_mut().enumerate() {
        *eq.entry(l).or_insert_with(Q::zero) -= Q::one();
        eq.retain(|_, v| !v.is_zero());
    }
    let mut rhs = vec![Q::zero(); r];
    eqs[r - 1] = (0..r).map(|k| (k, Q::one())).collect();
    rhs[r - 1] = Q::one();
    // Gaussian elimination choosing the sparsest pivot row per column
    let mut used = vec![false; r];
    let mut pivot_of = vec![usize::MAX; r];
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); r];
    for (i, eq) in eqs.iter().enumerate() {
        for &c in eq.keys() {
            col_rows[c].insert(i);
        }
    }
    for col in 0..r {
        let p = col_rows[col].iter().copied().filter(|&i| !used[i]).min_by_key(|&i| (eqs[i].len(), i))?;
        used[p] = true;
        pivot_of[col] = p;
        let pv = eqs[p][&col].clone();
        let prow: Vec<(usize, Q)> = eqs[p].iter().map(|(c, v)| (*c, v.clone() / pv.clone())).collect();
        let prhs = rhs[p].clone() / pv;
        let targets: Vec<usize> = col_rows[col].iter().copied().filter(|&i| i != p && !used[i]).collect();
        for i in targets {
            let f = eqs[i][&col].clone();
            for (c, v) in &prow {
                let e = eqs[i].entry(*c).or_insert_with(Q::zero);
                *e -= f.clone() * v.clone();
                if e.is_zero() {
                    eqs[i].remove(c);
                    col_rows[*c].remove(&i);
                } else {
                    col_rows[*c].insert(i);
                }
            }
            rhs[i] -= f * prhs.clone();
        }
    }
    // back substitution in reverse pivot order
    let mut x = vec![Q::zero(); r];
    for col in (0..r).rev() {
        let p = pivot_of[col];
        let mut acc = rhs[p].clone();
        for (c, v) in &eqs[p] {
            if *c != col {
                acc -= v.clone() * x[*c].clone();
            }
        }
        x[col] = acc / eqs[p][&col].clone();
    }
    if x.iter().any(|v| v.is_negative()) {
        return None;
    }
    Some(x)
}

/// Stationary law of the lazy uniform walk by power iteration.
fn stationary_float(rows: &[Vec<usize>]) -> Vec<f64> {
    let r = rows.len();
    let mut p = vec![1.0 / r as f64; r];
    for _ in 0..100_000 {
        let mut q: Vec<f64> = p.iter().map(|v| 0.5 * v).collect();
        for (k, row) in rows.iter().enumerate() {
            let w = 0.5 * p[k] / row.len() as f64;
            for &l in row {
                q[l] += w;
            }
        }
        let diff: f64 = q.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = q;
        if diff < 1e-15 {
            break;
        }
    }
    p
}

/// Collatz–Wielandt bounds from a power-iterated positive vector, and that vector.
fn perron_bounds(a: &TransitionMatrix) -> (f64, f64, Vec<f64>) {
    let r = a.r;
    let mut v = vec![1.0; r];
    for _ in 0..10_000 {
        let mut w: Vec<f64> = v.clone();
        for (i, row) in a.rows.iter().enumerate() {
            for &j in row {
                w[i] += v[j];
            }
        }
        let m = w.iter().cloned().fold(0.0, f64::max);
        v = w.into_iter().map(|x| x / m).collect();
    }
    let ratios: Vec<f64> = (0..r).filter(|&i| v[i] > 0.0).map(|i| a.rows[i].iter().map(|&j| v[j]).sum::<f64>() / v[i]).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    (lo, hi, v)
}

/// Parry measure `u_i v_i` with left and right Perron vectors.
fn parry_general(a: &TransitionMatrix, right: &[f64]) -> Vec<f64> {
    let r = a.r;
    let mut u = vec![1.0; r];
    for _ in 0..10_000 {
        let mut w = u.clone();
        for (i, row) in a.rows.iter().enumerate() {
            for &j in row {
                w[j] += u[i];
            }
        }
        let m = w.iter().cloned().fold(0.0, f64::max);
        u = w.into_iter().map(|x| x / m).collect();
    }
    let mut p: Vec<f64> = u.iter().zip(right).map(|(a, b)| a * b).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Integer roots with multiplicity when the monic integer polynomial splits over the integers.
pub fn integer_roots(coeffs: &[Q]) -> Option<Vec<i64>> {
    // coeffs[k] is the coefficient of x^k
    let mut c: Vec<Q> = coeffs.to_vec();
    if c.iter().any(|v| !v.is_integer()) {
        return None;
    }
    let mut roots = Vec::new();
    while c.len() > 1 && c[0].is_zero() {
        roots.push(0);
        c.remove(0);
    }
    while c.len() > 1 {
        let c0 = c[0].to_integer().abs();
        let bound = c0.to_u64()?;
        let mut found = None;
        let mut d = 1u64;
        while d * d <= bound {
            if bound % d == 0 {
                for cand in [d, bound / d] {
                    for sgn in [1i64, -1] {
                        let x = sgn * cand as i64;
                        if found.is_none() && eval(&c, x).is_zero() {
                            found = Some(x);
                        }
                    }
                }
            }
            d += 1;
        }
        let x = found?;
        roots.push(x);
        c = deflate(&c, x);
    }
    roots.sort_unstable();
    Some(roots)
}

fn eval(c: &[Q], x: i64) -> Q {
    let xq = Q::from_integer(x.into());
    c.iter().rev().fold(Q::zero(), |acc, v| acc * xq.clone() + v.clone())
}

fn deflate(c: &[Q], x: i64) -> Vec<Q> {
    let xq = Q::from_integer(x.into());
    let d = c.len() - 1;
    let mut out = vec![Q::zero(); d];
    let mut carry = Q::zero();
    for k in (1..=d).rev() {
        carry = c[k].clone() + carry * xq.clone();
        out[k - 1] = carry.clone();
    }
    out
}

mod opt_rational {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        r.as_ref().map(format_rational).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let v: Option<String> = Option::deserialize(d)?;
        v.map(|s| parse_rational(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

mod opt_rational_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
        r.as_ref().map(|v| v.iter().map(format_rational).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rational>>, D::Error> {
        let v: Option<Vec<String>> = Option::deserialize(d)?;
        v.map(|v| v.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect()).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn full_shift_is_uniform() {
        let rows = vec![vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2]];
        let a = TransitionMatrix::from_rows(3, rows, vec![0, 1, 2], vec![0, 1, 1]);
        let st = chain_statistics(&a);
        assert!(st.transitive);
        assert_eq!(st.closed_classes, vec![3]);
        assert_eq!(st.radius_exact, Some(3));
        assert_eq!(st.mean_size, Some(Q::one()));
        assert_eq!(st.parry_exact.unwrap(), vec![rat(1, 3); 3]);
        assert_eq!(st.integer_spectrum, Some(vec![0, 0, 3]));
    }

    #[test]
    fn non_integer_spectrum_is_none() {
        // x^2 - 2
        assert_eq!(integer_roots(&[rat(-2, 1), Q::zero(), Q::one()]), None);
        // x (x - 2) (x + 1)^2
        assert_eq!(integer_roots(&[Q::zero(), rat(-2, 1), rat(-3, 1), Q::zero(), Q::one()]), Some(vec![-1, -1, 0, 2]));
    }

    #[test]
    fn transient_states_carry_no_mass() {
        // state 0 leads into the cycle 1 <-> 2 and never returns
        let a = TransitionMatrix::from_rows(1, vec![vec![1], vec![2], vec![1]], vec![5, 1, 3], vec![1, 1, 1]);
        let st = chain_statistics(&a);
        assert!(!st.transitive);
        assert_eq!(st.closed_classes, vec![2]);
        assert_eq!(st.parry_exact.unwrap(), vec![Q::zero(), rat(1, 2), rat(1, 2)]);
        assert_eq!(st.mean_size, Some(rat(2, 1)));
    }

    #[test]
    fn golden_mean_bounds() {
        let a = TransitionMatrix::from_rows(1, vec![vec![0, 1], vec![0]], vec![0, 0], vec![0, 0]);
        let st = chain_statistics(&a);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((st.radius - phi).abs() < 1e-9);
        assert!(st.radius_exact.is_none());
    }
}
