//! Box-counting estimates and Moran-type dimension bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attractor::bounding_box;
use crate::error::{Result, ZhangError};
use crate::geometry::{ContinuityAtlas, HPolytope};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxDimension {
    /// Least-squares slope over the whole range.
    pub estimate: f64,
    /// Smallest and largest slopes over sub-ranges of at least half the scales.
    pub lower: f64,
    pub upper: f64,
    pub deltas: Vec<f64>,
    /// Occupied cells at each `delta`, averaged over the grid offsets.
    pub counts: Vec<f64>,
}

/// Default scales: the cloud's extent times `2^-k` for `k = 2..=7`.
pub fn default_deltas(points: &[Vec<f64>]) -> Vec<f64> {
    let extent = bounding_box(points).iter().map(|(a, b)| b - a).fold(0.0, f64::max);
    (2..=7).map(|k| extent * 0.5f64.powi(k)).collect()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Grid counting at each `delta` with three grid offsets (the aligned grid and two random shifts).
pub fn box_dimension(points: &[Vec<f64>], deltas: Option<&[f64]>, seed: u64) -> Result<BoxDimension> {
    if points.is_empty() {
        return Err(ZhangError::Domain("box counting needs a nonempty cloud".into()));
    }
    let bb = bounding_box(points);
    let extent = bb.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
    if extent == 0.0 {
        return Ok(BoxDimension { estimate: 0.0, lower: 0.0, upper: 0.0, deltas: Vec::new(), counts: Vec::new() });
    }
    let deltas: Vec<f64> = match deltas {
        Some(d) => d.to_vec(),
        None => default_deltas(points),
    };
    let (lo, hi) = deltas.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
    if deltas.len() < 3 || lo <= 0.0 || (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(ZhangError::Domain("scales must be positive, at least 3, spanning 1.5 decades".into()));
    }
    let dim = bb.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::with_capacity(deltas.len());
    let mut keys: Vec<Vec<i64>> = Vec::with_capacity(points.len());
    for &d in &deltas {
        let mut total = 0.0;
        for k in 0..3 {
            let shift: Vec<f64> = (0..dim).map(|_| if k == 0 { 0.0 } else { rng.gen::<f64>() * d }).collect();
            keys.clear();
            keys.extend(points.iter().map(|p| p.iter().zip(&bb).zip(&shift).map(|((v, b), s)| ((v - b.0 + s) / d).floor() as i64).collect()));
            keys.sort_unstable();
            keys.dedup();
            total += keys.len() as f64;
        }
        counts.push(total / 3.0);
    }
    let xs: Vec<f64> = deltas.iter().map(|d| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    let estimate = slope(&xs, &ys);
    let m = xs.len();
    let min_len = m.div_ceil(2).max(2);
    let (mut lower, mut upper) = (f64::INFINITY, f64::NEG_INFINITY);
    for len in min_len..=m {
        for s in 0..=m - len {
            let v = slope(&xs[s..s + len], &ys[s..s + len]);
            lower = lower.min(v);
            upper = upper.max(v);
        }
    }
    Ok(BoxDimension { estimate, lower, upper, deltas, counts })
}

/// Contraction and multiplicity data for the two Moran equations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoranInputs {
    pub s_minus: Vec<f64>,
    pub s_plus: Vec<f64>,
    pub eta: f64,
    pub kappa: Vec<f64>,
    pub theta: Vec<f64>,
}

impl MoranInputs {
    /// All multiplicities 1.
    pub fn simple(s_minus: Vec<f64>, s_plus: Vec<f64>) -> Self {
        let n = s_minus.len();
        MoranInputs { s_minus, s_plus, eta: 1.0, kappa: vec![1.0; n], theta: vec![1.0; n] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoranBounds {
    /// Conditional on the supplied `eta` and `kappa`.
    pub lower: f64,
    pub upper: f64,
    pub residual_lower: f64,
    pub residual_upper: f64,
}

const MORAN_HI: f64 = 64.0;

fn bisect_decreasing(f: impl Fn(f64) -> f64) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0, MORAN_HI);
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    Some((root, f(root)))
}

/// Roots of `sum s_i^-^a / kappa_i = eta` and `sum theta_i s_i^+^b = 1`.
pub fn moran_bounds(inputs: &MoranInputs) -> Result<MoranBounds> {
    let n = inputs.s_minus.len();
    if n == 0 || inputs.s_plus.len() != n || inputs.kappa.len() != n || inputs.theta.len() != n {
        return Err(ZhangError::Domain("Moran inputs need one entry per map".into()));
    }
    for i in 0..n {
        let (a, b) = (inputs.s_minus[i], inputs.s_plus[i]);
        if !(a > 0.0 && a <= b && b < 1.0) {
            return Err(ZhangError::Domain(format!("map {i}: need 0 < s- <= s+ < 1, got {a}, {b}")));
        }
    }
    if inputs.eta < 1.0 || inputs.kappa.iter().chain(&inputs.theta).any(|v| *v < 1.0) {
        return Err(ZhangError::Domain("multiplicities must be at least 1".into()));
    }
    let g = |a: f64| (0..n).map(|i| inputs.s_minus[i].powf(a) / inputs.kappa[i]).sum::<f64>() - inputs.eta;
    let h = |b: f64| (0..n).map(|i| inputs.theta[i] * inputs.s_plus[i].powf(b)).sum::<f64>() - 1.0;
    let (lower, rl) = bisect_decreasing(g).ok_or_else(|| ZhangError::Domain("lower Moran equation has no root in [0, 64]".into()))?;
    let (upper, ru) = bisect_decreasing(h).ok_or_else(|| ZhangError::Domain("upper Moran equation has no root in [0, 64]".into()))?;
    Ok(MoranBounds { lower, upper, residual_lower: rl, residual_upper: ru })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularValueReport {
    pub inputs: MoranInputs,
    /// `(s_min, s_max)` of each full-dimensional piece, per site.
    pub per_piece: Vec<Vec<(f64, f64)>>,
    /// Every `s_i^+ < 1`, so the upper equation applies.
    pub contracting: bool,
    pub warnings: Vec<String>,
}

/// Extreme singular values per site and the piece multiplicity `theta_i` of the arrangement.
///
/// `theta_i` is the largest number of piece closures of `F_i` through one point of `M`, a bound
/// for the count over attractor points. `eta` and `kappa_i` are set to 1.
pub fn singular_value_inputs(atlas: &ContinuityAtlas) -> SingularValueReport {
    let n = atlas.n;
    let mut per_piece = Vec::with_capacity(n);
    let mut s_minus = Vec::with_capacity(n);
    let mut s_plus = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    for i in 0..n {
        let mut vals = Vec::new();
        let mut closures: Vec<HPolytope> = Vec::new();
        for (j, p) in atlas.full_dimensional(i) {
            let sv = p.linear.to_f64().singular_values();
            let smax = sv[0];
            let smin = if p.linear.rank() < n {
                warnings.push(format!("site {i} piece {j}: rank {} < {n}, s- = 0", p.linear.rank()));
                0.0
            } else {
                sv[sv.len() - 1]
            };
            vals.push((smin, smax));
            closures.push(p.domain.closure());
        }
        s_minus.push(vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min));
        s_plus.push(vals.iter().map(|v| v.1).fold(0.0, f64::max));
        let mut t = 1;
        for c in &closures {
            for v in c.vertices() {
                t = t.max(closures.iter().filter(|o| o.contains_point(&v)).count());
            }
        }
        theta.push(t as f64);
        per_piece.push(vals);
    }
    let contracting = s_plus.iter().all(|s| *s < 1.0);
    if !contracting {
        warnings.push("some s+ >= 1: the upper bound is vacuous".into());
    }
    SingularValueReport { inputs: MoranInputs { s_minus, s_plus, eta: 1.0, kappa: vec![1.0; n], theta }, per_piece, contracting, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_atlas;
    use crate::lattice::{build_lattice, ModelParams};
    use crate::scalar::rat;

    #[test]
    fn classical_moran() {
        let b = moran_bounds(&MoranInputs::simple(vec![0.5; 2], vec![0.5; 2])).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-10 && (b.upper - 1.0).abs() < 1e-10);
        let s = 0.3;
        let b = moran_bounds(&MoranInputs::simple(vec![s; 3], vec![s; 3])).unwrap();
        let d = 3f64.ln() / (1.0 / s).ln();
        assert!((b.lower - d).abs() < 1e-10 && (b.upper - d).abs() < 1e-10);
        assert!(b.residual_lower.abs() < 1e-10);
    }

    #[test]
    fn theta_two_doubles_the_upper_root() {
        let mut inp = MoranInputs::simple(vec![0.5; 2], vec![0.5; 2]);
        inp.theta = vec![2.0; 2];
        let b = moran_bounds(&inp).unwrap();
        assert!((b.upper - 2.0).abs() < 1e-10);
        // reordering the maps changes nothing
        let mut r = MoranInputs::simple(vec![0.2, 0.4], vec![0.3, 0.5]);
        let b1 = moran_bounds(&r).unwrap();
        r.s_minus.reverse();
        r.s_plus.reverse();
        assert_eq!(moran_bounds(&r).unwrap(), b1);
    }

    #[test]
    fn non_contracting_inputs_are_rejected() {
        assert!(moran_bounds(&MoranInputs::simple(vec![0.5], vec![1.0])).is_err());
        assert!(moran_bounds(&MoranInputs::simple(vec![0.6], vec![0.5])).is_err());
    }

    #[test]
    fn point_and_square() {
        let one = vec![vec![0.3, 0.3]; 10];
        assert_eq!(box_dimension(&one, None, 1).unwrap().estimate, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fill: Vec<Vec<f64>> = (0..200_000).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let b = box_dimension(&fill, None, 1).unwrap();
        assert!((b.estimate - 2.0).abs() < 0.1, "{b:?}");
    }

    #[test]
    fn example_inputs() {
        let lat = build_lattice(1, 2).unwrap();
        let a = build_atlas(&ModelParams::new(rat(7, 2), rat(1, 2)).unwrap(), &lat, 64, 1000).unwrap();
        let r = singular_value_inputs(&a);
        // largest singular value of [[1/2, 0], [1/4, 1]]: eigenvalues of its Gram matrix solve l^2 - 21/16 l + 1/4 = 0
        let top = ((21.0 / 16.0 + (441.0f64 / 256.0 - 1.0).sqrt()) / 2.0).sqrt();
        assert!((r.inputs.s_plus[0] - top).abs() < 1e-12 && !r.contracting, "{r:?}");
        let b = build_atlas(&ModelParams::new(rat(1, 3), rat(1, 3)).unwrap(), &lat, 64, 1000).unwrap();
        let r = singular_value_inputs(&b);
        assert_eq!(r.inputs.s_minus, vec![0.0, 0.0]);
    }
}
