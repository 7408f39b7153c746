//! Singularity and multiplicity entropies from exact cylinders, expansion rates, and time rescaling.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cylinder::{vertex_multiplicity, Cylinder};
use crate::error::{Result, ZhangError};
use crate::geometry::{first_clean_level, ContinuityAtlas};
use crate::lattice::build_lattice;
use crate::skew::{RecordOptions, ReturnMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyLimits {
    pub n_max: usize,
    /// Cylinders allowed at one depth.
    pub node_budget: usize,
    /// Known clean level `m` (closure of `U_m` misses the singularities); searched for when `None`.
    pub clean_level: Option<usize>,
    pub clean_max_n: usize,
    pub region_budget: usize,
    /// Sampled products for the expansion rates.
    pub samples: usize,
    pub sample_len: usize,
    pub seed: u64,
}

impl Default for EntropyLimits {
    fn default() -> Self {
        EntropyLimits {
            n_max: 400,
            node_budget: 200_000,
            clean_level: None,
            clean_max_n: 12,
            region_budget: 20_000,
            samples: 400,
            sample_len: 40,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyEstimates {
    pub n_max: usize,
    /// `card(P^n)` for `n = 1..`, as decimal strings.
    pub card: Vec<String>,
    pub mult: Vec<u64>,
    pub h_sing_seq: Vec<f64>,
    pub h_mult_seq: Vec<f64>,
    /// Depth reached by explicit enumeration.
    pub enumerated_depth: usize,
    /// Clean level used to continue the sequences past `enumerated_depth`.
    pub clean_level: Option<usize>,
    pub lambda_plus: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// Spread (min, max) of the per-sample top and bottom rates.
    pub lambda_max_range: (f64, f64),
    pub lambda_min_range: (f64, f64),
    pub d_star: usize,
    pub buzzi_bound: f64,
    pub angular_bound: f64,
    pub budget_exceeded: bool,
    pub warnings: Vec<String>,
}

struct Rates {
    fiber_plus: f64,
    top: Vec<f64>,
    bottom: Vec<f64>,
}

/// Records the rates of a product `m` of `len` factors. The smallest singular value is taken as
/// `1 / ||m^-1||` from the separately accumulated inverse, which the SVD of `m` cannot resolve.
fn push_rates(r: &mut Rates, m: &DMatrix<f64>, inv: Option<&DMatrix<f64>>, len: usize) {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let t = len as f64;
    let bottom = match inv {
        Some(i) => -i.singular_values().iter().copied().fold(0.0, f64::max).ln(),
        None => f64::NEG_INFINITY,
    };
    // log ||Lambda^k m|| = sum of the k largest log singular values
    let mut logs: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    if let Some(last) = logs.last_mut() {
        *last = last.max(bottom);
    }
    let mut acc = 0.0;
    let mut best = 0.0f64;
    for v in &logs {
        acc += v;
        best = best.max(acc);
    }
    r.fiber_plus = r.fiber_plus.max(best / t);
    r.top.push(logs[0] / t);
    r.bottom.push(bottom / t);
}

fn sampled_rates(atlas: &ContinuityAtlas, limits: &EntropyLimits, rates: &mut Rates) -> Result<()> {
    let lattice = build_lattice(atlas.d, atlas.l)?;
    let mut map = ReturnMap::<f64>::new(&atlas.params, &lattice);
    let ec = atlas.params.ec_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(limits.seed);
    let opts = RecordOptions { sets: false, matrix: true };
    let n = atlas.n;
    for _ in 0..limits.samples {
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * ec).collect();
        let mut p = DMatrix::<f64>::identity(n, n);
        let mut inv = Some(DMatrix::<f64>::identity(n, n));
        for _ in 0..limits.sample_len {
            let i = rng.gen_range(0..n);
            let rec = map.apply(&mut x, i, opts)?;
            if let Some(l) = rec.linear_map {
                inv = match (inv, l.inverse()) {
                    (Some(acc), Some(li)) => Some(acc * li.to_nalgebra()),
                    _ => None,
                };
                p = l.to_nalgebra() * p;
            }
        }
        push_rates(rates, &p, inv.as_ref(), limits.sample_len.max(1));
    }
    Ok(())
}

/// Entropy sequences and the bounds relating them to expansion rates.
///
/// Cylinders are enumerated exactly up to the clean level `m` when removability is certified,
/// or up to `n_max` (within the node budget) otherwise. Past `m` no image meets a singularity,
/// so each cylinder has exactly one child per site with the same domain: `card` grows by the
/// factor `N` and `mult` is constant.
pub fn entropy_estimates(atlas: &ContinuityAtlas, limits: &EntropyLimits) -> Result<EntropyEstimates> {
    if limits.n_max == 0 {
        return Err(ZhangError::Domain("n_max must be positive".into()));
    }
    let n = atlas.n;
    let mut warnings = Vec::new();
    let clean = match limits.clean_level {
        Some(m) => Some(m),
        None => first_clean_level(atlas, limits.clean_max_n, limits.region_budget).0.map(|r| r.n),
    };
    let target = match clean {
        Some(m) => m.max(1).min(limits.n_max),
        None => limits.n_max,
    };

    let mut level = vec![Cylinder::root(atlas)];
    let mut card: Vec<BigUint> = Vec::new();
    let mut mult: Vec<u64> = Vec::new();
    let mut budget_exceeded = false;
    for _ in 1..=target {
        let mut next = Vec::new();
        for cyl in &level {
            for i in 0..n {
                next.extend(cyl.children(atlas, i));
            }
            if next.len() > limits.node_budget {
                budget_exceeded = true;
                break;
            }
        }
        if budget_exceeded {
            break;
        }
        let mut by_word: BTreeMap<Vec<usize>, Vec<&Cylinder>> = BTreeMap::new();
        for c in &next {
            by_word.entry(c.sites()).or_default().push(c);
        }
        let m = by_word.values().map(|cs| vertex_multiplicity(cs)).max().unwrap_or(0);
        card.push(BigUint::from(next.len()));
        mult.push(m as u64);
        level = next;
    }
    let enumerated_depth = card.len();
    let extend_from = clean.filter(|m| !budget_exceeded && enumerated_depth >= (*m).max(1).min(limits.n_max));
    if let Some(m) = extend_from {
        if m == 0 && enumerated_depth >= 1 && card[0] != BigUint::from(n) {
            warnings.push("clean level 0 but depth-1 count differs from N".into());
        }
        let big_n = BigUint::from(n);
        while card.len() < limits.n_max {
            let next = card.last().cloned().unwrap_or_else(BigUint::one) * big_n.clone();
            card.push(next);
            mult.push(*mult.last().unwrap_or(&1));
        }
    } else if enumerated_depth < limits.n_max {
        warnings.push(format!("sequences stop at n = {enumerated_depth}: no certified clean level within budget"));
    }
    let h_sing_seq: Vec<f64> = card.iter().enumerate().map(|(k, c)| big_ln(c) / (k + 1) as f64).collect();
    let h_mult_seq: Vec<f64> = mult.iter().enumerate().map(|(k, m)| (*m as f64).ln() / (k + 1) as f64).collect();

    // expansion rates: sampled products plus the exact products of the deepest enumerated cylinders
    let mut rates = Rates { fiber_plus: 0.0, top: Vec::new(), bottom: Vec::new() };
    sampled_rates(atlas, limits, &mut rates)?;
    if enumerated_depth > 0 {
        for c in level.iter().take(5000) {
            let inv = c.linear.inverse().map(|m| m.to_f64().to_nalgebra());
            push_rates(&mut rates, &c.linear.to_f64().to_nalgebra(), inv.as_ref(), enumerated_depth);
        }
    }
    let lambda_max = rates.top.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda_min = rates.bottom.iter().copied().fold(f64::INFINITY, f64::min);
    let range = |v: &[f64]| (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let d_star = (0..n).flat_map(|i| atlas.full_dimensional(i).map(|(_, p)| p.linear.rank())).max().unwrap_or(0);
    let lambda_plus = (n as f64).ln() + rates.fiber_plus;
    let h_mult_last = h_mult_seq.last().copied().unwrap_or(0.0);
    let buzzi_bound = lambda_plus + h_mult_last;
    let angular_bound = if d_star <= 1 {
        lambda_plus
    } else {
        lambda_plus + (d_star * (d_star - 1)) as f64 / 2.0 * (lambda_max - lambda_min)
    };
    Ok(EntropyEstimates {
        n_max: limits.n_max,
        card: card.iter().map(|c| c.to_string()).collect(),
        mult,
        h_sing_seq,
        h_mult_seq,
        enumerated_depth,
        clean_level: extend_from,
        lambda_plus,
        lambda_max,
        lambda_min,
        lambda_max_range: range(&rates.top),
        lambda_min_range: range(&rates.bottom),
        d_star,
        buzzi_bound,
        angular_bound,
        budget_exceeded,
        warnings,
    })
}

fn big_ln(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits < 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 60;
    (v >> shift).to_f64().unwrap_or(1.0).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Entropy of the physical map and of the reparametrized model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledEntropy {
    /// Mean return time to the stable set: the excitation step plus the avalanche steps.
    pub mean_return_time: f64,
    pub h_fhat: f64,
    pub omega_new: f64,
    /// `omega_new / (omega_new + tau)`.
    pub ratio: f64,
    pub h_zhang: f64,
}

/// `h_F / (1 + tau_all)` and `h_F * omega_new / (omega_new + tau_pos)` with `omega_new = omega * hbar`.
///
/// `tau_all` averages durations over all events (quiet ones count 0), `tau_pos` over positive avalanches.
pub fn rescale_entropy(h_f: f64, tau_all: f64, tau_pos: f64, omega_bar: f64, hbar: f64) -> Result<RescaledEntropy> {
    if hbar <= 0.0 {
        return Err(ZhangError::Domain("hbar must be positive".into()));
    }
    let mean_return_time = 1.0 + tau_all;
    if mean_return_time <= 0.0 {
        return Err(ZhangError::Domain("mean return time must be positive".into()));
    }
    let omega_new = omega_bar * hbar;
    let denom = omega_new + tau_pos;
    if denom <= 0.0 {
        return Err(ZhangError::Domain("omega_new + tau must be positive".into()));
    }
    let ratio = omega_new / denom;
    Ok(RescaledEntropy { mean_return_time, h_fhat: h_f / mean_return_time, omega_new, ratio, h_zhang: h_f * ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_atlas;
    use crate::lattice::ModelParams;
    use crate::scalar::rat;

    #[test]
    fn quiet_toy_keeps_entropy() {
        let r = rescale_entropy(2f64.ln(), 0.0, 1.0, 3.0, 1.0).unwrap();
        assert_eq!(r.h_fhat, 2f64.ln());
        assert!((r.ratio - 0.75).abs() < 1e-15);
        assert!(rescale_entropy(1.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(rescale_entropy(1.0, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn example_b_is_log_two() {
        let p = ModelParams::new(rat(1, 3), rat(1, 3)).unwrap();
        let lat = build_lattice(1, 2).unwrap();
        let atlas = build_atlas(&p, &lat, 64, 10_000).unwrap();
        let e = entropy_estimates(&atlas, &EntropyLimits { n_max: 200, samples: 50, ..Default::default() }).unwrap();
        assert_eq!(e.clean_level, Some(1));
        assert_eq!(e.card.len(), 200);
        let h = *e.h_sing_seq.last().unwrap();
        assert!((h - 2f64.ln()).abs() < 0.02, "{h}");
        assert!(e.h_sing_seq.iter().all(|v| *v >= 0.0));
        assert_eq!(e.d_star, 1);
        assert!(h <= e.buzzi_bound + 0.05);
    }
}
