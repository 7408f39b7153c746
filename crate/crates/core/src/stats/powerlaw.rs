//! Discrete power-law fits `P(s) ~ s^-alpha` by maximum likelihood with a KS-chosen cutoff.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZhangError};

/// Hurwitz zeta `sum_{k >= 0} (q + k)^-s` for `s > 1`, `q > 0`, by Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    const M: usize = 12;
    // B_2j / (2j)!
    const B: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
    ];
    let mut sum = 0.0;
    for k in 0..M {
        sum += (q + k as f64).powf(-s);
    }
    let a = q + M as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) times a^(-s-2j+1)
    let mut fact = s;
    let mut pow = a.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        sum += b * fact * pow;
        let k = 2 * j as i32 + 1;
        fact *= (s + k as f64) * (s + k as f64 + 1.0);
        pow /= a * a;
    }
    sum
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawOptions {
    pub min_samples: usize,
    /// Smallest tail considered for the cutoff, as a count and as a fraction of the data.
    pub min_tail: usize,
    pub min_tail_fraction: f64,
    pub max_candidates: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for PowerLawOptions {
    fn default() -> Self {
        PowerLawOptions { min_samples: 10_000, min_tail: 100, min_tail_fraction: 0.1, max_candidates: 60, bootstrap: 100, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub xmin: u64,
    pub n_tail: usize,
    pub ks: f64,
    /// 95% bootstrap interval for `alpha` at the chosen cutoff.
    pub ci: (f64, f64),
    /// Normalized log-likelihood ratio against a discrete exponential tail; negative favours the exponential.
    pub vuong_z: f64,
    pub poor_fit: bool,
}

fn mle_alpha(tail: &[u64], xmin: u64) -> f64 {
    let n = tail.len() as f64;
    let sum_ln: f64 = tail.iter().map(|&x| (x as f64).ln()).sum();
    let ll = |a: f64| -n * hurwitz_zeta(a, xmin as f64).ln() - a * sum_ln;
    // log-likelihood is concave in alpha: golden-section search
    let (mut lo, mut hi) = (1.0 + 1e-6, 10.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (ll(c), ll(d));
    while hi - lo > 1e-9 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = ll(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = ll(d);
        }
    }
    0.5 * (lo + hi)
}

/// Largest gap between the empirical and fitted tail distributions; `tail` sorted ascending.
fn ks_distance(tail: &[u64], xmin: u64, alpha: f64) -> f64 {
    let n = tail.len() as f64;
    let z0 = hurwitz_zeta(alpha, xmin as f64);
    let mut d = 0.0f64;
    let mut i = 0;
    while i < tail.len() {
        let x = tail[i];
        let mut j = i;
        while j < tail.len() && tail[j] == x {
            j += 1;
        }
        // P(X >= x) for both
        let emp = (tail.len() - i) as f64 / n;
        let fit = hurwitz_zeta(alpha, x as f64) / z0;
        d = d.max((emp - fit).abs());
        let emp_next = (tail.len() - j) as f64 / n;
        let fit_next = hurwitz_zeta(alpha, x as f64 + 1.0) / z0;
        d = d.max((emp_next - fit_next).abs());
        i = j;
    }
    d
}

fn vuong(tail: &[u64], xmin: u64, alpha: f64) -> f64 {
    let n = tail.len() as f64;
    let mean = tail.iter().map(|&x| (x - xmin) as f64).sum::<f64>() / n;
    if mean == 0.0 {
        return f64::NEG_INFINITY;
    }
    // geometric tail p(x) = (1 - q) q^(x - xmin)
    let q = mean / (1.0 + mean);
    let lz = hurwitz_zeta(alpha, xmin as f64).ln();
    let diffs: Vec<f64> = tail
        .iter()
        .map(|&x| {
            let lp = -alpha * (x as f64).ln() - lz;
            let le = (1.0 - q).ln() + (x - xmin) as f64 * q.ln();
            lp - le
        })
        .collect();
    let m = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return 0.0;
    }
    m * n.sqrt() / sd
}

/// Fits positive integer samples; the cutoff minimizes the KS distance among candidates whose tail is large enough.
pub fn powerlaw_fit(samples: &[u64], opts: &PowerLawOptions) -> Result<PowerLawFit> {
    let mut data: Vec<u64> = samples.iter().copied().filter(|&x| x > 0).collect();
    data.sort_unstable();
    if data.first() == data.last() {
        return Err(ZhangError::Domain("degenerate support: fewer than two distinct values".into()));
    }
    if data.len() < opts.min_samples {
        return Err(ZhangError::Domain(format!("need at least {} positive samples, got {}", opts.min_samples, data.len())));
    }
    let min_tail = opts.min_tail.max((opts.min_tail_fraction * data.len() as f64).ceil() as usize);
    let mut distinct: Vec<(u64, usize)> = Vec::new();
    for (i, &x) in data.iter().enumerate() {
        if distinct.last().map(|d| d.0) != Some(x) {
            distinct.push((x, i));
        }
    }
    // the largest value alone is not a tail
    distinct.pop();
    let eligible: Vec<(u64, usize)> = distinct.into_iter().filter(|&(_, i)| data.len() - i >= min_tail).collect();
    if eligible.is_empty() {
        return Err(ZhangError::Domain("insufficient tail mass".into()));
    }
    let stride = eligible.len().div_ceil(opts.max_candidates.max(1));
    let mut best: Option<(f64, u64, usize, f64)> = None;
    for &(xmin, i) in eligible.iter().step_by(stride) {
        let tail = &data[i..];
        let a = mle_alpha(tail, xmin);
        let ks = ks_distance(tail, xmin, a);
        if best.map_or(true, |b| ks < b.0) {
            best = Some((ks, xmin, i, a));
        }
    }
    let (ks, xmin, i, alpha) = best.expect("at least one candidate");
    let tail = &data[i..];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut boots: Vec<f64> = (0..opts.bootstrap)
        .map(|_| {
            let mut re: Vec<u64> = (0..tail.len()).map(|_| tail[rng.gen_range(0..tail.len())]).collect();
            re.sort_unstable();
            mle_alpha(&re, xmin)
        })
        .collect();
    boots.sort_by(|a, b| a.total_cmp(b));
    let ci = if boots.is_empty() {
        (alpha, alpha)
    } else {
        let at = |p: f64| boots[((p * (boots.len() - 1) as f64).round() as usize).min(boots.len() - 1)];
        (at(0.025), at(0.975))
    };
    let vuong_z = vuong(tail, xmin, alpha);
    Ok(PowerLawFit { alpha, xmin, n_tail: tail.len(), ks, ci, vuong_z, poor_fit: vuong_z < -2.0 })
}

/// Exact draws from `P(X = x) = x^-alpha / zeta(alpha, xmin)`, `x >= xmin`, by inverting the tail function.
pub fn sample_powerlaw(alpha: f64, xmin: u64, n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z0 = hurwitz_zeta(alpha, xmin as f64);
    let tail = |x: u64| hurwitz_zeta(alpha, x as f64) / z0;
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.gen::<f64>();
            // X = x exactly when tail(x + 1) < u <= tail(x)
            let mut hi = xmin;
            while tail(hi + 1) >= u {
                hi = hi.saturating_mul(2).max(hi + 1);
                if hi > 1 << 52 {
                    break;
                }
            }
            let mut lo = xmin;
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if tail(mid + 1) < u {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert!((hurwitz_zeta(2.0, 1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((hurwitz_zeta(4.0, 1.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-13);
        // zeta(s, q) - zeta(s, q + 1) = q^-s
        assert!((hurwitz_zeta(1.5, 3.0) - hurwitz_zeta(1.5, 4.0) - 3f64.powf(-1.5)).abs() < 1e-13);
    }

    #[test]
    fn synthetic_power_law() {
        let xs = sample_powerlaw(1.5, 1, 20_000, 5);
        let f = powerlaw_fit(&xs, &PowerLawOptions::default()).unwrap();
        assert!((f.alpha - 1.5).abs() < 0.05, "{f:?}");
        assert!(f.ci.0 <= f.alpha && f.alpha <= f.ci.1);
        assert!(!f.poor_fit);
    }

    #[test]
    fn geometric_tail_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q: f64 = 0.95;
        let xs: Vec<u64> = (0..20_000).map(|_| 1 + ((1.0 - rng.gen::<f64>()).ln() / q.ln()).floor() as u64).collect();
        let f = powerlaw_fit(&xs, &PowerLawOptions::default()).unwrap();
        assert!(f.poor_fit, "{f:?}");
    }

    #[test]
    fn constant_data_is_rejected() {
        assert!(powerlaw_fit(&vec![4; 20_000], &PowerLawOptions::default()).is_err());
    }
}
