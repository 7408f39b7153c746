//! Number of events after which every admissible product `L ... L` is a `c`-contraction in the 1-norm.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cylinder::{norm1_below, Cylinder};
use crate::error::{Result, ZhangError};
use crate::geometry::ContinuityAtlas;
use crate::lattice::{Lattice, ModelParams};
use crate::relaxation::EnergyVector;
use crate::scalar::{rational_to_f64, Rational};
use crate::skew::{run_orbit, ExcitationSource, RecordOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum HorizonMethod {
    /// Windows of a driven orbit, `samples` start positions after a burn-in.
    Sampled { samples: usize, seed: u64, max_t: usize },
    /// Every admissible word, as exact cylinders of the atlas.
    Exhaustive { max_t: usize, word_budget: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HorizonReport {
    pub c: f64,
    /// Least `T` found, if any.
    pub horizon: Option<usize>,
    /// `T` is at least this when no horizon was found.
    pub lower_bound: usize,
    /// Largest 1-norm seen among products of each length `1..`.
    pub max_norm: Vec<f64>,
    pub checked: u64,
    pub budget_exceeded: bool,
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Least `T` with `||L_T ... L_1||_1 < c` for all admissible words of length `T`.
///
/// Products only shrink in the 1-norm (column sums of each `L` are at most 1), so once a
/// word is below `c` all its extensions are too.
pub fn contraction_horizon(
    params: &ModelParams,
    lattice: &Lattice,
    c: &Rational,
    method: &HorizonMethod,
    atlas: Option<&ContinuityAtlas>,
) -> Result<HorizonReport> {
    let cf = rational_to_f64(c);
    if !(*c > Rational::from_integer(0.into()) && *c < Rational::from_integer(1.into())) {
        return Err(ZhangError::Domain(format!("contraction level must lie in (0, 1), got {c}")));
    }
    match method {
        HorizonMethod::Sampled { samples, seed, max_t } => {
            let n = lattice.n;
            let opts = RecordOptions { sets: false, matrix: true };
            let x0 = EnergyVector::<f64>::zeros(n);
            let burn = 1000;
            let total = burn + *samples as u64 + *max_t as u64;
            let mut mats = Vec::with_capacity(total as usize);
            for (k, rec) in run_orbit(&x0, &ExcitationSource::iid(*seed), params, lattice, total, opts)?.enumerate() {
                let rec = rec?;
                if (k as u64) < burn {
                    continue;
                }
                mats.push(rec.linear_map.map(|l| l.to_nalgebra()).unwrap_or_else(|| DMatrix::identity(n, n)));
            }
            let mut max_norm = vec![0.0f64; *max_t];
            let mut longest = 0;
            let mut checked = 0;
            for s in 0..*samples {
                let mut p = DMatrix::<f64>::identity(n, n);
                for t in 0..*max_t {
                    p = &mats[s + t] * p;
                    checked += 1;
                    let v = norm1(&p);
                    max_norm[t] = max_norm[t].max(v);
                    if v < cf {
                        break;
                    }
                    longest = longest.max(t + 1);
                }
            }
            // entries past a window's exit stay below c
            let horizon = (longest < *max_t).then_some(longest + 1);
            max_norm.truncate(horizon.unwrap_or(*max_t));
            Ok(HorizonReport { c: cf, horizon, lower_bound: longest + 1, max_norm, checked, budget_exceeded: horizon.is_none() })
        }
        HorizonMethod::Exhaustive { max_t, word_budget } => {
            let atlas = atlas.ok_or_else(|| ZhangError::Domain("exhaustive horizon needs an atlas".into()))?;
            let mut live = vec![Cylinder::root(atlas)];
            let mut max_norm = Vec::new();
            let mut checked = 0u64;
            for t in 1..=*max_t {
                let mut next = Vec::new();
                let mut worst = 0.0f64;
                for cyl in &live {
                    for i in 0..atlas.n {
                        for ch in cyl.children(atlas, i) {
                            checked += 1;
                            worst = worst.max(rational_to_f64(&ch.linear.norm1()));
                            if !norm1_below(&ch.linear, c) {
                                next.push(ch);
                            }
                        }
                    }
                    if checked as usize > *word_budget {
                        return Ok(HorizonReport { c: cf, horizon: None, lower_bound: t, max_norm, checked, budget_exceeded: true });
                    }
                }
                max_norm.push(worst);
                if next.is_empty() {
                    return Ok(HorizonReport { c: cf, horizon: Some(t), lower_bound: t, max_norm, checked, budget_exceeded: false });
                }
                live = next;
            }
            Ok(HorizonReport { c: cf, horizon: None, lower_bound: *max_t + 1, max_norm, checked, budget_exceeded: true })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_atlas;
    use crate::lattice::build_lattice;
    use crate::scalar::rat;

    #[test]
    fn example_a_is_finite_both_ways() {
        let p = ModelParams::new(rat(7, 2), rat(1, 2)).unwrap();
        let lat = build_lattice(1, 2).unwrap();
        let atlas = build_atlas(&p, &lat, 64, 10_000).unwrap();
        let c = Rational::from_integer(1.into()) - rat(1, 1_000_000_000);
        let ex = contraction_horizon(&p, &lat, &c, &HorizonMethod::Exhaustive { max_t: 40, word_budget: 200_000 }, Some(&atlas)).unwrap();
        let t = ex.horizon.expect("finite horizon");
        let sm = contraction_horizon(&p, &lat, &c, &HorizonMethod::Sampled { samples: 2000, seed: 4, max_t: 60 }, None).unwrap();
        // sampled words are a subset of the admissible ones
        assert!(sm.horizon.unwrap() <= t);
        assert!(ex.max_norm.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn level_one_is_rejected() {
        let p = ModelParams::new(rat(7, 2), rat(1, 2)).unwrap();
        let lat = build_lattice(1, 2).unwrap();
        let m = HorizonMethod::Sampled { samples: 10, seed: 1, max_t: 10 };
        assert!(contraction_horizon(&p, &lat, &rat(1, 1), &m, None).is_err());
        assert!(contraction_horizon(&p, &lat, &rat(3, 2), &m, None).is_err());
    }
}
