//! Lattice geometry and model parameters.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZhangError};
use crate::scalar::{format_rational, parse_rational, rational_to_f64, Rational, Scalar};

/// The cube `[1, L]^d` with Manhattan adjacency. Sites are numbered row-major from 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub d: usize,
    pub l: usize,
    pub n: usize,
    pub neighbors: Vec<Vec<usize>>,
    pub boundary: Vec<bool>,
    pub diam: usize,
}

pub fn build_lattice(d: usize, l: usize) -> Result<Lattice> {
    if d == 0 || l == 0 {
        return Err(ZhangError::Domain(format!("need d >= 1 and L >= 1, got d={d}, L={l}")));
    }
    let mut n: usize = 1;
    for _ in 0..d {
        n = n.checked_mul(l).ok_or_else(|| ZhangError::Size(format!("{l}^{d} overflows")))?;
    }
    let diam = d.checked_mul(l - 1).ok_or_else(|| ZhangError::Size("diameter overflows".into()))?;
    let mut neighbors = Vec::with_capacity(n);
    let mut boundary = Vec::with_capacity(n);
    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * l;
    }
    for i in 0..n {
        let mut nb = Vec::with_capacity(2 * d);
        for k in 0..d {
            let c = (i / strides[k]) % l;
            if c > 0 {
                nb.push(i - strides[k]);
            }
            if c + 1 < l {
                nb.push(i + strides[k]);
            }
        }
        nb.sort_unstable();
        boundary.push(nb.len() < 2 * d);
        neighbors.push(nb);
    }
    Ok(Lattice { d, l, n, neighbors, boundary, diam })
}

impl Lattice {
    /// Zero-based multi-index of a site (first coordinate most significant).
    pub fn coords(&self, i: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        let mut r = i;
        for k in (0..self.d).rev() {
            out[k] = r % self.l;
            r /= self.l;
        }
        out
    }

    pub fn index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.d || coords.iter().any(|&c| c >= self.l) {
            return Err(ZhangError::Domain(format!("coordinates {coords:?} outside lattice")));
        }
        Ok(coords.iter().fold(0, |acc, &c| acc * self.l + c))
    }

    pub fn check_site(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(ZhangError::InvalidSite(i, self.n))
        } else {
            Ok(())
        }
    }

    pub fn manhattan_distance(&self, i: usize, j: usize) -> Result<usize> {
        self.check_site(i)?;
        self.check_site(j)?;
        Ok(self.coords(i).iter().zip(self.coords(j)).map(|(a, b)| a.abs_diff(b)).sum())
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|b| **b).count()
    }

    /// Site closest to the geometric center.
    pub fn center_site(&self) -> usize {
        let c = vec![self.l / 2; self.d];
        self.index(&c).expect("center inside lattice")
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }
}

/// Critical energy, dissipation and excitation quantum, stored exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(with = "rational_string")]
    pub ec: Rational,
    #[serde(with = "rational_string")]
    pub eps: Rational,
    #[serde(with = "rational_string")]
    pub delta: Rational,
}

impl ModelParams {
    pub fn new(ec: Rational, eps: Rational) -> Result<Self> {
        Self::with_delta(ec, eps, Rational::one())
    }

    pub fn with_delta(ec: Rational, eps: Rational, delta: Rational) -> Result<Self> {
        if ec <= Rational::zero() {
            return Err(ZhangError::Domain(format!("E_c must be positive, got {}", format_rational(&ec))));
        }
        if eps < Rational::zero() || eps >= Rational::one() {
            return Err(ZhangError::Domain(format!("eps must lie in [0,1), got {}", format_rational(&eps))));
        }
        if delta <= Rational::zero() {
            return Err(ZhangError::Domain("delta must be positive".into()));
        }
        Ok(ModelParams { ec, eps, delta })
    }

    /// Parses `E_c` and `eps` from rational strings such as `"7/2"` or `"0.05"`.
    pub fn parse(ec: &str, eps: &str) -> Result<Self> {
        Self::new(parse_rational(ec)?, parse_rational(eps)?)
    }

    pub fn ec_f64(&self) -> f64 {
        rational_to_f64(&self.ec)
    }

    pub fn eps_f64(&self) -> f64 {
        rational_to_f64(&self.eps)
    }

    pub fn delta_f64(&self) -> f64 {
        rational_to_f64(&self.delta)
    }

    pub fn ec_as<S: Scalar>(&self) -> S {
        S::from_rational(&self.ec)
    }

    pub fn eps_as<S: Scalar>(&self) -> S {
        S::from_rational(&self.eps)
    }

    pub fn delta_as<S: Scalar>(&self) -> S {
        S::from_rational(&self.delta)
    }

    /// Threshold `eps/(1-eps)` above which overcritical sites are never adjacent.
    pub fn adjacency_threshold(&self) -> Rational {
        self.eps.clone() / (Rational::one() - self.eps.clone())
    }
}

/// Qualitative flags of a parameter point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamRegion {
    pub no_adjacent_overcritical: bool,
    pub invertibility_guaranteed: bool,
    /// `E_c > (1+eps)/(1-eps)`; only meaningful for two sites.
    pub top_domain_n2: bool,
}

pub fn classify_params(params: &ModelParams, _lattice: &Lattice) -> ParamRegion {
    let one = Rational::one();
    let half = Rational::new(1.into(), 2.into());
    let no_adj = params.ec >= params.adjacency_threshold();
    let inv = params.eps >= half || (params.eps > Rational::zero() && no_adj);
    let top = params.ec > (one.clone() + params.eps.clone()) / (one - params.eps.clone());
    ParamRegion { no_adjacent_overcritical: no_adj, invertibility_guaranteed: inv, top_domain_n2: top }
}

pub(crate) mod rational_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::scalar::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod rational_matrix_string {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::matrix::Matrix;
    use crate::scalar::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(m: &Matrix<Rational>, s: S) -> Result<S::Ok, S::Error> {
        m.to_rows().iter().map(|r| r.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix<Rational>, D::Error> {
        let v = Vec::<Vec<String>>::deserialize(d)?;
        let rows = v
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_rows(rows))
    }
}

pub(crate) mod rational_vec_string {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(format_rational).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect()
    }
}
