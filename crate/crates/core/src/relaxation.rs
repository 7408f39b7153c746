//! The one-step relaxation map, its matrix form and the a-priori bounds.

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZhangError};
use crate::lattice::{Lattice, ModelParams};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Energy per lattice site.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyVector<S> {
    pub values: Vec<S>,
}

impl<S: Scalar> EnergyVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        let v = EnergyVector { values };
        v.check_nonnegative()?;
        Ok(v)
    }

    pub fn zeros(n: usize) -> Self {
        EnergyVector { values: vec![S::zero(); n] }
    }

    pub fn filled(n: usize, value: S) -> Self {
        EnergyVector { values: vec![value; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_nonnegative(&self) -> Result<()> {
        for (site, v) in self.values.iter().enumerate() {
            if v.is_negative() {
                return Err(ZhangError::NegativeEnergy { site, value: v.to_f64() });
            }
        }
        Ok(())
    }

    /// Stable means every site is at most `E_c` (a site exactly at `E_c` is relaxed).
    pub fn is_stable(&self, ec: &S) -> bool {
        self.values.iter().all(|v| v <= ec)
    }

    pub fn norm1(&self) -> S {
        self.values.iter().fold(S::zero(), |acc, v| acc + v.abs())
    }

    pub fn max(&self) -> S {
        self.values.iter().fold(S::zero(), |m, v| if *v > m { v.clone() } else { m })
    }

    pub fn to_f64(&self) -> EnergyVector<f64> {
        EnergyVector { values: self.values.iter().map(|v| v.to_f64()).collect() }
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> EnergyVector<T> {
        EnergyVector { values: self.values.iter().map(f).collect() }
    }
}

/// Precomputed constants of the relaxation rule in a given scalar type.
#[derive(Clone, Debug)]
pub struct Kernel<S> {
    pub ec: S,
    pub eps: S,
    /// `1 - eps`
    pub loss: S,
    /// `(1 - eps) / (2d)`
    pub share: S,
    pub delta: S,
}

impl<S: Scalar> Kernel<S> {
    pub fn new(params: &ModelParams, lattice: &Lattice) -> Self {
        let ec = params.ec_as::<S>();
        let eps = params.eps_as::<S>();
        let loss = S::one() - eps.clone();
        let share = loss.clone() / S::from_int(2 * lattice.d as i64);
        Kernel { ec, eps, loss, share, delta: params.delta_as::<S>() }
    }

    /// Sites with energy strictly above `E_c`, in increasing order.
    pub fn excited(&self, x: &[S]) -> Vec<usize> {
        x.iter().enumerate().filter(|(_, v)| **v > self.ec).map(|(i, _)| i).collect()
    }

    /// Parallel toppling of the given excited sites.
    pub fn topple(&self, x: &mut [S], excited: &[usize], lattice: &Lattice) {
        let old: Vec<S> = excited.iter().map(|&k| x[k].clone()).collect();
        for (&k, v) in excited.iter().zip(&old) {
            x[k] = x[k].clone() - self.loss.clone() * v.clone();
        }
        for (&k, v) in excited.iter().zip(&old) {
            let give = self.share.clone() * v.clone();
            for &j in &lattice.neighbors[k] {
                x[j] = x[j].clone() + give.clone();
            }
        }
    }

    /// Excited sites after a toppling of `prev`; only `prev` and its neighbors can change.
    pub fn next_excited(&self, x: &[S], prev: &[usize], lattice: &Lattice, stamp: &mut Stamp) -> Vec<usize> {
        stamp.advance();
        let mut out = Vec::new();
        for &k in prev {
            if stamp.mark(k) && x[k] > self.ec {
                out.push(k);
            }
            for &j in &lattice.neighbors[k] {
                if stamp.mark(j) && x[j] > self.ec {
                    out.push(j);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Generation-stamped visit marks for frontier deduplication.
#[derive(Clone, Debug)]
pub struct Stamp {
    marks: Vec<u32>,
    generation: u32,
}

impl Stamp {
    pub fn new(n: usize) -> Self {
        Stamp { marks: vec![0; n], generation: 0 }
    }

    fn advance(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.generation = 1;
        }
    }

    /// Marks a site; returns true the first time in this generation.
    fn mark(&mut self, i: usize) -> bool {
        if self.marks[i] == self.generation {
            false
        } else {
            self.marks[i] = self.generation;
            true
        }
    }
}

/// One application of the relaxation map `f`.
pub fn relax_step<S: Scalar>(x: &EnergyVector<S>, params: &ModelParams, lattice: &Lattice) -> Result<EnergyVector<S>> {
    check_len(x, lattice)?;
    x.check_nonnegative()?;
    let k = Kernel::<S>::new(params, lattice);
    let excited = k.excited(&x.values);
    let mut out = x.clone();
    k.topple(&mut out.values, &excited, lattice);
    Ok(out)
}

/// The matrix `S(x) = J(x) + (1 - eps) Q(x)` with `f(x) = S(x) x`.
pub fn topple_matrix<S: Scalar>(x: &EnergyVector<S>, params: &ModelParams, lattice: &Lattice) -> Matrix<S> {
    let k = Kernel::<S>::new(params, lattice);
    let excited = k.excited(&x.values);
    set_matrix(&excited, &k, lattice)
}

/// `S` for a given overcritical set.
pub fn set_matrix<S: Scalar>(excited: &[usize], k: &Kernel<S>, lattice: &Lattice) -> Matrix<S> {
    let mut m = Matrix::identity(lattice.n);
    for &c in excited {
        m.set(c, c, k.eps.clone());
        for &j in &lattice.neighbors[c] {
            m.set(j, c, k.share.clone());
        }
    }
    m
}

/// Iterates `f` until the configuration is stable. Returns the stable state and the overcritical sets.
pub fn relax_to_stable<S: Scalar>(
    x: &EnergyVector<S>,
    params: &ModelParams,
    lattice: &Lattice,
) -> Result<(EnergyVector<S>, Vec<Vec<usize>>)> {
    check_len(x, lattice)?;
    x.check_nonnegative()?;
    let k = Kernel::<S>::new(params, lattice);
    let bound = compute_bounds(params, lattice).m_max(x.norm1().to_f64());
    let mut y = x.clone();
    let mut trace = Vec::new();
    let mut stamp = Stamp::new(lattice.n);
    let mut excited = k.excited(&y.values);
    while !excited.is_empty() {
        if (trace.len() + 1) as f64 > bound {
            return Err(ZhangError::Internal(format!("relaxation exceeded the step bound {bound}")));
        }
        k.topple(&mut y.values, &excited, lattice);
        let next = k.next_excited(&y.values, &excited, lattice, &mut stamp);
        trace.push(std::mem::replace(&mut excited, next));
    }
    Ok((y, trace))
}

fn check_len<S>(x: &EnergyVector<S>, lattice: &Lattice) -> Result<()> {
    if x.values.len() != lattice.n {
        return Err(ZhangError::Domain(format!("vector has {} entries, lattice has {} sites", x.values.len(), lattice.n)));
    }
    Ok(())
}

/// A-priori bounds on relaxation and avalanche times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    /// Coefficient `c` with `m(x) <= c * ||x||_1`.
    pub m_max_per_norm: f64,
    pub n_exc: f64,
    pub tau_m: f64,
    pub c0: f64,
    /// `ceil(2d/(1-eps)) + 1`
    pub gamma: f64,
}

impl BoundSet {
    /// Bound on the number of relaxation steps for a vector of the given 1-norm.
    pub fn m_max(&self, norm1: f64) -> f64 {
        self.m_max_per_norm * norm1
    }
}

pub fn compute_bounds(params: &ModelParams, lattice: &Lattice) -> BoundSet {
    let d = lattice.d as f64;
    let n = lattice.n as f64;
    let diam = lattice.diam as f64;
    let ec = params.ec_f64();
    let ratio_exact = crate::scalar::rat_int(2 * lattice.d as i64) / (num_rational::BigRational::one() - params.eps.clone());
    let ratio = crate::scalar::rational_to_f64(&ratio_exact);
    let base = ratio + 1.0;
    let gamma = crate::scalar::rational_ceil_i64(&ratio_exact) as f64 + 1.0;
    let m_max_per_norm = (2.0 * d * n / (1.0 - params.eps_f64())) / ec * base.powf(diam / 2.0);
    let n_exc = n * (n * ec + 2.0) * gamma.powf(diam);
    let tau_m = n * n * (1.0 + 1.0 / (n * ec)) * base.powf(diam / 2.0 + 1.0);
    let c0 = 3.0 * n * n * base.powf(diam + 1.0);
    BoundSet { m_max_per_norm, n_exc, tau_m, c0, gamma }
}
