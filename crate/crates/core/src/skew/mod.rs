//! Slow driving, the return map `F_i(x) = f^tau(x + e_i)` and avalanche records.

mod degenerate;
mod perturb;

pub use degenerate::{detect_degenerate_params, det_polynomial, DegeneracyReport, PatternRoot};
pub use perturb::perturb_model;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZhangError};
use crate::lattice::{Lattice, ModelParams};
use crate::matrix::Matrix;
use crate::relaxation::{compute_bounds, set_matrix, EnergyVector, Kernel, Stamp};
use crate::scalar::Scalar;

/// Name recorded in manifests for the driving generator.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Where excitation sites come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExcitationSource {
    /// Independent uniform sites from a seeded generator; `stream` splits one seed into independent runs.
    Iid { seed: u64, stream: u64 },
    Sequence(Vec<usize>),
}

impl ExcitationSource {
    pub fn iid(seed: u64) -> Self {
        ExcitationSource::Iid { seed, stream: 0 }
    }

    pub fn driver(&self, n: usize) -> Driver {
        match self {
            ExcitationSource::Iid { seed, stream } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(*stream);
                Driver { n, inner: DriverInner::Iid(Box::new(rng)) }
            }
            ExcitationSource::Sequence(seq) => Driver { n, inner: DriverInner::Seq(seq.clone(), 0) },
        }
    }
}

/// Cursor over an excitation source.
#[derive(Clone, Debug)]
pub struct Driver {
    n: usize,
    inner: DriverInner,
}

#[derive(Clone, Debug)]
enum DriverInner {
    Iid(Box<ChaCha8Rng>),
    Seq(Vec<usize>, usize),
}

impl Driver {
    pub fn next_site(&mut self) -> Option<usize> {
        match &mut self.inner {
            DriverInner::Iid(rng) => Some(rng.gen_range(0..self.n)),
            DriverInner::Seq(seq, pos) => {
                let s = seq.get(*pos).copied();
                if s.is_some() {
                    *pos += 1;
                }
                s
            }
        }
    }

    /// Symbols left in an explicit sequence (`None` for iid driving).
    pub fn remaining(&self) -> Option<usize> {
        match &self.inner {
            DriverInner::Iid(_) => None,
            DriverInner::Seq(seq, pos) => Some(seq.len() - pos),
        }
    }
}

/// One return-map event.
#[derive(Clone, Debug, PartialEq)]
pub struct AvalancheRecord<S> {
    pub start_site: usize,
    pub duration: usize,
    pub size: usize,
    /// Return-map steps since the previous positive-size avalanche, this one included.
    pub waiting_time: u64,
    pub overcritical_sets: Vec<Vec<usize>>,
    /// Product `S(x(tau)) ... S(x(1))`, present when requested.
    pub linear_map: Option<Matrix<S>>,
    /// Float runs: some coordinate came within the grazing tolerance of `E_c`.
    pub grazing: bool,
}

impl<S> AvalancheRecord<S> {
    /// The sequence `(C_1, ..., C_tau)` identifying the continuity piece.
    pub fn domain_signature(&self) -> &[Vec<usize>] {
        &self.overcritical_sets
    }
}

/// What a return-map evaluation records beyond duration and size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecordOptions {
    pub sets: bool,
    pub matrix: bool,
}

impl RecordOptions {
    pub const SUMMARY: RecordOptions = RecordOptions { sets: false, matrix: false };
    pub const SETS: RecordOptions = RecordOptions { sets: true, matrix: false };
    pub const FULL: RecordOptions = RecordOptions { sets: true, matrix: true };
}

/// Reusable evaluator of the return map for one lattice and parameter set.
#[derive(Clone, Debug)]
pub struct ReturnMap<'a, S> {
    pub lattice: &'a Lattice,
    pub kernel: Kernel<S>,
    pub tau_bound: f64,
    pub grazing_tol: f64,
    stamp: Stamp,
}

impl<'a, S: Scalar> ReturnMap<'a, S> {
    pub fn new(params: &ModelParams, lattice: &'a Lattice) -> Self {
        ReturnMap {
            lattice,
            kernel: Kernel::new(params, lattice),
            tau_bound: compute_bounds(params, lattice).tau_m,
            grazing_tol: 1e-12,
            stamp: Stamp::new(lattice.n),
        }
    }

    /// Excites site `i` of the stable state `x` in place and relaxes it.
    pub fn apply(&mut self, x: &mut [S], i: usize, opts: RecordOptions) -> Result<AvalancheRecord<S>> {
        self.lattice.check_site(i)?;
        let k = &self.kernel;
        x[i] = x[i].clone() + k.delta.clone();
        let mut grazing = !S::EXACT && near(&x[i], &k.ec, self.grazing_tol);
        let mut record = AvalancheRecord {
            start_site: i,
            duration: 0,
            size: 0,
            waiting_time: 1,
            overcritical_sets: Vec::new(),
            linear_map: if opts.matrix { Some(Matrix::identity(self.lattice.n)) } else { None },
            grazing: false,
        };
        if x[i] <= k.ec {
            record.grazing = grazing;
            return Ok(record);
        }
        let mut excited = vec![i];
        while !excited.is_empty() {
            record.duration += 1;
            if record.duration as f64 > self.tau_bound {
                return Err(ZhangError::Internal(format!("avalanche longer than the bound {}", self.tau_bound)));
            }
            record.size += excited.len();
            if let Some(l) = record.linear_map.as_mut() {
                *l = set_matrix(&excited, k, self.lattice).matmul(l);
            }
            k.topple(x, &excited, self.lattice);
            if !S::EXACT {
                for &c in &excited {
                    grazing |= near(&x[c], &k.ec, self.grazing_tol);
                    for &j in &self.lattice.neighbors[c] {
                        grazing |= near(&x[j], &k.ec, self.grazing_tol);
                    }
                }
            }
            let next = k.next_excited(x, &excited, self.lattice, &mut self.stamp);
            let done = std::mem::replace(&mut excited, next);
            if opts.sets {
                record.overcritical_sets.push(done);
            }
        }
        record.grazing = grazing;
        Ok(record)
    }
}

fn near<S: Scalar>(v: &S, ec: &S, tol: f64) -> bool {
    (v.to_f64() - ec.to_f64()).abs() <= tol * ec.to_f64().abs().max(1.0)
}

/// `F_i(x)` together with the full avalanche record (sets and matrix).
pub fn return_map<S: Scalar>(
    x: &EnergyVector<S>,
    i: usize,
    params: &ModelParams,
    lattice: &Lattice,
) -> Result<(EnergyVector<S>, AvalancheRecord<S>)> {
    if x.values.len() != lattice.n {
        return Err(ZhangError::Domain("state length does not match lattice".into()));
    }
    x.check_nonnegative()?;
    let mut rm = ReturnMap::<S>::new(params, lattice);
    if !x.is_stable(&rm.kernel.ec) {
        return Err(ZhangError::Domain("return map needs a stable state".into()));
    }
    let mut y = x.values.clone();
    let rec = rm.apply(&mut y, i, RecordOptions::FULL)?;
    Ok((EnergyVector { values: y }, rec))
}

/// State of the physical model: energies plus the driving cursor.
#[derive(Clone, Debug)]
pub struct PhysicalState<S> {
    pub x: EnergyVector<S>,
    pub driver: Driver,
}

/// One step of the physical model: excite when stable, otherwise relax once.
pub fn step_physical<S: Scalar>(state: &mut PhysicalState<S>, params: &ModelParams, lattice: &Lattice) -> Result<()> {
    state.x.check_nonnegative()?;
    let k = Kernel::<S>::new(params, lattice);
    if state.x.is_stable(&k.ec) {
        let i = state.driver.next_site().ok_or(ZhangError::Exhausted)?;
        lattice.check_site(i)?;
        state.x.values[i] = state.x.values[i].clone() + k.delta.clone();
    } else {
        let excited = k.excited(&state.x.values);
        k.topple(&mut state.x.values, &excited, lattice);
    }
    Ok(())
}

/// Iterator over avalanche records of a driven orbit.
pub struct Orbit<'a, S> {
    map: ReturnMap<'a, S>,
    state: Vec<S>,
    driver: Driver,
    remaining: u64,
    since_last: u64,
    opts: RecordOptions,
    failed: bool,
}

impl<'a, S: Scalar> Orbit<'a, S> {
    pub fn state(&self) -> &[S] {
        &self.state
    }

    pub fn set_grazing_tolerance(&mut self, tol: f64) {
        self.map.grazing_tol = tol;
    }
}

impl<'a, S: Scalar> Iterator for Orbit<'a, S> {
    type Item = Result<AvalancheRecord<S>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 || self.failed {
            return None;
        }
        let i = self.driver.next_site()?;
        self.remaining -= 1;
        match self.map.apply(&mut self.state, i, self.opts) {
            Ok(mut rec) => {
                self.since_last += 1;
                rec.waiting_time = self.since_last;
                if rec.size > 0 {
                    self.since_last = 0;
                }
                Some(Ok(rec))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Drives the return map from a stable `x0` for `n_events` events.
pub fn run_orbit<'a, S: Scalar>(
    x0: &EnergyVector<S>,
    source: &ExcitationSource,
    params: &ModelParams,
    lattice: &'a Lattice,
    n_events: u64,
    opts: RecordOptions,
) -> Result<Orbit<'a, S>> {
    if x0.values.len() != lattice.n {
        return Err(ZhangError::Domain("state length does not match lattice".into()));
    }
    x0.check_nonnegative()?;
    let map = ReturnMap::<S>::new(params, lattice);
    if !x0.is_stable(&map.kernel.ec) {
        return Err(ZhangError::Domain("orbit must start from a stable state".into()));
    }
    Ok(Orbit {
        map,
        state: x0.values.clone(),
        driver: source.driver(lattice.n),
        remaining: n_events,
        since_last: 0,
        opts,
        failed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::scalar::{rat, rat_int, Rational};

    fn example_a() -> (ModelParams, Lattice) {
        (ModelParams::new(rat(7, 2), rat(1, 2)).unwrap(), build_lattice(1, 2).unwrap())
    }

    #[test]
    fn size_zero_piece_is_translation() {
        let (p, lat) = example_a();
        let x = EnergyVector::new(vec![rat(1, 1), rat(2, 1)]).unwrap();
        let (y, rec) = return_map(&x, 0, &p, &lat).unwrap();
        assert_eq!(y.values, vec![rat_int(2), rat_int(2)]);
        assert_eq!(rec.size, 0);
        assert!(rec.linear_map.unwrap().is_identity());
    }

    #[test]
    fn size_one_piece_matrix() {
        let (p, lat) = example_a();
        let x = EnergyVector::new(vec![rat(3, 1), rat(1, 1)]).unwrap();
        let (y, rec) = return_map(&x, 0, &p, &lat).unwrap();
        let l = rec.linear_map.unwrap();
        assert_eq!(l.to_rows(), vec![vec![rat(1, 2), rat_int(0)], vec![rat(1, 4), rat_int(1)]]);
        assert_eq!(l.mul_vec(&[rat_int(4), rat_int(1)]), y.values);
    }

    #[test]
    fn degenerate_kernel_case() {
        let p = ModelParams::new(rat(1, 3), rat(1, 3)).unwrap();
        let lat = build_lattice(1, 2).unwrap();
        let x = EnergyVector::new(vec![rat(1, 10), rat(1, 10)]).unwrap();
        let (_, rec) = return_map(&x, 0, &p, &lat).unwrap();
        let l = rec.linear_map.unwrap();
        let expect: Vec<Vec<Rational>> = vec![vec![rat(2, 9), rat(1, 3)], vec![rat(2, 9), rat(1, 3)]];
        assert_eq!(l.to_rows(), expect);
        assert_eq!(l.determinant(), rat_int(0));
    }

    #[test]
    fn physical_steps_compose_to_return_map() {
        let (p, lat) = example_a();
        let x = EnergyVector::new(vec![rat(13, 4), rat(3, 1)]).unwrap();
        let (y, rec) = return_map(&x, 0, &p, &lat).unwrap();
        let mut st = PhysicalState { x: x.clone(), driver: ExcitationSource::Sequence(vec![0]).driver(2) };
        step_physical(&mut st, &p, &lat).unwrap();
        let mut steps = 0;
        while !st.x.is_stable(&p.ec) {
            step_physical(&mut st, &p, &lat).unwrap();
            steps += 1;
        }
        assert_eq!(steps, rec.duration);
        assert_eq!(st.x, y);
        assert!(matches!(step_physical(&mut st, &p, &lat), Err(ZhangError::Exhausted)));
    }

    #[test]
    fn empty_sequence_gives_empty_stream() {
        let (p, lat) = example_a();
        let x0 = EnergyVector::<f64>::zeros(2);
        let orbit = run_orbit(&x0, &ExcitationSource::Sequence(vec![]), &p, &lat, 10, RecordOptions::SUMMARY).unwrap();
        assert_eq!(orbit.count(), 0);
    }

    #[test]
    fn waiting_times_reset_after_avalanches() {
        let (p, lat) = example_a();
        let x0 = EnergyVector::<f64>::zeros(2);
        let recs: Vec<_> = run_orbit(&x0, &ExcitationSource::iid(5), &p, &lat, 500, RecordOptions::SUMMARY)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        let mut expect = 0;
        for r in &recs {
            expect += 1;
            assert_eq!(r.waiting_time, expect);
            assert!(r.waiting_time >= 1);
            if r.size > 0 {
                expect = 0;
            }
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<_> = (0..50).map({
            let mut d = ExcitationSource::Iid { seed: 9, stream: 3 }.driver(7);
            move |_| d.next_site().unwrap()
        }).collect();
        let b: Vec<_> = (0..50).map({
            let mut d = ExcitationSource::Iid { seed: 9, stream: 3 }.driver(7);
            move |_| d.next_site().unwrap()
        }).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|s| *s < 7));
    }
}
