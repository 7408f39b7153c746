//! Point clouds on the spatial attractor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZhangError};
use crate::geometry::{build_atlas, iterate_regions};
use crate::lattice::{Lattice, ModelParams};
use crate::relaxation::EnergyVector;
use crate::scalar::rational_to_f64;
use crate::skew::{run_orbit, ExcitationSource, RecordOptions, ReturnMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// One driven orbit from a random start: the support of the physical measure.
    Orbit,
    /// Independent uniform starts, each pushed through its own random word: images of all of `M`.
    Ifs,
    /// Exact regions `U_n` as vertex loops (`N = 2`).
    Exact,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttractorSample {
    pub mode: SampleMode,
    pub points: Vec<Vec<f64>>,
    /// Closed vertex loops of the exact regions (exact mode only).
    pub loops: Vec<Vec<Vec<f64>>>,
}

/// Samples `n_points` states after `n_transient` events.
///
/// In exact mode `n_transient` is the level `n` of `U_n` and `n_points` is ignored.
pub fn attractor_sample(
    params: &ModelParams,
    lattice: &Lattice,
    mode: SampleMode,
    n_transient: u64,
    n_points: usize,
    seed: u64,
) -> Result<AttractorSample> {
    let n = lattice.n;
    let ec = params.ec_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        SampleMode::Orbit => {
            let x0 = EnergyVector::new((0..n).map(|_| rng.gen::<f64>() * ec).collect())?;
            let src = ExcitationSource::Iid { seed, stream: 1 };
            let mut orbit = run_orbit(&x0, &src, params, lattice, n_transient + n_points as u64, RecordOptions::SUMMARY)?;
            let mut points = Vec::with_capacity(n_points);
            let mut k = 0u64;
            while let Some(rec) = orbit.next() {
                rec?;
                k += 1;
                if k > n_transient {
                    points.push(orbit.state().to_vec());
                }
            }
            Ok(AttractorSample { mode, points, loops: Vec::new() })
        }
        SampleMode::Ifs => {
            let mut map = ReturnMap::<f64>::new(params, lattice);
            let mut points = Vec::with_capacity(n_points);
            for _ in 0..n_points {
                let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * ec).collect();
                for _ in 0..n_transient {
                    let i = rng.gen_range(0..n);
                    map.apply(&mut x, i, RecordOptions::SUMMARY)?;
                }
                points.push(x);
            }
            Ok(AttractorSample { mode, points, loops: Vec::new() })
        }
        SampleMode::Exact => {
            if n != 2 {
                return Err(ZhangError::Domain("exact attractor sampling needs N = 2".into()));
            }
            let atlas = build_atlas(params, lattice, 256, 20_000)?;
            let set = iterate_regions(&atlas, n_transient as usize, 50_000)?;
            let loops = set
                .regions
                .iter()
                .map(|r| r.region.vertex_loop().iter().map(|v| v.iter().map(rational_to_f64).collect()).collect())
                .collect();
            Ok(AttractorSample { mode, points: Vec::new(), loops })
        }
    }
}

/// Axis-aligned bounding box of a cloud, `(lo, hi)` per coordinate.
pub fn bounding_box(points: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let mut bb: Vec<(f64, f64)> = first.iter().map(|&v| (v, v)).collect();
    for p in points {
        for (b, &v) in bb.iter_mut().zip(p) {
            b.0 = b.0.min(v);
            b.1 = b.1.max(v);
        }
    }
    bb
}

/// Number of cells of a fixed grid of side `delta` anchored at the origin that hold a point.
pub fn occupied_cells(points: &[Vec<f64>], delta: f64) -> usize {
    let mut cells: Vec<Vec<i64>> = points.iter().map(|p| p.iter().map(|v| (v / delta).floor() as i64).collect()).collect();
    cells.sort_unstable();
    cells.dedup();
    cells.len()
}
