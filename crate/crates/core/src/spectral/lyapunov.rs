//! Exponents of the avalanche-matrix cocycle along a driven orbit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZhangError};
use crate::lattice::{Lattice, ModelParams};
use crate::relaxation::EnergyVector;
use crate::skew::{run_orbit, ExcitationSource, RecordOptions};

/// Orbit settings for [`lyapunov_spectrum`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConfig {
    pub n_events: u64,
    /// Events discarded before accumulation starts.
    pub burn_in: u64,
    /// Re-orthonormalization period `k`.
    pub reortho: usize,
    /// Number of contiguous batches for the batch-means errors.
    pub batches: usize,
    pub seed: u64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig { n_events: 1_000_000, burn_in: 10_000, reortho: 5, batches: 20, seed: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovResult {
    /// `log N`, from the base shift.
    pub chi_plus: f64,
    /// Fiber exponents in decreasing order, per return-map event. `-inf` marks a singular direction.
    pub chi_minus: Vec<f64>,
    /// Batch-means standard errors, same order as `chi_minus`.
    pub chi_minus_se: Vec<f64>,
    pub sum_chi: f64,
    pub sum_chi_se: f64,
    /// Mean avalanche size over all events, size-0 ones included.
    pub mean_size: f64,
    pub mean_size_se: f64,
    /// `sum_chi - mean_size * log eps`.
    pub sum_check: f64,
    /// Both standard errors combined in quadrature.
    pub combined_se: f64,
    /// Re-orthonormalization period actually used.
    pub reortho: usize,
    pub n_steps: u64,
    pub seed: u64,
    pub degenerate: bool,
}

const UNDERFLOW: f64 = 1e-250;

fn batch_stats(values: &[f64]) -> (f64, f64) {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    if values.len() < 2 || mean.is_infinite() {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// QR step on `block * q`; returns the new `q` and `log |R_ii|`, or `None` when a column underflows.
fn reorthonormalize(block: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<(DMatrix<f64>, Vec<f64>)> {
    let m = block * q;
    let n = m.nrows();
    let qr = m.qr();
    let r = qr.r();
    let mut logs = Vec::with_capacity(n);
    for i in 0..n {
        let v = r[(i, i)].abs();
        if v > 0.0 && v < UNDERFLOW {
            return None;
        }
        logs.push(v.ln());
    }
    Some((qr.q(), logs))
}

/// Exponents by orthonormalized products of the matrices `L` of successive avalanches.
pub fn lyapunov_spectrum(cfg: &LyapunovConfig, params: &ModelParams, lattice: &Lattice) -> Result<LyapunovResult> {
    if cfg.reortho == 0 || cfg.batches == 0 {
        return Err(ZhangError::Domain("reortho and batches must be positive".into()));
    }
    let n = lattice.n;
    let eps = params.eps_f64();
    let opts = RecordOptions { sets: false, matrix: true };
    let x0 = EnergyVector::<f64>::zeros(n);
    let total = cfg.burn_in + cfg.n_events;
    let mut orbit = run_orbit(&x0, &ExcitationSource::iid(cfg.seed), params, lattice, total, opts)?;
    for _ in 0..cfg.burn_in {
        orbit.next().transpose()?;
    }

    let batches = cfg.batches.min(cfg.n_events.max(1) as usize);
    let per_batch = cfg.n_events / batches as u64;
    let mut k = cfg.reortho;
    let mut q = DMatrix::<f64>::identity(n, n);
    let mut batch_chi: Vec<Vec<f64>> = Vec::new();
    let mut batch_size: Vec<f64> = Vec::new();
    let mut logs = vec![0.0; n];
    let mut pending: Vec<DMatrix<f64>> = Vec::new();
    let mut size_sum = 0u64;
    let mut in_batch = 0u64;
    let mut done = 0u64;
    let mut degenerate = false;

    let flush = |pending: &mut Vec<DMatrix<f64>>, q: &mut DMatrix<f64>, logs: &mut Vec<f64>, k: &mut usize| {
        if pending.is_empty() {
            return;
        }
        let mut start = 0;
        while start < pending.len() {
            let end = (start + *k).min(pending.len());
            let mut block = DMatrix::<f64>::identity(n, n);
            for m in &pending[start..end] {
                block = m * block;
            }
            match reorthonormalize(&block, q) {
                Some((q2, l)) => {
                    *q = q2;
                    for (a, b) in logs.iter_mut().zip(l) {
                        *a += b;
                    }
                    start = end;
                }
                None if *k > 1 => *k = (*k / 2).max(1),
                None => {
                    // a single matrix underflows: accept the tiny diagonal as is
                    let m = &pending[start] * &*q;
                    let qr = m.qr();
                    let r = qr.r();
                    for i in 0..n {
                        logs[i] += r[(i, i)].abs().ln();
                    }
                    *q = qr.q();
                    start += 1;
                }
            }
        }
        pending.clear();
    };

    while done < per_batch * batches as u64 {
        let rec = match orbit.next() {
            Some(r) => r?,
            None => break,
        };
        done += 1;
        in_batch += 1;
        size_sum += rec.size as u64;
        if rec.size > 0 {
            let l = rec.linear_map.expect("matrix recorded");
            let m = l.to_nalgebra();
            if m.determinant() == 0.0 {
                degenerate = true;
            }
            pending.push(m);
            if pending.len() >= k {
                flush(&mut pending, &mut q, &mut logs, &mut k);
            }
        }
        if in_batch == per_batch {
            flush(&mut pending, &mut q, &mut logs, &mut k);
            batch_chi.push(logs.iter().map(|v| v / per_batch as f64).collect());
            batch_size.push(size_sum as f64 / per_batch as f64);
            logs.iter_mut().for_each(|v| *v = 0.0);
            size_sum = 0;
            in_batch = 0;
        }
    }

    let nb = batch_chi.len();
    if nb == 0 {
        return Ok(LyapunovResult {
            chi_plus: (n as f64).ln(),
            chi_minus: vec![0.0; n],
            chi_minus_se: vec![0.0; n],
            sum_chi: 0.0,
            sum_chi_se: 0.0,
            mean_size: 0.0,
            mean_size_se: 0.0,
            sum_check: 0.0,
            combined_se: 0.0,
            reortho: k,
            n_steps: done,
            seed: cfg.seed,
            degenerate,
        });
    }
    let mut chi = Vec::with_capacity(n);
    let mut se = Vec::with_capacity(n);
    for i in 0..n {
        let col: Vec<f64> = batch_chi.iter().map(|b| b[i]).collect();
        let (m, s) = batch_stats(&col);
        chi.push(m);
        se.push(s);
    }
    // QR diagonal order is asymptotically decreasing; sort to be safe
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| chi[b].total_cmp(&chi[a]));
    let chi_minus: Vec<f64> = order.iter().map(|&i| chi[i]).collect();
    let chi_minus_se: Vec<f64> = order.iter().map(|&i| se[i]).collect();
    let sums: Vec<f64> = batch_chi.iter().map(|b| b.iter().sum()).collect();
    let (sum_chi, sum_chi_se) = batch_stats(&sums);
    let (mean_size, mean_size_se) = batch_stats(&batch_size);
    let log_eps = eps.ln();
    let sum_check = sum_chi - mean_size * log_eps;
    let combined_se = (sum_chi_se.powi(2) + (mean_size_se * log_eps).powi(2)).sqrt();
    Ok(LyapunovResult {
        chi_plus: (n as f64).ln(),
        chi_minus,
        chi_minus_se,
        sum_chi,
        sum_chi_se,
        mean_size,
        mean_size_se,
        sum_check,
        combined_se,
        reortho: k,
        n_steps: done,
        seed: cfg.seed,
        degenerate,
    })
}
