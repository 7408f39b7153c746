//! Driven-run statistics over a grid of side lengths or thresholds, with log-log fits.

use serde::{Deserialize, Serialize};

use super::avalanche::{run_statistics, StatsSummary};
use crate::error::{Result, ZhangError};
use crate::lattice::{build_lattice, ModelParams};
use crate::scalar::{rational_ceil_i64, rational_to_f64, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least squares of `log y` on `log x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(ZhangError::Domain("log-log fit needs at least two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(ZhangError::Domain("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ZhangError::Domain("log-log fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if lx.len() > 2 {
        let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LogLogFit { slope, slope_se, intercept, points: lx.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepAxis {
    L { grid: Vec<usize> },
    Ec {
        #[serde(with = "crate::lattice::rational_vec_string")]
        grid: Vec<Rational>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTemplate {
    pub d: usize,
    pub l: usize,
    #[serde(with = "crate::lattice::rational_string")]
    pub ec: Rational,
    #[serde(with = "crate::lattice::rational_string")]
    pub eps: Rational,
    pub events: u64,
    /// Events discarded per cell; raised to `5 N ceil(E_c)` so the energy can build up.
    pub burn_in: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCell {
    pub x: f64,
    pub l: usize,
    pub ec: f64,
    pub stats: StatsSummary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub tau_fit: Option<LogLogFit>,
    pub omega_fit: Option<LogLogFit>,
    pub s0_fit: Option<LogLogFit>,
    pub splus_fit: Option<LogLogFit>,
    pub tau_max_fit: Option<LogLogFit>,
    pub s_max_fit: Option<LogLogFit>,
    /// `tau ~ L^g_tau` (side-length sweeps only).
    pub gamma_tau: Option<f64>,
    /// `s+ ~ L^(d + g_s)` (side-length sweeps only).
    pub gamma_s: Option<f64>,
    pub flags: Vec<String>,
}

fn fit_of(cells: &[SweepCell], f: impl Fn(&StatsSummary) -> Option<f64>) -> Option<LogLogFit> {
    let pts: Vec<(f64, f64)> = cells.iter().filter_map(|c| f(&c.stats).filter(|v| *v > 0.0).map(|v| (c.x, v))).collect();
    if pts.len() < cells.len() {
        return None;
    }
    loglog_fit(&pts.iter().map(|p| p.0).collect::<Vec<_>>(), &pts.iter().map(|p| p.1).collect::<Vec<_>>()).ok()
}

/// Runs one driven orbit per grid point and fits every observable against the axis.
pub fn scaling_sweep(axis: &SweepAxis, template: &SweepTemplate) -> Result<SweepResult> {
    scaling_sweep_threads(axis, template, 1)
}

/// [`scaling_sweep`] with the cells spread over `threads` workers. Cell `k` always uses seed
/// `seed + k`, so the result does not depend on `threads`.
pub fn scaling_sweep_threads(axis: &SweepAxis, template: &SweepTemplate, threads: usize) -> Result<SweepResult> {
    let xs: Vec<f64> = match axis {
        SweepAxis::L { grid: v } => v.iter().map(|&l| l as f64).collect(),
        SweepAxis::Ec { grid: v } => v.iter().map(rational_to_f64).collect(),
    };
    let (lo, hi) = xs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    if xs.len() < 4 || lo <= 0.0 || hi / lo < 10.0 - 1e-9 {
        return Err(ZhangError::Domain("sweep grid needs at least 4 positive points spanning a decade".into()));
    }
    let run_cell = |k: usize| -> Result<SweepCell> {
        let (l, ec) = match axis {
            SweepAxis::L { grid: v } => (v[k], template.ec.clone()),
            SweepAxis::Ec { grid: v } => (template.l, v[k].clone()),
        };
        let lat = build_lattice(template.d, l)?;
        let params = ModelParams::new(ec.clone(), template.eps.clone())?;
        let burn = template.burn_in.max(5 * lat.n as u64 * rational_ceil_i64(&ec).max(1) as u64);
        let st = run_statistics::<f64>(&params, &lat, template.events, burn, template.seed.wrapping_add(k as u64))?;
        Ok(SweepCell { x: xs[k], l, ec: rational_to_f64(&ec), stats: st.summary() })
    };
    let threads = threads.clamp(1, xs.len());
    let count = xs.len();
    let mut slots: Vec<Option<Result<SweepCell>>> = (0..xs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let run_cell = &run_cell;
                scope.spawn(move || (w..count).step_by(threads).map(|k| (k, run_cell(k))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("sweep worker panicked") {
                slots[k] = Some(r);
            }
        }
    });
    let mut cells = Vec::with_capacity(xs.len());
    let mut flags = Vec::new();
    for (k, r) in slots.into_iter().enumerate() {
        let cell = r.expect("every cell is assigned")?;
        if cell.stats.positive < 100 {
            flags.push(format!("cell {k}: only {} avalanches", cell.stats.positive));
        }
        cells.push(cell);
    }
    let tau_fit = fit_of(&cells, |s| s.tau_bar);
    let splus_fit = fit_of(&cells, |s| s.splus_bar);
    let by_l = matches!(axis, SweepAxis::L { .. });
    Ok(SweepResult {
        gamma_tau: if by_l { tau_fit.as_ref().map(|f| f.slope) } else { None },
        gamma_s: if by_l { splus_fit.as_ref().map(|f| f.slope - template.d as f64) } else { None },
        omega_fit: fit_of(&cells, |s| s.omega_bar),
        s0_fit: fit_of(&cells, |s| Some(s.s0_bar)),
        tau_max_fit: fit_of(&cells, |s| Some(s.tau_max as f64)),
        s_max_fit: fit_of(&cells, |s| Some(s.s_max as f64)),
        tau_fit,
        splus_fit,
        cells,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_is_recovered() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let f = loglog_fit(&xs, &ys).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12 && f.slope_se < 1e-12);
    }

    #[test]
    fn short_grids_are_rejected() {
        let t = SweepTemplate { d: 1, l: 4, ec: Rational::from_integer(7.into()), eps: Rational::new(1.into(), 2.into()), events: 10, burn_in: 0, seed: 1 };
        assert!(scaling_sweep(&SweepAxis::L { grid: vec![2, 4, 8] }, &t).is_err());
        assert!(scaling_sweep(&SweepAxis::L { grid: vec![2, 3, 4, 5] }, &t).is_err());
    }

    #[test]
    fn thread_count_does_not_change_cells() {
        let t = SweepTemplate { d: 1, l: 4, ec: Rational::from_integer(2.into()), eps: Rational::new(1.into(), 2.into()), events: 2000, burn_in: 0, seed: 4 };
        let axis = SweepAxis::L { grid: vec![2, 4, 8, 20] };
        let a = scaling_sweep_threads(&axis, &t, 1).unwrap();
        let b = scaling_sweep_threads(&axis, &t, 3).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
