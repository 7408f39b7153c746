//! Means, maxima and histograms of avalanche observables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZhangError};
use crate::lattice::{Lattice, ModelParams};
use crate::relaxation::EnergyVector;
use crate::scalar::Scalar;
use crate::skew::{run_orbit, AvalancheRecord, ExcitationSource, RecordOptions};

/// Streaming tallies over return-map events.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsResult {
    pub events: u64,
    /// Events with a positive-size avalanche.
    pub positive: u64,
    pub size_total: u64,
    pub duration_total: u64,
    /// Sum of waiting times `omega` over positive events.
    pub waiting_total: u64,
    pub tau_max: u64,
    pub omega_max: u64,
    pub s_max: u64,
    pub hist_tau: BTreeMap<u64, u64>,
    pub hist_omega: BTreeMap<u64, u64>,
    pub hist_splus: BTreeMap<u64, u64>,
}

impl StatsResult {
    pub fn push(&mut self, duration: u64, size: u64, waiting: u64) {
        self.events += 1;
        self.size_total += size;
        self.duration_total += duration;
        if size > 0 {
            self.positive += 1;
            self.waiting_total += waiting;
            self.tau_max = self.tau_max.max(duration);
            self.omega_max = self.omega_max.max(waiting);
            self.s_max = self.s_max.max(size);
            *self.hist_tau.entry(duration).or_default() += 1;
            *self.hist_omega.entry(waiting).or_default() += 1;
            *self.hist_splus.entry(size).or_default() += 1;
        }
    }

    pub fn push_record<S>(&mut self, r: &AvalancheRecord<S>) {
        self.push(r.duration as u64, r.size as u64, r.waiting_time);
    }

    /// Mean size over all events, quiet ones included.
    pub fn s0_bar(&self) -> f64 {
        ratio(self.size_total, self.events)
    }

    /// Mean size over positive avalanches; `None` when there are none.
    pub fn splus_bar(&self) -> Option<f64> {
        (self.positive > 0).then(|| ratio(self.size_total, self.positive))
    }

    /// Mean duration of positive avalanches.
    pub fn tau_bar(&self) -> Option<f64> {
        (self.positive > 0).then(|| ratio(self.duration_total, self.positive))
    }

    /// Mean duration over all events (quiet events count 0).
    pub fn tau_all(&self) -> f64 {
        ratio(self.duration_total, self.events)
    }

    /// Mean number of excitations between avalanches, this one included.
    pub fn omega_bar(&self) -> Option<f64> {
        (self.positive > 0).then(|| ratio(self.waiting_total, self.positive))
    }

    /// `s0 = s+ * positive / events`, checked in integers: both sides are `size_total / events`.
    pub fn consistent(&self) -> bool {
        let hist_ok = self.hist_splus.values().sum::<u64>() == self.positive
            && self.hist_tau.values().sum::<u64>() == self.positive
            && self.hist_splus.iter().map(|(s, c)| s * c).sum::<u64>() == self.size_total;
        let ident = match self.splus_bar() {
            Some(sp) => (sp * self.positive as f64 / self.events as f64 - self.s0_bar()).abs() <= 1e-12 * self.s0_bar().max(1.0),
            None => self.size_total == 0,
        };
        hist_ok && ident && self.positive <= self.events
    }

    pub fn flags(&self) -> Vec<String> {
        let mut f = Vec::new();
        if self.positive == 0 {
            f.push("no positive-size avalanche: s+ undefined".into());
        }
        if self.events < 1000 {
            f.push("fewer than 1000 events: histograms are not meaningful".into());
        }
        f
    }

    pub fn summary(&self) -> StatsSummary {
        StatsSummary {
            events: self.events,
            positive: self.positive,
            tau_bar: self.tau_bar(),
            tau_all: self.tau_all(),
            omega_bar: self.omega_bar(),
            s0_bar: self.s0_bar(),
            splus_bar: self.splus_bar(),
            tau_max: self.tau_max,
            omega_max: self.omega_max,
            s_max: self.s_max,
            flags: self.flags(),
        }
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Means and maxima without the histograms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub events: u64,
    pub positive: u64,
    pub tau_bar: Option<f64>,
    pub tau_all: f64,
    pub omega_bar: Option<f64>,
    pub s0_bar: f64,
    pub splus_bar: Option<f64>,
    pub tau_max: u64,
    pub omega_max: u64,
    pub s_max: u64,
    pub flags: Vec<String>,
}

/// Tallies a stream of avalanche records.
pub fn avalanche_statistics<S, I>(records: I) -> Result<StatsResult>
where
    I: IntoIterator<Item = Result<AvalancheRecord<S>>>,
{
    let mut st = StatsResult::default();
    for r in records {
        st.push_record(&r?);
    }
    Ok(st)
}

/// Driven run from the empty state: `burn_in` events discarded, then `events` tallied.
pub fn run_statistics<S: Scalar>(params: &ModelParams, lattice: &Lattice, events: u64, burn_in: u64, seed: u64) -> Result<StatsResult> {
    let x0 = EnergyVector::<S>::zeros(lattice.n);
    let orbit = run_orbit(&x0, &ExcitationSource::iid(seed), params, lattice, burn_in + events, RecordOptions::SUMMARY)?;
    let mut st = StatsResult::default();
    // waiting times carry over the burn-in boundary, which is what a stationary run sees
    for (k, r) in orbit.enumerate() {
        let r = r?;
        if k as u64 >= burn_in {
            st.push_record(&r);
        }
    }
    Ok(st)
}

/// Waiting times in the reparametrized model `omega_new = omega * hbar`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoRescaled {
    pub hbar: f64,
    pub omega_new_bar: f64,
    pub omega_new_max: f64,
    pub tau_bar: f64,
    /// `omega_new / (omega_new + tau)`.
    pub ratio: f64,
}

pub fn thermo_rescale(stats: &StatsResult, hbar: f64) -> Result<ThermoRescaled> {
    if hbar <= 0.0 {
        return Err(ZhangError::Domain("hbar must be positive".into()));
    }
    let omega = stats.omega_bar().ok_or_else(|| ZhangError::Domain("no avalanches in the stream".into()))?;
    let tau = stats.tau_bar().unwrap_or(0.0);
    let omega_new_bar = omega * hbar;
    Ok(ThermoRescaled { hbar, omega_new_bar, omega_new_max: stats.omega_max as f64 * hbar, tau_bar: tau, ratio: omega_new_bar / (omega_new_bar + tau) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::scalar::rat;

    #[test]
    fn quiet_stream_is_flagged() {
        let mut st = StatsResult::default();
        for _ in 0..10 {
            st.push(0, 0, 1);
        }
        assert_eq!(st.s0_bar(), 0.0);
        assert!(st.splus_bar().is_none());
        assert!(st.consistent());
        assert!(!st.flags().is_empty());
    }

    #[test]
    fn example_a_mean_size_is_one() {
        let p = ModelParams::new(rat(7, 2), rat(1, 2)).unwrap();
        let lat = build_lattice(1, 2).unwrap();
        let st = run_statistics::<f64>(&p, &lat, 200_000, 1000, 3).unwrap();
        assert!((st.s0_bar() - 1.0).abs() < 0.01);
        assert!(st.consistent());
        assert!(st.omega_bar().unwrap() >= 1.0);
        let t = thermo_rescale(&st, 1.0).unwrap();
        assert_eq!(t.omega_new_bar, st.omega_bar().unwrap());
    }
}
