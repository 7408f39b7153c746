//! Attractor sampling, dimension estimates and avalanche statistics.

mod attractor;
mod avalanche;
mod dimension;
mod ifs;
mod maximal;
mod powerlaw;
mod sweep;

pub use attractor::{attractor_sample, bounding_box, occupied_cells, AttractorSample, SampleMode};
pub use avalanche::{avalanche_statistics, run_statistics, thermo_rescale, StatsResult, StatsSummary, ThermoRescaled};
pub use dimension::{
    box_dimension, default_deltas, moran_bounds, singular_value_inputs, BoxDimension, MoranBounds, MoranInputs, SingularValueReport,
};
pub use ifs::AffineIfs;
pub use maximal::{maximal_avalanche, maximal_scaling, MaximalAvalanche, MaximalScaling};
pub use powerlaw::{hurwitz_zeta, powerlaw_fit, sample_powerlaw, PowerLawFit, PowerLawOptions};
pub use sweep::{loglog_fit, scaling_sweep, scaling_sweep_threads, LogLogFit, SweepAxis, SweepCell, SweepResult, SweepTemplate};
