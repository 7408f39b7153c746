//! Lyapunov exponents of the avalanche cocycle, contraction horizons and entropies.

mod cylinder;
mod entropy;
mod horizon;
mod lyapunov;

pub use cylinder::{vertex_multiplicity, Cylinder};
pub use entropy::{entropy_estimates, rescale_entropy, EntropyEstimates, EntropyLimits, RescaledEntropy};
pub use horizon::{contraction_horizon, HorizonMethod, HorizonReport};
pub use lyapunov::{lyapunov_spectrum, LyapunovConfig, LyapunovResult};
