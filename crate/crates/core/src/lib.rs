//! Zhang's sandpile model as a piecewise-affine skew product.
//!
//! The core is generic over the scalar type. Exact work uses [`Rational`], simulations use `f64`.

pub mod error;
pub mod geometry;
pub mod io;
pub mod lattice;
pub mod matrix;
pub mod relaxation;
pub mod scalar;
pub mod skew;
pub mod spectral;
pub mod stats;

pub use error::{Result, ZhangError};
pub use lattice::{build_lattice, Lattice, ModelParams};
pub use matrix::Matrix;
pub use relaxation::EnergyVector;
pub use scalar::{Rational, Scalar};

/// Energy vector with exact rational entries.
pub type ExactVector = EnergyVector<Rational>;
/// Energy vector in double precision.
pub type FloatVector = EnergyVector<f64>;
/// Energy vector in single precision.
pub type SingleVector = EnergyVector<f32>;
