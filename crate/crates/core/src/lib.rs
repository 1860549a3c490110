//! Compound discrete memoryless channels: capacity, mismatched and generalized
//! linear decoding rates, one-sidedness, very-noisy geometry and Monte Carlo
//! random-coding simulation.
//!
//! The numerical core is generic over [`scalar::Scalar`] / [`scalar::Real`];
//! the aliases below fix the usual choices. Information quantities are in nats.

pub mod error;
pub mod io;
pub mod matrix;
pub mod probability;
pub mod rate;
pub mod scalar;
pub mod sim;
pub mod vn;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use probability::{kl_divergence, mutual_information, Distribution, Dmc, JointDist};
pub use rate::{
    compound_capacity, generalized_rate, is_one_sided, mismatched_rate, one_sided_cover, CompoundSet, DecoderKind,
    Metric,
};
pub use vn::{Counterexample, VnCompoundSet, VnDirection, VnGeometry};

use num_rational::Rational64;

pub type Distribution64 = Distribution<f64>;
pub type Dmc64 = Dmc<f64>;
pub type Metric64 = Metric<f64>;
pub type CompoundSet64 = CompoundSet<f64>;
pub type Distribution32 = Distribution<f32>;
pub type Dmc32 = Dmc<f32>;
pub type VnDirection64 = VnDirection<f64>;
pub type VnGeometry64 = VnGeometry<f64>;
/// Exact arithmetic for the very-noisy closed forms.
pub type ExactDirection = VnDirection<Rational64>;
pub type ExactGeometry = VnGeometry<Rational64>;
pub type ExactCounterexample = Counterexample<Rational64>;
