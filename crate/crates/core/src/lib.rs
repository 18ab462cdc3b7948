//! Outage analysis for integer-forcing receivers on slow-fading MIMO and
//! multiple-access channels.
//!
//! The crate covers the numerical kernel (real embeddings, Cholesky,
//! LLL and lattice enumeration), random-matrix ensembles, closed-form and
//! numerical outage bounds, linear space-time precoders, and a seeded
//! Monte Carlo engine that ties them together.

pub mod bounds;
pub mod ensembles;
pub mod error;
pub mod integer_forcing;
pub mod lattice;
pub mod linalg;
pub mod mac;
pub mod montecarlo;
pub mod precoders;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use integer_forcing::{IfRateResult, SearchConfig, SearchMethod};
pub use linalg::{CMatrix, CompoundChannel, RMatrix};
pub use rng::RngSeed;
pub use bounds::{BoundMethod, BoundValue, QuadConfig, StLowerBound};
pub use ensembles::{JacobiSpec, UnitaryMatrix};
pub use lattice::IntegerMatrix;
pub use mac::{MacChannel, MacRates};
pub use montecarlo::{ExperimentSpec, OutageEstimate, Receiver};
pub use precoders::{Precoder, PrecoderLabel};

/// Crate version, recorded in experiment metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
