//! Hyperdimensional computing: random codebooks, bundling and binding,
//! threshold decoding of sets and structures, noise models, Euclidean
//! encoders and simple learners on top of them.
//!
//! Every numeric routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`, with `…32` variants for `f32`.

pub mod codebook;
pub mod container;
pub mod error;
pub mod euclid;
pub mod hdcore;
pub mod learn;
pub mod metrics;
pub mod noise;
pub mod rng;
pub mod scalar;
pub mod setmem;
pub mod structures;

pub use error::{HdcError, Result};
pub use scalar::Scalar;

pub type Hypervector = hdcore::Hypervector<f64>;
pub type Hypervector32 = hdcore::Hypervector<f32>;
pub type Codebook = codebook::Codebook<f64>;
pub type Codebook32 = codebook::Codebook<f32>;
