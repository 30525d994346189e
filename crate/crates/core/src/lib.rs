pub mod error;
pub mod fields;
pub mod generators;
pub mod mixing;
pub mod neighbors;
pub mod pgm;
pub mod pipeline;
pub mod rng;
pub mod sample;
pub mod spectral;
pub mod torus;
pub mod transports;

pub use error::{Error, Result};
