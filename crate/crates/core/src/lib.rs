//! Four-group decodable space-time block codes: construction, rotation
//! design, detection, error-probability analysis and BER simulation.

pub mod analysis;
pub mod channel;
pub mod codebook;
pub mod constellation;
pub mod detector;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod rotation;
pub mod scheme;

pub use error::{Error, Result};
