pub mod beamforming;
pub mod channel;
pub mod coupling;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod numerics;
pub mod optimizer;

pub use error::{RcaError, Result};
