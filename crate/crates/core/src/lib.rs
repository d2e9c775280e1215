//! Numerical laboratory for the Ising model with a nearest-neighbour
//! ferromagnetic coupling and a power-law antiferromagnetic tail.

pub mod energy;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod kernel;
pub mod mc;
pub mod quad;
pub mod special;
pub mod stats;
pub mod summation;
pub mod sums;

pub use error::{Error, Result};
pub use kernel::{ModelParams, TailBound};
