//! Non-adiabatic holonomic gates inside the four-qubit noiseless subsystem for
//! collective decoherence.

pub mod battery;
pub mod collective;
pub mod error;
pub mod experiment;
pub mod holonomy;
pub mod linalg;
pub mod noise;
pub mod permutation;

pub use error::{Error, Result};
