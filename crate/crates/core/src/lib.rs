//! Meta-learned, size-flexible parameter initialization for parametrized
//! quantum circuits.
//!
//! A fixed per-family encoder describes every parameter slot of a circuit as a
//! short feature vector; a small feed-forward decoder maps each vector to an
//! initial angle. The decoder is trained with a first-order meta-gradient
//! taken through a few inner gradient-descent steps, so a single network
//! initializes circuits of any size within the family.

pub mod bench;
pub mod error;
pub mod initializer;
pub mod metatrain;
pub mod problems;
pub mod seed;
pub mod simulator;

pub use error::{FlipError, Result};
