//! Exact dyadic coding constructions for counterexamples to projection
//! theorems for effective dimension, with certified audits.

pub mod audit;
pub mod bits;
pub mod cli;
pub mod construct;
pub mod dyadic;
pub mod error;
pub mod extension;
pub mod geometry;

pub use bits::BitString;
pub use dyadic::{Dyadic, DyadicCell, DyadicInterval, Multiplier, Openness, Real};
pub use error::{Error, Result};
