//! Numerical laboratory for Born-rule probabilities emerging from unitary
//! dynamics: wrap-around equidistribution, an exact two-level flea model,
//! Wigner phase-space tools, and the flea-perturbed double well.

pub mod arbfun;
pub mod doublewell;
pub mod error;
pub mod harness;
pub mod quad;
pub mod twostate;
pub mod wigner;

pub use error::{Error, Result};
