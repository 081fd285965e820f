//! Diagonal-ensemble filtering with matrix product states.

pub mod chebyshev;
pub mod env;
pub mod error;
pub mod experiment;
pub mod io;
mod linalg;
pub mod model;
pub mod mps;
pub mod observables;
pub mod oracle;
pub mod tensor;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
