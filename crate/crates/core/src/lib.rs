//! Observable-aware Trotter product formulas.
//!
//! The crate builds light-cone reduced and chromatic product-formula circuits
//! from sparse Pauli operators, evaluates their error bounds, and checks them
//! against a dense simulator for small registers.

pub mod bounds;
pub mod error;
pub mod exactsim;
pub mod experiments;
mod linalg;
pub mod lightcone;
pub mod models;
pub mod pauli;
pub mod trotter;

pub use error::{Error, Result};
pub use pauli::{NormMode, Pauli, PauliString, PauliSum, Phase, SupportSet};
