//! Twisted central L-values of GL(2) newforms over ℚ and their averages over
//! p-power-order Dirichlet characters.

pub mod arith;
pub mod averages;
pub mod characters;
pub mod error;
pub mod lfunctions;
pub mod newforms;
pub mod numerics;

pub use error::{Error, Result};
