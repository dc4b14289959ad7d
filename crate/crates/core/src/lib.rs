//! Long-range random walk, self-avoiding walk and oriented percolation on
//! Z^d driven by a heavy-tailed step distribution.
//!
//! The crate evolves the random-walk two-point function exactly, enumerates
//! and samples self-avoiding walks, grows oriented-percolation clusters, and
//! evaluates the closed-form gyration-radius asymptotics these models are
//! expected to follow.

pub mod asymptotics;
pub mod conv;
pub mod error;
pub mod kernel;
pub mod lattice;
pub mod mc;
pub mod numeric;
pub mod op;
pub mod rw;
pub mod saw;
pub mod series;

pub use error::{Error, Result};
pub use kernel::StepDistribution;
pub use lattice::LatticeField;
