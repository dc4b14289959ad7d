//! Numerical building blocks shared by the engines: compensated sums,
//! special functions and adaptive quadrature.

pub mod fit;
pub mod quad;
pub mod special;
pub mod sum;

pub use sum::{compensated_sum, NeumaierSum};
