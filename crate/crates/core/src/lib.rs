//! Replica-symmetric formulas and finite-size checks for low-rank estimation.

pub mod cli;
pub mod error;
pub mod fluctuation;
pub mod gibbs;
pub mod interpolation;
pub mod prior;
pub mod quadrature;
pub mod rs_potential;
pub mod scalar_channel;
pub mod stats;

pub use error::{Error, Result};
pub use prior::{Prior, PriorSpec};
