//! Heat equation on the half-space with a dynamical boundary condition.

pub mod cli;
pub mod config;
pub mod duhamel_ops;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod oracle;
pub mod quadrature;
pub mod semigroups;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
