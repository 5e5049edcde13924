//! Explicit series solutions, a direct integrator and an agent simulator for
//! finite-state systems with m-ary meetings and autonomous moves.

pub mod cli;
pub mod error;
pub mod models;
pub mod modelfile;
pub mod ode;
pub mod purebirth;
pub mod simulator;
pub mod statespace;
pub mod trees;
pub mod validate;
pub mod wildsum;

pub use error::{Error, Result};
