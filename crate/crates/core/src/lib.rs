pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod filters;
pub mod io;
pub mod kerr;
pub mod qsim;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
