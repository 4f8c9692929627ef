//! Config-driven runner around `stlw-core`. The binary is a thin shell over
//! [`commands`].

// `!(a < b)` is how NaN gets rejected here
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod build;
pub mod bundled;
pub mod commands;
pub mod config;
pub mod error;
pub mod ini;
pub mod output;

pub use commands::{Check, Options, Outcome};
pub use config::ExperimentConfig;
pub use error::{CliError, Result};
