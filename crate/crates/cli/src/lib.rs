//! Library side of the `opo` command: configuration, pump selection and the
//! tables behind each subcommand.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod pump;
pub mod table;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use pump::{PumpAnalysis, PumpSelection};
