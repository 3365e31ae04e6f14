// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for `dfm-core`: JSON model files, presets, and
//! reports for simulation, DFM dimensions, bilinear models and
//! reachability.

pub mod commands;
pub mod expr;
pub mod model;
pub mod report;

pub use commands::{run, Cli};
pub use report::{CliError, Outcome, RunReport};
