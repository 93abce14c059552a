//! Batch front end for the `skorokhod` library: calibration, the
//! three-atom example, rule comparison and verification.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 convex-order
//! violation, 3 no convergence or no termination, 4 failed verification.

pub mod commands;
pub mod error;
pub mod instance;
pub mod render;

pub use commands::{cmd_calibrate, cmd_compare, cmd_example, cmd_verify, Console, RuleName};
pub use error::CliError;
pub use instance::{InstanceFile, InstanceOptions, Overrides};
