//! Command-line surface for the `ipcw` estimators: dataset I/O, flag
//! parsing, report and figure emission.

// `!(a > b)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod error;
pub mod parse;
pub mod run;
pub mod svg;

pub use error::{CliError, ExitCode};
pub use run::{main_with_args, run};
