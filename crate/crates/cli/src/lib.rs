//! Command-line front end: argument parsing, file I/O, dispatch to the
//! solvers and SVG rendering.

pub mod args;
pub mod input;
pub mod run;
pub mod svg;

pub use args::{Cli, Command};
pub use input::{parse_inputs, Inputs};
pub use run::{exit_for_error, run, Exit, Outcome};
