//! Command-line front end for `critlen_core`.

pub mod cli;
pub mod output;

pub use cli::{dispatch, run};
