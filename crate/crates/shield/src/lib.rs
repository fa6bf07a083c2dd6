//! Configuration, file formats and experiment drivers around `shield-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod runner;

pub use error::{Error, Result};
