//! Simulation core for remote power side-channel attacks on shared FPGA
//! fabrics and for a controlled-noise defense against them.
//!
//! The crate is `no_std` and only needs an allocator. It models:
//!
//! - a shared power-distribution network with resistive and inductive drops
//!   that fade with distance ([`pdn`]),
//! - an RSA square-and-multiply victim whose power schedule leaks its
//!   exponent bits ([`victim`]),
//! - ring-oscillator power monitors that turn local voltage into counts
//!   ([`monitor`]),
//! - the adaptive noise controller and a random-noise baseline ([`defense`]),
//! - an end-to-end trace engine tying the above together ([`sim`]),
//! - a simple-power-analysis attacker ([`attacker`]),
//! - leakage and overhead evaluation ([`eval`]) and the monitor design-space
//!   exploration ([`dse`]).
//!
//! File formats, configuration and the command line live in the companion
//! `shield` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod attacker;
pub mod defense;
pub mod dse;
pub mod error;
pub mod eval;
pub mod monitor;
pub mod pdn;
pub mod seed;
pub mod sim;
pub mod victim;

pub use error::{Error, Result};
