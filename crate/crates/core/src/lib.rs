//! Clipped maxout and minimally clipped minout units, the interference
//! partition they induce over stored history, and the conditional rehearsal
//! training loops built on top of it.
//!
//! The crate is `no_std` and needs only `alloc`. File IO, the command line and
//! output formats live in the `rehearse` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod checks;
pub mod data;
pub mod error;
pub mod interference;
pub mod math;
pub mod minout;
pub mod mlp;
pub mod training;

pub use error::{Error, Result};
