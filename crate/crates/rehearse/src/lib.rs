//! Experiment harness: MNIST IDX loading, run configuration, metrics CSV,
//! SVG charts and the `rehearse` command line.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod idx;
pub mod metrics;
pub mod plot;
pub mod spec;
pub mod verify;

pub use error::{HarnessError, Result};
