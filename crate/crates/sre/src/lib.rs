//! File formats, evaluation drivers and the `sre` command-line tool.
//!
//! Datasets come from NPZ archives laid out as `{split}_images` /
//! `{split}_labels` for the train, val and test splits, or from the built-in
//! synthetic generators. Trained networks are stored as `SREC` checkpoints.

pub mod checkpoint;
pub mod cli;
pub mod config;
mod error;
pub mod features;
pub mod npy;
pub mod npz;
pub mod pgm;
pub mod protocol;

pub use error::{Error, Result};
