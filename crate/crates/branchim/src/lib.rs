//! Experiment harness for multitype branching processes with immigration:
//! TOML configuration, a deterministic parallel replicate runner,
//! goodness-of-fit statistics, result records with CSV and JSONL output,
//! and the acceptance suite behind `branchim verify`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod records;
pub mod runner;
pub mod stats;

pub use error::{Error, Result};
