//! Workbench for data-driven surrogate modeling of a controlled orthotropic plate.
//!
//! The crate has two halves:
//!
//! * a physics side ([`plate_sim`]) that discretizes a damped orthotropic
//!   Kirchhoff plate with free edges into a modal system and integrates its
//!   pulse-train response exactly, producing synthetic `(t, u, y)` datasets;
//! * a learning side ([`dataio`], [`nn_core`], [`models`], [`trainer`],
//!   [`evaluator`]) that windows those datasets, trains linear-regression,
//!   ELU-MLP and stacked-GRU surrogates with Adam and early stopping, and
//!   scores them over an `(s, h)` experiment grid with best-of-n selection.
//!
//! Every numeric path is deterministic for a fixed seed: simulation,
//! shuffling, initialization and grid aggregation all reproduce bit-identical
//! artifacts on one machine.
//!
//! The `examples/` directory walks through each capability; the `platebench`
//! binary chains them behind `simulate` / `train` / `grid` / `scatter` /
//! `report` subcommands driven by one JSON config.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataio;
pub mod evaluator;
pub mod models;
pub mod nn_core;
pub mod plate_sim;
pub mod trainer;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A function precondition was violated by the caller.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Malformed or inconsistent dataset contents.
    #[error("data error: {0}")]
    Data(String),

    /// A numerical routine failed (factorization, eigensolve, non-finite state).
    #[error("numerical failure: {0}")]
    Numerics(String),

    /// Training produced a non-finite loss or gradient.
    #[error("training diverged at epoch {epoch}")]
    Diverged {
        epoch: usize,
        trace: Vec<trainer::EpochRecord>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
