//! Experiment plumbing behind the `bosonic-vmc` binary.

pub mod commands;
pub mod config;

use crate::error::Error;

/// Worker-count override for the rayon pool.
pub const THREADS_ENV: &str = "BOSONIC_VMC_NUM_THREADS";

pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    /// Reserved for command-line usage errors.
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const MISSING_FILE: i32 = 4;
    pub const IO: i32 = 5;
    pub const DIMENSION: i32 = 6;
    pub const DIVERGENCE: i32 = 7;
    pub const CHECKPOINT: i32 = 8;
    pub const NUMERICAL: i32 = 9;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => exit::CONFIG,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => exit::MISSING_FILE,
        Error::Io { .. } => exit::IO,
        Error::DimensionGuard { .. } | Error::LatticeSize(_) => exit::DIMENSION,
        Error::Divergence(_) => exit::DIVERGENCE,
        Error::Checkpoint(_) => exit::CHECKPOINT,
        Error::Solver { .. }
        | Error::Eigensolver(_)
        | Error::Fit(_)
        | Error::Saturation(_)
        | Error::NonFinite(_) => exit::NUMERICAL,
        _ => exit::OTHER,
    }
}
