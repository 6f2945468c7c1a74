use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while loading scene files.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("matrix is not symmetric: d[{i}][{j}] = {a} but d[{j}][{i}] = {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("non-positive distance d[{i}][{j}] = {value}")]
    NonPositive { i: usize, j: usize, value: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("could not place {n} vehicles with separation {min_separation_m} m after {attempts} attempts")]
    Packing {
        n: usize,
        min_separation_m: f64,
        attempts: usize,
    },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
