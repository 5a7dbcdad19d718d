//! Error type shared across the crate.

use std::fmt;

/// Errors produced by the numerical routines and the simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a precondition (e.g. probability outside (0,1)).
    Domain(String),
    /// A series or iteration failed to converge within its cap. Never
    /// returned as a silently wrong value.
    Numerical(String),
    /// Structurally unusable input (e.g. an all-zero channel matrix).
    DegenerateInput(String),
    /// Power adaptation cannot meet the target (predicted gain is zero).
    InfeasiblePower(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::DegenerateInput(msg) => write!(f, "degenerate input: {msg}"),
            Error::InfeasiblePower(msg) => write!(f, "infeasible power: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
