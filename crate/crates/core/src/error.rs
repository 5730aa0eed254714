use std::path::PathBuf;

use thiserror::Error;

use crate::utility::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (negative power, negative budget, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid consumer profile: {}", join_violations(.0))]
    InvalidProfile(Vec<Violation>),

    /// The profile or cost model lacks something the operation needs.
    #[error("configuration error: {0}")]
    Config(String),

    /// A subproblem was called outside the coefficient regime it solves.
    #[error("regime error: {0}")]
    Regime(String),

    /// The marginal benefit was requested exactly at the reference point.
    #[error("non-differentiable point: marginal benefit is undefined at x = r = {x}")]
    NonDifferentiable { x: f64 },

    #[error("no sign change found for {what} on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket {
        what: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("degenerate tariff: {0}")]
    DegenerateTariff(String),

    #[error("oracle grid too large: {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: f64, limit: f64 },

    #[error("{path}: {message}")]
    Scenario { path: String, message: String },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
