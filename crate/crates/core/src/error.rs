use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid freeway: {0}")]
    InvalidFreeway(String),

    #[error("state space exceeds the cap of {cap} states")]
    StateSpaceCap { cap: usize },

    #[error("interdependence check supports at most {cap} agents, game has {n}")]
    AgentCap { cap: usize, n: usize },

    #[error("traffic game supports at most {cap} ramps, freeway has {ramps}")]
    RampCap { cap: usize, ramps: usize },

    #[error("stationary distribution did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("recurrent state {state} fits neither the discontent class nor any content class")]
    Unclassifiable { state: String },

    #[error("recurrence classes {from} -> {to} are not connected")]
    Disconnected { from: usize, to: usize },

    #[error("unstable traffic simulation at step {step}, cell {cell}: density {density}")]
    UnstableSimulation {
        step: usize,
        cell: usize,
        density: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
