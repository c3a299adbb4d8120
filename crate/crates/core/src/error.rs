use std::path::PathBuf;

use crate::types::PoseVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside the open interval (0, 1) for {name}")]
    Domain { name: &'static str, value: f64 },

    #[error("singular configuration: cable {cable} has length {length:e} m")]
    DegenerateCable { cable: usize, length: f64 },

    #[error("pulley of cable {cable}: {reason}")]
    PulleyInfeasible { cable: usize, reason: String },

    #[error("Euler angles at gimbal lock (beta = {beta} rad)")]
    GimbalLock { beta: f64 },

    #[error("singular pose: structure matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("advanced structure matrix is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error(
        "forward kinematics did not converge after {iterations} iterations \
         (residual {residual:e}, best iterate {best:?})"
    )]
    NonConvergence {
        best: PoseVector,
        residual: f64,
        iterations: usize,
    },

    #[error("simulation state became non-finite at t = {time} s: {what}")]
    NonFinite { time: f64, what: String },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
