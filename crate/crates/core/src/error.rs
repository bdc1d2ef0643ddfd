use thiserror::Error;

use crate::model::Direction;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("device {device} cannot meet its SINR threshold on the {direction:?} direction even alone")]
    InfeasibleDevice { device: usize, direction: Direction },
    #[error("power coefficients out of range: {0}")]
    InfeasiblePower(String),
    #[error("pricing inconclusive: {0}")]
    PricingInconclusive(String),
    #[error("master problem: {0}")]
    Master(String),
    #[error("solver: {0}")]
    Solver(#[from] mimoframe_milp::ModelError),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
