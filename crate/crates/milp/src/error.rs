use thiserror::Error;

/// Structural problems detected before a solve starts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("row {row} references unknown variable {var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("binary variable {var} has bounds outside [0, 1]")]
    BinaryBounds { var: usize },
    #[error("integrality mask has {kinds} entries for {vars} variables")]
    KindLength { kinds: usize, vars: usize },
    #[error("warm-start basis has {got} entries, expected {expected}")]
    BasisLength { got: usize, expected: usize },
}
