use thiserror::Error;

use crate::grid::Frame;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scale-factor model: {0}")]
    InvalidModel(String),

    /// `w = -(D-3)/(D-1)` has no power-law solution; use the exponential family.
    #[error("equation of state w = {w} is degenerate for D = {dim}: the background is exponential")]
    DegenerateEquationOfState { dim: u32, w: f64 },

    #[error("model was not built from an equation of state (w missing)")]
    MissingW,

    #[error("potential power p = {p} is non-integer but the field takes the negative value {value}")]
    NonIntegerPowerNegativeBase { p: f64, value: f64 },

    #[error("state is in the {found:?} frame, expected {expected:?}")]
    FrameMismatch { expected: Frame, found: Frame },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("solution blew up at tau = {tau}")]
    BlowUp { tau: f64 },

    #[error("invalid run setup: {0}")]
    Setup(String),

    #[error("trajectories do not share a time lattice: {0}")]
    LatticeMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}
