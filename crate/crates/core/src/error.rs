use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("quadrature did not converge (last change {estimate:.3e}, {points} points per axis)")]
    QuadratureFailure { estimate: f64, points: usize },

    #[error("coupling coefficient {gamma} does not allow oscillation")]
    NoOscillation { gamma: f64 },

    #[error("pump ratio p/p_th = {pump_ratio} is at or above threshold; the linearised model does not apply")]
    AboveThreshold { pump_ratio: f64 },

    #[error("unphysical input: {0}")]
    Unphysical(String),

    #[error("division by a non-positive value ({0})")]
    NonPositiveDivisor(f64),

    #[error("target mode cannot be reached: every basis order has zero coupling")]
    NoCoupling,

    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
