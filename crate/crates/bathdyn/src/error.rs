use thiserror::Error;

/// Failure modes of the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("{what} = {value} is outside the allowed domain")]
    Domain { what: &'static str, value: f64 },

    #[error("quadrature did not converge (estimate {value:e}, error {error:e})")]
    Quadrature { value: f64, error: f64 },

    #[error("integro-differential residual {defect:e} at t = {t} exceeds {tol:e}; reduce dt")]
    StepRejected { t: f64, defect: f64, tol: f64 },

    #[error("fluctuation function v = {v:e} at t = {t} is negative; grid too coarse")]
    NegativeFluctuation { t: f64, v: f64 },

    #[error("every coefficient sample is invalid (|u| below floor everywhere)")]
    AllCoefficientsInvalid,

    #[error("noncanonical regime: Γ(∞) = {gamma:e}, Γ^β(∞) = {gamma_beta:e}")]
    NoncanonicalRegime { gamma: f64, gamma_beta: f64 },

    #[error("root bracketing failed for {what}")]
    Bracket { what: &'static str },

    #[error("master-equation coefficients invalid at t = {t}")]
    InvalidCoefficients { t: f64 },

    #[error("positivity violated: minimum eigenvalue {min_eig:e} at t = {t}")]
    Positivity { t: f64, min_eig: f64 },

    #[error("Fock truncation leakage {leakage:e} exceeds bound {bound:e}")]
    Leakage { leakage: f64, bound: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("sample count {found} does not match the grid ({expected})")]
    GridMismatch { expected: usize, found: usize },

    #[error("operation requires zero temperature (β = ∞)")]
    RequiresZeroTemperature,

    #[error("operation requires a {0} reservoir")]
    WrongKind(&'static str),

    #[error("t_max = {t_max} exceeds 0.8 of the recurrence time {t_rec}")]
    Recurrence { t_max: f64, t_rec: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
