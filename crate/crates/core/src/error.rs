use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point counts differ ({left} vs {right}); use the general transport solver")]
    UnequalSizes { left: usize, right: usize },

    #[error("unbalanced measures: total masses {left} and {right}")]
    Unbalanced { left: f64, right: f64 },

    #[error("no transport plan with finite cost exists")]
    Infeasible,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("Fenchel conjugate at s = {s} appears unbounded (maximizer pinned at r = {r_max})")]
    UnboundedConjugate { s: f64, r_max: f64 },

    #[error("point is not in the control subspace (distance {distance:e})")]
    NotInSubspace { distance: f64 },

    #[error("state blew up during integration at step {step}")]
    BlowUp { step: usize },
}
