use crate::perturbed::PhasePoint;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid lengths: {0}")]
    InvalidLengths(String),

    #[error("invalid piecewise translation: {0}")]
    InvalidPieces(String),

    #[error("y = {y} outside the family domain [{min}, {max}]")]
    Domain { y: f64, min: f64, max: f64 },

    #[error("orbit left the domain at step {step} (y would become {attempted_y})")]
    BoundaryEscape {
        step: usize,
        state: PhasePoint,
        attempted_y: f64,
    },

    #[error("map is not reversible")]
    NotReversible,

    #[error("map is not symmetric (order-reversing permutation required)")]
    NotSymmetric,

    #[error("invalid forcing: {0}")]
    InvalidForcing(String),

    #[error("degenerate persistence: |det DG| = {det:e} below threshold")]
    DegeneratePersistence { det: f64 },

    #[error("Newton did not converge after {iterations} iterations (|G| = {residual:e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("itinerary changed during refinement: expected {expected:?}, observed {observed:?}")]
    ItineraryMismatch {
        expected: Vec<usize>,
        observed: Vec<usize>,
    },

    #[error("orbit does not close: |T^q(z) - z| = {distance:e}")]
    NotClosed { distance: f64 },

    #[error("prediction inapplicable: the orbit is balanced for harmonic {ell}")]
    BalancedOrbit { ell: u32 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
