//! Interval and circle exchange maps, their one-parameter families, and the
//! area-preserving maps obtained by perturbing them.

pub mod cem;
pub mod connections;
pub mod error;
pub mod family;
pub mod iem;
pub mod orbits;
pub mod perm;
pub mod perturbed;
pub mod record;
pub mod scalar;
pub mod symmetry;

pub use cem::Cem;
pub use connections::{
    group_orbits, periodic_intervals, saddle_connections, verify_no_nonsymmetric, PeriodicInterval,
    SaddleConnection, Side,
};
pub use error::{Error, Result};
pub use family::{Family, FamilyKind};
pub use iem::{compose, reflection, swap_decompose, translation_vector, Iem};
pub use orbits::{
    balance, classify, evaluate_m, find_symmetric, newton_refine, predict_nonsymmetric, residue,
    sweep_eps, OrbitRecord, OrbitTolerances, ResidualG, SearchConfig, StabilityClass, SweepConfig,
};
pub use perm::Permutation;
pub use perturbed::{Forcing, PerturbedMap, PhasePoint, Trajectory};
pub use scalar::Coord;
pub use symmetry::{
    gamma, gamma_primary, intersections, tangent_unperturbed, transversality_test, GammaConfig,
    IntersectionCandidate, IntersectionConfig, SymmetryLineSet,
};
