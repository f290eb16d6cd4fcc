//! Maximal-bandwidth signal coordination on grid networks.
//!
//! [`network`] builds grids and their cycle bases, [`instance`] holds and
//! generates signal data, [`model`] assembles the mixed-integer program,
//! [`solver`] solves it exactly, [`heuristic`] runs the tabu search and
//! [`report`] drives seeded experiments. Everything numeric is generic over
//! [`scalar::Scalar`]; the aliases below fix the common choices.

pub mod heuristic;
pub mod instance;
pub mod model;
pub mod network;
pub mod report;
pub mod scalar;
pub mod solver;

pub use num_rational::BigRational;

/// Model in double precision.
pub type Model = model::MilpModel<f64>;
/// Model in exact rational arithmetic.
pub type ExactModel = model::MilpModel<BigRational>;
pub type Solution = solver::Solution<f64>;
pub type ExactSolution = solver::Solution<BigRational>;
pub type BoundTable = model::BoundTable<f64>;
