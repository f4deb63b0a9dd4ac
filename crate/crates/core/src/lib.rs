//! Simulation and analysis of non-local hidden-variable models for
//! polarization-entangled photon pairs.
//!
//! - [`geom`]: unit-sphere geometry (settings, polarizations, planes).
//! - [`models`]: the quantum singlet and threshold-coupled NLHV models.
//! - [`stats`]: coincidence tallies, correlation estimates and error bars.
//! - [`inequality`]: rotation-averaged correlations, the two-plane bound
//!   and numerical checks of its derivation.
//! - [`verify`]: the bundled verification suite.
//! - [`exec`]: seeded, order-independent parallel execution.

pub mod error;
pub mod exec;
pub mod geom;
pub mod inequality;
pub mod models;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geom::{Plane, UnitVec, Vec3};
pub use models::{Coupling, MeasurementModel, Model, ModelSpec, NlhvModel, QuantumSinglet, SourceDistribution};
pub use stats::{CorrelationEstimate, CountData, Schedule, VarianceConvention};
