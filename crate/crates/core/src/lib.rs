//! Simulation core for sequential urban flood-adaptation planning.
//!
//! The pipeline couples four models and a learning harness:
//!
//! 1. **rainfall** — annual extreme-rain events sampled from year-dependent
//!    quantile tables (inverse-CDF draws on a seeded stream).
//! 2. **flood** — static pluvial flooding on a DEM: D8 flow directions,
//!    watershed delineation and a fill-spill-merge solver that distributes a
//!    finite water volume over the terrain's depressions.
//! 3. **transport / qol** — flood depths degrade edge travel times, shortest
//!    paths give per-zone amenity accessibility, and a weighted sum of the
//!    per-capita accessibility values yields a quality-of-life index per zone.
//! 4. **env / agents** — a yearly decision environment over an eight-action
//!    adaptation catalog with reward `R = β_Q ΣᵢQᵢ + β_A·A + β_M·M`, trained
//!    with tabular Q-learning and checked against a value-iteration solver.
//!
//! All numeric code is generic over the scalar type (see [`scalar::Scalar`]);
//! the aliases at the crate root fix `f64`, which is what the CLI uses.

pub mod actions;
pub mod agents;
pub mod dem;
pub mod env;
pub mod error;
pub mod flood;
pub mod qol;
pub mod rainfall;
pub mod reference;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Concrete `f64` instantiations of the main entry-point types.
pub type Dem = dem::DemGrid<f64>;
pub type Depths = dem::DepthRaster<f64>;
pub type Rainfall = rainfall::RainfallModel<f64>;
pub type Network = transport::TransportGraph<f64>;
pub type Impedance = transport::ImpedanceParams<f64>;
pub type Weights = qol::QoLWeights<f64>;
pub type Catalog = actions::MeasureCatalog<f64>;
pub type Scenario64 = scenario::Scenario<f64>;
pub type EnvConfig64 = env::EnvConfig<f64>;
pub type Env64 = env::Env<f64>;
pub type QTable64 = agents::QTable<f64>;
