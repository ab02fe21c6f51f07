//! Two-class (regular/smart) nonatomic routing games with affine costs.
//!
//! The crate models road networks shared by regular and autonomy-equipped
//! vehicles, computes Wardrop equilibria through the variational inequality,
//! solves the (nonconvex) social optimum, and evaluates price-of-anarchy and
//! bicriteria figures together with the asymmetry-parameterized theoretical
//! bounds they are compared against.

pub mod bounds;
pub mod cost;
pub mod equilibrium;
pub mod fixtures;
pub mod linalg;
pub mod network;
pub mod optimum;

pub use cost::{CapacityParams, CostMatrix, LinkCostParams, Orientation, SeparabilityClass};
pub use equilibrium::{EquilibriumResult, SolverOptions};
pub use network::{FlowVector, Network, OdPair, Path, VehicleClass};
pub use optimum::{BicriteriaResult, OptimumOptions, OptimumResult};
