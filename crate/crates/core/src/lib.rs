//! Scenario-based risk sets of capital allocations for Eisenberg-Noe clearing networks.
//!
//! The crate covers network and shock generation, clearing-vector engines,
//! the solver kernels behind the mixed-integer scalarizations, and the grid
//! algorithms that approximate the sample-average risk set.

pub mod clearing;
pub mod error;
pub mod linalg;
pub mod model;
pub mod netgen;
pub mod optim;
pub mod saa;
pub mod scalarize;
pub mod shocks;

pub use clearing::{aggregate_en, clearing_fixed_point, clearing_lp, en_supergradient, ClearingResult};
pub use error::{Error, Result};
pub use model::{FinancialNetwork, Grouping, RiskSpec, ScenarioSet};
pub use model::{CapitalBox, SaaProblem};
pub use saa::ApproxSet;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
