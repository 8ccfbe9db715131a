//! Solver kernels: linear programming, small min-norm QPs and
//! branch-and-bound over scenario binaries.

pub mod bnb;
pub mod qp;
pub mod simplex;
mod zsearch;

pub use bnb::{branch_and_bound, MipObjective, MipSolution, ScenarioMip};
pub use qp::{min_norm_qp, QpSolution};
pub use simplex::{solve_lp, Constraint, LinearProgram, LpSolution, LpStatus, RowKind, Sense};
