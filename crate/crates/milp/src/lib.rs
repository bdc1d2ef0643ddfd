//! Small dense-basis LP and MILP solver.
//!
//! [`solve_lp`] runs a bounded-variable revised primal simplex and reports
//! primal values, row duals, reduced costs and a reusable [`Basis`].
//! [`solve_mip`] wraps it in a branch and bound. Models can be exported to
//! fixed-format MPS with [`to_mps`].
//!
//! ```
//! use mimoframe_milp::{solve_lp, LinearProgram, RowSense};
//!
//! let mut lp = LinearProgram::maximize();
//! let x = lp.add_var(0.0, f64::INFINITY, 1.0);
//! lp.add_constraint(vec![(x, 1.0)], RowSense::Le, 3.0);
//! let sol = solve_lp(&lp).unwrap();
//! assert!((sol.objective - 3.0).abs() < 1e-9);
//! assert!((sol.duals[0] - 1.0).abs() < 1e-9);
//! ```

mod backend;
mod branch;
mod error;
mod mps;
mod problem;
mod scaling;
mod simplex;

pub use backend::{BuiltinSolver, MipBackend};
pub use branch::{solve_mip, BranchDirection, MipOptions, MipSolution, MipStatus, NodeOrder};
pub use error::ModelError;
pub use mps::{to_mps, write_mps};
pub use problem::{Constraint, LinearProgram, MipProblem, ObjectiveSense, RowSense, VarKind, Variable};
pub use simplex::{solve_lp, solve_lp_with, Basis, LpOptions, LpSolution, LpStatus, VarStatus};
