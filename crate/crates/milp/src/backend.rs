use crate::branch::{solve_mip, MipOptions, MipSolution};
use crate::error::ModelError;
use crate::problem::{LinearProgram, MipProblem};
use crate::simplex::{solve_lp_with, Basis, LpOptions, LpSolution};

/// A source of LP and MIP solutions. Implement this to plug in an external solver.
pub trait MipBackend {
    fn name(&self) -> &str;

    fn solve_lp(&self, lp: &LinearProgram, warm: Option<&Basis>) -> Result<LpSolution, ModelError>;

    fn solve_mip(&self, p: &MipProblem, opts: &MipOptions) -> Result<MipSolution, ModelError>;
}

/// The in-crate simplex and branch and bound.
#[derive(Debug, Clone, Default)]
pub struct BuiltinSolver {
    pub lp_options: LpOptions,
}

impl MipBackend for BuiltinSolver {
    fn name(&self) -> &str {
        "builtin"
    }

    fn solve_lp(&self, lp: &LinearProgram, warm: Option<&Basis>) -> Result<LpSolution, ModelError> {
        solve_lp_with(lp, warm, &self.lp_options)
    }

    fn solve_mip(&self, p: &MipProblem, opts: &MipOptions) -> Result<MipSolution, ModelError> {
        solve_mip(p, opts)
    }
}
