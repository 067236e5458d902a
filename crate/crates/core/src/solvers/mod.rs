//! Linear, complementarity and staggered solvers.

mod linear;
mod psor;
mod staggered;

pub use linear::{norm2, norm_inf, solve_dirichlet, solve_dirichlet_with, solve_linear, LinearSolver};
pub use psor::{active_set_start, lcp_residual, solve_psor, PsorSolution};
pub use staggered::{
    relax_damage, solve_elasticity, solve_phasefield, staggered_load_step, FractureProblem, SolverTolerances, StaggeredResult,
    Timings,
};
