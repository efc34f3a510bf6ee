//! Direct finite-difference solution of the 2D problem, used to test the
//! semiclassical results independently.

pub mod compare;
pub mod problem;
pub mod solve;

pub use compare::{compare_semiclassics, resonance_scan, ComparisonReport, GridPolicy, ScanTable};
pub use problem::{build_problem, Dimensions, DiscreteProblem, Hermiticity, ProblemSpec};
pub use solve::{solve_ground, solve_self_consistent, EigenSolution, SolverOptions};
