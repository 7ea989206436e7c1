//! Numerical workhorses: a dense convex QP solver and a discrete
//! algebraic Riccati equation solver.

mod dare;
mod qp;

pub use dare::{dare, DareError, DareSolution};
pub use qp::{QpError, QpProblem, QpSettings, QpSolution, QpStatus};
