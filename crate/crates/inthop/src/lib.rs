//! Interval-Hessian line-search optimization.
//!
//! The library provides:
//!
//! - conservative interval arithmetic and symbolic differentiation of parsed
//!   expression trees ([`interval`], [`expr`], [`parse`]);
//! - lower bounds on the minimum eigenvalue of symmetric interval matrices
//!   and the positive-definite diagonal shift built from them
//!   ([`eigen_bounds`]);
//! - the interval-Hessian solver with lazy Hessian refresh plus steepest
//!   descent, BFGS, and modified-Newton baselines behind a common trait,
//!   selected by name ([`solver`]);
//! - a benchmark harness with evaluation counting, CSV persistence, and data
//!   profiles ([`bench`]), and runtime diagnostic suites ([`diagnostics`]).

pub mod bench;
pub mod diagnostics;
pub mod eigen_bounds;
pub mod expr;
pub mod interval;
pub mod line_search;
pub mod linalg;
pub mod parse;
pub mod solver;

pub use eigen_bounds::AlphaMethod;
pub use expr::Problem;
pub use solver::{
    solver_by_name, solver_names, Counters, Solver, SolverConfig, SolverResult, Status, Strategy,
};
