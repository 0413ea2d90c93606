//! The solver family behind a common trait, registered by name and selected
//! at runtime: `sd`, `bfgs`, `newton-cami`, and `inthop` (whose interval
//! strategy and shift method are configuration).
//!
//! All solvers share the termination taxonomy, the evaluation counters, and
//! the convergence classification (a gradient-norm test followed by a
//! curvature check that downgrades would-be solutions at saddle points).

pub mod bfgs;
pub mod inthop;
pub mod newton_cami;
pub mod steepest;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::eigen_bounds::{sym_eigen, AlphaMethod};
use crate::expr::{
    differentiate, eval_expr, eval_gradient, eval_hessian, interval_hessian, Gradient,
    HessianExprs, Problem,
};
use crate::interval::{IntervalError, IntervalMatrix, IntervalVector};
use crate::line_search::{LineSearchConfig, LineSearchOracle};
use crate::linalg::SymMatrix;

pub use inthop::{
    make_box, refresh_hessian, search_direction, update_delta_a1, update_delta_a2, HessianState,
};

/// Interval-size schedule for the interval-Hessian solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Fixed,
    A1,
    A2,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::Fixed => "fixed",
            Strategy::A1 => "a1",
            Strategy::A2 => "a2",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "fixed" => Ok(Strategy::Fixed),
            "a1" => Ok(Strategy::A1),
            "a2" => Ok(Strategy::A2),
            other => Err(format!(
                "unknown strategy `{other}` (expected fixed, a1, or a2)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Gradient-norm tolerance for convergence.
    pub eps_g: f64,
    /// Curvature tolerance of the saddle classification.
    pub eps_h: f64,
    pub iter_max: u64,
    /// Initial interval size.
    pub delta0: f64,
    /// Interval scaling factor of the A1 update.
    pub r: f64,
    /// Damping constant of the A1 update.
    pub beta: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub alpha_method: AlphaMethod,
    pub strategy: Strategy,
    pub line_search: LineSearchConfig,
    /// Retry a failed factorization once with a tiny extra diagonal shift.
    pub ridge_fallback: bool,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            eps_g: 0.001,
            eps_h: 0.001,
            iter_max: 10_000,
            delta0: 0.1,
            r: 2.0,
            beta: 1.0,
            delta_min: 0.001,
            delta_max: 10.0,
            alpha_method: AlphaMethod::Ggn,
            strategy: Strategy::Fixed,
            line_search: LineSearchConfig::default(),
            ridge_fallback: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.eps_g > 0.0) {
            return Err("eps_g must be positive".into());
        }
        if !(self.eps_h > 0.0) {
            return Err("eps_h must be positive".into());
        }
        if !(0.0 < self.delta_min && self.delta_min <= self.delta0 && self.delta0 <= self.delta_max)
        {
            return Err("need 0 < delta_min <= delta0 <= delta_max".into());
        }
        if !(self.r > 0.0) {
            return Err("r must be positive".into());
        }
        if !(self.beta > 0.0) {
            return Err("beta must be positive".into());
        }
        self.line_search.validate()
    }
}

/// Per-run evaluation and operation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub f_evals: u64,
    pub g_evals: u64,
    pub h_evals: u64,
    pub ih_evals: u64,
    pub n3_ops: u64,
    pub iterations: u64,
    pub refreshes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Solved,
    MaxIterations,
    StepTooSmall,
    SaddlePoint,
    InfiniteStart,
    SingularHessian,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Solved => "Solved",
            Status::MaxIterations => "MaxIterations",
            Status::StepTooSmall => "StepTooSmall",
            Status::SaddlePoint => "SaddlePoint",
            Status::InfiniteStart => "InfiniteStart",
            Status::SingularHessian => "SingularHessian",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Status, String> {
        match s {
            "Solved" => Ok(Status::Solved),
            "MaxIterations" => Ok(Status::MaxIterations),
            "StepTooSmall" => Ok(Status::StepTooSmall),
            "SaddlePoint" => Ok(Status::SaddlePoint),
            "InfiniteStart" => Ok(Status::InfiniteStart),
            "SingularHessian" => Ok(Status::SingularHessian),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: u64,
    pub t: u64,
    pub f: f64,
    pub g_norm: f64,
    pub delta: f64,
    pub refreshed: bool,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub g_norm: f64,
    pub status: Status,
    pub counters: Counters,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("interval Hessian evaluation failed: {0}")]
    Interval(#[from] IntervalError),
}

/// Counted access to a problem's objective, gradient, Hessian, and interval
/// Hessian. One instance per run; owns the run's counters.
pub struct Objective<'p> {
    pub problem: &'p Problem,
    gradient: Gradient,
    hessian: HessianExprs,
    pub counters: Counters,
}

impl<'p> Objective<'p> {
    pub fn new(problem: &'p Problem) -> Objective<'p> {
        let (gradient, hessian) = differentiate(&problem.objective, problem.n);
        Objective {
            problem,
            gradient,
            hessian,
            counters: Counters::default(),
        }
    }

    pub fn f(&mut self, x: &[f64]) -> f64 {
        self.counters.f_evals += 1;
        eval_expr(&self.problem.objective, x)
    }

    pub fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        self.counters.g_evals += 1;
        eval_gradient(&self.gradient, x)
    }

    pub fn hessian(&mut self, x: &[f64]) -> SymMatrix {
        self.counters.h_evals += 1;
        eval_hessian(&self.hessian, x)
    }

    /// Hessian evaluation that bypasses the evaluation count; used by the
    /// post-termination curvature classification, which is diagnostic and
    /// must not perturb the lazy-refresh bookkeeping.
    pub fn hessian_uncounted(&self, x: &[f64]) -> SymMatrix {
        eval_hessian(&self.hessian, x)
    }

    pub fn interval_hessian(
        &mut self,
        b: &IntervalVector,
    ) -> Result<IntervalMatrix, IntervalError> {
        self.counters.ih_evals += 1;
        interval_hessian(&self.hessian, b)
    }
}

impl LineSearchOracle for Objective<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        self.f(x)
    }
    fn grad(&mut self, x: &[f64]) -> Vec<f64> {
        self.gradient(x)
    }
}

/// Classify a converged point (`||g|| < eps_g`): a strongly negative minimum
/// Hessian eigenvalue downgrades the result to a saddle. Hessian-using
/// solvers charge the eigensolve to the operation ledger; first-order
/// solvers keep a zero ledger.
pub(crate) fn classify_converged(
    obj: &mut Objective,
    x: &[f64],
    eps_h: f64,
    charge_n3: bool,
) -> Status {
    let h = obj.hessian_uncounted(x);
    if charge_n3 {
        obj.counters.n3_ops += 1;
    }
    match sym_eigen(&h) {
        Ok(eigs) if !eigs.is_empty() && eigs[0] < -eps_h => Status::SaddlePoint,
        // A non-finite Hessian at a converged point carries no curvature
        // evidence against the solution; report it as solved.
        _ => Status::Solved,
    }
}

/// Observable events of a run, consumed by diagnostics and tests.
pub enum SolveEvent<'a> {
    /// The interval-Hessian state was rebuilt.
    Refreshed { k: u64, state: &'a HessianState },
    /// An accepted step.
    Step {
        k: u64,
        g: &'a [f64],
        p: &'a [f64],
        theta: f64,
        f_before: f64,
        f_after: f64,
    },
    /// The identity-shift loop of the modified Newton solver finished an
    /// iteration's factorization.
    CamiModification { k: u64, attempts: u64, tau: f64 },
}

pub type Observer<'o> = dyn FnMut(&SolveEvent) + 'o;

/// A minimization algorithm selectable by name.
pub trait Solver: Sync {
    /// Registry key.
    fn name(&self) -> &'static str;

    /// Descriptor for run records: the name plus the configuration facets
    /// that change the algorithm (strategy, shift method, interval size).
    fn describe(&self, cfg: &SolverConfig) -> String;

    fn run_observed(
        &self,
        problem: &Problem,
        cfg: &SolverConfig,
        observer: &mut Observer,
    ) -> Result<SolverResult, SolverError>;

    fn run(&self, problem: &Problem, cfg: &SolverConfig) -> Result<SolverResult, SolverError> {
        self.run_observed(problem, cfg, &mut |_| {})
    }
}

static SOLVERS: &[&dyn Solver] = &[
    &steepest::SteepestDescent,
    &bfgs::Bfgs,
    &newton_cami::NewtonCami,
    &inthop::Inthop,
];

/// Look up a registered solver by name.
pub fn solver_by_name(name: &str) -> Option<&'static dyn Solver> {
    SOLVERS.iter().copied().find(|s| s.name() == name)
}

pub fn solver_names() -> Vec<&'static str> {
    SOLVERS.iter().map(|s| s.name()).collect()
}

pub(crate) fn neg_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

pub(crate) fn sub_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_problem;

    #[test]
    fn registry_finds_all_solvers() {
        for name in ["sd", "bfgs", "newton-cami", "inthop"] {
            assert!(solver_by_name(name).is_some(), "{name} missing");
        }
        assert!(solver_by_name("nope").is_none());
        assert_eq!(solver_names().len(), 4);
    }

    #[test]
    fn infinite_start_is_reported_by_every_solver() {
        let p = parse_problem("name: bad_start\nn: 1\nobjective: log(x1)\nx0: 0\n").unwrap();
        let cfg = SolverConfig::default();
        for name in solver_names() {
            let result = solver_by_name(name).unwrap().run(&p, &cfg).unwrap();
            assert_eq!(result.status, Status::InfiniteStart, "{name}");
            assert_eq!(result.counters.f_evals, 1);
            assert!(result.trace.is_empty());
        }
    }

    #[test]
    fn config_validation_rejects_bad_deltas() {
        let cfg = SolverConfig {
            delta_min: 0.5,
            delta0: 0.1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
    }
}
