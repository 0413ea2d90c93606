//! Newton's method with Cholesky-verified identity shifts: when the Hessian
//! is not positive definite, `tau*I` is added with `tau` incremented by one
//! from zero until the factorization succeeds. Every attempt costs one
//! `O(n^3)` unit, as does the solve through the successful factor.

use crate::line_search::armijo_backtrack;
use crate::linalg::{cholesky, norm2, CholeskyFactor, SymMatrix};

use super::inthop::infinite_start;
use super::{
    classify_converged, neg_vec, IterationRecord, Objective, Observer, Problem, SolveEvent,
    Solver, SolverConfig, SolverError, SolverResult, Status,
};

/// Attempts allowed per iteration before declaring the Hessian unusable.
const MAX_ATTEMPTS: u64 = 1_000_000;

/// State of one identity-shift loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CamiState {
    pub tau: f64,
    pub attempts: u64,
}

/// Increase `tau` from zero until `h + tau*I` factorizes; each attempt adds
/// one `O(n^3)` unit to `ledger_units`.
pub fn cami_factorize(h: &SymMatrix, ledger_units: &mut u64) -> Option<(CholeskyFactor, CamiState)> {
    let mut state = CamiState {
        tau: 0.0,
        attempts: 0,
    };
    loop {
        state.attempts += 1;
        *ledger_units += 1;
        if let Some(factor) = cholesky(&h.shifted(state.tau)) {
            return Some((factor, state));
        }
        if state.attempts >= MAX_ATTEMPTS {
            return None;
        }
        state.tau += 1.0;
    }
}

pub struct NewtonCami;

impl Solver for NewtonCami {
    fn name(&self) -> &'static str {
        "newton-cami"
    }

    fn describe(&self, _cfg: &SolverConfig) -> String {
        "newton-cami".to_string()
    }

    fn run_observed(
        &self,
        problem: &Problem,
        cfg: &SolverConfig,
        observer: &mut Observer,
    ) -> Result<SolverResult, SolverError> {
        cfg.validate().map_err(SolverError::InvalidConfig)?;
        let mut obj = Objective::new(problem);
        let mut x = problem.x0.clone();
        let mut f = obj.f(&x);
        if !f.is_finite() {
            return Ok(infinite_start(x, f, obj.counters));
        }
        let mut g = obj.gradient(&x);
        let mut g_norm = norm2(&g);
        let mut trace: Vec<IterationRecord> = Vec::new();
        let mut k: u64 = 0;

        let result = |status, x, f, g_norm, counters, trace| SolverResult {
            x_final: x,
            f_final: f,
            g_norm,
            status,
            counters,
            trace,
        };

        loop {
            if g_norm < cfg.eps_g {
                let status = classify_converged(&mut obj, &x, cfg.eps_h, true);
                return Ok(result(status, x, f, g_norm, obj.counters, trace));
            }
            if k > cfg.iter_max {
                return Ok(result(
                    Status::MaxIterations,
                    x,
                    f,
                    g_norm,
                    obj.counters,
                    trace,
                ));
            }
            let h = obj.hessian(&x);
            let Some((factor, cami)) = cami_factorize(&h, &mut obj.counters.n3_ops) else {
                return Ok(result(
                    Status::SingularHessian,
                    x,
                    f,
                    g_norm,
                    obj.counters,
                    trace,
                ));
            };
            observer(&SolveEvent::CamiModification {
                k,
                attempts: cami.attempts,
                tau: cami.tau,
            });
            obj.counters.n3_ops += 1;
            let p = factor.solve(&neg_vec(&g));
            match armijo_backtrack(&mut obj, &x, &p, &g, f, &cfg.line_search) {
                Ok(step) => {
                    observer(&SolveEvent::Step {
                        k,
                        g: &g,
                        p: &p,
                        theta: step.theta,
                        f_before: f,
                        f_after: step.f_new,
                    });
                    trace.push(IterationRecord {
                        k,
                        t: k + 1,
                        f,
                        g_norm,
                        delta: f64::NAN,
                        refreshed: true,
                        theta: step.theta,
                    });
                    x = step.x_new;
                    f = step.f_new;
                    g = obj.gradient(&x);
                    g_norm = norm2(&g);
                    obj.counters.iterations += 1;
                    k += 1;
                }
                Err(_) => {
                    return Ok(result(
                        Status::StepTooSmall,
                        x,
                        f,
                        g_norm,
                        obj.counters,
                        trace,
                    ));
                }
            }
        }
    }
}
