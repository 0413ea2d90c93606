//! Steepest descent with Armijo backtracking. No Hessian evaluations and no
//! `O(n^3)` charges.

use crate::line_search::armijo_backtrack;
use crate::linalg::{dot, norm2};

use super::inthop::infinite_start;
use super::{
    classify_converged, neg_vec, IterationRecord, Objective, Observer, Problem, SolveEvent,
    Solver, SolverConfig, SolverError, SolverResult, Status,
};

pub struct SteepestDescent;

impl Solver for SteepestDescent {
    fn name(&self) -> &'static str {
        "sd"
    }

    fn describe(&self, _cfg: &SolverConfig) -> String {
        "sd".to_string()
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

        loop {
            if g_norm < cfg.eps_g {
                let status = classify_converged(&mut obj, &x, cfg.eps_h, false);
                return Ok(result(status, x, f, g_norm, obj, trace));
            }
            if k > cfg.iter_max {
                return Ok(result(Status::MaxIterations, x, f, g_norm, obj, trace));
            }
            let p = neg_vec(&g);
            debug_assert!(dot(&g, &p) < 0.0);
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
                        t: 0,
                        f,
                        g_norm,
                        delta: f64::NAN,
                        refreshed: false,
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
                    return Ok(result(Status::StepTooSmall, x, f, g_norm, obj, trace));
                }
            }
        }
    }
}

fn result(
    status: Status,
    x: Vec<f64>,
    f: f64,
    g_norm: f64,
    obj: Objective,
    trace: Vec<IterationRecord>,
) -> SolverResult {
    SolverResult {
        x_final: x,
        f_final: f,
        g_norm,
        status,
        counters: obj.counters,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_expr, parse_problem};

    #[test]
    fn solves_scalar_quadratic_monotonically() {
        let p = Problem::new("square", 1, parse_expr("x1^2", 1).unwrap(), vec![1.0]);
        let result = SteepestDescent.run(&p, &SolverConfig::default()).unwrap();
        assert_eq!(result.status, Status::Solved);
        assert!(result.counters.iterations <= 30);
        for pair in result.trace.windows(2) {
            assert!(pair[1].f < pair[0].f);
        }
        // First-order method: the ledger stays empty.
        assert_eq!(result.counters.h_evals, 0);
        assert_eq!(result.counters.n3_ops, 0);
    }

    #[test]
    fn solves_sphere_10() {
        let text = (1..=10)
            .map(|i| format!("x{i}^2"))
            .collect::<Vec<_>>()
            .join(" + ");
        let p = Problem::new("sphere_10", 10, parse_expr(&text, 10).unwrap(), vec![1.0; 10]);
        let result = SteepestDescent.run(&p, &SolverConfig::default()).unwrap();
        assert_eq!(result.status, Status::Solved);
        assert!(result.f_final < 1e-6);
    }

    #[test]
    fn rosenbrock_outcome_is_recorded_not_pinned() {
        // Steepest descent tends to stagnate in the flat valley; either a
        // solve or an iteration-limit exit is acceptable.
        let p = parse_problem(
            "name: rosenbrock_2\nn: 2\nobjective: 100*(x2 - x1^2)^2 + (1 - x1)^2\nx0: -1.2, 1\n",
        )
        .unwrap();
        let result = SteepestDescent.run(&p, &SolverConfig::default()).unwrap();
        assert!(matches!(
            result.status,
            Status::Solved | Status::MaxIterations | Status::StepTooSmall
        ));
    }

    #[test]
    fn gradient_path_into_saddle_is_rejected() {
        let p = Problem::new(
            "hyperbolic",
            2,
            parse_expr("x1^2 - x2^2", 2).unwrap(),
            vec![1.0, 0.0],
        );
        let result = SteepestDescent.run(&p, &SolverConfig::default()).unwrap();
        assert_eq!(result.status, Status::SaddlePoint);
        assert!(result.x_final[0].abs() < 1e-3);
    }
}
