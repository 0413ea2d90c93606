//! Step-length selection: backtracking Armijo for most solvers and a weak
//! Wolfe search (bracketing with interval bisection) for BFGS.

use thiserror::Error;

use crate::linalg::dot;

/// Maximum Wolfe trial evaluations before giving up.
pub const WOLFE_MAX_TRIALS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LineSearchError {
    #[error("search direction is not a descent direction")]
    NotDescent,
    #[error("step size fell below the minimum before the acceptance condition held")]
    StepTooSmall,
    #[error("line search exceeded {WOLFE_MAX_TRIALS} trials")]
    MaxTrialsExceeded,
}

#[derive(Debug, Clone, Copy)]
pub struct LineSearchConfig {
    /// Initial trial step.
    pub theta0: f64,
    /// Backtracking factor.
    pub rho: f64,
    /// Armijo (sufficient decrease) constant.
    pub c1: f64,
    /// Wolfe curvature constant.
    pub c2: f64,
    /// Step floor; falling below it terminates the run.
    pub theta_min: f64,
}

impl Default for LineSearchConfig {
    fn default() -> LineSearchConfig {
        LineSearchConfig {
            theta0: 1.0,
            rho: 0.5,
            c1: 0.001,
            c2: 0.9,
            theta_min: 1e-12,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.theta0 > 0.0) {
            return Err("theta0 must be positive".into());
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err("rho must lie in (0, 1)".into());
        }
        if !(self.c1 > 0.0 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err("need 0 < c1 < c2 < 1".into());
        }
        if !(self.theta_min > 0.0) {
            return Err("theta_min must be positive".into());
        }
        Ok(())
    }
}

/// Objective access for a line search. Implementations own the per-run
/// evaluation counters; every `value` call counts one function evaluation and
/// every `grad` call one gradient evaluation.
pub trait LineSearchOracle {
    fn value(&mut self, x: &[f64]) -> f64;
    fn grad(&mut self, x: &[f64]) -> Vec<f64>;
}

/// An accepted Armijo step.
#[derive(Debug, Clone)]
pub struct ArmijoStep {
    pub theta: f64,
    pub x_new: Vec<f64>,
    pub f_new: f64,
    /// Number of function-value trials (1 + number of backtracks).
    pub trials: usize,
}

/// Backtrack from `theta0` until `f(x + theta p) <= f(x) + c1 theta g'p`.
pub fn armijo_backtrack(
    oracle: &mut dyn LineSearchOracle,
    x: &[f64],
    p: &[f64],
    g: &[f64],
    f_at_x: f64,
    cfg: &LineSearchConfig,
) -> Result<ArmijoStep, LineSearchError> {
    let slope = dot(g, p);
    if !(slope < 0.0) {
        return Err(LineSearchError::NotDescent);
    }
    let mut theta = cfg.theta0;
    let mut trials = 0usize;
    loop {
        if theta < cfg.theta_min {
            return Err(LineSearchError::StepTooSmall);
        }
        let x_new: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + theta * pi).collect();
        let f_new = oracle.value(&x_new);
        trials += 1;
        if f_new <= f_at_x + cfg.c1 * theta * slope {
            return Ok(ArmijoStep {
                theta,
                x_new,
                f_new,
                trials,
            });
        }
        theta *= cfg.rho;
    }
}

/// An accepted Wolfe step; the gradient at the new point is a byproduct of
/// the curvature check and is returned so callers need not recompute it.
#[derive(Debug, Clone)]
pub struct WolfeStep {
    pub theta: f64,
    pub x_new: Vec<f64>,
    pub f_new: f64,
    pub g_new: Vec<f64>,
}

/// Weak Wolfe search: Armijo decrease plus the curvature condition
/// `g(x + theta p)'p >= c2 g'p`, located by bracketing and bisection.
pub fn wolfe_search(
    oracle: &mut dyn LineSearchOracle,
    x: &[f64],
    p: &[f64],
    g: &[f64],
    f_at_x: f64,
    cfg: &LineSearchConfig,
) -> Result<WolfeStep, LineSearchError> {
    let slope = dot(g, p);
    if !(slope < 0.0) {
        return Err(LineSearchError::NotDescent);
    }
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    let mut theta = cfg.theta0;
    for _ in 0..WOLFE_MAX_TRIALS {
        let x_new: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + theta * pi).collect();
        let f_new = oracle.value(&x_new);
        if !(f_new <= f_at_x + cfg.c1 * theta * slope) {
            hi = theta;
        } else {
            let g_new = oracle.grad(&x_new);
            if dot(&g_new, p) < cfg.c2 * slope {
                lo = theta;
            } else {
                return Ok(WolfeStep {
                    theta,
                    x_new,
                    f_new,
                    g_new,
                });
            }
        }
        theta = if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * theta
        };
        if theta < cfg.theta_min {
            return Err(LineSearchError::StepTooSmall);
        }
    }
    Err(LineSearchError::MaxTrialsExceeded)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Quadratic oracle `f(x) = sum x_i^2` with call counting.
    struct Quadratic {
        f_calls: usize,
        g_calls: usize,
    }

    impl Quadratic {
        fn new() -> Quadratic {
            Quadratic {
                f_calls: 0,
                g_calls: 0,
            }
        }
    }

    impl LineSearchOracle for Quadratic {
        fn value(&mut self, x: &[f64]) -> f64 {
            self.f_calls += 1;
            x.iter().map(|v| v * v).sum()
        }
        fn grad(&mut self, x: &[f64]) -> Vec<f64> {
            self.g_calls += 1;
            x.iter().map(|v| 2.0 * v).collect()
        }
    }

    #[test]
    fn armijo_backtracks_once_on_overshoot() {
        // f(x)=x^2 from x=1 along p=-2: theta=1 overshoots to f(-1)=1,
        // theta=0.5 lands exactly on the minimum.
        let mut oracle = Quadratic::new();
        let cfg = LineSearchConfig::default();
        let step = armijo_backtrack(&mut oracle, &[1.0], &[-2.0], &[2.0], 1.0, &cfg).unwrap();
        assert_eq!(step.theta, 0.5);
        assert_eq!(step.f_new, 0.0);
        assert_eq!(step.trials, 2);
        assert_eq!(oracle.f_calls, 2);
    }

    #[test]
    fn armijo_accepts_first_trial() {
        let mut oracle = Quadratic::new();
        let cfg = LineSearchConfig::default();
        let step = armijo_backtrack(&mut oracle, &[1.0], &[-1.0], &[2.0], 1.0, &cfg).unwrap();
        assert_eq!(step.theta, 1.0);
        assert_eq!(step.trials, 1);
    }

    #[test]
    fn armijo_rejects_non_descent() {
        let mut oracle = Quadratic::new();
        let cfg = LineSearchConfig::default();
        let err = armijo_backtrack(&mut oracle, &[1.0], &[1.0], &[2.0], 1.0, &cfg).unwrap_err();
        assert_eq!(err, LineSearchError::NotDescent);
        assert_eq!(oracle.f_calls, 0);
    }

    #[test]
    fn armijo_step_too_small_on_hopeless_direction() {
        // f increases along p no matter how small the step: force exhaustion.
        struct Rising;
        impl LineSearchOracle for Rising {
            fn value(&mut self, _x: &[f64]) -> f64 {
                f64::INFINITY
            }
            fn grad(&mut self, _x: &[f64]) -> Vec<f64> {
                vec![0.0]
            }
        }
        let cfg = LineSearchConfig::default();
        let err = armijo_backtrack(&mut Rising, &[1.0], &[-1.0], &[2.0], 1.0, &cfg).unwrap_err();
        assert_eq!(err, LineSearchError::StepTooSmall);
    }

    #[test]
    fn armijo_accepted_step_strictly_decreases() {
        let mut oracle = Quadratic::new();
        let cfg = LineSearchConfig::default();
        for start in [0.3, 1.0, 2.5, 10.0] {
            let g = 2.0 * start;
            let f0 = start * start;
            let step =
                armijo_backtrack(&mut oracle, &[start], &[-g], &[g], f0, &cfg).unwrap();
            assert!(step.f_new < f0);
        }
    }

    #[test]
    fn wolfe_satisfies_both_conditions() {
        // f(x)=x^2 from x=1 along p=-2: theta=0.5 gives f=0 and zero slope.
        let mut oracle = Quadratic::new();
        let cfg = LineSearchConfig::default();
        let step = wolfe_search(&mut oracle, &[1.0], &[-2.0], &[2.0], 1.0, &cfg).unwrap();
        assert_eq!(step.theta, 0.5);
        assert_eq!(step.f_new, 0.0);
        let slope0 = -4.0;
        assert!(dot(&step.g_new, &[-2.0]) >= cfg.c2 * slope0);
    }

    #[test]
    fn wolfe_unit_step_at_exact_minimizer() {
        // Minimizer along p sits exactly at theta = 1.
        let mut oracle = Quadratic::new();
        let cfg = LineSearchConfig::default();
        let step = wolfe_search(&mut oracle, &[1.0, 0.0], &[-1.0, 0.0], &[2.0, 0.0], 1.0, &cfg)
            .unwrap();
        assert_eq!(step.theta, 1.0);
        assert_eq!(step.f_new, 0.0);
    }

    #[test]
    fn wolfe_rejects_non_descent() {
        let mut oracle = Quadratic::new();
        let cfg = LineSearchConfig::default();
        let err = wolfe_search(&mut oracle, &[1.0], &[3.0], &[2.0], 1.0, &cfg).unwrap_err();
        assert_eq!(err, LineSearchError::NotDescent);
    }

    #[test]
    fn config_validation() {
        let mut cfg = LineSearchConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.c2 = 0.0005;
        assert!(cfg.validate().is_err());
        cfg = LineSearchConfig {
            rho: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
