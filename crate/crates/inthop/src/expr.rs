//! Expression trees with point evaluation, natural interval extension, and
//! symbolic first/second derivatives.
//!
//! Construction goes through the smart constructors in [`build`], which apply
//! light simplification only: constant folding, additive/multiplicative
//! identities, and the rewrite `e * e -> e^2`. The last one matters: it lets
//! the natural interval extension use the dedicated even-power range rule on
//! squares produced by the product rule, instead of the loose sign-crossing
//! bound that plain self-multiplication would give.

use std::fmt;
use std::sync::Arc;

use crate::interval::{Interval, IntervalError, IntervalMatrix, IntervalVector};
use crate::linalg::SymMatrix;

pub type ExprRef = Arc<Expr>;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index; surface syntax is one-based (`x1`..`xn`).
    Var(usize),
    Add(ExprRef, ExprRef),
    Sub(ExprRef, ExprRef),
    Mul(ExprRef, ExprRef),
    Div(ExprRef, ExprRef),
    Neg(ExprRef),
    PowInt(ExprRef, u32),
    Pow(ExprRef, ExprRef),
    Exp(ExprRef),
    Log(ExprRef),
    Sin(ExprRef),
    Cos(ExprRef),
    Sqrt(ExprRef),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::PowInt(a, k) => write!(f, "{a}^{k}"),
            Expr::Pow(a, b) => write!(f, "{a}^({b})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

impl Expr {
    pub fn is_const(&self, value: f64) -> bool {
        matches!(self, Expr::Const(c) if *c == value)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Largest variable index used, plus one (0 for constant expressions).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
            Expr::Pow(a, b) => a.arity().max(b.arity()),
            Expr::Neg(a)
            | Expr::PowInt(a, _)
            | Expr::Exp(a)
            | Expr::Log(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Sqrt(a) => a.arity(),
        }
    }
}

/// Smart constructors with constant folding and identity simplification.
pub mod build {
    use super::*;

    pub fn constant(c: f64) -> ExprRef {
        Arc::new(Expr::Const(c))
    }

    pub fn var(i: usize) -> ExprRef {
        Arc::new(Expr::Var(i))
    }

    pub fn add(a: ExprRef, b: ExprRef) -> ExprRef {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => constant(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => Arc::new(Expr::Add(a, b)),
        }
    }

    pub fn sub(a: ExprRef, b: ExprRef) -> ExprRef {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => constant(x - y),
            (_, Some(0.0)) => a,
            (Some(0.0), _) => neg(b),
            _ => Arc::new(Expr::Sub(a, b)),
        }
    }

    pub fn mul(a: ExprRef, b: ExprRef) -> ExprRef {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => return constant(x * y),
            (Some(0.0), _) | (_, Some(0.0)) => return constant(0.0),
            (Some(1.0), _) => return b,
            (_, Some(1.0)) => return a,
            _ => {}
        }
        if a == b {
            return pow_int(a, 2);
        }
        Arc::new(Expr::Mul(a, b))
    }

    pub fn div(a: ExprRef, b: ExprRef) -> ExprRef {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => constant(x / y),
            (_, Some(1.0)) => a,
            _ => Arc::new(Expr::Div(a, b)),
        }
    }

    pub fn neg(a: ExprRef) -> ExprRef {
        match &*a {
            Expr::Const(c) => constant(-c),
            Expr::Neg(inner) => inner.clone(),
            _ => Arc::new(Expr::Neg(a)),
        }
    }

    pub fn pow_int(a: ExprRef, k: u32) -> ExprRef {
        match k {
            0 => constant(1.0),
            1 => a,
            _ => match a.as_const() {
                Some(c) => constant(c.powi(k as i32)),
                None => Arc::new(Expr::PowInt(a, k)),
            },
        }
    }

    /// General power; constant integer exponents `>= 0` normalize to
    /// [`pow_int`].
    pub fn pow(a: ExprRef, b: ExprRef) -> ExprRef {
        if let Some(e) = b.as_const() {
            if e.fract() == 0.0 && (0.0..=u32::MAX as f64).contains(&e) {
                return pow_int(a, e as u32);
            }
            if let Some(base) = a.as_const() {
                return constant(base.powf(e));
            }
        }
        Arc::new(Expr::Pow(a, b))
    }

    pub fn exp(a: ExprRef) -> ExprRef {
        match a.as_const() {
            Some(c) => constant(c.exp()),
            None => Arc::new(Expr::Exp(a)),
        }
    }

    pub fn log(a: ExprRef) -> ExprRef {
        match a.as_const() {
            Some(c) => constant(c.ln()),
            None => Arc::new(Expr::Log(a)),
        }
    }

    pub fn sin(a: ExprRef) -> ExprRef {
        match a.as_const() {
            Some(c) => constant(c.sin()),
            None => Arc::new(Expr::Sin(a)),
        }
    }

    pub fn cos(a: ExprRef) -> ExprRef {
        match a.as_const() {
            Some(c) => constant(c.cos()),
            None => Arc::new(Expr::Cos(a)),
        }
    }

    pub fn sqrt(a: ExprRef) -> ExprRef {
        match a.as_const() {
            Some(c) => constant(c.sqrt()),
            None => Arc::new(Expr::Sqrt(a)),
        }
    }
}

/// IEEE evaluation of the tree. Non-finite results are values, not errors.
pub fn eval_expr(e: &Expr, x: &[f64]) -> f64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Var(i) => x[*i],
        Expr::Add(a, b) => eval_expr(a, x) + eval_expr(b, x),
        Expr::Sub(a, b) => eval_expr(a, x) - eval_expr(b, x),
        Expr::Mul(a, b) => eval_expr(a, x) * eval_expr(b, x),
        Expr::Div(a, b) => eval_expr(a, x) / eval_expr(b, x),
        Expr::Neg(a) => -eval_expr(a, x),
        Expr::PowInt(a, k) => eval_expr(a, x).powi(*k as i32),
        Expr::Pow(a, b) => eval_expr(a, x).powf(eval_expr(b, x)),
        Expr::Exp(a) => eval_expr(a, x).exp(),
        Expr::Log(a) => eval_expr(a, x).ln(),
        Expr::Sin(a) => eval_expr(a, x).sin(),
        Expr::Cos(a) => eval_expr(a, x).cos(),
        Expr::Sqrt(a) => eval_expr(a, x).sqrt(),
    }
}

/// Natural interval extension of the tree over a box.
pub fn eval_expr_interval(e: &Expr, b: &IntervalVector) -> Result<Interval, IntervalError> {
    match e {
        Expr::Const(c) => Ok(Interval::point(*c)),
        Expr::Var(i) => Ok(b.entry(*i)),
        Expr::Add(l, r) => Ok(eval_expr_interval(l, b)? + eval_expr_interval(r, b)?),
        Expr::Sub(l, r) => Ok(eval_expr_interval(l, b)? - eval_expr_interval(r, b)?),
        Expr::Mul(l, r) => Ok(eval_expr_interval(l, b)? * eval_expr_interval(r, b)?),
        Expr::Div(l, r) => eval_expr_interval(l, b)?.div(eval_expr_interval(r, b)?),
        Expr::Neg(a) => Ok(eval_expr_interval(a, b)?.neg()),
        Expr::PowInt(a, k) => Ok(eval_expr_interval(a, b)?.powi(*k)),
        Expr::Pow(a, p) => {
            let base = eval_expr_interval(a, b)?;
            if let Some(c) = p.as_const() {
                if c.fract() == 0.0 && c < 0.0 && -c <= u32::MAX as f64 {
                    return Interval::point(1.0).div(base.powi(-c as u32));
                }
            }
            let exponent = eval_expr_interval(p, b)?;
            Ok(exponent.mul(base.log()?).exp())
        }
        Expr::Exp(a) => Ok(eval_expr_interval(a, b)?.exp()),
        Expr::Log(a) => eval_expr_interval(a, b)?.log(),
        Expr::Sin(a) => Ok(eval_expr_interval(a, b)?.sin()),
        Expr::Cos(a) => Ok(eval_expr_interval(a, b)?.cos()),
        Expr::Sqrt(a) => eval_expr_interval(a, b)?.sqrt(),
    }
}

/// Symbolic partial derivative with respect to variable `v`.
pub fn diff(e: &ExprRef, v: usize) -> ExprRef {
    use build::*;
    match &**e {
        Expr::Const(_) => constant(0.0),
        Expr::Var(i) => constant(if *i == v { 1.0 } else { 0.0 }),
        Expr::Add(a, b) => add(diff(a, v), diff(b, v)),
        Expr::Sub(a, b) => sub(diff(a, v), diff(b, v)),
        Expr::Mul(a, b) => add(mul(diff(a, v), b.clone()), mul(a.clone(), diff(b, v))),
        Expr::Div(a, b) => div(
            sub(mul(diff(a, v), b.clone()), mul(a.clone(), diff(b, v))),
            pow_int(b.clone(), 2),
        ),
        Expr::Neg(a) => neg(diff(a, v)),
        Expr::PowInt(a, k) => mul(
            constant(*k as f64),
            mul(pow_int(a.clone(), k - 1), diff(a, v)),
        ),
        Expr::Pow(a, p) => {
            if let Some(c) = p.as_const() {
                // d(a^c) = c * a^(c-1) * a'
                mul(
                    constant(c),
                    mul(pow(a.clone(), constant(c - 1.0)), diff(a, v)),
                )
            } else {
                // d(a^p) = a^p * (p' log a + p a'/a)
                mul(
                    e.clone(),
                    add(
                        mul(diff(p, v), log(a.clone())),
                        mul(p.clone(), div(diff(a, v), a.clone())),
                    ),
                )
            }
        }
        Expr::Exp(a) => mul(e.clone(), diff(a, v)),
        Expr::Log(a) => div(diff(a, v), a.clone()),
        Expr::Sin(a) => mul(cos(a.clone()), diff(a, v)),
        Expr::Cos(a) => neg(mul(sin(a.clone()), diff(a, v))),
        Expr::Sqrt(a) => div(diff(a, v), mul(constant(2.0), e.clone())),
    }
}

/// The `n` symbolic first partials of an objective.
#[derive(Debug, Clone)]
pub struct Gradient {
    partials: Vec<ExprRef>,
}

impl Gradient {
    pub fn n(&self) -> usize {
        self.partials.len()
    }

    pub fn partial(&self, i: usize) -> &ExprRef {
        &self.partials[i]
    }
}

/// Symbolic second partials, stored upper-triangular and mirrored, so
/// `entry(i, j)` and `entry(j, i)` are the identical expression object.
#[derive(Debug, Clone)]
pub struct HessianExprs {
    n: usize,
    upper: Vec<ExprRef>,
}

impl HessianExprs {
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &ExprRef {
        &self.upper[self.index(i, j)]
    }
}

/// Symbolic gradient and Hessian of `e` in `n` variables.
pub fn differentiate(e: &ExprRef, n: usize) -> (Gradient, HessianExprs) {
    let partials: Vec<ExprRef> = (0..n).map(|i| diff(e, i)).collect();
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            upper.push(diff(&partials[i], j));
        }
    }
    (Gradient { partials }, HessianExprs { n, upper })
}

pub fn eval_gradient(g: &Gradient, x: &[f64]) -> Vec<f64> {
    assert_eq!(g.n(), x.len());
    g.partials.iter().map(|p| eval_expr(p, x)).collect()
}

pub fn eval_hessian(h: &HessianExprs, x: &[f64]) -> SymMatrix {
    assert_eq!(h.n, x.len());
    SymMatrix::from_upper(h.n, |i, j| eval_expr(h.entry(i, j), x))
}

/// Natural interval extension of each Hessian entry over the box.
pub fn interval_hessian(
    h: &HessianExprs,
    b: &IntervalVector,
) -> Result<IntervalMatrix, IntervalError> {
    assert_eq!(h.n, b.len());
    let mut upper: Vec<Interval> = Vec::with_capacity(h.upper.len());
    for e in &h.upper {
        upper.push(eval_expr_interval(e, b)?);
    }
    let n = h.n;
    Ok(IntervalMatrix::from_upper(n, |i, j| {
        upper[i * n - i * (i + 1) / 2 + j]
    }))
}

/// A named benchmark problem: objective, dimension, start point, and an
/// optional known optimum for test assertions.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub n: usize,
    pub objective: ExprRef,
    pub x0: Vec<f64>,
    pub fstar: Option<f64>,
}

impl Problem {
    pub fn new(name: impl Into<String>, n: usize, objective: ExprRef, x0: Vec<f64>) -> Problem {
        let p = Problem {
            name: name.into(),
            n,
            objective,
            x0,
            fstar: None,
        };
        p.validate();
        p
    }

    pub fn with_fstar(mut self, fstar: f64) -> Problem {
        self.fstar = Some(fstar);
        self
    }

    fn validate(&self) {
        assert_eq!(
            self.x0.len(),
            self.n,
            "problem {}: x0 length {} != n {}",
            self.name,
            self.x0.len(),
            self.n
        );
        assert!(
            self.objective.arity() <= self.n,
            "problem {}: objective uses x{} but n = {}",
            self.name,
            self.objective.arity(),
            self.n
        );
    }
}
