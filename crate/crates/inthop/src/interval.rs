//! Conservative interval arithmetic over `f64`, sufficient for natural-extension
//! Hessian evaluation.
//!
//! Every operation returns an interval that encloses the exact real range of the
//! operation over its operand intervals. Endpoints are computed in round-to-nearest
//! and then widened outward (by default one relative epsilon plus one denormal
//! step; see [`Interval::widened`]). With the `directed-rounding` feature the
//! widening uses nextafter steps instead.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Smallest positive subnormal; one "denormal step" of outward widening.
const DENORMAL_STEP: f64 = f64::from_bits(1);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("division by an interval containing zero: [{lo}, {hi}]")]
    DivisionByIntervalContainingZero { lo: f64, hi: f64 },
    #[error("{op} undefined over [{lo}, {hi}]")]
    DomainViolation {
        op: &'static str,
        lo: f64,
        hi: f64,
    },
}

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Interval {
    /// The whole real line; the always-sound fallback when an operation
    /// produces NaN candidates (e.g. `0 * inf`).
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(
            lo <= hi,
            "invalid interval: [{lo}, {hi}] (lo must not exceed hi)"
        );
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Interval {
        Interval::new(x, x)
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn radius(self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(self, other: Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Largest endpoint magnitude, `max(|lo|, |hi|)`.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Widen both endpoints outward. `scale` is the number of relative epsilons
    /// applied; transcendental results use 2 to cover libm's last-ulp error.
    #[cfg(not(feature = "directed-rounding"))]
    fn widened(self, scale: f64) -> Interval {
        let down = |x: f64| {
            if x.is_finite() {
                x - (x.abs() * (scale * f64::EPSILON) + DENORMAL_STEP)
            } else {
                x
            }
        };
        let up = |x: f64| {
            if x.is_finite() {
                x + (x.abs() * (scale * f64::EPSILON) + DENORMAL_STEP)
            } else {
                x
            }
        };
        Interval::new(down(self.lo), up(self.hi))
    }

    #[cfg(feature = "directed-rounding")]
    fn widened(self, scale: f64) -> Interval {
        let steps = scale.ceil().max(1.0) as usize;
        let mut lo = self.lo;
        let mut hi = self.hi;
        for _ in 0..steps {
            lo = lo.next_down();
            hi = hi.next_up();
        }
        Interval::new(lo, hi)
    }

    fn from_candidates(candidates: &[f64], scale: f64) -> Interval {
        if candidates.iter().any(|c| c.is_nan()) {
            return Interval::ENTIRE;
        }
        let lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = candidates
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi).widened(scale)
    }

    pub fn add(self, rhs: Interval) -> Interval {
        Interval::from_candidates(&[self.lo + rhs.lo], 1.0).hull(Interval::from_candidates(
            &[self.hi + rhs.hi],
            1.0,
        ))
    }

    pub fn sub(self, rhs: Interval) -> Interval {
        Interval::from_candidates(&[self.lo - rhs.hi], 1.0).hull(Interval::from_candidates(
            &[self.hi - rhs.lo],
            1.0,
        ))
    }

    pub fn mul(self, rhs: Interval) -> Interval {
        Interval::from_candidates(
            &[
                self.lo * rhs.lo,
                self.lo * rhs.hi,
                self.hi * rhs.lo,
                self.hi * rhs.hi,
            ],
            1.0,
        )
    }

    pub fn div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        if rhs.contains(0.0) {
            return Err(IntervalError::DivisionByIntervalContainingZero {
                lo: rhs.lo,
                hi: rhs.hi,
            });
        }
        Ok(Interval::from_candidates(
            &[
                self.lo / rhs.lo,
                self.lo / rhs.hi,
                self.hi / rhs.lo,
                self.hi / rhs.hi,
            ],
            1.0,
        ))
    }

    pub fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn exp(self) -> Interval {
        let raw = Interval::new(self.lo.exp(), self.hi.exp()).widened(2.0);
        Interval::new(raw.lo.max(0.0), raw.hi)
    }

    pub fn log(self) -> Result<Interval, IntervalError> {
        if !(self.lo > 0.0) {
            return Err(IntervalError::DomainViolation {
                op: "log",
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(Interval::new(self.lo.ln(), self.hi.ln()).widened(2.0))
    }

    pub fn sqrt(self) -> Result<Interval, IntervalError> {
        if !(self.lo >= 0.0) {
            return Err(IntervalError::DomainViolation {
                op: "sqrt",
                lo: self.lo,
                hi: self.hi,
            });
        }
        let raw = Interval::new(self.lo.sqrt(), self.hi.sqrt()).widened(1.0);
        Ok(Interval::new(raw.lo.max(0.0), raw.hi))
    }

    pub fn sin(self) -> Interval {
        use std::f64::consts::FRAC_PI_2;
        if !self.width().is_finite() || self.width() >= std::f64::consts::TAU {
            return Interval::new(-1.0, 1.0);
        }
        let (slo, shi) = (self.lo.sin(), self.hi.sin());
        let mut result = Interval::new(slo.min(shi), slo.max(shi)).widened(2.0);
        if self.contains_angle(FRAC_PI_2) {
            result.hi = 1.0;
        }
        if self.contains_angle(-FRAC_PI_2) {
            result.lo = -1.0;
        }
        Interval::new(result.lo.max(-1.0), result.hi.min(1.0))
    }

    pub fn cos(self) -> Interval {
        use std::f64::consts::PI;
        if !self.width().is_finite() || self.width() >= std::f64::consts::TAU {
            return Interval::new(-1.0, 1.0);
        }
        let (clo, chi) = (self.lo.cos(), self.hi.cos());
        let mut result = Interval::new(clo.min(chi), clo.max(chi)).widened(2.0);
        if self.contains_angle(0.0) {
            result.hi = 1.0;
        }
        if self.contains_angle(PI) {
            result.lo = -1.0;
        }
        Interval::new(result.lo.max(-1.0), result.hi.min(1.0))
    }

    /// Does some `target + 2*pi*k` lie in this interval? Tested with a small
    /// slack so that near-misses count as hits; that can only widen the
    /// trigonometric range toward the true extremum, never shrink it.
    fn contains_angle(self, target: f64) -> bool {
        let tau = std::f64::consts::TAU;
        let k0 = ((self.lo - target) / tau).floor();
        for step in -1..=2 {
            let candidate = target + tau * (k0 + step as f64);
            let slack = 1e-9 * (1.0 + candidate.abs());
            if candidate >= self.lo - slack && candidate <= self.hi + slack {
                return true;
            }
        }
        false
    }

    /// Integer power with the dedicated even-power range rule: for even `k`
    /// and `0 in self` the result is `[0, max(|lo|^k, |hi|^k)]`, which plain
    /// self-multiplication would loosen to a sign-crossing interval.
    pub fn powi(self, k: u32) -> Interval {
        match k {
            0 => Interval::point(1.0),
            1 => self,
            _ => {
                let scale = k as f64;
                let plo = self.lo.powi(k as i32);
                let phi = self.hi.powi(k as i32);
                if k % 2 == 1 {
                    Interval::from_candidates(&[plo, phi], scale)
                } else if self.lo >= 0.0 {
                    let raw = Interval::from_candidates(&[plo, phi], scale);
                    Interval::new(raw.lo.max(0.0), raw.hi)
                } else if self.hi <= 0.0 {
                    let raw = Interval::from_candidates(&[plo, phi], scale);
                    Interval::new(raw.lo.max(0.0), raw.hi)
                } else {
                    let top = plo.abs().max(phi.abs());
                    let raw = Interval::from_candidates(&[top], scale);
                    Interval::new(0.0, raw.hi)
                }
            }
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::add(self, rhs)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::sub(self, rhs)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        Interval::mul(self, rhs)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::neg(self)
    }
}

/// Binary operation tags for the generic dispatch entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Unary operation tags for the generic dispatch entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    PowInt(u32),
}

pub fn interval_binary(op: BinaryOp, a: Interval, b: Interval) -> Result<Interval, IntervalError> {
    match op {
        BinaryOp::Add => Ok(a.add(b)),
        BinaryOp::Sub => Ok(a.sub(b)),
        BinaryOp::Mul => Ok(a.mul(b)),
        BinaryOp::Div => a.div(b),
    }
}

pub fn interval_unary(op: UnaryOp, a: Interval) -> Result<Interval, IntervalError> {
    match op {
        UnaryOp::Neg => Ok(a.neg()),
        UnaryOp::Exp => Ok(a.exp()),
        UnaryOp::Log => a.log(),
        UnaryOp::Sin => Ok(a.sin()),
        UnaryOp::Cos => Ok(a.cos()),
        UnaryOp::Sqrt => a.sqrt(),
        UnaryOp::PowInt(k) => Ok(a.powi(k)),
    }
}

/// A fixed-length vector of intervals (a box).
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalVector {
    entries: Vec<Interval>,
}

impl IntervalVector {
    pub fn new(entries: Vec<Interval>) -> IntervalVector {
        IntervalVector { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize) -> Interval {
        self.entries[i]
    }

    pub fn entries(&self) -> &[Interval] {
        &self.entries
    }

    /// `max_i (hi_i - lo_i)`.
    pub fn width(&self) -> f64 {
        self.entries
            .iter()
            .map(|iv| iv.width())
            .fold(0.0, f64::max)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.len() && x.iter().zip(&self.entries).all(|(&xi, iv)| iv.contains(xi))
    }
}

/// Hull width of an interval vector, `max_i (hi_i - lo_i)`.
pub fn interval_hull_width(v: &IntervalVector) -> f64 {
    v.width()
}

/// A square symmetric matrix of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    n: usize,
    entries: Vec<Interval>,
}

impl IntervalMatrix {
    /// Build from an upper-triangular supplier; the lower triangle mirrors it.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> Interval) -> IntervalMatrix {
        let mut entries = vec![Interval::point(0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        IntervalMatrix { n, entries }
    }

    pub fn from_rows(rows: &[Vec<Interval>]) -> IntervalMatrix {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        let mut m = IntervalMatrix::from_upper(n, |i, j| rows[i][j]);
        // Keep the stored matrix exactly symmetric even if the input was not.
        for i in 0..n {
            for j in 0..n {
                let merged = rows[i][j].hull(rows[j][i]);
                m.entries[i * n + j] = merged;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> Interval {
        self.entries[i * self.n + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.entry(i, j) == self.entry(j, i)))
    }
}
