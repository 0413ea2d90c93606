//! Dense symmetric linear algebra: storage, Cholesky factorization with a
//! strict positive-pivot rule, and an eigenvalue-only symmetric solver
//! (Householder tridiagonalization followed by QL with implicit shifts).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,
    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,
}

/// A dense symmetric matrix; `set` writes both mirrored entries so symmetry
/// holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> SymMatrix {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from an upper-triangular supplier, mirroring to the lower half.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> SymMatrix {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n));
        for i in 0..n {
            for j in 0..n {
                assert_eq!(
                    rows[i][j], rows[j][i],
                    "input rows must be exactly symmetric"
                );
            }
        }
        SymMatrix::from_upper(n, |i, j| rows[i][j])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> SymMatrix {
        let mut m = self.clone();
        for i in 0..self.n {
            m.set(i, i, self.get(i, i) + shift);
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(&self.matvec(x), x)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entrywise `|self - other|` is not needed; the solvers only subtract.
    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        SymMatrix::from_upper(self.n, |i, j| self.get(i, j) - other.get(i, j))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// Lower-triangular Cholesky factor of a positive-definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
}

/// LL^T factorization. Success requires every pivot to be strictly positive;
/// a zero pivot counts as failure.
pub fn cholesky(a: &SymMatrix) -> Option<CholeskyFactor> {
    let n = a.n();
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut pivot = a.get(j, j);
        for k in 0..j {
            pivot -= l[j * n + k] * l[j * n + k];
        }
        if !(pivot > 0.0) {
            return None;
        }
        let ljj = pivot.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / ljj;
        }
    }
    Some(CholeskyFactor { n, l })
}

impl CholeskyFactor {
    /// Solve `A x = b` via forward/back substitution; `O(n^2)`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }
}

/// All eigenvalues of a symmetric matrix in ascending order.
///
/// Householder reduction to tridiagonal form followed by the QL algorithm
/// with implicit shifts, eigenvalues only.
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFiniteMatrix);
    }
    let n = a.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = householder_tridiagonalize(a);
    ql_implicit_shifts(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(d)
}

/// Spectral radius `max |lambda_i|`.
pub fn spectral_radius(a: &SymMatrix) -> Result<f64, LinalgError> {
    let eigs = sym_eigenvalues(a)?;
    Ok(eigs.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Householder similarity reduction to tridiagonal form; returns
/// (diagonal, subdiagonal) where the subdiagonal uses indices `1..n`.
fn householder_tridiagonalize(a: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.n();
    let mut m: Vec<f64> = a.data.clone();
    let idx = |i: usize, j: usize| i * n + j;
    for k in 0..n.saturating_sub(2) {
        let mlen = n - k - 1;
        let mut v: Vec<f64> = (0..mlen).map(|i| m[idx(k + 1 + i, k)]).collect();
        let sigma: f64 = v[1..].iter().map(|t| t * t).sum();
        if sigma == 0.0 {
            continue;
        }
        let norm = (v[0] * v[0] + sigma).sqrt();
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // w = beta*B*v - (beta^2/2)(v^T B v) v on the trailing block B.
        let mut w = vec![0.0f64; mlen];
        for i in 0..mlen {
            let mut s = 0.0;
            for j in 0..mlen {
                s += m[idx(k + 1 + i, k + 1 + j)] * v[j];
            }
            w[i] = beta * s;
        }
        let coef = 0.5 * beta * dot(&v, &w);
        for i in 0..mlen {
            w[i] -= coef * v[i];
        }
        // B <- B - v w^T - w v^T.
        for i in 0..mlen {
            for j in 0..mlen {
                m[idx(k + 1 + i, k + 1 + j)] -= v[i] * w[j] + w[i] * v[j];
            }
        }
        m[idx(k + 1, k)] = alpha;
        m[idx(k, k + 1)] = alpha;
        for i in 1..mlen {
            m[idx(k + 1 + i, k)] = 0.0;
            m[idx(k, k + 1 + i)] = 0.0;
        }
    }
    let d: Vec<f64> = (0..n).map(|i| m[idx(i, i)]).collect();
    let mut e = vec![0.0f64; n];
    for i in 1..n {
        e[i] = m[idx(i, i - 1)];
    }
    (d, e)
}

/// QL with implicit shifts on a tridiagonal matrix; mutates `d` into the
/// eigenvalues. Subdiagonal `e` uses indices `1..n`.
fn ql_implicit_shifts(d: &mut [f64], e: &mut [f64]) -> Result<(), LinalgError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(LinalgError::NoConvergence);
                }
                // Compute implicit shift.
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;
                // Implicit QL transformation.
                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
