//! The one-dimensional difference operator and gradient-sparse signals.
//!
//! Row `i` of the operator is `e_i - e_{i+1}`, so `(Dx)_i = x_i - x_{i+1}`.
//! All indices in this crate are zero-based: rows run over `0..n-1` and
//! coordinates over `0..n`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

/// Matrix-free `(n-1) x n` forward-difference operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceOperator {
    n: usize,
}

impl DifferenceOperator {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("difference operator needs n >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of rows, `n - 1`.
    pub fn rows(&self) -> usize {
        self.n - 1
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::invalid(format!("apply: expected vector of length {}, got {}", self.n, x.len())));
        }
        let mut out = vec![0.0; self.rows()];
        forward_into(x, &mut out);
        Ok(out)
    }

    pub fn apply_adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.rows() {
            return Err(Error::invalid(format!(
                "apply_adjoint: expected vector of length {}, got {}",
                self.rows(),
                u.len()
            )));
        }
        let mut out = vec![0.0; self.n];
        adjoint_into(u, &mut out);
        Ok(out)
    }

    /// Entry `(j, k)` of the Gram matrix `D D^T`.
    pub fn gram(j: usize, k: usize) -> f64 {
        match j.abs_diff(k) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        }
    }

    /// Euclidean norm of every row.
    pub const ROW_NORM: f64 = std::f64::consts::SQRT_2;
}

/// `out[i] = x[i] - x[i+1]`; `out.len()` must be `x.len() - 1`.
pub(crate) fn forward_into(x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len() + 1, x.len());
    for (o, w) in out.iter_mut().zip(x.windows(2)) {
        *o = w[0] - w[1];
    }
}

/// `out = D^T u`; `out.len()` must be `u.len() + 1`.
pub(crate) fn adjoint_into(u: &[f64], out: &mut [f64]) {
    let p = u.len();
    debug_assert_eq!(out.len(), p + 1);
    if p == 0 {
        out[0] = 0.0;
        return;
    }
    out[0] = u[0];
    for i in 1..p {
        out[i] = u[i] - u[i - 1];
    }
    out[p] = -u[p - 1];
}

/// A piecewise-constant signal together with the support of its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSparseSignal {
    pub x: Vec<f64>,
    /// Sorted row indices where `Dx` is nonzero.
    pub support: Vec<usize>,
}

impl GradientSparseSignal {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn s(&self) -> usize {
        self.support.len()
    }

    /// `sgn(Dx)` restricted to the support, in support order.
    pub fn support_signs(&self) -> Vec<f64> {
        self.support.iter().map(|&i| (self.x[i] - self.x[i + 1]).signum()).collect()
    }

    /// Total variation `||Dx||_1`.
    pub fn total_variation(&self) -> f64 {
        tv_norm(&self.x)
    }
}

pub fn tv_norm(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[0] - w[1]).abs()).sum()
}

/// Draws a gradient `s`-sparse signal of length `n`.
///
/// The support is a uniform `s`-subset of the `n - 1` rows, the jumps are
/// i.i.d. standard normal and the signal is the cumulative sum anchored at
/// `x[n-1] = 0`.
pub fn generate_signal(n: usize, s: usize, seed: u64) -> Result<GradientSparseSignal> {
    if n < 2 {
        return Err(Error::invalid(format!("generate_signal: n must be >= 2, got {n}")));
    }
    if s > n - 1 {
        return Err(Error::invalid(format!("generate_signal: sparsity s = {s} exceeds n - 1 = {}", n - 1)));
    }
    let mut rng = seed::rng(seed);
    // Fisher-Yates prefix of length s over 0..n-1.
    let mut rows: Vec<usize> = (0..n - 1).collect();
    for i in 0..s {
        let j = rng.random_range(i..n - 1);
        rows.swap(i, j);
    }
    let mut support = rows[..s].to_vec();
    support.sort_unstable();

    let mut jumps = vec![0.0; n - 1];
    for &i in &support {
        jumps[i] = StandardNormal.sample(&mut rng);
    }
    let mut x = vec![0.0; n];
    for i in (0..n - 1).rev() {
        x[i] = x[i + 1] + jumps[i];
    }

    for &i in &support {
        if x[i] - x[i + 1] == 0.0 {
            return Err(Error::Domain(format!("generate_signal: jump at row {i} collapsed to zero")));
        }
    }
    Ok(GradientSparseSignal { x, support })
}

/// Equally spaced support of size `s` over the `n - 1` rows, e.g. rows
/// `{4, 14, 24, 34, 44}` for `n = 50, s = 5`.
pub fn equispaced_support(n: usize, s: usize) -> Result<Vec<usize>> {
    if n < 2 || s > n - 1 {
        return Err(Error::invalid(format!("equispaced_support: need 0 <= s <= n - 1, got n = {n}, s = {s}")));
    }
    let p = n - 1;
    Ok((0..s).map(|k| ((2 * k + 1) * p) / (2 * s)).collect())
}

/// Sparsity counts for a gradient support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportStats {
    pub s: usize,
    /// Size of the complement, `n - 1 - s`.
    pub s_bar: usize,
    /// Adjacent row pairs `(i-1, i)` both inside the support.
    pub s1: usize,
    /// Adjacent row pairs `(i-1, i)` both outside the support.
    pub s2: usize,
}

pub fn support_stats(n: usize, support: &[usize]) -> Result<SupportStats> {
    if n < 2 {
        return Err(Error::invalid(format!("support_stats: n must be >= 2, got {n}")));
    }
    let p = n - 1;
    let mut in_support = vec![false; p];
    for &i in support {
        if i >= p {
            return Err(Error::invalid(format!("support_stats: row index {i} out of range 0..{p}")));
        }
        if in_support[i] {
            return Err(Error::invalid(format!("support_stats: duplicate row index {i}")));
        }
        in_support[i] = true;
    }
    let s = support.len();
    let (mut s1, mut s2) = (0, 0);
    for w in in_support.windows(2) {
        match (w[0], w[1]) {
            (true, true) => s1 += 1,
            (false, false) => s2 += 1,
            _ => {}
        }
    }
    Ok(SupportStats { s, s_bar: p - s, s1, s2 })
}
