//! Closed-form sample-complexity bounds for 1-D TV minimization.
//!
//! The expected squared distance from a standard Gaussian vector to the
//! scaled subdifferential `t * dTV(x)` is bounded above by a quadratic in `t`
//! whose coefficients depend on the gradient sparsity `s` (worst case) or on
//! the support's adjacency counts (support-exact). Minimizing the worst-case
//! quadratic gives the main bound; `kabanava_bound` is the older baseline.

use std::f64::consts::PI;
use std::io::{self, Write};

use crate::diffop::SupportStats;
use crate::error::{Error, Result};
use crate::format::sig6;

fn check_ns(n: usize, s: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be >= 2, got {n}")));
    }
    if s > n - 1 {
        return Err(Error::invalid(format!("s = {s} exceeds n - 1 = {}", n - 1)));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!("t must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `n - 3 (n-1-s)^2 / (pi (2n + s - 4))`.
///
/// Undefined at `n = 2, s = 0`, where the denominator vanishes.
pub fn paper_bound(n: usize, s: usize) -> Result<f64> {
    check_ns(n, s)?;
    let denom = 2 * n + s;
    if denom <= 4 {
        return Err(Error::Domain(format!("bound undefined at n = {n}, s = {s}: 2n + s - 4 = 0")));
    }
    let (nf, s_bar) = (n as f64, (n - 1 - s) as f64);
    Ok(nf - 3.0 * s_bar * s_bar / (PI * (denom - 4) as f64))
}

/// Baseline bound `n - (n-1-s)^2 / (n pi)`.
pub fn kabanava_bound(n: usize, s: usize) -> Result<f64> {
    if n < 1 || s > n.saturating_sub(1) {
        return Err(Error::invalid(format!("kabanava_bound: need n >= 1 and s <= n - 1, got n = {n}, s = {s}")));
    }
    let (nf, s_bar) = (n as f64, (n - 1 - s) as f64);
    Ok(nf - s_bar * s_bar / (nf * PI))
}

/// Linear and quadratic coefficients `(a, b)` of `q(t) = n - a t + b t^2`.
fn worst_case_coefficients(n: usize, s: usize) -> (f64, f64) {
    let s_bar = (n - 1 - s) as f64;
    let a = 4.0 * s_bar / PI.sqrt();
    // 4s - 2 + (8/3) s_bar - 2/3 == (4/3)(2n + s - 4)
    let b = 4.0 * (2 * n + s) as f64 / 3.0 - 16.0 / 3.0;
    (a, b)
}

fn support_exact_coefficients(stats: &SupportStats) -> (f64, f64) {
    let a = 4.0 * stats.s_bar as f64 / PI.sqrt();
    let b = 2.0 * stats.s as f64 + 2.0 * stats.s1 as f64 + 2.0 * stats.s_bar as f64 + 2.0 * stats.s2 as f64 / 3.0;
    (a, b)
}

/// Worst-case quadratic upper bound on `E dist^2(g, t dTV(x))`, valid for any
/// support of size `s`.
pub fn quadratic_upper(n: usize, s: usize, t: f64) -> Result<f64> {
    check_ns(n, s)?;
    check_t(t)?;
    let (a, b) = worst_case_coefficients(n, s);
    Ok(n as f64 - a * t + b * t * t)
}

/// The tighter quadratic that uses the actual adjacency counts of a support.
pub fn support_exact_quadratic(n: usize, stats: &SupportStats, t: f64) -> Result<f64> {
    check_stats(n, stats)?;
    check_t(t)?;
    let (a, b) = support_exact_coefficients(stats);
    Ok(n as f64 - a * t + b * t * t)
}

/// Minimum over `t >= 0` of [`support_exact_quadratic`].
pub fn support_exact_minimum(n: usize, stats: &SupportStats) -> Result<f64> {
    check_stats(n, stats)?;
    let (a, b) = support_exact_coefficients(stats);
    Ok(n as f64 - a * a / (4.0 * b))
}

fn check_stats(n: usize, stats: &SupportStats) -> Result<()> {
    check_ns(n, stats.s)?;
    if stats.s + stats.s_bar != n - 1
        || stats.s1 > stats.s.saturating_sub(1)
        || stats.s2 > stats.s_bar.saturating_sub(1)
    {
        return Err(Error::invalid(format!("support stats {stats:?} inconsistent with n = {n}")));
    }
    Ok(())
}

/// Minimizer `t* = 3(n-1-s) / (2 sqrt(pi) (2n + s - 4))` of the worst-case
/// quadratic; zero when `s = n - 1`.
pub fn optimal_t(n: usize, s: usize) -> Result<f64> {
    check_ns(n, s)?;
    if s == n - 1 {
        return Ok(0.0);
    }
    let denom = (2 * n + s) as f64 - 4.0;
    Ok(3.0 * (n - 1 - s) as f64 / (2.0 * PI.sqrt() * denom))
}

/// Number of Gaussian measurements above which recovery holds:
/// `(sqrt(delta) + t + tau)^2 + 1`. Callers compare `m > threshold`.
///
/// With that many measurements, any solution of the noise-tolerant program
/// satisfies `||x_hat - x|| <= 2 eta / tau` with probability at least
/// `1 - exp(-t^2 / 2)`.
pub fn measurement_threshold(delta: f64, t: f64, tau: f64) -> Result<f64> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::invalid(format!("delta must be finite and >= 0, got {delta}")));
    }
    check_t(t)?;
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::invalid(format!("tau must be finite and > 0, got {tau}")));
    }
    let root = delta.sqrt() + t + tau;
    Ok(root * root + 1.0)
}

/// Success probability guaranteed by [`measurement_threshold`] for a given `t`.
pub fn guarantee_probability(t: f64) -> f64 {
    1.0 - (-t * t / 2.0).exp()
}

/// Error radius `2 eta / tau` guaranteed by [`measurement_threshold`].
pub fn guarantee_error(eta: f64, tau: f64) -> f64 {
    2.0 * eta / tau
}

/// Every closed-form quantity for one `(n, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub s: usize,
    pub paper_bound: f64,
    pub kabanava_bound: f64,
    pub t_star: f64,
}

impl BoundReport {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        Ok(Self {
            n,
            s,
            paper_bound: paper_bound(n, s)?,
            kabanava_bound: kabanava_bound(n, s)?,
            t_star: optimal_t(n, s)?,
        })
    }

    /// Measurements required by the main bound for probability parameter `t`
    /// and error parameter `tau`.
    pub fn threshold(&self, t: f64, tau: f64) -> Result<Threshold> {
        Ok(Threshold { t, tau, required_m: measurement_threshold(self.paper_bound, t, tau)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub t: f64,
    pub tau: f64,
    pub required_m: f64,
}

impl Threshold {
    pub fn probability(&self) -> f64 {
        guarantee_probability(self.t)
    }
}

/// Reports for `s` in `s_values`, skipping nothing: a domain error for any
/// `s` aborts the sweep.
pub fn sweep(n: usize, s_values: impl IntoIterator<Item = usize>) -> Result<Vec<BoundReport>> {
    s_values.into_iter().map(|s| BoundReport::new(n, s)).collect()
}

pub const CSV_HEADER: &str = "s,paper_bound,kabanava_bound,t_star";

/// Bound-curve CSV, six significant digits per value.
pub fn write_csv<W: Write>(mut w: W, reports: &[BoundReport]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(w, "{},{},{},{}", r.s, sig6(r.paper_bound), sig6(r.kabanava_bound), sig6(r.t_star))?;
    }
    Ok(())
}
