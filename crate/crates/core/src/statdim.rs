//! Monte Carlo estimation of `inf_t E dist^2(g, t dTV(x))`.
//!
//! The TV subdifferential at `x` is `{D^T z : z_S = sgn(Dx)_S, |z_j| <= 1 off S}`.
//! The squared distance from `g` to its `t`-dilation is a box-constrained
//! least-squares problem in the free coordinates `z_{S^c}`. Maximal runs of
//! consecutive free rows touch disjoint coordinates, so the problem splits
//! into independent path-graph box QPs (see [`crate::boxqp`]).

use std::f64::consts::PI;
use std::io::{self, Write};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bounds;
use crate::boxqp::{self, BoxQpSolution};
use crate::diffop::{adjoint_into, DifferenceOperator, GradientSparseSignal};
use crate::error::{Error, Result};
use crate::seed;

const PG_TOL: f64 = 1e-9;
const PG_MAX_ITER: usize = 20_000;
/// Stationarity residual above which a projection is reported as failed.
pub const KKT_TOL: f64 = 1e-8;

/// How the box QP behind a projection is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMethod {
    /// Exact dual TV-denoising solve on each run, projected gradient if its
    /// certificate fails.
    #[default]
    Direct,
    /// Projected gradient with step `1/4` only.
    ProjectedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Run {
    start: usize,
    len: usize,
}

/// The TV subdifferential at a signal: fixed signs on the gradient support,
/// a free `[-1, 1]` box on its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdifferentialModel {
    n: usize,
    support: Vec<usize>,
    fixed_signs: Vec<f64>,
    runs: Vec<Run>,
}

impl SubdifferentialModel {
    pub fn new(n: usize, support: Vec<usize>, fixed_signs: Vec<f64>) -> Result<Self> {
        DifferenceOperator::new(n)?;
        if support.len() != fixed_signs.len() {
            return Err(Error::invalid(format!("{} support rows but {} signs", support.len(), fixed_signs.len())));
        }
        if fixed_signs.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::invalid("fixed signs must be +1 or -1"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("support must be strictly increasing"));
        }
        if support.last().is_some_and(|&i| i >= n - 1) {
            return Err(Error::invalid(format!("support row out of range 0..{}", n - 1)));
        }

        let mut runs = Vec::new();
        let mut start = 0;
        for &i in support.iter().chain(std::iter::once(&(n - 1))) {
            if i > start {
                runs.push(Run { start, len: i - start });
            }
            start = i + 1;
        }
        Ok(Self { n, support, fixed_signs, runs })
    }

    pub fn from_signal(signal: &GradientSparseSignal) -> Result<Self> {
        Self::new(signal.n(), signal.support.clone(), signal.support_signs())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn fixed_signs(&self) -> &[f64] {
        &self.fixed_signs
    }

    pub fn s(&self) -> usize {
        self.support.len()
    }

    /// Whether `z` (length `n - 1`) generates a point of the subdifferential.
    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.n - 1
            && z.iter().all(|v| v.abs() <= 1.0)
            && self.support.iter().zip(&self.fixed_signs).all(|(&i, &sg)| z[i] == sg)
    }

    fn fixed_part(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n - 1];
        for (&i, &sg) in self.support.iter().zip(&self.fixed_signs) {
            z[i] = sg;
        }
        z
    }

    fn check(&self, g: &[f64], t: f64) -> Result<()> {
        if g.len() != self.n {
            return Err(Error::invalid(format!("g has length {}, expected {}", g.len(), self.n)));
        }
        if !t.is_finite() || t < 0.0 {
            return Err(Error::invalid(format!("t must be finite and >= 0, got {t}")));
        }
        Ok(())
    }
}

/// Exact squared distance and the minimizing subgradient coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub value: f64,
    /// Coefficients `z` (length `n - 1`) of the closest point `t D^T z`.
    pub z: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

fn squared_residual(g: &[f64], t: f64, z: &[f64]) -> f64 {
    let mut dtz = vec![0.0; g.len()];
    adjoint_into(z, &mut dtz);
    g.iter().zip(&dtz).map(|(gi, di)| (gi - t * di).powi(2)).sum()
}

/// `min { ||g - t D^T z||^2 : z in the subdifferential coefficients }`.
pub fn dist_sq_to_scaled_subdiff(model: &SubdifferentialModel, g: &[f64], t: f64) -> Result<Projection> {
    dist_sq_with(model, g, t, ProjectionMethod::default())
}

pub fn dist_sq_with(model: &SubdifferentialModel, g: &[f64], t: f64, method: ProjectionMethod) -> Result<Projection> {
    model.check(g, t)?;
    let mut z = model.fixed_part();
    if t == 0.0 {
        let value = g.iter().map(|v| v * v).sum();
        return Ok(Projection { value, z, kkt_residual: 0.0, iterations: 0 });
    }

    // r0 = g - t D_S^T sgn_S
    let mut r0 = vec![0.0; model.n];
    adjoint_into(&z, &mut r0);
    for (r, gi) in r0.iter_mut().zip(g) {
        *r = gi - t * *r;
    }

    let mut kkt: f64 = 0.0;
    let mut iterations = 0;
    for run in &model.runs {
        // b = D_run r0 / t over the run's rows
        let b: Vec<f64> = (run.start..run.start + run.len).map(|j| (r0[j] - r0[j + 1]) / t).collect();
        let sol = solve_run(&b, method);
        if !sol.converged || sol.kkt_residual > KKT_TOL {
            return Err(Error::ProjectionNotConverged {
                sample: None,
                residual: sol.kkt_residual,
                iterations: sol.iterations,
            });
        }
        z[run.start..run.start + run.len].copy_from_slice(&sol.z);
        kkt = kkt.max(sol.kkt_residual);
        iterations += sol.iterations;
    }

    Ok(Projection { value: squared_residual(g, t, &z), z, kkt_residual: kkt, iterations })
}

fn solve_run(b: &[f64], method: ProjectionMethod) -> BoxQpSolution {
    match method {
        ProjectionMethod::Direct => {
            let sol = boxqp::solve_direct(b);
            if sol.kkt_residual <= KKT_TOL {
                sol
            } else {
                boxqp::solve_projected_gradient(b, Some(&sol.z), PG_TOL, PG_MAX_ITER)
            }
        }
        ProjectionMethod::ProjectedGradient => boxqp::solve_projected_gradient(b, None, PG_TOL, PG_MAX_ITER),
    }
}

/// Stationarity residual of `z` for the projection of `g` at scale `t`,
/// measured in the free coordinates of the normalized problem.
pub fn projection_kkt_residual(model: &SubdifferentialModel, g: &[f64], t: f64, z: &[f64]) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    // grad_j = (D (D^T z - g / t))_j for free j
    let mut dtz = vec![0.0; model.n];
    adjoint_into(z, &mut dtz);
    let w: Vec<f64> = dtz.iter().zip(g).map(|(d, gi)| d - gi / t).collect();
    model
        .runs
        .iter()
        .flat_map(|r| r.start..r.start + r.len)
        .map(|j| {
            let grad = w[j] - w[j + 1];
            (z[j] - (z[j] - grad).clamp(-1.0, 1.0)).abs()
        })
        .fold(0.0, f64::max)
}

/// `||g - t D^T z0||^2` with `z0 = sgn(Dx)` on the support and `sgn(Dg)` off it.
pub fn surrogate_dist_sq(model: &SubdifferentialModel, g: &[f64], t: f64) -> Result<f64> {
    model.check(g, t)?;
    Ok(squared_residual(g, t, &surrogate_point(model, g)))
}

/// Subgradient coefficients maximizing `<g, D^T z>` over the subdifferential.
pub fn surrogate_point(model: &SubdifferentialModel, g: &[f64]) -> Vec<f64> {
    let mut z = model.fixed_part();
    for run in &model.runs {
        for j in run.start..run.start + run.len {
            z[j] = sign(g[j] - g[j + 1]);
        }
    }
    z
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A standard Gaussian vector for sample `index` under `master_seed`.
pub fn gaussian_sample(n: usize, master_seed: u64, index: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(master_seed, &[index]));
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Monte Carlo curve `t -> mean dist^2` with common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub t_grid: Vec<f64>,
    pub mean_dist_sq: Vec<f64>,
    pub std_err: Vec<f64>,
    pub t_hat: f64,
    /// Minimum of `mean_dist_sq`.
    pub delta_hat: f64,
    pub num_samples: usize,
    pub seed: u64,
}

impl EstimatorResult {
    /// Standard error at the curve minimum.
    pub fn delta_hat_std_err(&self) -> f64 {
        self.std_err[self.argmin()]
    }

    fn argmin(&self) -> usize {
        self.mean_dist_sq
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
            .0
    }

    fn refresh_minimum(&mut self) {
        let i = self.argmin();
        self.t_hat = self.t_grid[i];
        self.delta_hat = self.mean_dist_sq[i];
    }

    pub const CSV_HEADER: &'static str = "t,mean_dist_sq,std_err";

    /// Curve CSV at full precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for ((t, m), se) in self.t_grid.iter().zip(&self.mean_dist_sq).zip(&self.std_err) {
            writeln!(w, "{t:?},{m:?},{se:?}")?;
        }
        Ok(())
    }

    /// Key-value summary: `delta_hat`, `t_hat`, `N`, `seed`.
    pub fn write_summary<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "delta_hat={:?}", self.delta_hat)?;
        writeln!(w, "t_hat={:?}", self.t_hat)?;
        writeln!(w, "N={}", self.num_samples)?;
        writeln!(w, "seed={}", self.seed)
    }
}

/// The samples behind one estimate; `g_i` depends only on `(seed, i)`.
struct SampleBank {
    samples: Vec<Vec<f64>>,
}

impl SampleBank {
    fn draw(n: usize, num_samples: usize, seed: u64) -> Self {
        let samples = (0..num_samples as u64).into_par_iter().map(|i| gaussian_sample(n, seed, i)).collect();
        Self { samples }
    }

    /// Per-sample squared distances at `t`, in sample order.
    fn distances(&self, model: &SubdifferentialModel, t: f64) -> Result<Vec<f64>> {
        self.samples
            .par_iter()
            .enumerate()
            .map(|(i, g)| dist_sq_to_scaled_subdiff(model, g, t).map(|p| p.value).map_err(|e| with_sample(e, i)))
            .collect()
    }
}

fn with_sample(e: Error, i: usize) -> Error {
    match e {
        Error::ProjectionNotConverged { residual, iterations, .. } => {
            Error::ProjectionNotConverged { sample: Some(i), residual, iterations }
        }
        other => other,
    }
}

pub const MIN_SAMPLES: usize = 100;

fn check_estimate_args(t_grid: &[f64], num_samples: usize) -> Result<()> {
    if num_samples < MIN_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLES} samples, got {num_samples}")));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("t grid must be nonempty, finite and nonnegative"));
    }
    Ok(())
}

/// Evaluates the sample-mean curve on `t_grid` using the same `num_samples`
/// Gaussian vectors at every grid point.
pub fn estimate_curve(
    model: &SubdifferentialModel,
    t_grid: &[f64],
    num_samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    check_estimate_args(t_grid, num_samples)?;
    let bank = SampleBank::draw(model.n, num_samples, seed);
    curve_from_bank(model, t_grid, &bank, seed)
}

fn curve_from_bank(
    model: &SubdifferentialModel,
    t_grid: &[f64],
    bank: &SampleBank,
    seed: u64,
) -> Result<EstimatorResult> {
    let num_samples = bank.samples.len();
    let mut result = EstimatorResult {
        t_grid: t_grid.to_vec(),
        mean_dist_sq: Vec::with_capacity(t_grid.len()),
        std_err: Vec::with_capacity(t_grid.len()),
        t_hat: f64::NAN,
        delta_hat: f64::NAN,
        num_samples,
        seed,
    };
    for &t in t_grid {
        let (m, se) = seed::mean_and_stderr(&bank.distances(model, t)?);
        result.mean_dist_sq.push(m);
        result.std_err.push(se);
    }
    result.refresh_minimum();
    Ok(result)
}

pub const DEFAULT_GRID_POINTS: usize = 64;

/// `t = 0` followed by 64 geometric points spanning `[t*/8, 8 t*]`, where `t*`
/// minimizes the worst-case quadratic bound. With no free rows `t* = 0` and
/// the span falls back to `[1e-3, 1]`.
pub fn default_t_grid(n: usize, s: usize) -> Result<Vec<f64>> {
    let t_star = bounds::optimal_t(n, s)?;
    let (lo, hi) = if t_star > 0.0 { (t_star / 8.0, 8.0 * t_star) } else { (1e-3, 1.0) };
    let ratio = (hi / lo).powf(1.0 / (DEFAULT_GRID_POINTS - 1) as f64);
    let mut grid = vec![0.0];
    grid.extend((0..DEFAULT_GRID_POINTS).map(|k| lo * ratio.powi(k as i32)));
    Ok(grid)
}

const GOLDEN_STEPS: usize = 40;

/// Golden-section search for the minimum of the sample-mean curve between the
/// grid neighbours of the current minimizer. The refined point joins the
/// curve, keeping it sorted by `t`.
fn refine_minimum(model: &SubdifferentialModel, result: &mut EstimatorResult, bank: &SampleBank) -> Result<()> {
    let mut order: Vec<usize> = (0..result.t_grid.len()).collect();
    order.sort_by(|&a, &b| result.t_grid[a].total_cmp(&result.t_grid[b]));
    let pos = order.iter().position(|&i| i == result.argmin()).expect("argmin in grid");
    let mut lo = result.t_grid[order[pos.saturating_sub(1)]];
    let mut hi = result.t_grid[order[(pos + 1).min(order.len() - 1)]];
    if hi <= lo {
        return Ok(());
    }

    let mean_at =
        |t: f64| -> Result<f64> { Ok(seed::pairwise_sum(&bank.distances(model, t)?) / bank.samples.len() as f64) };
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (hi - r * (hi - lo), lo + r * (hi - lo));
    let (mut fc, mut fd) = (mean_at(c)?, mean_at(d)?);
    for _ in 0..GOLDEN_STEPS {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = mean_at(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = mean_at(d)?;
        }
    }
    let t = if fc < fd { c } else { d };
    let (m, se) = seed::mean_and_stderr(&bank.distances(model, t)?);
    let at = result.t_grid.partition_point(|&x| x < t);
    result.t_grid.insert(at, t);
    result.mean_dist_sq.insert(at, m);
    result.std_err.insert(at, se);
    result.refresh_minimum();
    Ok(())
}

/// Full estimator: the default grid followed by one golden-section refinement.
pub fn estimate_infimum(model: &SubdifferentialModel, num_samples: usize, seed: u64) -> Result<EstimatorResult> {
    let grid = default_t_grid(model.n, model.s())?;
    estimate_refined(model, &grid, num_samples, seed)
}

/// [`estimate_curve`] on `t_grid` (sorted ascending) plus golden-section
/// refinement around its minimum.
pub fn estimate_refined(
    model: &SubdifferentialModel,
    t_grid: &[f64],
    num_samples: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    let mut grid = t_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    check_estimate_args(&grid, num_samples)?;
    let bank = SampleBank::draw(model.n, num_samples, seed);
    let mut result = curve_from_bank(model, &grid, &bank, seed)?;
    refine_minimum(model, &mut result, &bank)?;
    Ok(result)
}

/// Empirical and closed-form sign correlation of two rows of `Dg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignCorrelation {
    pub j: usize,
    pub k: usize,
    pub estimate: f64,
    pub closed_form: f64,
    pub num_samples: usize,
}

/// `(2/pi) asin(<w_j, w_k> / (|w_j| |w_k|))` from the Gram structure.
pub fn sign_correlation_closed_form(j: usize, k: usize) -> f64 {
    // every row has squared norm exactly 2
    let cos = DifferenceOperator::gram(j, k) / 2.0;
    2.0 / PI * cos.asin()
}

const SIGN_CHUNK: usize = 1 << 14;
pub const MIN_SIGN_SAMPLES: usize = 1_000;

/// Sample mean of `sgn((Dg)_j) sgn((Dg)_k)` over `num_samples` Gaussian `g`.
pub fn sign_correlation(j: usize, k: usize, n: usize, num_samples: usize, seed: u64) -> Result<SignCorrelation> {
    DifferenceOperator::new(n)?;
    if j >= n - 1 || k >= n - 1 {
        return Err(Error::invalid(format!("rows ({j}, {k}) out of range 0..{}", n - 1)));
    }
    if num_samples < MIN_SIGN_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_SIGN_SAMPLES} samples, got {num_samples}")));
    }
    let chunks = num_samples.div_ceil(SIGN_CHUNK);
    let total: i64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng(seed::derive(seed, &[c as u64]));
            let count = SIGN_CHUNK.min(num_samples - c * SIGN_CHUNK);
            let mut g = vec![0.0; n];
            let mut acc = 0i64;
            for _ in 0..count {
                for v in g.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let a = sign(g[j] - g[j + 1]);
                let b = sign(g[k] - g[k + 1]);
                acc += (a * b) as i64;
            }
            acc
        })
        .sum();
    Ok(SignCorrelation {
        j,
        k,
        estimate: total as f64 / num_samples as f64,
        closed_form: sign_correlation_closed_form(j, k),
        num_samples,
    })
}

/// Correlations between row 0 and every row `k`, i.e. one entry per gap.
pub fn sign_correlation_table(n: usize, num_samples: usize, seed: u64) -> Result<Vec<SignCorrelation>> {
    (0..n.saturating_sub(1)).map(|k| sign_correlation(0, k, n, num_samples, seed::derive(seed, &[k as u64]))).collect()
}

pub const SIGN_CSV_HEADER: &str = "gap,j,k,estimate,closed_form,N";

pub fn write_sign_csv<W: Write>(mut w: W, rows: &[SignCorrelation]) -> io::Result<()> {
    writeln!(w, "{SIGN_CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{:?},{:?},{}", r.j.abs_diff(r.k), r.j, r.k, r.estimate, r.closed_form, r.num_samples)?;
    }
    Ok(())
}
