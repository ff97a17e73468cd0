//! Total-variation minimization under linear measurements:
//!
//! ```text
//! minimize ||Dz||_1  subject to  y = Az              (eta = 0)
//! minimize ||Dz||_1  subject to  ||y - Az||_2 <= eta  (eta > 0)
//! ```
//!
//! The equality-constrained program is reduced to the affine feasible set
//! `z = x_p + B v`, with `x_p` the minimum-norm solution and `B` an orthonormal
//! basis of `null(A)`, and then solved by ADMM on the splitting
//! `w = D(x_p + Bv)`. Every iterate is feasible up to rounding. The v-update
//! is a least-squares solve against the cached Cholesky factor of
//! `(DB)^T (DB)`, which does not depend on the penalty, so the penalty can be
//! rebalanced freely.
//!
//! The noise-tolerant program splits on `(Dz, Az)` with the second block
//! projected onto the Euclidean ball of radius `eta` around `y`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::diffop::tv_norm;
use crate::error::{Error, Result};

/// Measurement model `y = Az + e` with `||e|| <= eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct TvProblem {
    a: DMatrix<f64>,
    y: DVector<f64>,
    eta: f64,
}

impl TvProblem {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>, eta: f64) -> Result<Self> {
        if a.nrows() == 0 {
            return Err(Error::invalid("measurement matrix has no rows"));
        }
        if a.ncols() < 2 {
            return Err(Error::invalid("signals need at least two entries"));
        }
        if y.len() != a.nrows() {
            return Err(Error::invalid(format!("{} measurements but the matrix has {} rows", y.len(), a.nrows())));
        }
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::invalid(format!("eta must be finite and >= 0, got {eta}")));
        }
        if a.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("measurement data contains non-finite values"));
        }
        Ok(Self { a, y, eta })
    }

    /// Noiseless problem with `y = A x`.
    pub fn from_signal(a: DMatrix<f64>, x: &[f64]) -> Result<Self> {
        if x.len() != a.ncols() {
            return Err(Error::invalid(format!("signal has length {}, matrix has {} columns", x.len(), a.ncols())));
        }
        let y = &a * DVector::from_column_slice(x);
        Self::new(a, y, 0.0)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `||Az - y||_2`.
    pub fn misfit(&self, z: &[f64]) -> f64 {
        (&self.a * DVector::from_column_slice(z) - &self.y).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Initial ADMM penalty.
    pub rho: f64,
    /// Iterations between residual-balancing penalty updates; 0 disables them.
    pub balance_every: usize,
    /// Try to certify an exact vertex solution from the current sparsity
    /// pattern (equality mode only).
    pub polish: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { abs_tol: 1e-9, rel_tol: 1e-9, max_iter: 100_000, rho: 1.0, balance_every: 100, polish: true }
    }
}

impl SolverParams {
    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol >= 0.0 && self.rho > 0.0) || self.max_iter == 0 {
            return Err(Error::invalid(format!("invalid solver parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub x_hat: Vec<f64>,
    /// `||D x_hat||_1`.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the returned point came from a certified polishing step.
    pub polished: bool,
}

const RANK_TOL: f64 = 1e-10;

/// Solves the TV program. Hitting the iteration cap is not an error: the
/// result comes back with `converged == false`.
pub fn solve_tv(problem: &TvProblem, params: &SolverParams) -> Result<SolverResult> {
    params.validate()?;
    if problem.eta == 0.0 {
        solve_equality(problem, params)
    } else {
        solve_noisy(problem, params)
    }
}

fn forward(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(x.len() - 1, x.as_slice().windows(2).map(|w| w[0] - w[1]))
}

fn soft(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

struct AffineSet {
    x_p: DVector<f64>,
    /// Orthonormal basis of `null(A)`, `n x (n - m)`.
    basis: DMatrix<f64>,
}

/// Minimum-norm solution and null-space basis from a full QR of `A^T`.
fn affine_feasible_set(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<AffineSet> {
    let (m, n) = a.shape();
    if m > n {
        return Err(Error::RankDeficient(format!("{m} x {n} matrix cannot have full row rank")));
    }
    // Padding A^T with zero columns makes nalgebra return a square Q.
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (n, m)).copy_from(&a.transpose());
    let qr = padded.qr();
    let (q, r) = (qr.q(), qr.r());
    let r_diag: Vec<f64> = (0..m).map(|i| r[(i, i)].abs()).collect();
    let scale = r_diag.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 || r_diag.iter().any(|&d| d <= RANK_TOL * scale) {
        return Err(Error::RankDeficient(format!(
            "smallest |R_ii| / largest = {:e}",
            r_diag.iter().cloned().fold(f64::INFINITY, f64::min) / scale
        )));
    }
    // A = R1^T Q1^T, so x_p = Q1 R1^{-T} y.
    let r1 = r.view((0, 0), (m, m)).into_owned();
    let w = r1
        .transpose()
        .solve_lower_triangular(y)
        .ok_or_else(|| Error::RankDeficient("singular triangular factor".into()))?;
    let x_p = q.columns(0, m) * w;
    let basis = q.columns(m, n - m).into_owned();
    Ok(AffineSet { x_p, basis })
}

fn solve_equality(problem: &TvProblem, params: &SolverParams) -> Result<SolverResult> {
    let n = problem.n();
    let AffineSet { x_p, basis } = affine_feasible_set(&problem.a, &problem.y)?;
    let dim = basis.ncols();
    if dim == 0 {
        let objective = tv_norm(x_p.as_slice());
        return Ok(SolverResult {
            x_hat: x_p.as_slice().to_vec(),
            objective,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            converged: true,
            polished: false,
        });
    }

    let p = n - 1;
    let mut mat = DMatrix::zeros(p, dim);
    for j in 0..dim {
        let col = forward(&basis.column(j).into_owned());
        mat.set_column(j, &col);
    }
    let offset = forward(&x_p);
    let chol = Cholesky::new(mat.transpose() * &mat)
        .ok_or_else(|| Error::RankDeficient("measurement matrix annihilates constant signals".into()))?;

    let mut rho = params.rho;
    let mut v = DVector::zeros(dim);
    let mut w = offset.clone();
    let mut u = DVector::zeros(p);
    let mut mv = DVector::zeros(p);
    let mut rhs = DVector::zeros(dim);
    let mut w_old = DVector::zeros(p);
    let mut tmp = DVector::zeros(p);
    let sqrt_p = (p as f64).sqrt();
    let sqrt_dim = (dim as f64).sqrt();
    let c_norm = offset.norm();

    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    for iter in 1..=params.max_iter {
        // v-update: (M^T M) v = M^T (w - c - u)
        tmp.copy_from(&w);
        tmp -= &offset;
        tmp -= &u;
        rhs.gemv_tr(1.0, &mat, &tmp, 0.0);
        chol.solve_mut(&mut rhs);
        v.copy_from(&rhs);
        mv.gemv(1.0, &mat, &v, 0.0);

        // w-update
        w_old.copy_from(&w);
        let kappa = 1.0 / rho;
        for i in 0..p {
            w[i] = soft(mv[i] + offset[i] + u[i], kappa);
        }

        // dual update and residuals
        let mut r_sq = 0.0;
        for i in 0..p {
            let r = mv[i] + offset[i] - w[i];
            u[i] += r;
            r_sq += r * r;
            tmp[i] = w[i] - w_old[i];
        }
        primal = r_sq.sqrt();
        rhs.gemv_tr(rho, &mat, &tmp, 0.0);
        dual = rhs.norm();

        let eps_pri = sqrt_p * params.abs_tol + params.rel_tol * mv.norm().max(w.norm()).max(c_norm);
        rhs.gemv_tr(rho, &mat, &u, 0.0);
        let eps_dual = sqrt_dim * params.abs_tol + params.rel_tol * rhs.norm();

        if params.polish && iter % POLISH_EVERY == 0 {
            let dual_estimate = &u * rho;
            if let Some(pol) = polish(&mat, &offset, &w, &dual_estimate) {
                let x_hat = &x_p + &basis * &pol.v;
                return Ok(SolverResult {
                    objective: tv_norm(x_hat.as_slice()),
                    x_hat: x_hat.as_slice().to_vec(),
                    primal_residual: pol.primal_residual,
                    dual_residual: pol.dual_residual,
                    iterations: iter,
                    converged: true,
                    polished: true,
                });
            }
        }

        if primal <= eps_pri && dual <= eps_dual {
            let x_hat = &x_p + &basis * &v;
            return Ok(SolverResult {
                objective: tv_norm(x_hat.as_slice()),
                x_hat: x_hat.as_slice().to_vec(),
                primal_residual: primal,
                dual_residual: dual,
                iterations: iter,
                converged: true,
                polished: false,
            });
        }

        if params.balance_every > 0 && iter % params.balance_every == 0 {
            if primal > BALANCE_RATIO * dual {
                rho *= 2.0;
                u /= 2.0;
            } else if dual > BALANCE_RATIO * primal {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }

    let x_hat = &x_p + &basis * &v;
    Ok(SolverResult {
        objective: tv_norm(x_hat.as_slice()),
        x_hat: x_hat.as_slice().to_vec(),
        primal_residual: primal,
        dual_residual: dual,
        iterations: params.max_iter,
        converged: false,
        polished: false,
    })
}

const BALANCE_RATIO: f64 = 10.0;
const POLISH_EVERY: usize = 50;

struct Polished {
    v: DVector<f64>,
    primal_residual: f64,
    dual_residual: f64,
}

/// Certifies a vertex solution from the zero pattern of `w`.
///
/// With `Z` the rows where `w` vanishes, solve `M_Z v = -c_Z` (exactly
/// determined when the pattern is right). The point is optimal iff some
/// `u` with `u = sgn(Mv + c)` off `Z` and `|u_Z| <= 1` has `M^T u = 0`.
/// `u_Z` is the smallest correction of the ADMM multiplier estimate that
/// satisfies the equality, and the box is then checked directly.
fn polish(
    mat: &DMatrix<f64>,
    offset: &DVector<f64>,
    w: &DVector<f64>,
    dual_estimate: &DVector<f64>,
) -> Option<Polished> {
    let (p, dim) = mat.shape();
    let zero_rows: Vec<usize> = (0..p).filter(|&i| w[i] == 0.0).collect();
    if zero_rows.len() < dim {
        return None;
    }
    let mz = DMatrix::from_fn(zero_rows.len(), dim, |r, c| mat[(zero_rows[r], c)]);
    let cz = DVector::from_iterator(zero_rows.len(), zero_rows.iter().map(|&i| -offset[i]));
    let svd = mz.clone().svd(true, true);
    let v = svd.solve(&cz, 1e-12).ok()?;
    let fit = (&mz * &v - &cz).amax();
    let scale = 1.0 + cz.amax();
    if fit > POLISH_TOL * scale {
        return None;
    }

    let resid = mat * &v + offset;
    let mut on_zero = vec![false; p];
    for &i in &zero_rows {
        on_zero[i] = true;
    }
    // Rows off Z must keep the sign pattern that w had.
    let mut signs = DVector::zeros(p);
    for i in 0..p {
        if !on_zero[i] {
            if resid[i] * w[i] <= 0.0 {
                return None;
            }
            signs[i] = w[i].signum();
        }
    }
    // M_Z^T u_Z = -M_{Z^c}^T sgn
    let target = -(mat.transpose() * &signs);
    let mzt = mz.transpose();
    let u0 = DVector::from_iterator(zero_rows.len(), zero_rows.iter().map(|&i| dual_estimate[i]));
    let correction = mzt.clone().svd(true, true).solve(&(&target - &mzt * &u0), 1e-12).ok()?;
    let u_z = u0 + correction;
    let dual_fit = (&mzt * &u_z - &target).amax();
    if dual_fit > POLISH_TOL * (1.0 + target.amax()) || u_z.amax() > 1.0 + POLISH_TOL {
        return None;
    }
    Some(Polished {
        v,
        primal_residual: resid.iter().zip(&on_zero).filter(|(_, z)| **z).map(|(r, _)| r.abs()).fold(0.0, f64::max),
        dual_residual: dual_fit,
    })
}

const POLISH_TOL: f64 = 1e-9;

fn solve_noisy(problem: &TvProblem, params: &SolverParams) -> Result<SolverResult> {
    let (m, n) = problem.a.shape();
    let p = n - 1;
    let eta = problem.eta;
    let y = &problem.y;

    // F = [D; A]
    let mut f = DMatrix::zeros(p + m, n);
    for i in 0..p {
        f[(i, i)] = 1.0;
        f[(i, i + 1)] = -1.0;
    }
    f.view_mut((p, 0), (m, n)).copy_from(&problem.a);
    let chol = Cholesky::new(f.transpose() * &f)
        .ok_or_else(|| Error::RankDeficient("measurement matrix annihilates constant signals".into()))?;

    let rows = p + m;
    let mut rho = params.rho;
    let mut z = DVector::zeros(n);
    let mut w = DVector::zeros(rows);
    w.rows_mut(p, m).copy_from(y);
    let mut u = DVector::zeros(rows);
    let mut fz = DVector::zeros(rows);
    let mut tmp = DVector::zeros(rows);
    let mut w_old = DVector::zeros(rows);
    let mut grad = DVector::zeros(n);
    let sqrt_rows = (rows as f64).sqrt();
    let sqrt_n = (n as f64).sqrt();

    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for iter in 1..=params.max_iter {
        iterations = iter;
        tmp.copy_from(&w);
        tmp -= &u;
        z.gemv_tr(1.0, &f, &tmp, 0.0);
        chol.solve_mut(&mut z);
        fz.gemv(1.0, &f, &z, 0.0);

        w_old.copy_from(&w);
        let kappa = 1.0 / rho;
        for i in 0..p {
            w[i] = soft(fz[i] + u[i], kappa);
        }
        // project A z + u onto the ball around y
        let mut dist_sq = 0.0;
        for i in 0..m {
            let d = fz[p + i] + u[p + i] - y[i];
            dist_sq += d * d;
        }
        let shrink = if dist_sq.sqrt() > eta { eta / dist_sq.sqrt() } else { 1.0 };
        for i in 0..m {
            w[p + i] = y[i] + shrink * (fz[p + i] + u[p + i] - y[i]);
        }

        let mut r_sq = 0.0;
        for i in 0..rows {
            let r = fz[i] - w[i];
            u[i] += r;
            r_sq += r * r;
            tmp[i] = w[i] - w_old[i];
        }
        primal = r_sq.sqrt();
        grad.gemv_tr(rho, &f, &tmp, 0.0);
        dual = grad.norm();
        let eps_pri = sqrt_rows * params.abs_tol + params.rel_tol * fz.norm().max(w.norm());
        grad.gemv_tr(rho, &f, &u, 0.0);
        let eps_dual = sqrt_n * params.abs_tol + params.rel_tol * grad.norm();
        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }
        if params.balance_every > 0 && iter % params.balance_every == 0 {
            if primal > BALANCE_RATIO * dual {
                rho *= 2.0;
                u /= 2.0;
            } else if dual > BALANCE_RATIO * primal {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    Ok(SolverResult {
        objective: tv_norm(z.as_slice()),
        x_hat: z.as_slice().to_vec(),
        primal_residual: primal,
        dual_residual: dual,
        iterations,
        converged,
        polished: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::generate_signal;
    use crate::seed;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = seed::rng(seed);
        DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn determined_system_is_inverted() {
        for seed in 0..20 {
            let x = generate_signal(12, 4, seed).unwrap().x;
            let problem = TvProblem::from_signal(gaussian_matrix(12, 12, seed + 100), &x).unwrap();
            let r = solve_tv(&problem, &SolverParams::default()).unwrap();
            assert!(r.converged);
            assert!(dist(&r.x_hat, &x) <= 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn constant_signal_from_one_measurement() {
        for seed in 0..20 {
            let x = vec![1.7; 10];
            let problem = TvProblem::from_signal(gaussian_matrix(1, 10, seed), &x).unwrap();
            let r = solve_tv(&problem, &SolverParams::default()).unwrap();
            assert!(r.converged);
            assert!(dist(&r.x_hat, &x) <= 1e-6, "seed {seed}: {:?}", r.x_hat);
        }
    }

    #[test]
    fn admm_without_polishing_recovers_easy_instance() {
        let x = generate_signal(30, 2, 5).unwrap().x;
        let problem = TvProblem::from_signal(gaussian_matrix(20, 30, 6), &x).unwrap();
        let params = SolverParams { polish: false, ..Default::default() };
        let r = solve_tv(&problem, &params).unwrap();
        assert!(r.converged && !r.polished);
        assert!(dist(&r.x_hat, &x) <= 1e-6);
        assert!(r.primal_residual <= 1e-6 && r.dual_residual <= 1e-6);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let mut a = gaussian_matrix(4, 10, 1);
        let row = a.row(0).into_owned();
        a.set_row(1, &row);
        let problem = TvProblem::new(a, DVector::zeros(4), 0.0).unwrap();
        assert!(matches!(solve_tv(&problem, &SolverParams::default()), Err(Error::RankDeficient(_))));

        let problem = TvProblem::new(gaussian_matrix(11, 10, 2), DVector::zeros(11), 0.0).unwrap();
        assert!(matches!(solve_tv(&problem, &SolverParams::default()), Err(Error::RankDeficient(_))));

        // Rows orthogonal to the constant vector: full rank, constants are free.
        let mut a = gaussian_matrix(3, 8, 3);
        for mut r in a.row_iter_mut() {
            let mean = r.mean();
            r.add_scalar_mut(-mean);
        }
        let problem = TvProblem::new(a, DVector::zeros(3), 0.0).unwrap();
        let r = solve_tv(&problem, &SolverParams::default()).unwrap();
        assert!(r.objective <= 1e-9);
    }

    #[test]
    fn problem_validation() {
        assert!(TvProblem::new(DMatrix::zeros(0, 5), DVector::zeros(0), 0.0).is_err());
        assert!(TvProblem::new(gaussian_matrix(2, 5, 0), DVector::zeros(3), 0.0).is_err());
        assert!(TvProblem::new(gaussian_matrix(2, 5, 0), DVector::zeros(2), -1.0).is_err());
        assert!(TvProblem::new(gaussian_matrix(2, 5, 0), DVector::zeros(2), f64::NAN).is_err());
        let problem = TvProblem::new(gaussian_matrix(2, 5, 0), DVector::zeros(2), 0.0).unwrap();
        let bad = SolverParams { abs_tol: 0.0, ..Default::default() };
        assert!(solve_tv(&problem, &bad).is_err());
    }

    /// Projected subgradient descent on `{z : Az = y}` started at `x_true`,
    /// with diminishing steps; returns the best objective seen.
    fn subgradient_oracle(a: &DMatrix<f64>, x_true: &[f64], iterations: usize) -> f64 {
        let n = a.ncols();
        // projector onto null(A): I - A^T (A A^T)^{-1} A
        let aat_inv = (a * a.transpose()).try_inverse().unwrap();
        let proj = DMatrix::identity(n, n) - a.transpose() * aat_inv * a;
        let mut z = DVector::from_column_slice(x_true);
        let mut best = tv_norm(x_true);
        let mut g = DVector::zeros(n);
        let mut step_dir = DVector::zeros(n);
        for k in 0..iterations {
            g.fill(0.0);
            for i in 0..n - 1 {
                let sgn = (z[i] - z[i + 1]).signum() * ((z[i] - z[i + 1]) != 0.0) as u8 as f64;
                g[i] += sgn;
                g[i + 1] -= sgn;
            }
            step_dir.gemv(1.0, &proj, &g, 0.0);
            let norm = step_dir.norm();
            if norm == 0.0 {
                break;
            }
            let step = 0.05 / ((k + 1) as f64).sqrt();
            z.axpy(-step / norm, &step_dir, 1.0);
            best = best.min(tv_norm(z.as_slice()));
        }
        best
    }

    #[test]
    fn objective_matches_subgradient_oracle_on_tiny_instances() {
        for inst in 0..10u64 {
            let x = generate_signal(8, 1, 500 + inst).unwrap().x;
            let a = gaussian_matrix(6, 8, 900 + inst);
            let problem = TvProblem::from_signal(a.clone(), &x).unwrap();
            let r = solve_tv(&problem, &SolverParams::default()).unwrap();
            assert!(r.converged);
            let oracle = subgradient_oracle(&a, &x, 1_000_000);
            assert!((r.objective - oracle).abs() <= 1e-4, "instance {inst}: solver {} oracle {oracle}", r.objective);
        }
    }

    #[test]
    fn permutation_and_scaling_invariance() {
        let x = generate_signal(40, 3, 8).unwrap().x;
        let a = gaussian_matrix(25, 40, 9);
        let base = solve_tv(&TvProblem::from_signal(a.clone(), &x).unwrap(), &SolverParams::default()).unwrap();

        let mut perm: Vec<usize> = (0..25).collect();
        perm.reverse();
        perm.swap(3, 17);
        let a_perm = DMatrix::from_fn(25, 40, |i, j| a[(perm[i], j)]);
        let permuted = solve_tv(&TvProblem::from_signal(a_perm, &x).unwrap(), &SolverParams::default()).unwrap();
        assert!(dist(&base.x_hat, &permuted.x_hat) <= 1e-6);

        let y = &a * DVector::from_column_slice(&x);
        let scaled = TvProblem::new(&a * 10.0, y * 10.0, 0.0).unwrap();
        let scaled = solve_tv(&scaled, &SolverParams::default()).unwrap();
        assert!(dist(&base.x_hat, &scaled.x_hat) <= 1e-6);
    }

    #[test]
    fn noisy_mode_respects_the_ball() {
        let n = 30;
        let x = generate_signal(n, 3, 4).unwrap().x;
        let a = gaussian_matrix(20, n, 5);
        let mut rng = seed::rng(6);
        let e: DVector<f64> = DVector::from_fn(20, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            0.01 * v
        });
        let eta = e.norm() * 1.01;
        let y = &a * DVector::from_column_slice(&x) + &e;
        let problem = TvProblem::new(a, y, eta).unwrap();
        let r = solve_tv(&problem, &SolverParams::default()).unwrap();
        assert!(r.converged);
        assert!(problem.misfit(&r.x_hat) <= eta + 1e-8);
        assert!(r.objective <= tv_norm(&x) + 1e-6);
        assert!(dist(&r.x_hat, &x) < 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn feasible_and_no_worse_than_truth(n in 6usize..40, s_frac in 0.0f64..0.5, m_frac in 0.1f64..1.0, seed in any::<u64>()) {
            let s = ((n - 1) as f64 * s_frac) as usize;
            let m = ((n as f64 * m_frac) as usize).max(1);
            let x = generate_signal(n, s, seed).unwrap().x;
            let problem = TvProblem::from_signal(gaussian_matrix(m, n, seed ^ 0xABCD), &x).unwrap();
            let r = solve_tv(&problem, &SolverParams::default()).unwrap();
            prop_assert!(r.converged);
            prop_assert!(r.objective >= 0.0);
            prop_assert!(problem.misfit(&r.x_hat) <= 1e-8 * (1.0 + problem.y().norm()));
            prop_assert!(r.objective <= tv_norm(&x) + 1e-6);
        }
    }
}
