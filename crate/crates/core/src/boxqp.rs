//! Box-constrained quadratic programs with the path-graph Hessian
//! `H = tridiag(-1, 2, -1)`:
//!
//! ```text
//! minimize   1/2 z^T H z - b^T z
//! subject to -1 <= z_j <= 1
//! ```
//!
//! With `H = D D^T` for the difference operator `D` of one extra coordinate,
//! the problem is the dual of 1-D TV denoising and is solved exactly by
//! [`solve_direct`]. Projected gradient with step `1/4` (`lambda_max(H) < 4`)
//! is the fallback and an independent route for cross-checking.

/// Solution of a box QP together with its optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxQpSolution {
    pub z: Vec<f64>,
    /// `max_j |z_j - clip(z_j - grad_j)|`, zero exactly at a KKT point.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clip(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// `H z` for the path-graph Hessian.
pub fn hessian_apply(z: &[f64], out: &mut [f64]) {
    let k = z.len();
    for j in 0..k {
        let mut v = 2.0 * z[j];
        if j > 0 {
            v -= z[j - 1];
        }
        if j + 1 < k {
            v -= z[j + 1];
        }
        out[j] = v;
    }
}

/// Projected-gradient stationarity residual.
pub fn kkt_residual(b: &[f64], z: &[f64]) -> f64 {
    let mut hz = vec![0.0; z.len()];
    hessian_apply(z, &mut hz);
    z.iter().zip(hz.iter().zip(b)).map(|(&zj, (&hzj, &bj))| (zj - clip(zj - (hzj - bj))).abs()).fold(0.0, f64::max)
}

pub fn objective(b: &[f64], z: &[f64]) -> f64 {
    let mut hz = vec![0.0; z.len()];
    hessian_apply(z, &mut hz);
    z.iter().zip(hz.iter().zip(b)).map(|(&zj, (&h, &bj))| 0.5 * zj * h - bj * zj).sum()
}

/// Exact 1-D total-variation denoising,
/// `argmin_x 1/2 ||x - c||^2 + lambda ||Dx||_1`, by Condat's direct
/// (taut-string style) algorithm.
pub fn tv_denoise(c: &[f64], lambda: f64) -> Vec<f64> {
    let width = c.len();
    let mut out = vec![0.0; width];
    if width == 0 {
        return out;
    }
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = c[0] - lambda;
    let mut vmax = c[0] + lambda;
    let twolambda = 2.0 * lambda;
    loop {
        while k == width - 1 {
            if umin < 0.0 {
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = c[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = c[k0];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                while k0 <= k {
                    out[k0] = vmin;
                    k0 += 1;
                }
                return out;
            }
        }
        umin += c[k + 1] - vmin;
        if umin < -lambda {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmin = c[k0];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        umax += c[k + 1] - vmax;
        if umax > lambda {
            loop {
                out[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmax = c[k0];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = -lambda;
        } else {
            k += 1;
            if umin >= lambda {
                kminus = k;
                vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
                umin = lambda;
            }
            if umax <= -lambda {
                kplus = k;
                vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
                umax = -lambda;
            }
        }
    }
}

/// Solves the box QP exactly through its TV-denoising dual.
///
/// Any `c` with `Dc = b` gives `1/2 z^T H z - b^T z = 1/2 ||D^T z - c||^2 + const`,
/// whose minimizer over the box satisfies `D^T z = c - prox_TV(c)`.
pub fn solve_direct(b: &[f64]) -> BoxQpSolution {
    let k = b.len();
    let mut c = vec![0.0; k + 1];
    for j in 0..k {
        c[j + 1] = c[j] - b[j];
    }
    let x = tv_denoise(&c, 1.0);
    // D^T z = c - x  =>  z_j = sum_{l <= j} (c - x)_l
    let mut z = Vec::with_capacity(k);
    let mut acc = 0.0;
    for j in 0..k {
        acc += c[j] - x[j];
        z.push(clip(acc));
    }
    let kkt = kkt_residual(b, &z);
    BoxQpSolution { z, kkt_residual: kkt, iterations: 1, converged: true }
}

/// Projected gradient with fixed step `1/4`, stopping when the
/// projected-gradient norm drops below `tol`.
pub fn solve_projected_gradient(b: &[f64], z0: Option<&[f64]>, tol: f64, max_iter: usize) -> BoxQpSolution {
    let k = b.len();
    let mut z: Vec<f64> = match z0 {
        Some(z0) => z0.iter().copied().map(clip).collect(),
        None => vec![0.0; k],
    };
    let mut hz = vec![0.0; k];
    let step = 0.25;
    for iter in 0..max_iter {
        hessian_apply(&z, &mut hz);
        let mut pg_norm_sq = 0.0;
        for j in 0..k {
            let g = hz[j] - b[j];
            let pg = z[j] - clip(z[j] - g);
            pg_norm_sq += pg * pg;
        }
        if pg_norm_sq.sqrt() <= tol {
            let kkt = kkt_residual(b, &z);
            return BoxQpSolution { z, kkt_residual: kkt, iterations: iter, converged: true };
        }
        for j in 0..k {
            z[j] = clip(z[j] - step * (hz[j] - b[j]));
        }
    }
    let kkt = kkt_residual(b, &z);
    BoxQpSolution { z, kkt_residual: kkt, iterations: max_iter, converged: kkt <= tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interior_solution_solves_linear_system() {
        // H z = b with z = (0.1, 0.2, 0.3) stays inside the box.
        let z_true = [0.1, 0.2, 0.3];
        let mut b = [0.0; 3];
        hessian_apply(&z_true, &mut b);
        let sol = solve_direct(&b);
        for (a, e) in sol.z.iter().zip(z_true) {
            assert!((a - e).abs() < 1e-14);
        }
        assert!(sol.kkt_residual < 1e-14);
    }

    #[test]
    fn large_linear_term_saturates() {
        let sol = solve_direct(&[10.0, -10.0]);
        assert_eq!(sol.z, vec![1.0, -1.0]);
        assert_eq!(sol.kkt_residual, 0.0);
    }

    #[test]
    fn denoising_known_cases() {
        // Small jump is flattened, large lambda gives the mean.
        let x = tv_denoise(&[0.0, 1.0], 0.25);
        assert!((x[0] - 0.25).abs() < 1e-15 && (x[1] - 0.75).abs() < 1e-15);
        let x = tv_denoise(&[1.0, 2.0, 6.0], 100.0);
        assert!(x.iter().all(|v| (v - 3.0).abs() < 1e-12));
        assert_eq!(tv_denoise(&[5.0], 1.0), vec![5.0]);
    }

    #[test]
    fn empty_problem() {
        let sol = solve_direct(&[]);
        assert!(sol.z.is_empty() && sol.converged);
    }

    proptest! {
        #[test]
        fn direct_agrees_with_projected_gradient(b in proptest::collection::vec(-4.0f64..4.0, 1..12)) {
            let exact = solve_direct(&b);
            prop_assert!(exact.kkt_residual <= 1e-12);
            prop_assert!(exact.z.iter().all(|v| v.abs() <= 1.0));
            let pg = solve_projected_gradient(&b, None, 1e-11, 200_000);
            prop_assert!(pg.converged);
            let gap = objective(&b, &pg.z) - objective(&b, &exact.z);
            prop_assert!(gap.abs() <= 1e-9, "gap {}", gap);
        }
    }
}
