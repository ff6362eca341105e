//! Randomized estimation of the smallest eigenvalue of a symmetric operator.
//!
//! The estimator is Lanczos iteration with full reorthogonalization from a
//! random start on the unit sphere. The Krylov basis is capped at a fixed
//! dimension; if the target accuracy calls for more work than one sweep can
//! deliver, the estimator restarts with fresh random starts and returns the
//! best Ritz pair seen, splitting the failure budget evenly across restarts.
//! Smallest Ritz values are extracted from the Lanczos tridiagonal matrix by
//! Sturm-sequence bisection, and Ritz vectors by shifted inverse iteration,
//! so per-step convergence checks stay linear in the basis size.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::core::la::{axpy, dot, norm2, scale};
use crate::core::{SparseSymMatrix, SymOp};

/// Largest Krylov basis dimension per restart.
const KRYLOV_MAX: usize = 200;

/// Maximum number of fresh random restarts.
const MAX_RESTARTS: usize = 4;

/// Default multiplier in the theoretical iteration-count estimate.
pub const DEFAULT_ITER_CONST: f64 = 8.0;

/// Errors raised by [`approx_eig`].
#[derive(Debug, Error)]
pub enum EigError {
    /// Every restart exhausted its Krylov budget without the convergence
    /// residual reaching tolerance, and the dimension is too large to fall
    /// back on a full tridiagonalization.
    #[error("eigenvalue iteration did not converge within {iterations} total steps")]
    MaxIterExceeded { iterations: usize },
}

/// An estimate of the smallest eigenvalue of a symmetric operator.
#[derive(Debug, Clone)]
pub struct EigEstimate {
    /// Rayleigh quotient of `v`: an upper bound on the smallest eigenvalue.
    pub lambda_hat: f64,
    /// Unit vector attaining `lambda_hat` as its Rayleigh quotient.
    pub v: Vec<f64>,
    /// Total Lanczos steps taken across restarts.
    pub iterations: usize,
}

/// Upper bound on the spectral norm of a sparse symmetric matrix: the largest
/// absolute row sum, accumulated over the symmetric completion of the stored
/// upper triangle.
pub fn gershgorin_bound(a: &SparseSymMatrix) -> f64 {
    let mut row_sums = vec![0.0f64; a.n()];
    for &(i, j, v) in a.triplets() {
        row_sums[i] += v.abs();
        if i != j {
            row_sums[j] += v.abs();
        }
    }
    row_sums.into_iter().fold(0.0, f64::max)
}

/// Estimates the smallest eigenvalue of `op` to additive accuracy `delta`
/// with failure probability at most `p`.
///
/// On success the returned unit vector `v` satisfies, with probability at
/// least `1 - p` over the random start, `v^T op v <= lambda_min(op) + delta`.
/// The Rayleigh quotient never undershoots `lambda_min`, so the estimate is
/// one-sided. The sequence of random draws is fully determined by `rng`, so
/// a seeded generator makes the call reproducible.
///
/// # Arguments
/// * `op` - symmetric operator with spectrum inside `[-rho, rho]`.
/// * `rho` - spectral-norm bound used in the iteration-count estimate.
/// * `delta` - target additive accuracy of the eigenvalue estimate.
/// * `p` - admissible failure probability in `(0, 1)`.
/// * `rng` - randomness source for the start vectors.
///
/// # Errors
/// [`EigError::MaxIterExceeded`] when every restart exhausts its budget
/// without the residual reaching tolerance and the dimension exceeds the
/// full-tridiagonalization cap.
pub fn approx_eig<O: SymOp + ?Sized>(
    op: &O,
    rho: f64,
    delta: f64,
    p: f64,
    rng: &mut dyn RngCore,
) -> Result<EigEstimate, EigError> {
    approx_eig_with_const(op, rho, delta, p, rng, DEFAULT_ITER_CONST)
}

/// [`approx_eig`] with an explicit iteration-count multiplier.
pub fn approx_eig_with_const<O: SymOp + ?Sized>(
    op: &O,
    rho: f64,
    delta: f64,
    p: f64,
    rng: &mut dyn RngCore,
    iter_const: f64,
) -> Result<EigEstimate, EigError> {
    let n = op.dim();
    assert!(n >= 1, "operator dimension must be positive");
    assert!(rho > 0.0 && rho.is_finite(), "spectral bound must be positive");
    assert!(delta > 0.0 && delta.is_finite(), "accuracy must be positive");
    assert!(p > 0.0 && p < 1.0, "failure probability must lie in (0, 1)");

    if n == 1 {
        let mut y = [0.0];
        op.apply(&[1.0], &mut y);
        return Ok(EigEstimate { lambda_hat: y[0], v: vec![1.0], iterations: 1 });
    }

    let k_cap = n.min(KRYLOV_MAX);
    // Theoretical budget for a single random-start run, in Lanczos steps.
    let k_theory = iter_const * (rho / delta).sqrt() * ((n as f64).max(3.0) / p).ln();
    let restarts = ((k_theory / k_cap as f64).ceil() as usize).clamp(1, MAX_RESTARTS);
    // Residual tolerance: a quarter of the eigenvalue target, floored at the
    // level where double-precision Lanczos residuals plateau.
    let rtol = (0.25 * delta).max(1e-13 * rho * (n as f64).sqrt());

    let mut best: Option<TrialOutcome> = None;
    let mut total_iters = 0usize;
    for _ in 0..restarts {
        let outcome = lanczos_trial(op, n, k_cap, rtol, rng);
        total_iters += outcome.steps;
        let better = match &best {
            None => true,
            Some(b) => outcome.theta < b.theta,
        };
        if better {
            best = Some(outcome);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    let best = best.expect("at least one restart ran");
    if !best.converged && n > k_cap {
        return Err(EigError::MaxIterExceeded { iterations: total_iters });
    }

    // Normalize and recompute the Rayleigh quotient so the reported value and
    // vector are exactly consistent.
    let mut v = best.vector;
    let nv = norm2(&v);
    scale(1.0 / nv, &mut v);
    let mut av = vec![0.0; n];
    op.apply(&v, &mut av);
    let lambda_hat = dot(&v, &av);
    Ok(EigEstimate { lambda_hat, v, iterations: total_iters })
}

/// Result of one Lanczos sweep from a fresh random start.
struct TrialOutcome {
    /// Smallest Ritz value reached.
    theta: f64,
    /// Ritz vector in the ambient space (unnormalized).
    vector: Vec<f64>,
    /// Steps taken.
    steps: usize,
    /// Whether the convergence residual reached tolerance (or the basis
    /// spanned an invariant subspace / the full space).
    converged: bool,
}

/// One Lanczos sweep with full reorthogonalization from a random unit start.
fn lanczos_trial<O: SymOp + ?Sized>(
    op: &O,
    n: usize,
    k_cap: usize,
    rtol: f64,
    rng: &mut dyn RngCore,
) -> TrialOutcome {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k_cap);
    let mut alphas: Vec<f64> = Vec::with_capacity(k_cap);
    let mut betas: Vec<f64> = Vec::with_capacity(k_cap);

    let mut q = random_unit_vector(n, rng);
    basis.push(q.clone());
    let mut w = vec![0.0; n];
    let mut full_space = false;
    let mut invariant = false;

    loop {
        op.apply(&q, &mut w);
        let alpha = dot(&q, &w);
        alphas.push(alpha);
        axpy(-alpha, &q, &mut w);
        if basis.len() >= 2 {
            let beta_prev = betas[basis.len() - 2];
            axpy(-beta_prev, &basis[basis.len() - 2], &mut w);
        }
        // Full reorthogonalization, applied twice for stability.
        for _ in 0..2 {
            for qi in &basis {
                let c = dot(qi, &w);
                axpy(-c, qi, &mut w);
            }
        }
        let beta = norm2(&w);
        let m = alphas.len();

        let breakdown = beta <= 1e-13 * alphas.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
        if breakdown || m == n {
            invariant = breakdown;
            full_space = m == n;
            break;
        }

        // Convergence check: smallest Ritz pair residual |beta * s_last|.
        if m >= 3 {
            let theta = tridiag_lambda_min(&alphas, &betas[..m - 1]);
            let s = tridiag_eigvec(&alphas, &betas[..m - 1], theta);
            let residual = beta * s[m - 1].abs();
            if residual <= rtol {
                return finish_trial(&basis, &alphas, &betas[..m - 1], theta, m, true);
            }
        }
        if m == k_cap {
            break;
        }

        betas.push(beta);
        scale(1.0 / beta, &mut w);
        q = w.clone();
        basis.push(q.clone());
    }

    let m = alphas.len();
    let off = &betas[..m.saturating_sub(1)];
    let theta = tridiag_lambda_min(&alphas, off);
    finish_trial(&basis, &alphas, off, theta, m, invariant || full_space)
}

/// Assembles the ambient-space Ritz vector for the smallest Ritz value.
fn finish_trial(
    basis: &[Vec<f64>],
    alphas: &[f64],
    off: &[f64],
    theta: f64,
    steps: usize,
    converged: bool,
) -> TrialOutcome {
    let m = alphas.len();
    let s = tridiag_eigvec(alphas, off, theta);
    let n = basis[0].len();
    let mut v = vec![0.0; n];
    for (coeff, qi) in s.iter().zip(basis.iter().take(m)) {
        axpy(*coeff, qi, &mut v);
    }
    TrialOutcome { theta, vector: v, steps, converged }
}

/// Draws a uniformly random unit vector via normalized Gaussian samples.
fn random_unit_vector(n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let nv = norm2(&v);
        if nv > 1e-30 {
            let mut out = v;
            scale(1.0 / nv, &mut out);
            return out;
        }
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix `(diag, off)`
/// strictly below `x`, by the Sturm sequence of leading-minor pivots.
fn sturm_count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0usize;
    let mut d_prev = 1.0f64;
    for (i, &a) in diag.iter().enumerate() {
        let coupling = if i > 0 {
            let b = off[i - 1];
            b * b / d_prev
        } else {
            0.0
        };
        let mut d = a - x - coupling;
        if d == 0.0 {
            d = -f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
        // Guard the next division against overflow.
        d_prev = if d.abs() < 1e-280 { 1e-280f64.copysign(d) } else { d };
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
fn tridiag_lambda_min(diag: &[f64], off: &[f64]) -> f64 {
    let m = diag.len();
    if m == 1 {
        return diag[0];
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i < m - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    if lo == hi {
        return lo;
    }
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if sturm_count_below(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1e-30) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector of a symmetric tridiagonal matrix for an eigenvalue estimate
/// `theta`, by shifted inverse iteration with partial pivoting. The result is
/// unit-norm.
fn tridiag_eigvec(diag: &[f64], off: &[f64], theta: f64) -> Vec<f64> {
    let m = diag.len();
    if m == 1 {
        return vec![1.0];
    }
    let mut y = vec![1.0 / (m as f64).sqrt(); m];
    for _ in 0..3 {
        solve_shifted_tridiag(diag, off, theta, &mut y);
        // Normalize by the largest component first: when the shift is an
        // eigenvalue to machine accuracy the solution components are huge
        // and their squared sum would overflow.
        let linf = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if !linf.is_finite() || linf == 0.0 {
            // Restart from a deterministic non-uniform vector on numerical
            // blow-up.
            y = (0..m).map(|i| 1.0 + (i as f64) * 1e-3).collect();
            let ny2 = norm2(&y);
            scale(1.0 / ny2, &mut y);
            continue;
        }
        scale(1.0 / linf, &mut y);
        let ny = norm2(&y);
        scale(1.0 / ny, &mut y);
    }
    y
}

/// Solves `(T - theta*I) x = rhs` in place for a symmetric tridiagonal `T`,
/// using Gaussian elimination with partial pivoting (one fill-in diagonal).
fn solve_shifted_tridiag(diag: &[f64], off: &[f64], theta: f64, rhs: &mut [f64]) {
    let m = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|&a| a - theta).collect();
    let mut du1: Vec<f64> = (0..m).map(|i| if i + 1 < m { off[i] } else { 0.0 }).collect();
    let mut du2 = vec![0.0f64; m];

    for k in 0..m - 1 {
        let mut sub = off[k];
        if sub.abs() > d[k].abs() {
            // Swap rows k and k+1.
            std::mem::swap(&mut d[k], &mut sub);
            let old_du1_k = du1[k];
            du1[k] = d[k + 1];
            d[k + 1] = old_du1_k;
            let old_du2_k = du2[k];
            du2[k] = du1[k + 1];
            du1[k + 1] = old_du2_k;
            rhs.swap(k, k + 1);
        }
        let pivot = if d[k] == 0.0 { f64::MIN_POSITIVE } else { d[k] };
        let l = sub / pivot;
        d[k + 1] -= l * du1[k];
        du1[k + 1] -= l * du2[k];
        rhs[k + 1] -= l * rhs[k];
    }

    // Back-substitution with running renormalization: near-singular pivots
    // amplify components toward the representable limit, so once any solved
    // component passes 1e200 the solved suffix and the remaining right-hand
    // side are scaled down together. Only the direction of the solution is
    // used by the caller.
    let mut rhs_mult = 1.0f64;
    for i in (0..m).rev() {
        let mut acc = rhs[i] * rhs_mult;
        if i + 1 < m {
            acc -= du1[i] * rhs[i + 1];
        }
        if i + 2 < m {
            acc -= du2[i] * rhs[i + 2];
        }
        let pivot = if d[i].abs() < 1e-300 { 1e-300f64.copysign(d[i]) } else { d[i] };
        rhs[i] = acc / pivot;
        let mag = rhs[i].abs();
        if mag > 1e200 {
            let f = 1e200 / mag;
            for solved in rhs.iter_mut().skip(i) {
                *solved *= f;
            }
            rhs_mult *= f;
        }
    }
}
