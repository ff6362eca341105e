//! Accelerated minimization of the maximum of two strongly convex
//! quadratics.
//!
//! Each iteration linearizes both quadratics at the extrapolated point and
//! minimizes the larger linearization plus a proximal term. That inner
//! problem is a one-dimensional concave quadratic over the mixing weight and
//! is solved in closed form, so an iteration costs a fixed small number of
//! matrix products. Momentum follows the general estimate-sequence schedule
//! for strongly convex objectives.
//!
//! Progress is certified from below: the strong-convexity minorants built at
//! the same points yield a lower bound on the minimax value, and the run
//! stops once the best value is within `delta` of the best lower bound. When
//! `delta` sits below what floating point can resolve, a stall detector stops
//! the run at the numerical floor instead.

use thiserror::Error;

use crate::core::la::dot;
use crate::core::Quadratic;

/// The pair of quadratics to take the pointwise maximum of, with curvature
/// bounds and a target accuracy.
#[derive(Debug, Clone)]
pub struct MinimaxProblem {
    /// First branch of the maximum.
    pub qa: Quadratic,
    /// Second branch of the maximum.
    pub qb: Quadratic,
    /// Strong-convexity modulus valid for both branches.
    pub mu: f64,
    /// Smoothness bound valid for both branches.
    pub rho: f64,
    /// Requested optimality gap.
    pub delta: f64,
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The certified gap between best value and best lower bound fell
    /// below the requested accuracy.
    GapCertified,
    /// No measurable progress over a full observation window; the iterate
    /// sits at the numerical floor even though the certified gap may still
    /// exceed the requested (sub-resolution) accuracy.
    Stalled,
}

/// Result of a minimax run.
#[derive(Debug, Clone)]
pub struct MinimaxOutcome {
    /// Best iterate found.
    pub x: Vec<f64>,
    /// Value of the maximum at the best iterate.
    pub value: f64,
    /// Best certified lower bound on the minimax value.
    pub lower_bound: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Which stopping rule fired.
    pub stop: StopReason,
}

/// Errors raised by the minimax iteration.
#[derive(Debug, Error)]
pub enum MinimaxError {
    /// Neither stopping rule fired within a generous multiple of the
    /// theoretical iteration bound.
    #[error("minimax iteration exceeded {iterations} iterations without certifying the gap")]
    MaxIterExceeded { iterations: usize },
}

struct Linearization {
    value_a: f64,
    value_b: f64,
    grad_a: Vec<f64>,
    grad_b: Vec<f64>,
}

/// Evaluates both branch values and full gradients at `y` (one matrix
/// product per branch).
fn linearize(p: &MinimaxProblem, y: &[f64]) -> Linearization {
    let wa = p.qa.a.matvec(y);
    let wb = p.qb.a.matvec(y);
    let value_a = dot(y, &wa) + 2.0 * dot(&p.qa.b, y) + p.qa.c;
    let value_b = dot(y, &wb) + 2.0 * dot(&p.qb.b, y) + p.qb.c;
    let n = y.len();
    let mut grad_a = vec![0.0; n];
    let mut grad_b = vec![0.0; n];
    for i in 0..n {
        grad_a[i] = 2.0 * (wa[i] + p.qa.b[i]);
        grad_b[i] = 2.0 * (wb[i] + p.qb.b[i]);
    }
    Linearization { value_a, value_b, grad_a, grad_b }
}

/// Maximizes `t*va + (1-t)*vb - |t*ga + (1-t)*gb|^2 / (2w)` over `t` in
/// `[0, 1]` and returns the maximizing mixture weight and value.
fn best_mixture(lin: &Linearization, w: f64) -> (f64, f64) {
    let n = lin.grad_a.len();
    let mut diff = vec![0.0; n];
    for i in 0..n {
        diff[i] = lin.grad_a[i] - lin.grad_b[i];
    }
    let a2 = dot(&diff, &diff);
    let b1 = dot(&lin.grad_b, &diff);
    let t = if a2 > 0.0 {
        ((w * (lin.value_a - lin.value_b) - b1) / a2).clamp(0.0, 1.0)
    } else if lin.value_a >= lin.value_b {
        1.0
    } else {
        0.0
    };
    let mut g_sq = 0.0;
    for i in 0..n {
        let g = t * lin.grad_a[i] + (1.0 - t) * lin.grad_b[i];
        g_sq += g * g;
    }
    let value = t * lin.value_a + (1.0 - t) * lin.value_b - g_sq / (2.0 * w);
    (t, value)
}

/// Runs the accelerated scheme from the origin until the gap is certified,
/// the iteration stalls at the numerical floor, or the iteration budget is
/// exhausted. `sink` observes every iterate as `(iteration, x)`.
///
/// # Errors
/// [`MinimaxError::MaxIterExceeded`] if four times the theoretical iteration
/// bound passes without either stopping rule firing.
pub fn acc_minimax(
    p: &MinimaxProblem,
    sink: &mut dyn FnMut(usize, &[f64]),
) -> Result<MinimaxOutcome, MinimaxError> {
    assert!(p.mu > 0.0 && p.rho >= p.mu, "need 0 < mu <= rho");
    assert!(p.delta > 0.0, "accuracy must be positive");
    assert_eq!(p.qa.n(), p.qb.n(), "branch dimensions must agree");
    let n = p.qa.n();
    let kappa = p.rho / p.mu;
    let sqrt_kappa = kappa.sqrt();

    let stall_window = (2.0 * sqrt_kappa).ceil().max(200.0).min(20_000.0) as usize;
    let log_term = (p.rho / (p.delta * p.mu).max(f64::MIN_POSITIVE)).max(2.0).ln();
    let iter_cap = ((4.0 * (sqrt_kappa * (log_term + 1.0) + 10.0)) as usize).max(1_000);

    let mut x = vec![0.0; n];
    let mut x_prev = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut alpha: f64 = 1.0;
    let q = p.mu / p.rho;

    let eval_max = |z: &[f64]| p.qa.eval(z).max(p.qb.eval(z));

    let mut best_value = eval_max(&x);
    let mut best_x = x.clone();
    let mut lower_bound = f64::NEG_INFINITY;
    let mut window_best = best_value;
    let mut window_start_best = best_value;
    sink(0, &x);

    for k in 1..=iter_cap {
        let lin = linearize(p, &y);

        // Certified lower bound from the strong-convexity minorants at y.
        let (_, lb) = best_mixture(&lin, p.mu);
        if lb > lower_bound {
            lower_bound = lb;
        }

        // Prox step on the maximum of the two linearizations.
        let (t, _) = best_mixture(&lin, p.rho);
        x_prev.copy_from_slice(&x);
        for i in 0..n {
            let g = t * lin.grad_a[i] + (1.0 - t) * lin.grad_b[i];
            x[i] = y[i] - g / p.rho;
        }

        let fx = eval_max(&x);
        if fx < best_value {
            best_value = fx;
            best_x.copy_from_slice(&x);
        }
        sink(k, &x);

        if best_value - lower_bound <= p.delta {
            return Ok(MinimaxOutcome {
                x: best_x,
                value: best_value,
                lower_bound,
                iterations: k,
                stop: StopReason::GapCertified,
            });
        }

        // Stall detection at the numerical floor.
        if fx < window_best {
            window_best = fx;
        }
        if k % stall_window == 0 {
            let floor = 64.0 * f64::EPSILON * (1.0 + best_value.abs());
            if window_start_best - window_best <= floor {
                return Ok(MinimaxOutcome {
                    x: best_x,
                    value: best_value,
                    lower_bound,
                    iterations: k,
                    stop: StopReason::Stalled,
                });
            }
            window_start_best = window_best;
        }

        // Estimate-sequence momentum. alpha starts at 1 >= sqrt(q) and
        // decreases toward sqrt(q), where the recursion is stationary and
        // the extrapolation weight becomes the classical constant
        // (sqrt(rho) - sqrt(mu)) / (sqrt(rho) + sqrt(mu)).
        let c = alpha * alpha - q;
        let alpha_next = 0.5 * (-c + (c * c + 4.0 * alpha * alpha).sqrt());
        let beta = alpha * (1.0 - alpha) / (alpha * alpha + alpha_next);
        for i in 0..n {
            y[i] = x[i] + beta * (x[i] - x_prev[i]);
        }
        alpha = alpha_next;
    }

    Err(MinimaxError::MaxIterExceeded { iterations: iter_cap })
}
