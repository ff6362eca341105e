//! Solving the certified reformulation, rounding iterates onto the
//! constraint set, and the data-coherence diagnostic.

use rand::RngCore;
use thiserror::Error;

use crate::cg::{conj_grad, CgError};
use crate::core::la::norm2;
use crate::core::{boundary_step, BoundaryStepError, GtrsInstance, Quadratic};
use crate::eig::{approx_eig, gershgorin_bound, EigError};
use crate::minimax::{acc_minimax, MinimaxError, MinimaxOutcome, MinimaxProblem};

/// Errors raised by [`round_to_feasible`].
#[derive(Debug, Error)]
pub enum RoundingError {
    /// The constraint curvature estimate found no negative direction, so no
    /// ray from the iterate is guaranteed to cross the constraint boundary.
    #[error("no descent direction for the constraint (curvature estimate {rayleigh})")]
    NoDescentDirection { rayleigh: f64 },
    /// The curvature estimation itself failed.
    #[error("curvature estimation failed: {0}")]
    Eig(#[from] EigError),
    /// Both orientations of the curvature direction failed to produce a
    /// feasible crossing.
    #[error("no feasible crossing along the curvature direction: {0}")]
    Boundary(#[from] BoundaryStepError),
}

/// Minimizes the pointwise maximum of the two aggregations named by a
/// certified bracket, to an accuracy sufficient for an `eps`-approximate
/// solution of the original problem.
///
/// `mu_tilde` must lower-bound the smallest eigenvalue of the aggregated
/// matrix at both bracket endpoints. `sink` observes every iterate as
/// `(iteration, x)`.
///
/// # Errors
/// [`MinimaxError`] if the iteration exceeds its budget without either
/// stopping rule firing.
pub fn solve_regular(
    inst: &GtrsInstance,
    gamma1: f64,
    gamma2: f64,
    mu_tilde: f64,
    eps: f64,
    sink: &mut dyn FnMut(usize, &[f64]),
) -> Result<MinimaxOutcome, MinimaxError> {
    assert!(mu_tilde > 0.0, "eigenvalue floor must be positive");
    assert!(eps > 0.0, "accuracy must be positive");
    let qa = inst.pencil(gamma1).assemble();
    let qb = inst.pencil(gamma2).assemble();
    let rho = 2.0 * inst.zeta;
    // Value accuracy that transfers to an eps-accurate solution after
    // rounding; far below resolution the stall rule takes over.
    let delta = (mu_tilde * (eps * mu_tilde / (10.0 * inst.zeta)).powi(2)).max(1e-120);
    let problem = MinimaxProblem { qa, qb, mu: mu_tilde, rho, delta };
    acc_minimax(&problem, sink)
}

/// Moves an approximate minimizer onto the feasible set.
///
/// A feasible input is returned unchanged with step length zero. An
/// infeasible input is moved along an estimated negative-curvature
/// direction of the constraint matrix to the nearest boundary crossing,
/// taking whichever orientation crosses sooner; the crossing is then nudged
/// until the constraint value is nonpositive as evaluated. Returns the
/// rounded point and the signed step length taken.
///
/// # Errors
/// [`RoundingError::NoDescentDirection`] when no negative-curvature
/// direction exists (certified within the failure budget),
/// [`RoundingError::Eig`] when the estimation fails, and
/// [`RoundingError::Boundary`] when no orientation yields a feasible
/// crossing.
pub fn round_to_feasible(
    inst: &GtrsInstance,
    x_bar: &[f64],
    p: f64,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, f64), RoundingError> {
    if inst.q1.eval(x_bar) <= 0.0 {
        return Ok((x_bar.to_vec(), 0.0));
    }
    let rho = gershgorin_bound(&inst.q1.a).max(1.0);
    // Tighten the accuracy geometrically. The Rayleigh quotient of the
    // returned vector is deterministic, so a negative value soundly
    // certifies negative curvature at any accuracy; declaring that no
    // descent direction exists requires the randomized lower bound
    // (estimate minus accuracy) to clear zero, or the accuracy to reach
    // the roundoff floor. At most 19 tightenings reach the floor, so each
    // call spends a twentieth of the failure budget.
    let mut delta = 0.05 * rho;
    let per_call = p / 20.0;
    let est = loop {
        let est = approx_eig(&inst.q1.a, rho, delta, per_call, rng)?;
        if est.lambda_hat < 0.0 {
            break est;
        }
        if est.lambda_hat - delta >= 0.0 || delta <= 1e-12 * rho {
            return Err(RoundingError::NoDescentDirection { rayleigh: est.lambda_hat });
        }
        delta *= 0.25;
    };

    // Negative curvature makes the constraint concave along the ray, so
    // each orientation has exactly one boundary crossing, beyond which the
    // constraint stays nonpositive.
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut last_err = BoundaryStepError::ZeroDirection;
    for sign in [1.0, -1.0] {
        match cross_to_feasible(&inst.q1, x_bar, &est.v, sign, true) {
            Some((alpha, x)) => {
                if best.as_ref().is_none_or(|(a, _, _)| alpha < *a) {
                    best = Some((alpha, sign, x));
                }
            }
            None => match boundary_step(&inst.q1, x_bar, &est.v, sign) {
                Err(e) => last_err = e,
                Ok(_) => last_err = BoundaryStepError::NoPositiveRoot,
            },
        }
    }
    match best {
        Some((alpha, sign, x)) => Ok((x, sign * alpha)),
        None => Err(RoundingError::Boundary(last_err)),
    }
}

/// Steps from `x` along `sign * v` to the first constraint boundary
/// crossing and nudges the step length until the constraint value is
/// nonpositive as evaluated.
///
/// `feasible_beyond` states which side of the crossing is feasible: `true`
/// nudges the step longer on a miss, `false` shorter. Returns the final
/// step length and point, or `None` when no usable crossing exists.
pub(crate) fn cross_to_feasible(
    q1: &Quadratic,
    x: &[f64],
    v: &[f64],
    sign: f64,
    feasible_beyond: bool,
) -> Option<(f64, Vec<f64>)> {
    let alpha = boundary_step(q1, x, v, sign).ok()?;
    let build = |a: f64| -> Vec<f64> {
        x.iter().zip(v).map(|(&xi, &vi)| xi + sign * a * vi).collect()
    };
    let candidate = build(alpha);
    if q1.eval(&candidate) <= 0.0 {
        return Some((alpha, candidate));
    }
    // Floating-point roundoff can land the evaluated value a few ulps on
    // the wrong side; back off geometrically until it crosses.
    for k in 0..54u32 {
        let bump = 2.0f64.powi(k as i32) * 1e-16;
        let factor = if feasible_beyond { 1.0 + bump } else { 1.0 - bump };
        if factor <= 0.0 {
            break;
        }
        let a = alpha * factor;
        let candidate = build(a);
        if q1.eval(&candidate) <= 0.0 {
            return Some((a, candidate));
        }
    }
    None
}

/// Data-coherence diagnostic: the norm distance between the two cross
/// products of matrix and rotated linear term at the reference weight.
///
/// A small value means the linear terms are nearly aligned through the
/// aggregated matrix, which is the regime where an ambiguous classification
/// can be genuinely non-regular; generic data keeps this bounded away from
/// zero.
///
/// # Errors
/// [`CgError`] if either linear solve at the reference weight fails.
pub fn coherence(inst: &GtrsInstance) -> Result<f64, CgError> {
    let pencil = inst.pencil(inst.gamma_hat);
    let rho = 2.0 * inst.zeta;
    let delta = 5e-11;
    let u = conj_grad(&pencil, &inst.q1.b, rho, inst.xi, delta)?;
    let w = conj_grad(&pencil, &inst.q0.b, rho, inst.xi, delta)?;
    let n = inst.n();
    let mut a0u = vec![0.0; n];
    inst.q0.a.matvec_into(&u, &mut a0u);
    let mut a1w = vec![0.0; n];
    inst.q1.a.matvec_into(&w, &mut a1w);
    for i in 0..n {
        a0u[i] -= a1w[i];
    }
    Ok(norm2(&a0u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::SparseSymMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat_instance() -> GtrsInstance {
        let a0 = SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -0.5)]).unwrap();
        let a1 = SparseSymMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let q0 = Quadratic::new(a0, vec![0.1, 0.0], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0, 0.0], 0.16);
        GtrsInstance::new(q0, q1, 0.25, 1.0, 0.75).unwrap()
    }

    #[test]
    fn certified_bracket_solve_recovers_the_optimizer() {
        let inst = flat_instance();
        let mut sink = |_: usize, _: &[f64]| {};
        let out = solve_regular(&inst, 0.625, 0.875, 0.125, 1e-10, &mut sink).unwrap();
        assert!((out.value - 0.08).abs() < 1e-9, "value {}", out.value);
        assert!((out.x[0] + 0.4).abs() < 1e-6, "x = {:?}", out.x);
        assert!(out.x[1].abs() < 1e-6, "x = {:?}", out.x);
    }

    #[test]
    fn coherence_matches_the_closed_form() {
        // At the reference weight the aggregated matrix is I/4 and the
        // constraint linear term vanishes, so the diagnostic reduces to
        // the norm of A1 (A(0.75)^{-1} b0) = A1 (4 b0) = (-0.4, 0).
        let inst = flat_instance();
        let value = coherence(&inst).unwrap();
        assert!((value - 0.4).abs() < 1e-8, "coherence {value}");
    }

    #[test]
    fn feasible_points_round_to_themselves() {
        let inst = flat_instance();
        let x = vec![-0.41, 0.0]; // q1 = -0.1681 + 0.16 < 0
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (y, alpha) = round_to_feasible(&inst, &x, 1e-2, &mut rng).unwrap();
        assert_eq!(y, x);
        assert_eq!(alpha, 0.0);
    }

    #[test]
    fn infeasible_points_round_to_the_nearest_crossing() {
        let inst = flat_instance();
        let x = vec![-0.39, 0.0]; // q1 = -0.1521 + 0.16 = 0.0079 > 0
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (y, alpha) = round_to_feasible(&inst, &x, 1e-2, &mut rng).unwrap();
        let g = inst.q1.eval(&y);
        assert!(g <= 0.0, "rounded point must be feasible, q1 = {g}");
        // The negative-curvature direction is the first axis; the nearest
        // crossing moves the first coordinate from -0.39 to about -0.4.
        assert!(alpha.abs() < 0.0101, "step {alpha}");
        assert!((y[0] + 0.4).abs() < 1e-6, "y = {y:?}");
        // The objective regression along the step stays proportional to it.
        let regression = inst.q0.eval(&y) - inst.q0.eval(&x);
        assert!(
            regression.abs() <= 5.0 * alpha.abs() * (1.0 + norm2(&x)),
            "regression {regression} for step {alpha}"
        );
    }

    #[test]
    fn rounding_reports_missing_negative_curvature() {
        // Constraint matrix is positive definite: no direction can cross
        // the boundary from outside an empty sublevel set.
        let a0 = SparseSymMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let a1 = SparseSymMatrix::identity(2);
        let q0 = Quadratic::new(a0, vec![0.0, 0.0], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0, 0.0], 1.0);
        let inst = GtrsInstance::new(q0, q1, 0.5, 2.0, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = round_to_feasible(&inst, &[1.0, 1.0], 1e-2, &mut rng).unwrap_err();
        assert!(matches!(err, RoundingError::NoDescentDirection { .. }));
    }

    #[test]
    fn cross_to_feasible_lands_exactly_nonpositive() {
        let inst = flat_instance();
        // From the origin (q1 = 0.16 > 0) along the first axis, the
        // crossing sits at alpha = 0.4.
        let (alpha, x) = cross_to_feasible(&inst.q1, &[0.0, 0.0], &[1.0, 0.0], -1.0, true).unwrap();
        assert!((alpha - 0.4).abs() < 1e-12);
        assert!(inst.q1.eval(&x) <= 0.0);
        assert!((x[0] + 0.4).abs() < 1e-12);
    }
}
