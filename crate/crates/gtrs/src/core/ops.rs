//! Instance normalization and boundary stepping.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::instance::{GtrsInstance, InstanceError};
use super::la::norm2;
use super::quadratic::Quadratic;
use super::sparse::SparseSymMatrix;
use crate::eig::{approx_eig, gershgorin_bound};

/// Dimension at or below which normalization certifies eigenvalue bounds with
/// dense computations instead of randomized iteration.
const DENSE_CUTOFF: usize = 512;

/// Errors raised by [`normalize_instance`].
#[derive(Debug, Error)]
pub enum NormalizeError {
    /// The certified smallest-eigenvalue bound at the reference weight is not
    /// strictly positive, so the aggregated matrix cannot be declared
    /// positive definite there.
    #[error("cannot certify positive definiteness at the reference weight: bound {bound}")]
    NotDefiniteAtReference { bound: f64 },
    /// The constraint matrix has no certifiable negative curvature direction,
    /// so the positive-definiteness weight range has no finite right edge to
    /// bound.
    #[error("constraint matrix appears positive semidefinite; weight range is unbounded")]
    UnboundedWeightRange,
    /// The normalized data failed instance assembly.
    #[error(transparent)]
    Instance(#[from] InstanceError),
    /// The randomized eigenvalue estimator gave up.
    #[error("eigenvalue estimation failed during normalization: {0}")]
    Eig(String),
}

/// Errors raised by [`boundary_step`].
#[derive(Debug, Error)]
pub enum BoundaryStepError {
    /// The restriction of the constraint to the ray has no real root.
    #[error("constraint has no real root along the given direction")]
    NoRealRoot,
    /// The restriction has real roots but none with positive step length.
    #[error("constraint has no root at a positive step along the given direction")]
    NoPositiveRoot,
    /// The direction vector is numerically zero.
    #[error("direction vector is zero")]
    ZeroDirection,
}

/// Divisor that brings one quadratic's data within unit bounds:
/// `max(gershgorin(A), |b|, |c|, 1)`.
fn unit_scale(q: &Quadratic) -> f64 {
    gershgorin_bound(&q.a).max(norm2(&q.b)).max(q.c.abs()).max(1.0)
}

/// Rescales raw problem data into an instance satisfying the unit-size
/// conventions, and certifies the definiteness margin `xi` and scale bound
/// `zeta`.
///
/// Each quadratic is divided by `max(gershgorin(A_i), |b_i|, |c_i|, 1)`; a
/// Gershgorin row bound stands in for the spectral norm so the scale is
/// computable in one sparse pass. Dividing the two quadratics by different
/// positive constants leaves the feasible set and the minimizer unchanged but
/// stretches the aggregation weight: if the raw pencil is positive definite
/// at `raw_gamma_hat`, the normalized one is positive definite at
/// `raw_gamma_hat * s1 / s0`.
///
/// `xi` is set to a certified lower bound on the smallest eigenvalue of the
/// normalized `A(gamma_hat)` (dense for small dimensions, randomized
/// Lanczos minus its tolerance otherwise), clipped to at most 1. `zeta` is a
/// certified upper bound on `max(1, gamma_plus)` where `gamma_plus` is the
/// right edge of the positive-semidefiniteness weight range, obtained by
/// bisection between the reference weight and a negative-curvature cap.
///
/// # Errors
/// Fails if the certified `xi` is not strictly positive, or if the constraint
/// matrix exhibits no negative curvature (unbounded weight range).
pub fn normalize_instance(
    raw_q0: &Quadratic,
    raw_q1: &Quadratic,
    raw_gamma_hat: f64,
) -> Result<GtrsInstance, NormalizeError> {
    assert_eq!(raw_q0.n(), raw_q1.n(), "quadratics must share a dimension");
    assert!(
        raw_gamma_hat.is_finite() && raw_gamma_hat >= 0.0,
        "reference weight must be finite and nonnegative"
    );
    let n = raw_q0.n();
    let s0 = unit_scale(raw_q0);
    let s1 = unit_scale(raw_q1);
    let q0 = Quadratic::new(
        raw_q0.a.scaled(1.0 / s0),
        raw_q0.b.iter().map(|v| v / s0).collect(),
        raw_q0.c / s0,
    );
    let q1 = Quadratic::new(
        raw_q1.a.scaled(1.0 / s1),
        raw_q1.b.iter().map(|v| v / s1).collect(),
        raw_q1.c / s1,
    );
    let gamma_hat = raw_gamma_hat * s1 / s0;

    // Deterministic randomness for the large-dimension certification path:
    // normalization is a preprocessing step and should be reproducible
    // without threading a caller seed through it.
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f_726d);

    // Certify xi: a lower bound on the smallest eigenvalue of A(gamma_hat).
    let pencil_at = |gamma: f64| q0.a.linear_combination(1.0, &q1.a, gamma);
    let a_hat = pencil_at(gamma_hat);
    let xi_cert = if n <= DENSE_CUTOFF {
        let lam_min = dense_lambda_min(&a_hat);
        lam_min - 1e-10 * lam_min.abs().max(1.0)
    } else {
        // Row bounds keep every pencil eigenvalue within [-rho, rho].
        let rho = gershgorin_bound(&a_hat);
        let delta = 1e-6 * rho.max(1.0);
        let est = approx_eig(&a_hat, rho, delta, 1e-9, &mut rng)
            .map_err(|e| NormalizeError::Eig(e.to_string()))?;
        est.lambda_hat - delta
    };
    let xi = xi_cert.min(1.0);
    if xi <= 0.0 {
        return Err(NormalizeError::NotDefiniteAtReference { bound: xi });
    }

    // Find a certified negative-curvature direction of A1 to cap the weight
    // range: if v^T A1 v = r < 0 then A(gamma) fails to be positive
    // semidefinite for every gamma > (v^T A0 v) / (-r).
    let (r_neg, v_neg) = if n <= DENSE_CUTOFF {
        let (lam, v) = dense_extreme_pair(&q1.a);
        (lam, v)
    } else {
        let rho1 = gershgorin_bound(&q1.a).max(1.0);
        let est = approx_eig(&q1.a, rho1, 1e-6 * rho1, 1e-9, &mut rng)
            .map_err(|e| NormalizeError::Eig(e.to_string()))?;
        (est.lambda_hat, est.v)
    };
    if r_neg >= 0.0 {
        return Err(NormalizeError::UnboundedWeightRange);
    }
    let v_a0_v = q0.a.quad_form(&v_neg);
    let cap = (v_a0_v / (-r_neg)).max(gamma_hat);

    // Bisect for a tight certified upper bound on gamma_plus. The upper end
    // stays certified throughout: either it is the curvature cap or a weight
    // where a Rayleigh quotient of the pencil was observed negative.
    let mut lo = gamma_hat;
    let mut hi = cap;
    for _ in 0..60 {
        if hi - lo <= 1e-9 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let a_mid = pencil_at(mid);
        if n <= DENSE_CUTOFF {
            if dense_lambda_min(&a_mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        } else {
            let rho = gershgorin_bound(&a_mid).max(1.0);
            let delta = 1e-8 * rho;
            let est = approx_eig(&a_mid, rho, delta, 1e-9, &mut rng)
                .map_err(|e| NormalizeError::Eig(e.to_string()))?;
            let rayleigh = est.lambda_hat;
            if rayleigh < 0.0 {
                hi = mid;
            } else if rayleigh - delta > 0.0 {
                lo = mid;
            } else {
                // Smallest eigenvalue indistinguishable from zero: the
                // current upper end already bounds gamma_plus.
                break;
            }
        }
    }
    let zeta = hi.max(1.0) * (1.0 + 1e-12);

    GtrsInstance::new(q0, q1, xi, zeta, gamma_hat).map_err(NormalizeError::from)
}

/// Smallest step `alpha > 0` along `sign * v` at which the constraint
/// vanishes: `q1(x + alpha * sign * v) = 0`.
///
/// Writing `d = sign * v`, the restriction is the scalar quadratic
/// `a*alpha^2 + 2*beta*alpha + g` with `a = d^T A1 d`,
/// `beta = d^T (A1 x + b1)`, and `g = q1(x)`. Roots are computed with the
/// numerically stable quadratic formula; when the leading coefficient
/// vanishes the restriction is affine. Any real root `z` obeys
/// `|z| <= 2|beta/a| + sqrt(|g/a|)`.
///
/// # Arguments
/// * `q1` - constraint quadratic.
/// * `x` - base point.
/// * `v` - direction vector.
/// * `sign` - direction multiplier applied to `v` (typically +1 or -1).
///
/// # Errors
/// [`BoundaryStepError::NoRealRoot`] when the discriminant is negative,
/// [`BoundaryStepError::NoPositiveRoot`] when no real root is positive, and
/// [`BoundaryStepError::ZeroDirection`] for a zero direction.
pub fn boundary_step(
    q1: &Quadratic,
    x: &[f64],
    v: &[f64],
    sign: f64,
) -> Result<f64, BoundaryStepError> {
    assert_eq!(x.len(), q1.n(), "point must match constraint dimension");
    assert_eq!(v.len(), q1.n(), "direction must match constraint dimension");
    let d: Vec<f64> = v.iter().map(|&vi| sign * vi).collect();
    if norm2(&d) == 0.0 {
        return Err(BoundaryStepError::ZeroDirection);
    }
    let a = q1.a.quad_form(&d);
    let half_grad = q1.half_gradient(x);
    let beta: f64 = d.iter().zip(&half_grad).map(|(di, gi)| di * gi).sum();
    let g = q1.eval(x);

    let mut roots: Vec<f64> = Vec::with_capacity(2);
    if a == 0.0 {
        if beta == 0.0 {
            return Err(if g == 0.0 {
                // The constraint is identically zero on the ray; any positive
                // step works, and zero-length is the smallest limit point.
                BoundaryStepError::NoPositiveRoot
            } else {
                BoundaryStepError::NoRealRoot
            });
        }
        roots.push(-g / (2.0 * beta));
    } else {
        let disc = beta * beta - a * g;
        if disc < 0.0 {
            return Err(BoundaryStepError::NoRealRoot);
        }
        let s = disc.sqrt();
        // Stable evaluation: compute the larger-magnitude root first and
        // recover the other from the product of roots g / a.
        if beta == 0.0 && g == 0.0 {
            roots.push(0.0);
        } else {
            let t = -(beta + beta.signum() * s);
            if t == 0.0 {
                roots.push(0.0);
            } else {
                roots.push(t / a);
                roots.push(g / t);
            }
        }
    }
    roots
        .into_iter()
        .filter(|&r| r > 0.0 && r.is_finite())
        .fold(None, |best: Option<f64>, r| Some(best.map_or(r, |b| b.min(r))))
        .ok_or(BoundaryStepError::NoPositiveRoot)
}

/// Dense smallest eigenvalue (reference path for small dimensions).
fn dense_lambda_min(a: &SparseSymMatrix) -> f64 {
    let eigs = a.to_dense().symmetric_eigenvalues();
    eigs.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Dense smallest eigenvalue together with a matching eigenvector.
fn dense_extreme_pair(a: &SparseSymMatrix) -> (f64, Vec<f64>) {
    let se = nalgebra::SymmetricEigen::new(a.to_dense());
    let mut best = 0usize;
    for i in 1..se.eigenvalues.len() {
        if se.eigenvalues[i] < se.eigenvalues[best] {
            best = i;
        }
    }
    let v: Vec<f64> = se.eigenvectors.column(best).iter().cloned().collect();
    (se.eigenvalues[best], v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball_constraint(radius_sq: f64) -> Quadratic {
        Quadratic::new(SparseSymMatrix::identity(2), vec![0.0; 2], -radius_sq)
    }

    #[test]
    fn unit_ball_from_origin_along_axis() {
        let q1 = ball_constraint(1.0);
        let alpha = boundary_step(&q1, &[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((alpha - 1.0).abs() < 1e-14);
    }

    #[test]
    fn radius_two_ball_from_interior_point() {
        let q1 = ball_constraint(4.0);
        let alpha = boundary_step(&q1, &[1.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((alpha - 1.0).abs() < 1e-14);
    }

    #[test]
    fn root_magnitude_bound_is_attained() {
        // Restriction coefficients (a, beta, g) = (1, 0, -4): the positive
        // root 2 equals the bound 2|beta/a| + sqrt(|g/a|).
        let q1 = ball_constraint(4.0);
        let alpha = boundary_step(&q1, &[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((alpha - 2.0).abs() < 1e-14);
        let bound = 0.0 + (4.0f64).sqrt();
        assert!(alpha <= bound + 1e-14);
    }

    #[test]
    fn sign_flips_the_direction() {
        // From (1, 0) moving along -e1 the sphere |x|^2 = 4 is hit at step 3.
        let q1 = ball_constraint(4.0);
        let alpha = boundary_step(&q1, &[1.0, 0.0], &[1.0, 0.0], -1.0).unwrap();
        assert!((alpha - 3.0).abs() < 1e-14);
    }

    #[test]
    fn no_real_root_is_reported() {
        // Constraint |x|^2 + 1 never vanishes.
        let q1 = Quadratic::new(SparseSymMatrix::identity(2), vec![0.0; 2], 1.0);
        let err = boundary_step(&q1, &[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap_err();
        assert!(matches!(err, BoundaryStepError::NoRealRoot));
    }

    #[test]
    fn affine_restriction_handles_zero_curvature() {
        // Constraint 2*x_2 - 3 restricted to direction e2: root at 1.5.
        let q1 = Quadratic::new(SparseSymMatrix::zeros(2), vec![0.0, 1.0], -3.0);
        let alpha = boundary_step(&q1, &[0.0, 0.0], &[0.0, 1.0], 1.0).unwrap();
        assert!((alpha - 1.5).abs() < 1e-14);
    }

    #[test]
    fn normalization_keeps_unit_sized_data_fixed() {
        // Diagonal instance with all data already within unit bounds.
        let a0 =
            SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -0.5)]).unwrap();
        let a1 =
            SparseSymMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let q0 = Quadratic::new(a0, vec![0.1, 0.0], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0, 0.0], 0.16);
        let inst = normalize_instance(&q0, &q1, 0.75).unwrap();
        assert!((inst.gamma_hat - 0.75).abs() < 1e-12);
        assert!((inst.xi - 0.25).abs() < 1e-6, "xi = {}", inst.xi);
        assert!((inst.zeta - 1.0).abs() < 1e-6, "zeta = {}", inst.zeta);
        assert!((inst.q0.eval(&[0.3, 0.4]) - q0.eval(&[0.3, 0.4])).abs() < 1e-12);
    }

    #[test]
    fn normalization_is_invariant_to_objective_scaling() {
        let a0 =
            SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -0.5)]).unwrap();
        let a1 =
            SparseSymMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let q0 = Quadratic::new(a0.clone(), vec![0.1, 0.0], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0, 0.0], 0.16);
        let base = normalize_instance(&q0, &q1, 0.75).unwrap();

        // Scale the raw objective by 10; the valid raw reference weight for
        // the scaled pencil is 10x the original.
        let q0_scaled =
            Quadratic::new(a0.scaled(10.0), vec![1.0, 0.0], 0.0);
        let scaled = normalize_instance(&q0_scaled, &q1, 7.5).unwrap();

        assert!((scaled.gamma_hat - base.gamma_hat).abs() < 1e-12);
        assert!((scaled.xi - base.xi).abs() < 1e-9);
        assert!((scaled.zeta - base.zeta).abs() < 1e-9);
        let x = [0.7, -0.2];
        assert!((scaled.q0.eval(&x) - base.q0.eval(&x)).abs() < 1e-12);
        assert!((scaled.q1.eval(&x) - base.q1.eval(&x)).abs() < 1e-12);
    }

    #[test]
    fn normalization_rejects_indefinite_reference() {
        // At the proposed reference weight the pencil has a negative
        // eigenvalue, so no positive margin can be certified.
        let a0 =
            SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -0.5)]).unwrap();
        let a1 =
            SparseSymMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let q0 = Quadratic::new(a0, vec![0.1, 0.0], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0, 0.0], 0.16);
        let err = normalize_instance(&q0, &q1, 0.1).unwrap_err();
        assert!(matches!(err, NormalizeError::NotDefiniteAtReference { .. }));
    }

    #[test]
    fn normalization_rejects_convex_constraint() {
        let a0 =
            SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -0.5)]).unwrap();
        let q0 = Quadratic::new(a0, vec![0.0, 0.0], 0.0);
        let q1 = Quadratic::new(SparseSymMatrix::identity(2), vec![0.0; 2], -1.0);
        let err = normalize_instance(&q0, &q1, 1.0).unwrap_err();
        assert!(matches!(err, NormalizeError::UnboundedWeightRange));
    }
}
