//! Conjugate gradients for well-conditioned symmetric systems, and the
//! constraint-value evaluation along the dual path built on top of it.

use thiserror::Error;

use crate::core::la::{axpy, dot, norm2};
use crate::core::{GtrsInstance, SymOp};

/// Errors raised by the conjugate-gradient solver.
#[derive(Debug, Error)]
pub enum CgError {
    /// The iteration cap derived from the conditioning bounds was exhausted
    /// without the residual reaching tolerance. With valid bounds this
    /// indicates a caller error (the operator violates them).
    #[error(
        "conjugate gradients exhausted {iterations} iterations \
         (residual {residual}, target {target})"
    )]
    MaxIterExceeded { iterations: usize, residual: f64, target: f64 },
}

/// An evaluation of the dual-path constraint value at one weight.
#[derive(Debug, Clone)]
pub struct NuEvaluation {
    /// The aggregation weight.
    pub gamma: f64,
    /// Approximation of the dual-path point `x(gamma)`.
    pub x_tilde: Vec<f64>,
    /// `q1(x_tilde)`, evaluated exactly at the returned point.
    pub nu_tilde: f64,
    /// Lower bound on the smallest eigenvalue of `A(gamma)` assumed valid.
    pub mu: f64,
    /// Accuracy parameter: `nu_tilde` lies within `delta` of the exact
    /// constraint value `nu(gamma)` when the eigenvalue bound holds.
    pub delta: f64,
}

/// Solves `A x = -b` for a symmetric operator with `mu*I <= A <= rho*I`,
/// to within `|x + A^{-1} b| <= delta`.
///
/// The iteration stops when the residual satisfies `|A x + b| <= mu * delta`,
/// which implies the error bound through the eigenvalue floor. The iteration
/// cap scales with `sqrt(rho / mu) * log(|b| / (mu * delta))`; exceeding it
/// means the conditioning bounds do not hold for the operator.
///
/// # Arguments
/// * `op` - symmetric positive definite operator.
/// * `b` - right-hand side of `A x = -b`.
/// * `rho` - upper eigenvalue bound.
/// * `mu` - strictly positive lower eigenvalue bound.
/// * `delta` - target error on the solution vector.
pub fn conj_grad<O: SymOp + ?Sized>(
    op: &O,
    b: &[f64],
    rho: f64,
    mu: f64,
    delta: f64,
) -> Result<Vec<f64>, CgError> {
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side must match operator dimension");
    assert!(mu > 0.0 && rho >= mu, "eigenvalue bounds must satisfy 0 < mu <= rho");
    assert!(delta > 0.0, "target accuracy must be positive");

    let target = mu * delta;
    let norm_b = norm2(b);
    if norm_b <= target {
        return Ok(vec![0.0; n]);
    }

    // Standard cap: kappa^(1/2) times the log of the required residual
    // reduction, with a modest constant and floor.
    let kappa = rho / mu;
    let reduction = (norm_b / target).max(2.0);
    let cap = (4.0 * kappa.sqrt() * reduction.ln()).ceil() as usize + 20;
    let cap = cap.min(20 * n.max(50));

    let mut x = vec![0.0; n];
    // r = -(A x + b) = -b at x = 0.
    let mut r: Vec<f64> = b.iter().map(|v| -v).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = dot(&r, &r);

    for iter in 0..cap {
        if rs.sqrt() <= target {
            return Ok(x);
        }
        op.apply(&p, &mut ap);
        let p_ap = dot(&p, &ap);
        if p_ap <= 0.0 {
            // Curvature violated the positive-definiteness premise; stop and
            // report through the residual check below.
            return Err(CgError::MaxIterExceeded {
                iterations: iter,
                residual: rs.sqrt(),
                target,
            });
        }
        let alpha = rs / p_ap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    if rs.sqrt() <= target {
        return Ok(x);
    }
    Err(CgError::MaxIterExceeded { iterations: cap, residual: rs.sqrt(), target })
}

/// Approximates the dual-path point `x(gamma)` and its constraint value.
///
/// Requires the smallest eigenvalue of the aggregated matrix `A(gamma)` to be
/// at least `mu`. The system is solved to `|x_tilde - x(gamma)| <=
/// mu * delta / (10 * zeta)`-level accuracy, which makes the reported
/// constraint value `delta`-accurate: `|nu_tilde - nu(gamma)| <= delta`.
/// The reported `nu_tilde` is `q1(x_tilde)` evaluated exactly at the
/// returned point.
///
/// # Arguments
/// * `inst` - the instance; `2 * zeta` bounds the pencil spectral norm.
/// * `gamma` - aggregation weight inside the positive-definite range.
/// * `mu` - valid lower bound on the smallest eigenvalue of `A(gamma)`.
/// * `delta` - target accuracy of the constraint value.
pub fn approx_nu(
    inst: &GtrsInstance,
    gamma: f64,
    mu: f64,
    delta: f64,
) -> Result<NuEvaluation, CgError> {
    assert!(mu > 0.0, "eigenvalue floor must be positive");
    assert!(delta > 0.0, "target accuracy must be positive");
    let view = inst.pencil(gamma);
    let b = view.linear_term();
    let rho = 2.0 * inst.zeta;
    if norm2(&b) == 0.0 {
        // The dual-path point is exactly the origin.
        return Ok(NuEvaluation {
            gamma,
            x_tilde: vec![0.0; inst.n()],
            nu_tilde: inst.q1.c,
            mu,
            delta,
        });
    }
    // Solve to the vector accuracy that makes the constraint value
    // delta-accurate: the constraint gradient near the path point is bounded
    // by pencil-scale quantities, absorbed into the 10*zeta factor.
    let vec_acc = mu * delta / (10.0 * inst.zeta);
    let assembled = view.assemble();
    let x_tilde = conj_grad(&assembled.a, &assembled.b, rho, mu, vec_acc)?;
    let nu_tilde = inst.q1.eval(&x_tilde);
    Ok(NuEvaluation { gamma, x_tilde, nu_tilde, mu, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{Quadratic, SparseSymMatrix};

    #[test]
    fn identity_system_is_solved_exactly() {
        let a = SparseSymMatrix::identity(3);
        let b = [1.0, -2.0, 0.5];
        let x = conj_grad(&a, &b, 1.0, 1.0, 1e-12).unwrap();
        for i in 0..3 {
            assert!((x[i] + b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_system_matches_closed_form() {
        let a = SparseSymMatrix::from_diagonal(&[3.0, 1.0]).unwrap();
        let x = conj_grad(&a, &[3.0, 0.0], 3.0, 1.0, 1e-10).unwrap();
        assert!((x[0] + 1.0).abs() < 1e-10);
        assert!(x[1].abs() < 1e-10);
    }

    #[test]
    fn flat_instance_path_point_at_the_maximizer() {
        let inst = flat_instance(0.1);
        let e = approx_nu(&inst, 0.75, 0.25, 1e-8).unwrap();
        assert!(e.nu_tilde.abs() <= 1e-8, "nu = {}", e.nu_tilde);
        assert!((e.x_tilde[0] + 0.4).abs() < 1e-7);
    }

    #[test]
    fn flat_instance_path_point_left_of_the_maximizer() {
        // At weight 0.6 the path point is (-0.25, 0) and the constraint value
        // is 0.01 * (16 - 1/0.16) = 0.0975.
        let inst = flat_instance(0.1);
        let e = approx_nu(&inst, 0.6, 0.1, 1e-8).unwrap();
        assert!((e.nu_tilde - 0.0975).abs() < 1e-7, "nu = {}", e.nu_tilde);
    }

    #[test]
    fn zero_linear_term_returns_the_origin() {
        let a0 = SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -0.5)]).unwrap();
        let a1 = SparseSymMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let q0 = Quadratic::new(a0, vec![0.0, 0.0], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0, 0.0], 0.3);
        let inst = GtrsInstance::new(q0, q1, 0.25, 1.0, 0.75).unwrap();
        let e = approx_nu(&inst, 0.75, 0.25, 1e-6).unwrap();
        assert!(e.x_tilde.iter().all(|&v| v == 0.0));
        assert_eq!(e.nu_tilde, 0.3);
    }

    fn flat_instance(eps: f64) -> GtrsInstance {
        let a0 = SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -0.5)]).unwrap();
        let a1 = SparseSymMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let q0 = Quadratic::new(a0, vec![eps, 0.0], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0, 0.0], 16.0 * eps * eps);
        GtrsInstance::new(q0, q1, 0.25, 1.0, 0.75).unwrap()
    }
}
