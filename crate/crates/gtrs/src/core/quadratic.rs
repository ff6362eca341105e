//! Quadratic forms `q(x) = x^T A x + 2 b^T x + c` over sparse symmetric
//! matrices, and evaluation of the aggregated form `q0 + gamma * q1`.

use serde::{Deserialize, Serialize};

use super::instance::PencilView;
use super::sparse::SparseSymMatrix;

/// A quadratic function `q(x) = x^T A x + 2 b^T x + c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quadratic {
    /// Symmetric quadratic-term matrix.
    pub a: SparseSymMatrix,
    /// Linear-term vector; the linear part of `q` is `2 b^T x`.
    pub b: Vec<f64>,
    /// Constant term.
    pub c: f64,
}

impl Quadratic {
    /// Builds a quadratic, checking that `b` matches the matrix dimension and
    /// all scalar data is finite.
    ///
    /// # Panics
    /// Panics if `b.len() != a.n()` or any value is non-finite.
    pub fn new(a: SparseSymMatrix, b: Vec<f64>, c: f64) -> Self {
        assert_eq!(b.len(), a.n(), "linear term must match matrix dimension");
        assert!(b.iter().all(|v| v.is_finite()), "linear term must be finite");
        assert!(c.is_finite(), "constant term must be finite");
        Self { a, b, c }
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.a.n()
    }

    /// Evaluates `q(x)` with a single sparse matrix-vector product.
    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_quadratic(self, x)
    }

    /// Writes `A x + b` (half the gradient of `q`) into `out`.
    pub fn half_gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.a.matvec_into(x, out);
        for (o, &bi) in out.iter_mut().zip(&self.b) {
            *o += bi;
        }
    }

    /// Returns `A x + b` (half the gradient of `q`).
    pub fn half_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.half_gradient_into(x, &mut out);
        out
    }
}

/// Evaluates `q(x) = x^T A x + 2 b^T x + c` with one sparse matrix-vector
/// product: `q(x) = (A x + 2 b)^T x + c` computed as `x^T(Ax) + 2 b^T x + c`.
pub fn eval_quadratic(q: &Quadratic, x: &[f64]) -> f64 {
    assert_eq!(x.len(), q.n(), "point must match quadratic dimension");
    let ax = q.a.matvec(x);
    let mut acc = q.c;
    for i in 0..x.len() {
        acc += x[i] * ax[i] + 2.0 * q.b[i] * x[i];
    }
    acc
}

/// Evaluates the aggregated quadratic `q(gamma, x) = q0(x) + gamma * q1(x)`
/// for the pencil view's weight. The value is affine in `gamma` for fixed `x`.
pub fn eval_aggregated(view: &PencilView<'_>, x: &[f64]) -> f64 {
    let q0 = view.instance().q0.eval(x);
    let q1 = view.instance().q1.eval(x);
    q0 + view.gamma() * q1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::instance::GtrsInstance;

    fn trs_remark_instance() -> GtrsInstance {
        // Objective diag(1, -1) with linear term (3, 0); constraint |x|^2 - 1.
        let a0 = SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        let a1 = SparseSymMatrix::identity(2);
        let q0 = Quadratic::new(a0, vec![3.0, 0.0], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0, 0.0], -1.0);
        GtrsInstance::new(q0, q1, 1.0, 2.0, 2.0).unwrap()
    }

    #[test]
    fn constant_quadratic_evaluates_to_its_constant() {
        let q = Quadratic::new(SparseSymMatrix::zeros(3), vec![0.0; 3], 5.0);
        assert_eq!(q.eval(&[1.0, -2.0, 0.5]), 5.0);
        assert_eq!(q.eval(&[0.0; 3]), 5.0);
    }

    #[test]
    fn unit_ball_constraint_vanishes_on_sphere() {
        let q = Quadratic::new(SparseSymMatrix::identity(2), vec![0.0; 2], -1.0);
        assert_eq!(q.eval(&[-1.0, 0.0]), 0.0);
    }

    #[test]
    fn indefinite_objective_value_at_optimizer() {
        let inst = trs_remark_instance();
        assert_eq!(inst.q0.eval(&[-1.0, 0.0]), -5.0);
    }

    #[test]
    fn aggregated_value_is_affine_in_gamma() {
        let inst = trs_remark_instance();
        let x = [0.3, -0.7];
        let at = |g: f64| eval_aggregated(&inst.pencil(g), &x);
        let (g1, g2) = (0.5, 2.5);
        let mid = 0.5 * (g1 + g2);
        assert!((at(mid) - 0.5 * (at(g1) + at(g2))).abs() < 1e-12);
    }

    #[test]
    fn half_gradient_matches_finite_difference() {
        let inst = trs_remark_instance();
        let x = [0.4, 1.1];
        let g = inst.q0.half_gradient(&x);
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (inst.q0.eval(&xp) - inst.q0.eval(&xm)) / (4.0 * h);
            assert!((g[i] - fd).abs() < 1e-5, "component {i}: {} vs {}", g[i], fd);
        }
    }
}
