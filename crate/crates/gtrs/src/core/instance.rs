//! GTRS problem instances and the aggregated-pencil view.

use thiserror::Error;

use super::quadratic::Quadratic;
use super::sparse::SparseSymMatrix;

/// Errors raised when assembling a problem instance.
#[derive(Debug, Error)]
pub enum InstanceError {
    /// Objective and constraint live in different dimensions.
    #[error("objective has dimension {n0} but constraint has dimension {n1}")]
    DimensionMismatch { n0: usize, n1: usize },
    /// The instance dimension is zero.
    #[error("instance dimension must be at least 1")]
    EmptyDimension,
    /// The definiteness margin is outside `(0, 1]` or not finite.
    #[error("definiteness margin xi = {xi} must lie in (0, 1]")]
    BadXi { xi: f64 },
    /// The scale bound is below 1 or not finite.
    #[error("scale bound zeta = {zeta} must be finite and at least 1")]
    BadZeta { zeta: f64 },
    /// The reference weight is outside `[0, zeta]` or not finite.
    #[error("reference weight gamma_hat = {gamma_hat} must lie in [0, zeta = {zeta}]")]
    BadGammaHat { gamma_hat: f64, zeta: f64 },
}

/// A generalized trust-region subproblem: minimize `q0(x)` over the region
/// `q1(x) <= 0`.
///
/// The scalars describe what is known about the aggregated pencil
/// `A(gamma) = A0 + gamma * A1`:
/// - `gamma_hat` is a reference weight at which `A(gamma_hat)` is positive
///   definite;
/// - `xi` is a certified lower bound on the smallest eigenvalue of
///   `A(gamma_hat)`, with `0 < xi <= 1`;
/// - `zeta >= 1` upper-bounds both 1 and every weight for which the pencil
///   remains positive semidefinite, so the relevant weight range sits inside
///   `[0, zeta]`.
///
/// Construction checks the structural facts (matching dimensions, scalar
/// ranges, finiteness). Spectral facts — each `A_i` having a negative
/// eigenvalue, unit norm bounds on the data, the definiteness of
/// `A(gamma_hat)` — are properties of well-formed inputs that dense reference
/// computations can verify for small instances; they are not recomputed here.
#[derive(Debug, Clone)]
pub struct GtrsInstance {
    /// Objective quadratic.
    pub q0: Quadratic,
    /// Constraint quadratic; the feasible set is `q1(x) <= 0`.
    pub q1: Quadratic,
    /// Certified lower bound on the smallest eigenvalue of `A(gamma_hat)`.
    pub xi: f64,
    /// Upper bound on 1 and on the positive-definiteness weight range.
    pub zeta: f64,
    /// Reference weight with `A(gamma_hat)` positive definite.
    pub gamma_hat: f64,
}

impl GtrsInstance {
    /// Assembles an instance after validating the structural invariants.
    pub fn new(
        q0: Quadratic,
        q1: Quadratic,
        xi: f64,
        zeta: f64,
        gamma_hat: f64,
    ) -> Result<Self, InstanceError> {
        if q0.n() != q1.n() {
            return Err(InstanceError::DimensionMismatch { n0: q0.n(), n1: q1.n() });
        }
        if q0.n() == 0 {
            return Err(InstanceError::EmptyDimension);
        }
        if !(xi.is_finite() && 0.0 < xi && xi <= 1.0) {
            return Err(InstanceError::BadXi { xi });
        }
        if !(zeta.is_finite() && zeta >= 1.0) {
            return Err(InstanceError::BadZeta { zeta });
        }
        if !(gamma_hat.is_finite() && (0.0..=zeta).contains(&gamma_hat)) {
            return Err(InstanceError::BadGammaHat { gamma_hat, zeta });
        }
        Ok(Self { q0, q1, xi, zeta, gamma_hat })
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.q0.n()
    }

    /// A view of the aggregated quadratic at weight `gamma`.
    pub fn pencil(&self, gamma: f64) -> PencilView<'_> {
        PencilView { instance: self, gamma }
    }
}

/// A borrowed view of the aggregated quadratic `q(gamma, x) = q0 + gamma*q1`
/// at a fixed weight `gamma`.
///
/// The view applies `A(gamma) = A0 + gamma*A1` as two sparse products without
/// materializing the sum; [`PencilView::assemble`] builds the merged quadratic
/// when many operations at the same weight make that worthwhile.
#[derive(Debug, Clone, Copy)]
pub struct PencilView<'a> {
    instance: &'a GtrsInstance,
    gamma: f64,
}

impl<'a> PencilView<'a> {
    /// The underlying instance.
    pub fn instance(&self) -> &'a GtrsInstance {
        self.instance
    }

    /// The aggregation weight.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.instance.n()
    }

    /// Applies `A(gamma)` to `x`, writing into `y`, as two sparse products.
    pub fn apply_matrix(&self, x: &[f64], y: &mut [f64]) {
        self.instance.q0.a.matvec_into(x, y);
        self.instance.q1.a.matvec_add_scaled(x, self.gamma, y);
    }

    /// The aggregated linear term `b(gamma) = b0 + gamma*b1`.
    pub fn linear_term(&self) -> Vec<f64> {
        self.instance
            .q0
            .b
            .iter()
            .zip(&self.instance.q1.b)
            .map(|(&b0, &b1)| b0 + self.gamma * b1)
            .collect()
    }

    /// The aggregated constant term `c(gamma) = c0 + gamma*c1`.
    pub fn constant_term(&self) -> f64 {
        self.instance.q0.c + self.gamma * self.instance.q1.c
    }

    /// Materializes the aggregated quadratic by merging the sparse patterns.
    pub fn assemble(&self) -> Quadratic {
        let a = self.instance.q0.a.linear_combination(1.0, &self.instance.q1.a, self.gamma);
        Quadratic::new(a, self.linear_term(), self.constant_term())
    }
}

/// A symmetric linear operator given by matrix-vector products.
pub trait SymOp {
    /// Operator dimension.
    fn dim(&self) -> usize;
    /// Writes `A x` into `y`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// The Rayleigh quotient `x^T A x / x^T x` (caller ensures `x != 0`).
    fn rayleigh(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        let num: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().map(|a| a * a).sum();
        num / den
    }
}

impl SymOp for SparseSymMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }
}

impl SymOp for PencilView<'_> {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_matrix(x, y);
    }
}
