//! Bisection searches that certify an aggregation weight whose smallest
//! pencil eigenvalue lies in a prescribed band.
//!
//! Given a level `mu`, the search returns a weight `gamma` together with a
//! unit vector `v` such that, with the requested confidence,
//! `mu/2 <= lambda_min(A(gamma)) <= v^T A(gamma) v <= mu`. The left search
//! works below the reference weight (where the smallest eigenvalue increases
//! toward the reference), the right search above it. Each bisection step
//! spends an even share of the failure budget on one randomized eigenvalue
//! estimate.

use rand::RngCore;
use thiserror::Error;

use crate::core::{GtrsInstance, SparseSymMatrix};
use crate::eig::{approx_eig, EigError};

/// Which side of the reference weight a certificate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Weight at or below the reference weight.
    Left,
    /// Weight at or above the reference weight.
    Right,
}

/// Errors raised by the weight searches.
#[derive(Debug, Error)]
pub enum GammaError {
    /// The bisection used up its step budget without an accepted weight.
    /// With correct eigenvalue estimates this cannot happen, so exhaustion
    /// indicates a (low-probability) estimation failure.
    #[error("weight search exhausted {iterations} bisection steps at level mu = {mu}")]
    SearchExhausted { iterations: usize, mu: f64 },
    /// The underlying eigenvalue estimator failed.
    #[error("eigenvalue estimation failed during the weight search: {0}")]
    Eig(#[from] EigError),
}

/// A certified weight: the smallest pencil eigenvalue at `gamma` is bracketed
/// by `[mu_lo, mu_hi]`, with `v` witnessing the upper end as a Rayleigh
/// quotient.
#[derive(Debug, Clone)]
pub struct GammaCertificate {
    /// The certified weight.
    pub gamma: f64,
    /// Unit vector with `v^T A(gamma) v = mu_hi`.
    pub v: Vec<f64>,
    /// Lower bound on `lambda_min(A(gamma))`.
    pub mu_lo: f64,
    /// Rayleigh quotient of `v`, an upper bound on `lambda_min(A(gamma))`.
    pub mu_hi: f64,
    /// Side of the reference weight the certificate lies on.
    pub side: Side,
    /// Bisection steps spent (one randomized eigenvalue estimate each).
    pub steps: usize,
}

/// Searches `[0, gamma_hat]` for a weight whose smallest pencil eigenvalue
/// lies in `[mu/2, mu]`, certified by a Rayleigh quotient in `[5mu/8, mu]`.
///
/// The bisection needs `ceil(log2(5 * zeta / mu))` steps; each stop runs one
/// randomized eigenvalue estimate at accuracy `mu/8` with failure budget
/// `p / T`. Rayleigh quotients above `mu` move the search away from the
/// reference weight, quotients below `5mu/8` move it toward the reference
/// weight, and ties on either threshold are accepted.
///
/// # Errors
/// [`GammaError::SearchExhausted`] when no step accepted — a probabilistic
/// failure of the underlying estimates.
pub fn approx_gamma_left(
    inst: &GtrsInstance,
    mu: f64,
    p: f64,
    rng: &mut dyn RngCore,
) -> Result<GammaCertificate, GammaError> {
    search(inst, mu, p, rng, Side::Left)
}

/// Mirror of [`approx_gamma_left`] over `[gamma_hat, zeta]`, for the side
/// where the smallest pencil eigenvalue decreases away from the reference
/// weight.
pub fn approx_gamma_right(
    inst: &GtrsInstance,
    mu: f64,
    p: f64,
    rng: &mut dyn RngCore,
) -> Result<GammaCertificate, GammaError> {
    search(inst, mu, p, rng, Side::Right)
}

fn search(
    inst: &GtrsInstance,
    mu: f64,
    p: f64,
    rng: &mut dyn RngCore,
    side: Side,
) -> Result<GammaCertificate, GammaError> {
    assert!(mu > 0.0, "level must be positive");
    assert!(
        mu <= inst.xi,
        "level {mu} exceeds the definiteness margin {}; no band below the reference exists",
        inst.xi
    );
    assert!(p > 0.0 && p < 1.0, "failure probability must lie in (0, 1)");

    let steps = ((5.0 * inst.zeta / mu).log2().ceil() as usize).max(1);
    let p_step = p / steps as f64;
    let rho = 2.0 * inst.zeta;
    let delta = mu / 8.0;

    let (mut lo, mut hi) = match side {
        Side::Left => (0.0, inst.gamma_hat),
        Side::Right => (inst.gamma_hat, inst.zeta),
    };

    for step in 1..=steps {
        let gamma = 0.5 * (lo + hi);
        let pencil = assemble_pencil(inst, gamma);
        let est = approx_eig(&pencil, rho, delta, p_step, rng)?;
        let rayleigh = est.lambda_hat;
        if rayleigh > mu {
            // Too definite: move away from the reference weight.
            match side {
                Side::Left => hi = gamma,
                Side::Right => lo = gamma,
            }
        } else if rayleigh < 5.0 * mu / 8.0 {
            // Too indefinite: move toward the reference weight.
            match side {
                Side::Left => lo = gamma,
                Side::Right => hi = gamma,
            }
        } else {
            return Ok(GammaCertificate {
                gamma,
                v: est.v,
                mu_lo: 0.5 * mu,
                mu_hi: rayleigh,
                side,
                steps: step,
            });
        }
    }
    Err(GammaError::SearchExhausted { iterations: steps, mu })
}

/// Materializes the aggregated matrix for repeated eigenvalue products.
fn assemble_pencil(inst: &GtrsInstance, gamma: f64) -> SparseSymMatrix {
    inst.q0.a.linear_combination(1.0, &inst.q1.a, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Quadratic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Diagonal instance whose smallest pencil eigenvalue is `gamma - 1/2`
    /// left of the reference weight 3/4 and `1 - gamma` right of it.
    fn tent_instance() -> GtrsInstance {
        let a0 = SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -0.5)]).unwrap();
        let a1 = SparseSymMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let q0 = Quadratic::new(a0, vec![0.1, 0.0], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0, 0.0], 0.16);
        GtrsInstance::new(q0, q1, 0.25, 1.0, 0.75).unwrap()
    }

    #[test]
    fn left_search_lands_in_the_band() {
        let inst = tent_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cert = approx_gamma_left(&inst, 0.2, 1e-3, &mut rng).unwrap();
        // lambda_min(A(gamma)) = gamma - 1/2 must lie in [mu/2, mu].
        assert!(cert.gamma >= 0.6 - 1e-12 && cert.gamma <= 0.7 + 1e-12,
            "gamma = {}", cert.gamma);
        assert_eq!(cert.side, Side::Left);
        assert!(cert.mu_lo <= cert.gamma - 0.5 && cert.gamma - 0.5 <= cert.mu_hi + 1e-12);
    }

    #[test]
    fn left_search_accepts_quickly_near_the_margin() {
        let inst = tent_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cert = approx_gamma_left(&inst, 0.2, 1e-3, &mut rng).unwrap();
        assert!(cert.mu_hi <= 0.2 + 1e-12 && cert.mu_hi >= 0.125 - 1e-12);
    }

    #[test]
    fn right_search_lands_in_the_mirror_band() {
        let inst = tent_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cert = approx_gamma_right(&inst, 0.2, 1e-3, &mut rng).unwrap();
        // lambda_min(A(gamma)) = 1 - gamma must lie in [0.1, 0.2].
        assert!(cert.gamma >= 0.8 - 1e-12 && cert.gamma <= 0.9 + 1e-12,
            "gamma = {}", cert.gamma);
        assert_eq!(cert.side, Side::Right);
    }

    #[test]
    fn diagonal_three_dim_certificate_is_dense_verified() {
        // Pencil diag(gamma - 0.6, 0.3 + gamma, 2 - 2*gamma): smallest
        // eigenvalue near the reference weight 0.9 is gamma - 0.6 on the
        // left branch.
        let a0 = SparseSymMatrix::from_diagonal(&[-0.6, 0.3, 2.0]).unwrap();
        let a1 = SparseSymMatrix::from_diagonal(&[1.0, 1.0, -2.0]).unwrap();
        let q0 = Quadratic::new(a0, vec![0.0; 3], 0.0);
        let q1 = Quadratic::new(a1, vec![0.0; 3], 0.0);
        let inst = GtrsInstance::new(q0, q1, 0.2, 1.0, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mu = 0.15;
        let cert = approx_gamma_left(&inst, mu, 1e-3, &mut rng).unwrap();
        let lam_min = {
            let m = assemble_pencil(&inst, cert.gamma).to_dense();
            m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
        };
        assert!(lam_min >= 0.5 * mu - 1e-12 && lam_min <= mu + 1e-12, "lam = {lam_min}");
        assert!(cert.mu_lo <= lam_min && lam_min <= cert.mu_hi + 1e-12);
    }
}
