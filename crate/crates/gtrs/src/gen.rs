//! Random problem instances with a known optimizer.
//!
//! The generator builds sparse instances whose dual argmax `gamma_star`,
//! curvature level `mu_star = lambda_min(A(gamma_star))`, optimizer `x_star`,
//! and optimal value are all known by construction, so solver output can be
//! scored against exact references instead of a second solver.
//!
//! Construction outline:
//!
//! 1. Draw one shared sparsity pattern and fill it twice, giving a shaping
//!    matrix `M` and a raw objective matrix. The pattern is shared so every
//!    matrix in the instance carries the requested number of nonzeros.
//! 2. Map `M` affinely onto `A_hat = xi*I + (M - lo*I)/(hi - lo)`, a matrix
//!    with smallest eigenvalue very close to `xi`. `A_hat` will play the role
//!    of the aggregated matrix at the reference weight.
//! 3. Normalize the objective matrix `A0` to unit spectral bound, set
//!    `D = A_hat - A0`, pick `gamma_hat` just above a certified bound on
//!    `norm(D)`, and let `A1 = D / gamma_hat`. Then `A0 + gamma_hat*A1 =
//!    A_hat` exactly, both matrices have unit-bounded norms, and `A1` keeps a
//!    certified negative eigenvalue.
//! 4. Place the dual argmax: with `C = A_hat - mu_bar*I` and its Cholesky
//!    factor `L`, the weight nearest `gamma_hat` where `lambda_min(A(gamma))`
//!    crosses the level `mu_bar` is `gamma_hat - 1/lambda_max(W)` to the left
//!    and `gamma_hat - 1/lambda_min(W)` to the right, where
//!    `W = L^-1 A1 L^-T`. A Lanczos pass on the implicitly whitened operator
//!    finds the crossing without any dense eigensolve; a short feedback loop
//!    re-aims `mu_bar` until the measured level matches the target.
//! 5. Make the crossing weight the dual argmax: pick the optimizer direction
//!    and `b1` first, then solve the stationarity condition
//!    `A(gamma_star) x_star + b0 + gamma_star*b1 = 0` for `b0`, and choose
//!    `c1` so the constraint is active at `x_star`. The resulting pair
//!    satisfies the optimality conditions to machine precision.
//!
//! [`generate_pathological`] complements the random families with small
//! closed-form instances that exercise degenerate dual geometry.

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::core::la::{dot, norm2};
use crate::core::{GtrsInstance, Quadratic, SparseSymMatrix, SymOp};
use crate::dual_oracle::{GroundTruth, DENSE_MAX_DIM};
use crate::eig::{approx_eig, gershgorin_bound};
use crate::gamma::Side;

/// Attempts before the generator reports failure.
const MAX_ATTEMPTS: usize = 20;
/// Feedback rounds used to match the curvature target.
const MAX_AIM_ROUNDS: usize = 4;
/// Failure probability for each internal eigenvalue estimate.
const EIG_P: f64 = 1e-6;
/// Relative accuracy of the spectral-range estimates used for shaping.
const RANGE_DELTA: f64 = 1e-6;
/// Norm given to the optimizer direction and to `b1` before the final
/// shrink; small enough that the induced constant term stays below one.
const DIRECTION_NORM: f64 = 0.3;

/// Configuration for [`generate`].
#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Ambient dimension, between 2 and [`DENSE_MAX_DIM`].
    pub n: usize,
    /// Target number of nonzeros per matrix, counting both triangles.
    pub nnz_target: usize,
    /// Target curvature level `lambda_min(A(gamma_star))`, in
    /// `(0, xi/2]`.
    pub mu_star_target: f64,
    /// Curvature floor declared at the reference weight, in `(0, 1/2]`.
    pub xi: f64,
    /// Side of the reference weight on which the dual argmax is placed.
    pub side: Side,
    /// Seed recorded alongside the instance; the caller derives the
    /// randomness source from it.
    pub seed: u64,
}

impl GenConfig {
    fn validate(&self) {
        assert!(
            (2..=DENSE_MAX_DIM).contains(&self.n),
            "dimension must lie in [2, {DENSE_MAX_DIM}]"
        );
        assert!(
            self.nnz_target >= self.n && self.nnz_target <= self.n * self.n,
            "nonzero target must lie in [n, n^2]"
        );
        assert!(
            self.xi > 0.0 && self.xi <= 0.5,
            "curvature floor must lie in (0, 1/2]"
        );
        assert!(
            self.mu_star_target > 0.0 && self.mu_star_target <= 0.5 * self.xi,
            "curvature target must lie in (0, xi/2]"
        );
    }
}

/// Errors raised by [`generate`].
#[derive(Debug, Error)]
pub enum GenError {
    /// Every attempt failed; `last` describes the final failure.
    #[error("generation failed after {attempts} attempts: {last}")]
    Exhausted { attempts: usize, last: String },
}

/// Draws an instance together with its exact solution data.
///
/// All randomness is taken from `rng`; a caller that seeds the stream from
/// `config.seed` gets byte-identical instances for identical configurations.
/// Rejected attempts draw further from the same stream.
///
/// # Panics
/// Panics when the configuration violates the documented field ranges.
///
/// # Errors
/// Returns [`GenError::Exhausted`] when no attempt produces an instance
/// whose measured curvature level matches the target within 10%.
pub fn generate(
    config: &GenConfig,
    rng: &mut dyn RngCore,
) -> Result<(GtrsInstance, GroundTruth), GenError> {
    config.validate();
    let mut last = String::from("no attempt recorded");
    for _ in 0..MAX_ATTEMPTS {
        match attempt(config, rng) {
            Ok(out) => return Ok(out),
            Err(reason) => last = reason,
        }
    }
    Err(GenError::Exhausted { attempts: MAX_ATTEMPTS, last })
}

/// One full construction attempt; any failed certificate rejects the draw.
fn attempt(
    cfg: &GenConfig,
    rng: &mut dyn RngCore,
) -> Result<(GtrsInstance, GroundTruth), String> {
    let n = cfg.n;
    let pattern = sparsity_pattern(n, cfg.nnz_target, rng);
    let (shaping, a0_raw) = filled_pair(n, &pattern, rng)?;

    // Affine map of the shaping matrix onto a certified-PD aggregate with
    // lambda_min close to xi.
    let rho_m = gershgorin_bound(&shaping).max(1e-12);
    let delta_m = RANGE_DELTA * rho_m;
    let lo_est = approx_eig(&shaping, rho_m, delta_m, EIG_P, rng)
        .map_err(|e| format!("shaping spectrum estimate failed: {e}"))?;
    let neg_shaping = shaping.linear_combination(-1.0, &shaping, 0.0);
    let hi_est = approx_eig(&neg_shaping, rho_m, delta_m, EIG_P, rng)
        .map_err(|e| format!("shaping spectrum estimate failed: {e}"))?;
    let lo = lo_est.lambda_hat - delta_m;
    let hi = delta_m - hi_est.lambda_hat;
    let span = (hi - lo).max(1e-9);
    let a_hat = shaping.linear_combination(
        1.0 / span,
        &SparseSymMatrix::identity(n),
        cfg.xi - lo / span,
    );

    // Unit-bounded objective matrix with certified negative curvature. The
    // scale comes from a certified two-sided spectral estimate rather than
    // the Gershgorin bound: the latter overshoots by a factor that grows
    // with the dimension, which would leave the objective spectrally tiny
    // next to the aggregate and starve the gap matrix below of negative
    // curvature.
    let g0 = gershgorin_bound(&a0_raw).max(1e-12);
    let delta0 = RANGE_DELTA * g0;
    let lo0_est = approx_eig(&a0_raw, g0, delta0, EIG_P, rng)
        .map_err(|e| format!("objective spectrum estimate failed: {e}"))?;
    let neg_a0_raw = a0_raw.linear_combination(-1.0, &a0_raw, 0.0);
    let hi0_est = approx_eig(&neg_a0_raw, g0, delta0, EIG_P, rng)
        .map_err(|e| format!("objective spectrum estimate failed: {e}"))?;
    let scale0 = (delta0 - lo0_est.lambda_hat)
        .max(delta0 - hi0_est.lambda_hat)
        .max(1e-12);
    let a0 = a0_raw.linear_combination(1.0 / scale0, &a0_raw, 0.0);
    let a0_min = approx_eig(&a0, 1.05, 1e-3, EIG_P, rng)
        .map_err(|e| format!("objective curvature estimate failed: {e}"))?;
    if a0_min.lambda_hat > -1e-3 {
        return Err(format!(
            "objective matrix lost its negative curvature (rayleigh {:.3e})",
            a0_min.lambda_hat
        ));
    }

    // Constraint matrix: the gap D = A_hat - A0 scaled so its norm is
    // certified below one, which makes A0 + gamma_hat*A1 = A_hat exact.
    let gap = a_hat.linear_combination(1.0, &a0, -1.0);
    let rho_d = gershgorin_bound(&gap).max(1e-12);
    let delta_d = RANGE_DELTA * rho_d;
    let gap_min = approx_eig(&gap, rho_d, delta_d, EIG_P, rng)
        .map_err(|e| format!("gap spectrum estimate failed: {e}"))?;
    let neg_gap = gap.linear_combination(-1.0, &gap, 0.0);
    let gap_max = approx_eig(&neg_gap, rho_d, delta_d, EIG_P, rng)
        .map_err(|e| format!("gap spectrum estimate failed: {e}"))?;
    let norm_bound = (delta_d - gap_min.lambda_hat)
        .max(delta_d - gap_max.lambda_hat)
        .max(1e-6);
    let gamma_hat = 1.02 * norm_bound;
    if gap_min.lambda_hat > -0.05 * gamma_hat {
        return Err(format!(
            "constraint curvature too weak (rayleigh {:.3e} vs weight {:.3e})",
            gap_min.lambda_hat, gamma_hat
        ));
    }
    let a1 = gap.linear_combination(1.0 / gamma_hat, &gap, 0.0);

    // Deterministic cap on the positive-definite weight range: along the
    // certified negative direction of A1 the aggregate loses definiteness
    // no later than the Rayleigh crossing, so any weight beyond the cap is
    // certainly outside the range.
    let v = &gap_min.v;
    let v_norm2 = dot(v, v).max(1e-300);
    let a1_curv = gap_min.lambda_hat / gamma_hat;
    let cap = gamma_hat + a_hat.quad_form(v) / v_norm2 / (-a1_curv);
    let zeta = (1.0f64).max(cap * (1.0 + 1e-12));

    // Directions fixed before the aiming loop so re-aims stay comparable.
    let x_dir = unit_direction(n, rng);
    let b1_dir = unit_direction(n, rng);
    let dense_a_hat = a_hat.to_dense();

    // Aim the crossing level until the measured curvature at the placed
    // weight matches the target within 10%.
    let mut mu_bar = cfg.mu_star_target;
    let mut placed: Option<(f64, f64)> = None;
    for _ in 0..MAX_AIM_ROUNDS {
        let (gamma_star, mu_meas) =
            place_crossing(cfg, &a1, &a0, &dense_a_hat, gamma_hat, zeta, mu_bar, rng)?;
        if (mu_meas - cfg.mu_star_target).abs() <= 0.1 * cfg.mu_star_target {
            placed = Some((gamma_star, mu_meas));
            break;
        }
        mu_bar = (mu_bar * cfg.mu_star_target / mu_meas)
            .clamp(1e-3 * cfg.mu_star_target, 0.6 * cfg.xi);
    }
    let Some((gamma_star, mu_star)) = placed else {
        return Err(format!(
            "curvature level refused to settle on the target {:.3e}",
            cfg.mu_star_target
        ));
    };

    // Linear terms solved from the optimality conditions at x_star. The
    // matrix product mirrors the two-product pencil application so the
    // stationarity residual cancels to rounding error.
    let mut x_star: Vec<f64> = x_dir.iter().map(|d| DIRECTION_NORM * d).collect();
    let mut b1: Vec<f64> = b1_dir.iter().map(|d| DIRECTION_NORM * d).collect();
    let mut ax = vec![0.0; n];
    a0.matvec_into(&x_star, &mut ax);
    a1.matvec_add_scaled(&x_star, gamma_star, &mut ax);
    let mut b0: Vec<f64> = ax
        .iter()
        .zip(&b1)
        .map(|(&a, &b)| -(a + gamma_star * b))
        .collect();
    let shrink = norm2(&b0).max(1.0);
    for ((x, b0v), b1v) in x_star.iter_mut().zip(&mut b0).zip(&mut b1) {
        *x /= shrink;
        *b0v /= shrink;
        *b1v /= shrink;
    }
    let c1 = -(a1.quad_form(&x_star) + 2.0 * dot(&b1, &x_star));
    debug_assert!(c1.abs() <= 1.0, "constant term escaped its unit bound");

    let q0 = Quadratic::new(a0, b0, 0.0);
    let q1 = Quadratic::new(a1, b1, c1);
    let opt = q0.eval(&x_star);
    let inst = GtrsInstance::new(q0, q1, cfg.xi, zeta, gamma_hat)
        .map_err(|e| format!("assembled instance failed validation: {e}"))?;
    let truth = GroundTruth {
        gamma_star,
        mu_star,
        x_star,
        opt,
        gamma_minus: None,
        gamma_plus: None,
    };
    Ok((inst, truth))
}

/// Finds the weight nearest the reference where the smallest eigenvalue of
/// the aggregate crosses `mu_bar`, and measures the level actually attained.
#[allow(clippy::too_many_arguments)]
fn place_crossing(
    cfg: &GenConfig,
    a1: &SparseSymMatrix,
    a0: &SparseSymMatrix,
    dense_a_hat: &DMatrix<f64>,
    gamma_hat: f64,
    zeta: f64,
    mu_bar: f64,
    rng: &mut dyn RngCore,
) -> Result<(f64, f64), String> {
    let n = cfg.n;
    let mut shifted = dense_a_hat.clone();
    for i in 0..n {
        shifted[(i, i)] -= mu_bar;
    }
    let chol = nalgebra::linalg::Cholesky::new(shifted)
        .ok_or_else(|| format!("aggregate lost definiteness at level {mu_bar:.3e}"))?;
    let l_mat = chol.l();
    let mut l_flat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            l_flat[i * n + j] = l_mat[(i, j)];
        }
    }
    // The whitened operator L^-1 (+-A1) L^-T shares its singular weights
    // with the pencil: the crossing nearest the reference sits at distance
    // -1/lambda_min along the chosen side.
    let negate = cfg.side == Side::Left;
    let wop = WhitenedOp { n, l: &l_flat, a1, negate };
    let rho_w = 1.05 / (cfg.xi - mu_bar).max(1e-6);
    let west = approx_eig(&wop, rho_w, 1e-9 * rho_w, EIG_P, rng)
        .map_err(|e| format!("whitened spectrum estimate failed: {e}"))?;
    if west.lambda_hat >= -1e-9 {
        return Err(format!(
            "no crossing on the requested side (whitened rayleigh {:.3e})",
            west.lambda_hat
        ));
    }
    let offset = -1.0 / west.lambda_hat;
    let gamma_star = match cfg.side {
        Side::Left => gamma_hat - offset,
        Side::Right => gamma_hat + offset,
    };
    if gamma_star <= 1e-9 || gamma_star >= zeta {
        return Err(format!(
            "crossing weight {gamma_star:.6e} left the admissible range (0, {zeta:.3e})"
        ));
    }
    let pencil = a0.linear_combination(1.0, a1, gamma_star);
    let level = approx_eig(&pencil, 2.0 * zeta, 0.02 * mu_bar, EIG_P, rng)
        .map_err(|e| format!("curvature measurement failed: {e}"))?;
    if level.lambda_hat <= 0.0 {
        return Err(format!(
            "measured curvature {:.3e} is not positive at the crossing",
            level.lambda_hat
        ));
    }
    Ok((gamma_star, level.lambda_hat))
}

/// `L^-1 (+-A1) L^-T` applied implicitly through two triangular solves.
struct WhitenedOp<'a> {
    n: usize,
    /// Row-major lower-triangular Cholesky factor.
    l: &'a [f64],
    a1: &'a SparseSymMatrix,
    negate: bool,
}

impl SymOp for WhitenedOp<'_> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        // z = L^-T x by backward substitution.
        let mut z = x.to_vec();
        for i in (0..n).rev() {
            let mut value = z[i];
            for j in (i + 1)..n {
                value -= self.l[j * n + i] * z[j];
            }
            z[i] = value / self.l[i * n + i];
        }
        let mut w = vec![0.0; n];
        self.a1.matvec_into(&z, &mut w);
        if self.negate {
            for value in &mut w {
                *value = -*value;
            }
        }
        // y = L^-1 w by forward substitution.
        for i in 0..n {
            let mut value = w[i];
            for j in 0..i {
                value -= self.l[i * n + j] * y[j];
            }
            y[i] = value / self.l[i * n + i];
        }
    }
}

/// Diagonal positions plus symmetric Bernoulli off-diagonal positions whose
/// expected two-triangle count equals the target.
fn sparsity_pattern(n: usize, nnz_target: usize, rng: &mut dyn RngCore) -> Vec<(usize, usize)> {
    let mut pattern: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    let pairs = (n * (n - 1)) as f64;
    let prob = if pairs > 0.0 {
        ((nnz_target - n) as f64 / pairs).clamp(0.0, 1.0)
    } else {
        0.0
    };
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < prob {
                pattern.push((i, j));
            }
        }
    }
    pattern
}

/// Two independent Gaussian fillings of one pattern.
fn filled_pair(
    n: usize,
    pattern: &[(usize, usize)],
    rng: &mut dyn RngCore,
) -> Result<(SparseSymMatrix, SparseSymMatrix), String> {
    let mut first = Vec::with_capacity(pattern.len());
    let mut second = Vec::with_capacity(pattern.len());
    for &(i, j) in pattern {
        first.push((i, j, StandardNormal.sample(rng)));
        second.push((i, j, StandardNormal.sample(rng)));
    }
    let a = SparseSymMatrix::from_triplets(n, first)
        .map_err(|e| format!("pattern assembly failed: {e}"))?;
    let b = SparseSymMatrix::from_triplets(n, second)
        .map_err(|e| format!("pattern assembly failed: {e}"))?;
    Ok((a, b))
}

/// A uniformly random unit vector.
fn unit_direction(n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let nv = norm2(&v);
        if nv > 1e-6 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

/// Closed-form families that exercise degenerate dual geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pathological {
    /// The dual slope decays like `eps^2`, so slope-based tests sit inside
    /// their noise floor while the curvature stays comfortably positive.
    /// Requires `0 < eps <= 1/4`.
    FlatNu { eps: f64 },
    /// Zero linear and constant terms: the dual slope vanishes identically
    /// and every admissible weight is dual-optimal.
    ConstantNu,
    /// A classic trust-region hard case with an unbounded admissible range;
    /// the linear term deliberately exceeds the unit bound, so this family
    /// is for oracle tests only.
    HardCaseTrs,
    /// Zero linear terms with a strictly negative constraint constant: the
    /// constraint value along the dual path is the constant `-slack`, so the
    /// dual maximum sits at the singular left endpoint of the admissible
    /// interval and the regularity is exactly zero. Level descent can never
    /// certify a regular bracket on this family. Requires `0 < slack <= 1/4`.
    BoundaryOptimum { slack: f64 },
}

/// Builds a pathological instance with its exact solution data.
///
/// The current families are closed-form and deterministic; the randomness
/// source is part of the signature so callers treat all generators alike.
///
/// # Panics
/// Panics when a family parameter is outside its documented range.
pub fn generate_pathological(
    kind: Pathological,
    _rng: &mut dyn RngCore,
) -> (GtrsInstance, GroundTruth) {
    match kind {
        Pathological::FlatNu { eps } => {
            assert!(
                eps > 0.0 && eps <= 0.25,
                "flat-slope scale must lie in (0, 1/4]"
            );
            let a0 = SparseSymMatrix::from_diagonal(&[1.0, -0.5]).expect("valid diagonal");
            let a1 = SparseSymMatrix::from_diagonal(&[-1.0, 1.0]).expect("valid diagonal");
            let q0 = Quadratic::new(a0, vec![eps, 0.0], 0.0);
            let q1 = Quadratic::new(a1, vec![0.0, 0.0], 16.0 * eps * eps);
            let inst = GtrsInstance::new(q0, q1, 0.25, 1.0, 0.75).expect("valid instance");
            let truth = GroundTruth {
                gamma_star: 0.75,
                mu_star: 0.25,
                x_star: vec![-4.0 * eps, 0.0],
                opt: 8.0 * eps * eps,
                gamma_minus: Some(0.5),
                gamma_plus: Some(1.0),
            };
            (inst, truth)
        }
        Pathological::ConstantNu => {
            let a0 = SparseSymMatrix::from_diagonal(&[1.0, -0.5]).expect("valid diagonal");
            let a1 = SparseSymMatrix::from_diagonal(&[-1.0, 1.0]).expect("valid diagonal");
            let q0 = Quadratic::new(a0, vec![0.0, 0.0], 0.0);
            let q1 = Quadratic::new(a1, vec![0.0, 0.0], 0.0);
            let inst = GtrsInstance::new(q0, q1, 0.25, 1.0, 0.75).expect("valid instance");
            let truth = GroundTruth {
                gamma_star: 0.75,
                mu_star: 0.25,
                x_star: vec![0.0, 0.0],
                opt: 0.0,
                gamma_minus: Some(0.5),
                gamma_plus: Some(1.0),
            };
            (inst, truth)
        }
        Pathological::HardCaseTrs => {
            let a0 = SparseSymMatrix::from_diagonal(&[1.0, -1.0]).expect("valid diagonal");
            let a1 = SparseSymMatrix::identity(2);
            let q0 = Quadratic::new(a0, vec![3.0, 0.0], 0.0);
            let q1 = Quadratic::new(a1, vec![0.0, 0.0], -1.0);
            let inst = GtrsInstance::new(q0, q1, 1.0, 2.0, 2.0).expect("valid instance");
            let truth = GroundTruth {
                gamma_star: 2.0,
                mu_star: 1.0,
                x_star: vec![-1.0, 0.0],
                opt: -5.0,
                gamma_minus: Some(1.0),
                gamma_plus: None,
            };
            (inst, truth)
        }
        Pathological::BoundaryOptimum { slack } => {
            assert!(
                slack > 0.0 && slack <= 0.25,
                "constraint slack must lie in (0, 1/4]"
            );
            // Minimize x1^2 - x2^2/2 subject to x2^2 <= x1^2 + slack. On the
            // active constraint the objective is (x1^2 - slack)/2, minimized
            // at x1 = 0, so the optimum -slack/2 is attained at
            // (0, sqrt(slack)) where the pencil eigenvalue vanishes.
            let a0 = SparseSymMatrix::from_diagonal(&[1.0, -0.5]).expect("valid diagonal");
            let a1 = SparseSymMatrix::from_diagonal(&[-1.0, 1.0]).expect("valid diagonal");
            let q0 = Quadratic::new(a0, vec![0.0, 0.0], 0.0);
            let q1 = Quadratic::new(a1, vec![0.0, 0.0], -slack);
            let inst = GtrsInstance::new(q0, q1, 0.25, 1.0, 0.75).expect("valid instance");
            let truth = GroundTruth {
                gamma_star: 0.5,
                mu_star: 0.0,
                x_star: vec![0.0, slack.sqrt()],
                opt: -0.5 * slack,
                gamma_minus: Some(0.5),
                gamma_plus: Some(1.0),
            };
            (inst, truth)
        }
    }
}

/// Nonzero count over both triangles of a symmetric matrix.
pub fn full_nnz(m: &SparseSymMatrix) -> usize {
    m.triplets()
        .iter()
        .map(|&(r, c, _)| if r == c { 1 } else { 2 })
        .sum()
}
