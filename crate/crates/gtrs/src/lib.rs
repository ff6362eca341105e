//! Sparse linear-algebra toolkit for the generalized trust-region subproblem
//! (GTRS): minimize a quadratic `q0` subject to a single quadratic constraint
//! `q1(x) <= 0`, where neither quadratic need be convex.
//!
//! The solver works through the dual: for a penalty weight `gamma` it studies
//! the aggregated quadratic `q(gamma, x) = q0(x) + gamma * q1(x)` and locates a
//! weight interval on which the aggregated Hessian is provably positive
//! definite. The problem is then reformulated as the minimization of a maximum
//! of two strongly convex quadratics and handed to an accelerated first-order
//! method, which converges linearly whenever the instance has positive implicit
//! regularity.
//!
//! Crate layout:
//! - [`core`]: sparse symmetric matrices, quadratic forms, problem instances,
//!   normalization, and boundary stepping.
//! - [`eig`]: randomized extreme-eigenvalue estimation (Lanczos).
//! - [`cg`]: conjugate gradients and constraint-value evaluation along the
//!   dual path.
//! - [`gamma`]: bisection searches that certify penalty weights with a
//!   prescribed smallest-eigenvalue band.
//! - [`minimax`]: accelerated minimization of a maximum of two quadratics.
//! - [`solver`]: the end-to-end pipeline — reformulation construction, the
//!   regular-case solve, feasibility rounding, and a baseline method.
//! - [`dual_oracle`]: dense reference computations of the dual function and
//!   ground-truth optimizers (test and validation infrastructure).
//! - [`gen`]: random and pathological instance generators with ground truth.

pub mod cg;
pub mod core;
pub mod dual_oracle;
pub mod eig;
pub mod gamma;
pub mod gen;
pub mod minimax;
pub mod solver;
