//! End-to-end solvers: certified reformulation construction, the
//! accelerated two-weight minimax solve, feasibility rounding, and a
//! perturbed-reformulation baseline, behind a small strategy registry.
//!
//! The main pipeline first classifies the instance by the approximate
//! multiplier derivative at the reference weight, then either certifies a
//! weight bracket around the dual maximizer (`Regular`), returns an iterate
//! that is already near-optimal although regularity could not be certified
//! (`MaybeRegular`), or returns a boundary point built from a curvature
//! direction after the level search bottoms out (`NotRegular`). Regular
//! outcomes are handed to the accelerated minimax solve over the bracket
//! endpoints; every final iterate is rounded onto the constraint set.

mod pipeline;
mod reform;
mod regular;

pub use pipeline::{baseline_wk20, solve, solve_with_reform};
pub use reform::{construct_reform, cr_left, cr_mid, cr_right};
pub use regular::{coherence, round_to_feasible, solve_regular, RoundingError};

use rand::RngCore;
use thiserror::Error;

use crate::core::GtrsInstance;
use crate::dual_oracle::GroundTruth;

/// How the reformulation stage classified the instance.
#[derive(Debug, Clone, PartialEq)]
pub enum ReformOutcome {
    /// A certified bracket `[gamma1, gamma2]` containing the dual maximizer,
    /// with both endpoint pencils at least `mu_tilde`-definite.
    Regular {
        gamma1: f64,
        gamma2: f64,
        mu_tilde: f64,
    },
    /// Regularity could not be certified; `x` is the near-optimal iterate
    /// produced at the flat detection point.
    MaybeRegular { x: Vec<f64> },
    /// The level search exhausted its budget; `x` is a boundary point built
    /// from the final curvature direction.
    NotRegular { x: Vec<f64> },
}

impl ReformOutcome {
    /// Stable lowercase label for reports and CSV output.
    pub fn kind(&self) -> &'static str {
        match self {
            ReformOutcome::Regular { .. } => "regular",
            ReformOutcome::MaybeRegular { .. } => "maybe_regular",
            ReformOutcome::NotRegular { .. } => "not_regular",
        }
    }
}

/// Work counters and context gathered while constructing the reformulation.
#[derive(Debug, Clone, Default)]
pub struct ReformDiagnostics {
    /// Coarse event log, one line per decision point.
    pub phases: Vec<String>,
    /// Randomized eigenvalue estimates performed.
    pub eig_calls: usize,
    /// Conjugate-gradient solves performed.
    pub cg_calls: usize,
    /// Data-coherence bound, computed when regularity was left open.
    pub coherence: Option<f64>,
}

/// Outcome plus diagnostics of the reformulation stage.
#[derive(Debug, Clone)]
pub struct ReformReport {
    pub outcome: ReformOutcome,
    pub diagnostics: ReformDiagnostics,
    /// Trace rows recorded during the stage.
    pub trace: Vec<TraceRecord>,
}

/// One progress sample. Unset fields do not apply to the phase.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TraceRecord {
    /// `"reform"` or `"solve"`.
    pub phase: &'static str,
    /// Level counter within the reformulation, iteration counter within
    /// the minimax solve.
    pub iter: usize,
    /// Seconds since the solver started.
    pub wall_s: f64,
    /// Lower end of the weight bracket under consideration.
    pub gamma_lo: Option<f64>,
    /// Upper end of the weight bracket under consideration.
    pub gamma_hi: Option<f64>,
    /// Definiteness level of the current reformulation step.
    pub mu_t: Option<f64>,
    /// Approximate multiplier derivative observed at the current weight.
    pub nu_t: Option<f64>,
    /// Reformulation-value error of the current iterate, when the true
    /// optimum is known.
    pub error_cr: Option<f64>,
    /// Objective error of the final feasible iterate, when known.
    pub error: Option<f64>,
}

/// Full result of a solver run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Iterate before feasibility rounding.
    pub x_bar: Vec<f64>,
    /// Feasible iterate (`q1(x_tilde) <= 0` as evaluated).
    pub x_tilde: Vec<f64>,
    /// `q0(x_tilde) - opt`, when the true optimum is known.
    pub error: Option<f64>,
    /// Final reformulation-value error, when the true optimum is known and
    /// a bracket solve ran.
    pub error_cr: Option<f64>,
    /// Classification produced by the reformulation stage.
    pub outcome: ReformOutcome,
    /// Reformulation work counters.
    pub diagnostics: ReformDiagnostics,
    /// Regularity proxy used for reporting: the best available lower bound
    /// on the implicit regularity, floored at the accuracy-driven level.
    pub phi: f64,
    /// Progress samples from both stages.
    pub trace: Vec<TraceRecord>,
    /// Seconds spent constructing the reformulation.
    pub reform_seconds: f64,
    /// Seconds spent in the bracket solve and rounding.
    pub solve_seconds: f64,
}

/// Hard failures of a solver run.
#[derive(Debug, Error)]
pub enum SolveError {
    /// A stage failed in a way that leaves no sound iterate to report.
    #[error("{reason}")]
    Failed { reason: String },
}

impl SolveError {
    pub(crate) fn failed(reason: impl Into<String>) -> Self {
        SolveError::Failed { reason: reason.into() }
    }
}

/// A named end-to-end solver, selectable at runtime.
pub trait SolverStrategy: Send + Sync {
    /// Stable registry name.
    fn name(&self) -> &'static str;
    /// Runs the solver on `inst` to accuracy `eps` with failure budget `p`.
    fn run(
        &self,
        inst: &GtrsInstance,
        truth: Option<&GroundTruth>,
        eps: f64,
        p: f64,
        rng: &mut dyn RngCore,
    ) -> Result<SolveReport, SolveError>;
}

/// The accelerated dual solver (registry label `wlk21`).
struct DualAccelerated;

impl SolverStrategy for DualAccelerated {
    fn name(&self) -> &'static str {
        "wlk21"
    }
    fn run(
        &self,
        inst: &GtrsInstance,
        truth: Option<&GroundTruth>,
        eps: f64,
        p: f64,
        rng: &mut dyn RngCore,
    ) -> Result<SolveReport, SolveError> {
        solve(inst, truth, eps, p, rng)
    }
}

/// The perturbed-reformulation baseline (registry label `wk20`).
struct PerturbedBaseline;

impl SolverStrategy for PerturbedBaseline {
    fn name(&self) -> &'static str {
        "wk20"
    }
    fn run(
        &self,
        inst: &GtrsInstance,
        truth: Option<&GroundTruth>,
        eps: f64,
        p: f64,
        rng: &mut dyn RngCore,
    ) -> Result<SolveReport, SolveError> {
        baseline_wk20(inst, truth, eps, p, rng)
    }
}

static DUAL_ACCELERATED: DualAccelerated = DualAccelerated;
static PERTURBED_BASELINE: PerturbedBaseline = PerturbedBaseline;

/// All registered solver strategies.
pub fn solver_registry() -> Vec<&'static dyn SolverStrategy> {
    vec![&DUAL_ACCELERATED, &PERTURBED_BASELINE]
}

/// Looks a strategy up by registry name.
pub fn solver_by_name(name: &str) -> Option<&'static dyn SolverStrategy> {
    solver_registry().into_iter().find(|s| s.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_both_strategies() {
        let names: Vec<_> = solver_registry().iter().map(|s| s.name()).collect();
        assert_eq!(names, vec!["wlk21", "wk20"]);
        assert!(solver_by_name("wlk21").is_some());
        assert!(solver_by_name("wk20").is_some());
        assert!(solver_by_name("nope").is_none());
    }
}
