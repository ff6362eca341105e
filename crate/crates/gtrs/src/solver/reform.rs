//! Reformulation construction: classify the instance and, when possible,
//! certify a weight bracket around the dual maximizer.
//!
//! The dispatcher evaluates the approximate multiplier derivative at the
//! reference weight. A certified sign sends the search left or right, where
//! a geometric cascade of definiteness levels alternates certified weight
//! searches with derivative evaluations until a sign change is bracketed.
//! An ambiguous value at the reference weight probes one symmetric pair of
//! weights around it. Searches that bottom out return either the current
//! iterate (derivative flat — the iterate is already near-optimal) or a
//! boundary point built from the final curvature direction.

use std::time::Instant;

use rand::RngCore;

use crate::cg::{approx_nu, NuEvaluation};
use crate::core::la::dot;
use crate::core::GtrsInstance;
use crate::gamma::{approx_gamma_left, approx_gamma_right, GammaCertificate};
use crate::solver::regular::{coherence, cross_to_feasible};
use crate::solver::{ReformDiagnostics, ReformOutcome, ReformReport, SolveError, TraceRecord};

pub(crate) struct ReformState {
    pub t0: Instant,
    pub trace: Vec<TraceRecord>,
    pub diag: ReformDiagnostics,
}

impl ReformState {
    pub(crate) fn new(t0: Instant) -> Self {
        ReformState { t0, trace: Vec::new(), diag: ReformDiagnostics::default() }
    }

    fn row(&mut self, iter: usize, lo: f64, hi: f64, mu_t: f64, nu_t: f64) {
        self.trace.push(TraceRecord {
            phase: "reform",
            iter,
            wall_s: self.t0.elapsed().as_secs_f64(),
            gamma_lo: Some(lo),
            gamma_hi: Some(hi),
            mu_t: Some(mu_t),
            nu_t: Some(nu_t),
            error_cr: None,
            error: None,
        });
    }

    fn note(&mut self, line: impl Into<String>) {
        self.diag.phases.push(line.into());
    }

    fn into_report(self, outcome: ReformOutcome) -> ReformReport {
        ReformReport { outcome, diagnostics: self.diag, trace: self.trace }
    }
}

fn nu_at(
    inst: &GtrsInstance,
    gamma: f64,
    mu: f64,
    delta: f64,
    state: &mut ReformState,
) -> Result<NuEvaluation, SolveError> {
    state.diag.cg_calls += 1;
    approx_nu(inst, gamma, mu, delta)
        .map_err(|e| SolveError::failed(format!("derivative evaluation at weight {gamma}: {e}")))
}

/// Number of definiteness levels in the one-sided cascades.
fn level_count(inst: &GtrsInstance, eps: f64) -> usize {
    let z = inst.zeta;
    ((3200.0 * z.powi(4) / (eps * inst.xi.powi(3))).log2().ceil() as usize).max(1)
}

/// Classifies the instance and certifies a reformulation.
///
/// Evaluates the approximate multiplier derivative at the reference weight
/// to accuracy `eps/(4*zeta)`; a certified negative value searches below the
/// reference weight, a certified positive value above it, anything else
/// probes the symmetric pair around it. When regularity is left open, the
/// data-coherence bound is attached to the diagnostics.
///
/// # Errors
/// [`SolveError::Failed`] when a certified weight search or an iterative
/// subsolver fails.
pub fn construct_reform(
    inst: &GtrsInstance,
    eps: f64,
    p: f64,
    rng: &mut dyn RngCore,
) -> Result<ReformReport, SolveError> {
    construct_reform_from(inst, eps, p, rng, Instant::now())
}

pub(crate) fn construct_reform_from(
    inst: &GtrsInstance,
    eps: f64,
    p: f64,
    rng: &mut dyn RngCore,
    t0: Instant,
) -> Result<ReformReport, SolveError> {
    assert!(eps > 0.0 && eps < 1.0, "accuracy must lie in (0, 1)");
    assert!(p > 0.0 && p < 1.0, "failure probability must lie in (0, 1)");
    let mut state = ReformState::new(t0);
    let threshold = eps / (4.0 * inst.zeta);

    let nu0 = nu_at(inst, inst.gamma_hat, inst.xi, threshold, &mut state)?;
    state.note(format!(
        "dispatch: derivative {} at reference weight {} (threshold {threshold})",
        nu0.nu_tilde, inst.gamma_hat
    ));

    let mut report = if nu0.nu_tilde + threshold < 0.0 {
        state.note("dispatch: certified negative, searching below the reference weight");
        cr_left_inner(inst, eps, p, rng, state)?
    } else if nu0.nu_tilde - threshold > 0.0 {
        state.note("dispatch: certified positive, searching above the reference weight");
        cr_right_inner(inst, eps, p, rng, state)?
    } else {
        state.note("dispatch: ambiguous, probing the symmetric pair around the reference weight");
        cr_mid_inner(inst, eps, &nu0, state)?
    };

    if matches!(report.outcome, ReformOutcome::MaybeRegular { .. }) {
        let bound = coherence(inst)
            .map_err(|e| SolveError::failed(format!("coherence evaluation: {e}")))?;
        report.diagnostics.coherence = Some(bound);
        report.diagnostics.cg_calls += 2;
    }
    Ok(report)
}

/// Level cascade below the reference weight. `x0` context is not needed:
/// every level produces its own iterate.
pub fn cr_left(
    inst: &GtrsInstance,
    eps: f64,
    p: f64,
    rng: &mut dyn RngCore,
) -> Result<ReformReport, SolveError> {
    cr_left_inner(inst, eps, p, rng, ReformState::new(Instant::now()))
}

fn cr_left_inner(
    inst: &GtrsInstance,
    eps: f64,
    p: f64,
    rng: &mut dyn RngCore,
    mut state: ReformState,
) -> Result<ReformReport, SolveError> {
    let threshold = eps / (4.0 * inst.zeta);
    let levels = level_count(inst, eps);
    let p_level = p / levels as f64;
    let mut last: Option<(GammaCertificate, NuEvaluation)> = None;

    for t in 1..=levels {
        let mu_t = inst.xi * 0.5f64.powi(t as i32);
        let cert = approx_gamma_left(inst, mu_t, p_level, rng)
            .map_err(|e| SolveError::failed(format!("weight search at level {t}: {e}")))?;
        state.diag.eig_calls += cert.steps;
        let nu = nu_at(inst, cert.gamma, 0.5 * mu_t, threshold, &mut state)?;
        state.row(t, cert.gamma, inst.gamma_hat, mu_t, nu.nu_tilde);

        if nu.nu_tilde - threshold > 0.0 {
            state.note(format!(
                "level {t}: certified positive at weight {}, bracket closed",
                cert.gamma
            ));
            let outcome = ReformOutcome::Regular {
                gamma1: cert.gamma,
                gamma2: inst.gamma_hat,
                mu_tilde: 0.25 * mu_t,
            };
            return Ok(state.into_report(outcome));
        }
        if nu.nu_tilde + threshold >= 0.0 {
            // Ambiguous: probe one quarter-level below the accepted weight.
            let gamma_probe = cert.gamma - 0.25 * mu_t;
            let nu_probe = nu_at(inst, gamma_probe, 0.25 * mu_t, threshold, &mut state)?;
            state.row(t, gamma_probe, inst.gamma_hat, 0.25 * mu_t, nu_probe.nu_tilde);
            if nu_probe.nu_tilde - threshold > 0.0 {
                state.note(format!(
                    "level {t}: probe at weight {gamma_probe} certified positive, bracket closed"
                ));
                let outcome = ReformOutcome::Regular {
                    gamma1: gamma_probe,
                    gamma2: inst.gamma_hat,
                    mu_tilde: 0.25 * mu_t,
                };
                return Ok(state.into_report(outcome));
            }
            state.note(format!(
                "level {t}: derivative flat near weight {}, returning current iterate",
                cert.gamma
            ));
            return Ok(state.into_report(ReformOutcome::MaybeRegular { x: nu.x_tilde }));
        }
        // Certified negative: the maximizer sits below this weight; descend.
        last = Some((cert, nu));
    }

    let (cert, nu) = last.expect("at least one level ran");
    state.note(format!(
        "levels exhausted: boundary step from weight {} with curvature direction",
        cert.gamma
    ));
    Ok(state.into_report(exhaustion_outcome(inst, &cert, &nu)))
}

/// Level cascade above the reference weight, mirroring [`cr_left`].
pub fn cr_right(
    inst: &GtrsInstance,
    eps: f64,
    p: f64,
    rng: &mut dyn RngCore,
) -> Result<ReformReport, SolveError> {
    cr_right_inner(inst, eps, p, rng, ReformState::new(Instant::now()))
}

fn cr_right_inner(
    inst: &GtrsInstance,
    eps: f64,
    p: f64,
    rng: &mut dyn RngCore,
    mut state: ReformState,
) -> Result<ReformReport, SolveError> {
    let threshold = eps / (4.0 * inst.zeta);
    let levels = level_count(inst, eps);
    let p_level = p / levels as f64;
    let mut last: Option<(GammaCertificate, NuEvaluation)> = None;

    for t in 1..=levels {
        let mu_t = inst.xi * 0.5f64.powi(t as i32);
        let cert = approx_gamma_right(inst, mu_t, p_level, rng)
            .map_err(|e| SolveError::failed(format!("weight search at level {t}: {e}")))?;
        state.diag.eig_calls += cert.steps;
        let nu = nu_at(inst, cert.gamma, 0.5 * mu_t, threshold, &mut state)?;
        state.row(t, inst.gamma_hat, cert.gamma, mu_t, nu.nu_tilde);

        if nu.nu_tilde + threshold < 0.0 {
            state.note(format!(
                "level {t}: certified negative at weight {}, bracket closed",
                cert.gamma
            ));
            let outcome = ReformOutcome::Regular {
                gamma1: inst.gamma_hat,
                gamma2: cert.gamma,
                mu_tilde: 0.25 * mu_t,
            };
            return Ok(state.into_report(outcome));
        }
        if nu.nu_tilde - threshold <= 0.0 {
            let gamma_probe = cert.gamma + 0.25 * mu_t;
            let nu_probe = nu_at(inst, gamma_probe, 0.25 * mu_t, threshold, &mut state)?;
            state.row(t, inst.gamma_hat, gamma_probe, 0.25 * mu_t, nu_probe.nu_tilde);
            if nu_probe.nu_tilde + threshold < 0.0 {
                state.note(format!(
                    "level {t}: probe at weight {gamma_probe} certified negative, bracket closed"
                ));
                let outcome = ReformOutcome::Regular {
                    gamma1: inst.gamma_hat,
                    gamma2: gamma_probe,
                    mu_tilde: 0.25 * mu_t,
                };
                return Ok(state.into_report(outcome));
            }
            state.note(format!(
                "level {t}: derivative flat near weight {}, returning current iterate",
                cert.gamma
            ));
            return Ok(state.into_report(ReformOutcome::MaybeRegular { x: nu.x_tilde }));
        }
        last = Some((cert, nu));
    }

    let (cert, nu) = last.expect("at least one level ran");
    state.note(format!(
        "levels exhausted: boundary step from weight {} with curvature direction",
        cert.gamma
    ));
    Ok(state.into_report(exhaustion_outcome(inst, &cert, &nu)))
}

/// Builds the boundary point for an exhausted cascade: orient the final
/// eigenvector so it does not increase the aggregated objective, then step
/// to the constraint boundary along it.
fn exhaustion_outcome(
    inst: &GtrsInstance,
    cert: &GammaCertificate,
    nu: &NuEvaluation,
) -> ReformOutcome {
    let pencil = inst.pencil(cert.gamma);
    let n = inst.q0.n();
    let mut grad_half = vec![0.0; n];
    pencil.apply_matrix(&nu.x_tilde, &mut grad_half);
    let lin = pencil.linear_term();
    for i in 0..n {
        grad_half[i] += lin[i];
    }
    let mut v = cert.v.clone();
    if dot(&v, &grad_half) > 0.0 {
        for val in v.iter_mut() {
            *val = -*val;
        }
    }
    // Inside the feasible region the boundary lies before the crossing
    // (shrink on overshoot); from outside it lies beyond it.
    let feasible_beyond = inst.q1.eval(&nu.x_tilde) > 0.0;
    match cross_to_feasible(&inst.q1, &nu.x_tilde, &v, 1.0, feasible_beyond) {
        Some((_, x)) => ReformOutcome::NotRegular { x },
        // No usable crossing: keep the current iterate, whose constraint
        // value is already within the evaluation accuracy of zero.
        None => ReformOutcome::NotRegular { x: nu.x_tilde.clone() },
    }
}

/// Symmetric probe around the reference weight, used when the derivative
/// there is too flat to classify. `x0` is the iterate from the dispatch
/// evaluation, returned when the probes cannot certify a bracket.
pub fn cr_mid(
    inst: &GtrsInstance,
    eps: f64,
    x0: &NuEvaluation,
) -> Result<ReformReport, SolveError> {
    cr_mid_inner(inst, eps, x0, ReformState::new(Instant::now()))
}

fn cr_mid_inner(
    inst: &GtrsInstance,
    eps: f64,
    x0: &NuEvaluation,
    mut state: ReformState,
) -> Result<ReformReport, SolveError> {
    let threshold = eps / (4.0 * inst.zeta);
    let half = 0.5 * inst.xi;
    let gamma_lo = inst.gamma_hat - half;
    let gamma_hi = inst.gamma_hat + half;

    let nu_lo = nu_at(inst, gamma_lo, half, threshold, &mut state)?;
    state.row(1, gamma_lo, inst.gamma_hat, half, nu_lo.nu_tilde);
    let nu_hi = nu_at(inst, gamma_hi, half, threshold, &mut state)?;
    state.row(2, inst.gamma_hat, gamma_hi, half, nu_hi.nu_tilde);

    if nu_lo.nu_tilde - threshold > 0.0 && nu_hi.nu_tilde + threshold < 0.0 {
        state.note(format!(
            "probe pair certified a sign change across [{gamma_lo}, {gamma_hi}]"
        ));
        let outcome = ReformOutcome::Regular {
            gamma1: gamma_lo,
            gamma2: gamma_hi,
            mu_tilde: half,
        };
        return Ok(state.into_report(outcome));
    }
    state.note("probe pair inconclusive, returning the dispatch iterate");
    Ok(state.into_report(ReformOutcome::MaybeRegular { x: x0.x_tilde.clone() }))
}
