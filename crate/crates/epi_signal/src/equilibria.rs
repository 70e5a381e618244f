//! Pooling, separating and partial-pooling regimes and the mixing fixed point.

use crate::epi_core::{coverage_rc, EpiParams};
use crate::error::{Error, Result};
use crate::signaling::{BehaviorProfile, GameParams, SenderStrategy, N};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Separating,
    PartialPooling(f64),
    Pooling,
}

impl EquilibriumKind {
    pub fn name(&self) -> &'static str {
        match self {
            EquilibriumKind::Separating => "separating",
            EquilibriumKind::PartialPooling(_) => "partial_pooling",
            EquilibriumKind::Pooling => "pooling",
        }
    }
}

/// Strategy for a regime: θ₀₁ and θ₁₀ pool on `00` with probability α, θ₁₁ always pools.
pub fn build_strategy(kind: EquilibriumKind, _profile: &BehaviorProfile) -> SenderStrategy {
    match kind {
        EquilibriumKind::Separating => SenderStrategy::truthful(),
        EquilibriumKind::Pooling => SenderStrategy::pooling(),
        EquilibriumKind::PartialPooling(alpha) => SenderStrategy {
            g: [
                [1.0, 0.0, 0.0, 0.0],
                [alpha, 1.0 - alpha, 0.0, 0.0],
                [alpha, 0.0, 1.0 - alpha, 0.0],
                [1.0, 0.0, 0.0, 0.0],
            ],
        },
    }
}

fn pooled_marginal(pi: &[f64; N], alpha: f64) -> f64 {
    pi[0] + alpha * (pi[1] + pi[2]) + pi[3]
}

pub fn pooled_message_posterior(pi: &[f64; N], alpha: f64) -> Result<[f64; N]> {
    let z = pooled_marginal(pi, alpha);
    if !(z > 0.0) {
        return Err(Error::DegenerateMarginal);
    }
    Ok([pi[0] / z, alpha * pi[1] / z, alpha * pi[2] / z, pi[3] / z])
}

/// `(ψ̂, η̂)` as claimed shares when mixing at α.
pub fn estimated_rates(pi: &[f64; N], alpha: f64) -> (f64, f64) {
    (
        pi[0] + pi[1] + alpha * pi[2] + pi[3],
        pi[0] + pi[2] + alpha * pi[1] + pi[3],
    )
}

/// True vaccinated and masked shares implied by a type distribution.
pub fn true_rates(pi: &[f64; N]) -> (f64, f64) {
    (pi[0] + pi[1], pi[0] + pi[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RcMode {
    /// Realized shares are the true shares scaled by true/claimed compliance.
    #[default]
    UnderResponse,
    /// `R_c(0) + β_sens·α`.
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RcAlpha {
    pub rc: f64,
    pub beta_sens: f64,
}

const SENS_H: f64 = 1e-4;

fn rc_under_response(params: &EpiParams, pi: &[f64; N], alpha: f64) -> f64 {
    let (v, eta) = true_rates(pi);
    let (v_hat, eta_hat) = estimated_rates(pi, alpha);
    let scale = |truth: f64, claim: f64| {
        if claim > 0.0 {
            truth * truth / claim
        } else {
            truth
        }
    };
    coverage_rc(params, scale(v, v_hat), scale(eta, eta_hat))
}

/// Central difference at α = 0, using the reflected value for the left point.
fn sensitivity_with(params: &EpiParams, pi: &[f64; N], h: f64) -> f64 {
    // α < 0 is outside the model, but the rates are affine in α so the
    // extension is the natural one
    (rc_under_response(params, pi, h) - rc_under_response(params, pi, -h)) / (2.0 * h)
}

pub fn beta_sensitivity(params: &EpiParams, pi: &[f64; N]) -> f64 {
    sensitivity_with(params, pi, SENS_H)
}

pub fn rc_of_alpha(params: &EpiParams, pi: &[f64; N], alpha: f64, mode: RcMode) -> RcAlpha {
    let beta_sens = beta_sensitivity(params, pi);
    let rc = match mode {
        RcMode::UnderResponse => rc_under_response(params, pi, alpha),
        RcMode::Linearized => rc_under_response(params, pi, 0.0) + beta_sens * alpha,
    };
    RcAlpha { rc, beta_sens }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pooling,
    PartialPooling,
    Separating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExistenceWindow {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub rc0: f64,
    pub rc1: f64,
    pub beta_sens: f64,
    pub verdict: Verdict,
    /// Pure separation is never self-enforcing while mask incentives are positive.
    pub separating_unstable: bool,
}

impl ExistenceWindow {
    pub fn is_empty(&self) -> bool {
        self.lower_bound >= self.upper_bound
    }
}

pub fn existence_window(
    params: &EpiParams,
    game: &GameParams,
    pi: &[f64; N],
    mode: RcMode,
) -> ExistenceWindow {
    let rc0 = rc_of_alpha(params, pi, 0.0, mode).rc;
    let at1 = rc_of_alpha(params, pi, 1.0, mode);
    let beta = at1.beta_sens;
    let lower = (-game.a * at1.rc).exp() * game.i_m;
    let upper = (-game.a * rc0).exp() * game.i_m * (1.0 + game.a * beta);
    let verdict = if game.lambda1 <= lower {
        Verdict::Pooling
    } else if game.lambda1 >= upper {
        Verdict::Separating
    } else {
        Verdict::PartialPooling
    };
    ExistenceWindow {
        lower_bound: lower,
        upper_bound: upper,
        rc0,
        rc1: at1.rc,
        beta_sens: beta,
        verdict,
        separating_unstable: game.i_m > 0.0,
    }
}

/// `λ₁·α·(1 − απ₀₁/P(00)) − e^{−a·R_c(α)}·I_m`, zero at the θ₀₁ indifference point.
pub fn fixed_point_gap(
    params: &EpiParams,
    game: &GameParams,
    pi: &[f64; N],
    alpha: f64,
    mode: RcMode,
) -> f64 {
    let rc = rc_of_alpha(params, pi, alpha, mode).rc;
    let z = pooled_marginal(pi, alpha);
    let share = if z > 0.0 { alpha * pi[1] / z } else { 0.0 };
    game.lambda1 * alpha * (1.0 - share) - (-game.a * rc).exp() * game.i_m
}

/// The right-hand side of `α = RHS(α)`.
pub fn fixed_point_rhs(
    params: &EpiParams,
    game: &GameParams,
    pi: &[f64; N],
    alpha: f64,
    mode: RcMode,
) -> f64 {
    let rc = rc_of_alpha(params, pi, alpha, mode).rc;
    let z = pooled_marginal(pi, alpha);
    let share = if z > 0.0 { alpha * pi[1] / z } else { 0.0 };
    (-game.a * rc).exp() * game.i_m / (game.lambda1 * (1.0 - share))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub alpha: f64,
    /// `|α − RHS(α)|`.
    pub residual: f64,
    pub iterations: usize,
    /// Set when the answer sits on the boundary rather than strictly inside.
    pub boundary: bool,
}

pub fn solve_alpha_fixed_point(
    params: &EpiParams,
    game: &GameParams,
    pi: &[f64; N],
    mode: RcMode,
    tolerance: f64,
) -> Result<FixedPoint> {
    if game.i_m == 0.0 {
        return Ok(FixedPoint {
            alpha: 0.0,
            residual: 0.0,
            iterations: 0,
            boundary: true,
        });
    }
    if !(game.lambda1 > 0.0) {
        return Err(Error::NoInteriorSolution);
    }
    let f = |a: f64| fixed_point_gap(params, game, pi, a, mode);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::NoInteriorSolution);
    }
    let rhs = |a: f64| fixed_point_rhs(params, game, pi, a, mode);
    let mut iterations = 0;
    let mut mid = 0.5;
    while iterations < 200 {
        mid = 0.5 * (lo + hi);
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 || (hi - lo) < 4.0 * f64::EPSILON {
            break;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (mid - rhs(mid)).abs() < 0.01 * tolerance {
            break;
        }
    }
    let residual = (mid - rhs(mid)).abs();
    Ok(FixedPoint {
        alpha: mid,
        residual,
        iterations,
        boundary: false,
    })
}

pub fn alpha_approximation(
    params: &EpiParams,
    game: &GameParams,
    pi: &[f64; N],
    mode: RcMode,
) -> f64 {
    let r = rc_of_alpha(params, pi, 0.0, mode);
    approximation_formula(game, r.rc, r.beta_sens)
}

/// `e^{−aR_c(0)}·I_m / (λ₁ + a·β·e^{−aR_c(0)}·I_m)`.
pub fn approximation_formula(game: &GameParams, rc0: f64, beta_sens: f64) -> f64 {
    let lead = (-game.a * rc0).exp() * game.i_m;
    lead / (game.lambda1 + game.a * beta_sens * lead)
}

/// Window, verdict and, inside the window, the solved mixing probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub lambda1: f64,
    pub window: ExistenceWindow,
    /// Present only for a partial-pooling verdict with an interior root.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_approximation: Option<f64>,
    /// Inside the window but the gap has no sign change on (0, 1).
    pub no_interior_root: bool,
}

pub fn equilibrium_report(
    params: &EpiParams,
    game: &GameParams,
    pi: &[f64; N],
    mode: RcMode,
) -> EquilibriumReport {
    let window = existence_window(params, game, pi, mode);
    let mut report = EquilibriumReport {
        lambda1: game.lambda1,
        window,
        alpha_star: None,
        residual: None,
        alpha_approximation: None,
        no_interior_root: false,
    };
    if window.verdict == Verdict::PartialPooling {
        match solve_alpha_fixed_point(params, game, pi, mode, 1e-10) {
            Ok(fp) => {
                report.alpha_star = Some(fp.alpha);
                report.residual = Some(fp.residual);
                report.alpha_approximation = Some(alpha_approximation(params, game, pi, mode));
            }
            Err(_) => report.no_interior_root = true,
        }
    }
    report
}
