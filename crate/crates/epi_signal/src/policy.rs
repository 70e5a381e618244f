//! PHA decisions: distortion, gradient corrections, recommendations, baselines.
//!
//! The PHA never sees the true behavior. It believes
//! `reported share − correction` for both vaccination coverage and masking,
//! and learns the corrections by descending the one-week forecast distortion
//! of its own estimated model. Recommendations push masking from that belief.

use crate::epi_core::{
    coverage_rc, integrate_estimated_week, CompartmentState, EpiParams, EstimatedParams,
};
use crate::error::Result;
use crate::signaling::N;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    /// Recommended vaccination rate, per week.
    pub psi_r: f64,
    /// Recommended masking share.
    pub eta_r: f64,
    /// Correction subtracted from the reported vaccinated share.
    pub psi_corr: f64,
    /// Correction subtracted from the reported masking share.
    pub eta_corr: f64,
    pub step_size: f64,
    pub psi_max: f64,
    pub eta_max: f64,
}

impl PolicyState {
    pub fn new(psi: f64, eta: f64, step_size: f64, psi_max: f64, eta_max: f64) -> Self {
        PolicyState {
            psi_r: psi.clamp(0.0, psi_max),
            eta_r: eta.clamp(0.0, eta_max),
            psi_corr: 0.0,
            eta_corr: 0.0,
            step_size,
            psi_max,
            eta_max,
        }
    }

    fn clamped(mut self) -> Self {
        self.psi_r = self.psi_r.clamp(0.0, self.psi_max);
        self.eta_r = self.eta_r.clamp(0.0, self.eta_max);
        self.psi_corr = self.psi_corr.clamp(-1.0, 1.0);
        self.eta_corr = self.eta_corr.clamp(-1.0, 1.0);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionRecord {
    pub observed_h: f64,
    pub predicted_h: f64,
    pub distortion: f64,
    pub threshold: f64,
}

impl DistortionRecord {
    pub fn new(observed_h: f64, predicted_h: f64, threshold: f64) -> Self {
        DistortionRecord {
            observed_h,
            predicted_h,
            distortion: distortion(observed_h, predicted_h),
            threshold,
        }
    }
}

pub fn distortion(observed_h: f64, predicted_h: f64) -> f64 {
    (observed_h - predicted_h).powi(2)
}

/// Belief-weighted distortion `Σ_c Σ_θ p(c|m)·p(θ)·err[θ][c]`.
pub fn weighted_distortion(posterior: &[f64; N], theta: &[f64; N], err: &[[f64; N]; N]) -> f64 {
    let mut d = 0.0;
    for c in 0..N {
        for t in 0..N {
            d += posterior[c] * theta[t] * err[t][c];
        }
    }
    d
}

const BELIEF_FLOOR: f64 = 1e-6;

pub fn belief(reported: f64, correction: f64) -> f64 {
    (reported - correction).clamp(BELIEF_FLOOR, 1.0 - BELIEF_FLOOR)
}

/// What the PHA knows when it forecasts next week's hospitalizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedModel {
    pub params: EpiParams,
    /// Reconstructed state at the start of the forecast week.
    pub anchor: CompartmentState,
    pub reported_coverage: f64,
    pub reported_eta: f64,
    /// Vaccination rate used in the forecast, per day.
    pub psi_per_day: f64,
    pub substeps_per_day: usize,
}

impl EstimatedModel {
    /// Reconstructs the PHA's state from observed hospitalizations.
    ///
    /// `I` follows from `H/ξ`; `A` and `E` from the symptomatic split and the
    /// quasi-steady balance `kpE = (γ+μ)I`; `R` is carried from the PHA's own
    /// running estimate.
    pub fn anchor_from_observation(
        params: &EpiParams,
        population: f64,
        observed_h: f64,
        r_hat: f64,
    ) -> CompartmentState {
        let i = if params.xi > 0.0 {
            observed_h / params.xi
        } else {
            0.0
        };
        let a = i * (1.0 - params.p) / params.p.max(1e-12);
        let e = (params.gamma + params.mu) * i / (params.k * params.p).max(1e-12);
        let r = r_hat.max(0.0);
        let pool = (population - i - a - e - r).max(0.0);
        CompartmentState {
            s: pool,
            v: 0.0,
            e,
            a,
            i,
            r,
        }
    }

    /// One-week forecast of `H` when the corrections are `(ψ̃, η̃)`.
    pub fn predict(&self, psi_corr: f64, eta_corr: f64) -> Result<(f64, CompartmentState)> {
        let cov = belief(self.reported_coverage, psi_corr);
        let eta = belief(self.reported_eta, eta_corr);
        let pool = self.anchor.s + self.anchor.v;
        let start = CompartmentState {
            s: pool * (1.0 - cov),
            v: pool * cov,
            ..self.anchor
        };
        let est = EstimatedParams::from_state(&self.params, self.psi_per_day, eta, &start)?;
        let end =
            integrate_estimated_week(&self.params, &est, &start, self.substeps_per_day)?.state;
        Ok((self.params.xi * end.i, end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateDiagnostic {
    pub applied: bool,
    pub gradient: [f64; 2],
    pub skipped_non_finite: bool,
}

const GRAD_H: f64 = 1e-4;

/// Central-difference gradient of the forecast distortion in `(ψ̃, η̃)`.
pub fn distortion_gradient(
    model: &EstimatedModel,
    observed_h: f64,
    psi_corr: f64,
    eta_corr: f64,
    h: f64,
) -> Result<[f64; 2]> {
    let d =
        |pc: f64, ec: f64| -> Result<f64> { Ok(distortion(observed_h, model.predict(pc, ec)?.0)) };
    Ok([
        (d(psi_corr + h, eta_corr)? - d(psi_corr - h, eta_corr)?) / (2.0 * h),
        (d(psi_corr, eta_corr + h)? - d(psi_corr, eta_corr - h)?) / (2.0 * h),
    ])
}

/// One normalized gradient-descent step on the corrections when `D > D*`.
pub fn adaptive_update(
    state: &PolicyState,
    record: &DistortionRecord,
    model: &EstimatedModel,
    step_size: f64,
) -> Result<(PolicyState, UpdateDiagnostic)> {
    let idle = UpdateDiagnostic {
        applied: false,
        gradient: [0.0; 2],
        skipped_non_finite: false,
    };
    if record.distortion <= record.threshold {
        return Ok((*state, idle));
    }
    let g = distortion_gradient(
        model,
        record.observed_h,
        state.psi_corr,
        state.eta_corr,
        GRAD_H,
    )?;
    if !g.iter().all(|x| x.is_finite()) {
        return Ok((
            *state,
            UpdateDiagnostic {
                skipped_non_finite: true,
                gradient: g,
                ..idle
            },
        ));
    }
    let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if norm == 0.0 {
        return Ok((
            *state,
            UpdateDiagnostic {
                gradient: g,
                ..idle
            },
        ));
    }
    let mut next = *state;
    next.psi_corr -= step_size * g[0] / norm;
    next.eta_corr -= step_size * g[1] / norm;
    Ok((
        next.clamped(),
        UpdateDiagnostic {
            applied: true,
            gradient: g,
            skipped_non_finite: false,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushRule {
    /// Log-odds increment applied to the believed masking share per week.
    pub push: f64,
    /// Push only while the believed `R_c` is at or above this level.
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recommendation {
    pub eta_r: f64,
    pub psi_r: f64,
    pub believed_rc: f64,
    pub pushing_mask: bool,
    pub pushing_vaccine: bool,
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Masking and vaccination recommendations from the current beliefs.
///
/// Masking is pushed by `rule.push` in log-odds while the believed `R_c` is
/// at least `rule.target` and the belief is below the cap. Vaccination is
/// pushed only when it lowers `R_c` at the masking cap, that is when
/// `δ > η_max`; otherwise a vaccinated person transmits more than a masked
/// susceptible one and the PHA keeps the current rate.
pub fn recommend(
    params: &EpiParams,
    state: &PolicyState,
    believed_coverage: f64,
    believed_eta: f64,
    current_psi: f64,
    rule: &PushRule,
) -> Recommendation {
    let believed_rc = coverage_rc(params, believed_coverage, believed_eta);
    let wants = believed_rc >= rule.target;
    let pushing_mask = wants && believed_eta < state.eta_max;
    let eta_r = if pushing_mask {
        sigmoid(logit(believed_eta) + rule.push).min(state.eta_max)
    } else {
        believed_eta.min(state.eta_max)
    };
    let pushing_vaccine = wants && params.delta > state.eta_max && current_psi < state.psi_max;
    let psi_r = if pushing_vaccine {
        (current_psi * rule.push.exp()).min(state.psi_max)
    } else {
        current_psi.min(state.psi_max)
    };
    Recommendation {
        eta_r,
        psi_r,
        believed_rc,
        pushing_mask,
        pushing_vaccine,
    }
}

/// Recommendations perturbed by zero-mean Gaussian noise, clamped to the caps.
pub fn random_policy(state: &PolicyState, noise_scale: f64, rng_seed: u64) -> PolicyState {
    if noise_scale <= 0.0 {
        return *state;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let normal = Normal::new(0.0, noise_scale).expect("finite positive scale");
    let mut next = *state;
    next.eta_r += normal.sample(&mut rng);
    next.psi_r += normal.sample(&mut rng) * state.psi_max;
    next.clamped()
}

pub fn no_interaction_policy(
    psi_init: f64,
    eta_init: f64,
    psi_max: f64,
    eta_max: f64,
) -> PolicyState {
    PolicyState::new(psi_init, eta_init, 0.0, psi_max, eta_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(reported_eta: f64) -> EstimatedModel {
        let params = EpiParams::baseline(10_000.0);
        let anchor = EstimatedModel::anchor_from_observation(&params, 10_000.0, 20.0, 500.0);
        EstimatedModel {
            params,
            anchor,
            reported_coverage: 0.2,
            reported_eta: reported_eta,
            psi_per_day: 0.05 / 7.0,
            substeps_per_day: 10,
        }
    }

    fn state() -> PolicyState {
        PolicyState::new(0.05, 0.3, 0.05, 0.2, 0.9)
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(distortion(4.0, 4.0), 0.0);
        assert!((distortion(7.5, 5.0) - 6.25).abs() < 1e-15);
        let mut err = [[0.0; N]; N];
        err[2][1] = 6.25;
        let point = |k: usize| {
            let mut d = [0.0; N];
            d[k] = 1.0;
            d
        };
        assert_eq!(weighted_distortion(&point(1), &point(2), &err), 6.25);
    }

    #[test]
    fn below_threshold_is_identity() {
        let s = state();
        let rec = DistortionRecord::new(10.0, 10.5, 1.0);
        let (out, diag) = adaptive_update(&s, &rec, &model(0.5), 0.05).unwrap();
        assert_eq!(out, s);
        assert!(!diag.applied);
    }

    #[test]
    fn under_prediction_raises_corrections() {
        // with masking below vaccine efficacy, an unvaccinated person transmits
        // more than a vaccinated one, so lower believed coverage raises H
        let m = model(0.3);
        let s = state();
        let (predicted, _) = m.predict(s.psi_corr, s.eta_corr).unwrap();
        let rec = DistortionRecord::new(predicted * 1.5, predicted, 1.0);
        let (out, diag) = adaptive_update(&s, &rec, &m, 0.05).unwrap();
        assert!(diag.applied);
        assert!(out.psi_corr > s.psi_corr);
        assert!(out.eta_corr > s.eta_corr);
        // finite-difference oracle on the forecast itself: a larger correction
        // lowers the believed compliance and raises predicted H
        let (up, _) = m.predict(s.psi_corr + 1e-3, s.eta_corr).unwrap();
        assert!(up > predicted);
    }

    #[test]
    fn gradient_is_step_stable() {
        let m = model(0.5);
        let g1 = distortion_gradient(&m, 30.0, 0.0, 0.1, 1e-4).unwrap();
        let g2 = distortion_gradient(&m, 30.0, 0.0, 0.1, 5e-5).unwrap();
        for k in 0..2 {
            assert!(((g1[k] - g2[k]) / g2[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn corrections_stay_clamped() {
        let m = model(0.5);
        let mut s = state();
        s.eta_corr = 1.0;
        s.psi_corr = 1.0;
        let (predicted, _) = m.predict(0.0, 0.0).unwrap();
        let rec = DistortionRecord::new(predicted * 50.0, predicted, 1.0);
        let (out, _) = adaptive_update(&s, &rec, &m, 0.05).unwrap();
        assert!(out.eta_corr <= 1.0 && out.psi_corr <= 1.0);
    }

    #[test]
    fn push_rule() {
        let params = EpiParams::baseline(10_000.0);
        let s = state();
        let rule = PushRule {
            push: 0.6,
            target: 1.0,
        };
        let r = recommend(&params, &s, 0.1, 0.2, 0.05, &rule);
        assert!(r.pushing_mask);
        assert!((logit(r.eta_r) - logit(0.2) - 0.6).abs() < 1e-12);
        assert!(!r.pushing_vaccine);
        assert_eq!(r.psi_r, 0.05);
        let capped = recommend(&params, &s, 0.1, 0.95, 0.05, &rule);
        assert!(!capped.pushing_mask);
        let calm = recommend(&params, &s, 0.0, 0.8, 0.05, &rule);
        assert!(calm.believed_rc < 1.0 && !calm.pushing_mask);
        let strong = EpiParams {
            delta: 0.95,
            ..params
        };
        assert!(recommend(&strong, &s, 0.1, 0.2, 0.05, &rule).pushing_vaccine);
    }

    #[test]
    fn random_policy_examples() {
        let s = state();
        assert_eq!(random_policy(&s, 0.0, 7), s);
        assert_eq!(random_policy(&s, 0.1, 7), random_policy(&s, 0.1, 7));
        let sigma = 0.01;
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|i| random_policy(&s, sigma, i as u64).eta_r - s.eta_r)
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt());
        for i in 0..100 {
            let out = random_policy(&s, 5.0, i);
            assert!((0.0..=s.eta_max).contains(&out.eta_r));
        }
    }

    #[test]
    fn no_interaction_is_frozen() {
        let p = no_interaction_policy(0.005, 0.01, 0.2, 0.9);
        assert_eq!((p.psi_r, p.eta_r), (0.005, 0.01));
    }
}
