//! Scenario configuration: a TOML document with fixed sections and keys.
//!
//! Every key has a default, so an empty document is a complete baseline
//! scenario. Unknown keys are rejected.

use crate::epi_core::EpiParams;
use crate::error::{Error, Result};
use crate::signaling::{GameParams, SignConvention};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimEquilibrium {
    Separating,
    /// Per-bit misreporting with the sampled propensities.
    PartialPooling,
    Pooling,
}

impl SimEquilibrium {
    pub const ALL: [SimEquilibrium; 3] = [
        SimEquilibrium::Separating,
        SimEquilibrium::PartialPooling,
        SimEquilibrium::Pooling,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SimEquilibrium::Separating => "separating",
            SimEquilibrium::PartialPooling => "partial_pooling",
            SimEquilibrium::Pooling => "pooling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Adaptive,
    Random,
    NoInteraction,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Adaptive => "adaptive",
            PolicyKind::Random => "random",
            PolicyKind::NoInteraction => "no_interaction",
        }
    }
}

/// How the population's true masking responds to a recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMode {
    /// `η ← η·η_r/η̂`: the push is scaled by true over believed compliance.
    Ratio,
    /// `logit η ← logit η + logit η_r − logit η̂`: the intended log-odds shift carries over.
    Odds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpiSection {
    pub mu: f64,
    pub beta0: f64,
    pub delta: f64,
    pub gamma_inv_days: f64,
    pub b: f64,
    pub k_inv_days: f64,
    pub p: f64,
    pub xi: f64,
    #[serde(rename = "I0")]
    pub i0: f64,
    #[serde(rename = "K")]
    pub k_total: f64,
    pub substeps_per_day: usize,
    pub process_noise_sigma: f64,
}

impl Default for EpiSection {
    fn default() -> Self {
        EpiSection {
            mu: 1.0 / 27375.0,
            beta0: 0.35,
            delta: 0.45,
            gamma_inv_days: 10.0,
            b: 0.5,
            k_inv_days: 5.0,
            p: 0.67,
            xi: 0.05,
            i0: 150.0,
            k_total: 10_000.0,
            substeps_per_day: 10,
            process_noise_sigma: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    #[serde(rename = "I_v")]
    pub i_v: f64,
    #[serde(rename = "I_m")]
    pub i_m: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub a: f64,
    pub alpha_rsa: f64,
    pub sign_convention: SignConvention,
}

impl Default for GameSection {
    fn default() -> Self {
        GameSection {
            i_v: 1.0,
            i_m: 0.5,
            lambda1: 0.2,
            lambda2: 0.0,
            a: 0.5,
            alpha_rsa: 1.0,
            sign_convention: SignConvention::AsPrinted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorSection {
    /// Vaccination rate, per week.
    pub psi_init: f64,
    pub eta_init: f64,
    pub nonresponsive_share: f64,
    /// Fixed propensities; when absent they are drawn per run (midpoints in deterministic mode).
    pub vaccine_propensity: Option<f64>,
    pub mask_propensity: Option<f64>,
}

impl Default for BehaviorSection {
    fn default() -> Self {
        BehaviorSection {
            psi_init: 0.05,
            eta_init: 0.10,
            nonresponsive_share: 0.3,
            vaccine_propensity: None,
            mask_propensity: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub kind: PolicyKind,
    pub d_star: f64,
    pub step_size: f64,
    pub halving: bool,
    /// Vaccination-rate cap, per week.
    pub psi_max: f64,
    pub eta_max: f64,
    pub push: f64,
    pub target: f64,
    pub response: ResponseMode,
    /// Random-policy noise; calibrated from an adaptive run when absent.
    pub noise_scale: Option<f64>,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            kind: PolicyKind::Adaptive,
            d_star: 1.0,
            step_size: 0.05,
            halving: true,
            psi_max: 0.2,
            eta_max: 0.9,
            push: 0.6,
            target: 1.0,
            response: ResponseMode::Odds,
            noise_scale: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub equilibrium: SimEquilibrium,
    #[serde(rename = "T_weeks")]
    pub t_weeks: usize,
    pub n_runs: usize,
    pub seed_base: u64,
    /// Sampled reports, drawn propensities and process noise.
    pub stochastic: bool,
    pub sg_window: usize,
    pub sg_order: usize,
    pub exp_factor: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            equilibrium: SimEquilibrium::Separating,
            t_weeks: 26,
            n_runs: 50,
            seed_base: 0,
            stochastic: true,
            sg_window: 5,
            sg_order: 2,
            exp_factor: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StressSection {
    pub xi_factor: f64,
    pub incentive_factor: f64,
    pub nonresponsive_share: f64,
    pub delta: f64,
}

impl Default for StressSection {
    fn default() -> Self {
        StressSection {
            xi_factor: 2.0,
            incentive_factor: 2.0,
            nonresponsive_share: 0.5,
            delta: 0.70,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub epi: EpiSection,
    pub game: GameSection,
    pub behavior: BehaviorSection,
    pub policy: PolicySection,
    pub simulation: SimulationSection,
    pub stress: StressSection,
}

fn in_unit(key: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(key, format!("must lie in [0, 1], got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be >= 0, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let e = &self.epi;
        non_negative("epi.mu", e.mu)?;
        non_negative("epi.beta0", e.beta0)?;
        in_unit("epi.delta", e.delta)?;
        positive("epi.gamma_inv_days", e.gamma_inv_days)?;
        in_unit("epi.b", e.b)?;
        positive("epi.k_inv_days", e.k_inv_days)?;
        in_unit("epi.p", e.p)?;
        in_unit("epi.xi", e.xi)?;
        positive("epi.K", e.k_total)?;
        if !(e.i0 >= 0.0 && e.i0 <= e.k_total) {
            return Err(Error::config("epi.I0", "must lie in [0, K]"));
        }
        if e.substeps_per_day == 0 {
            return Err(Error::config("epi.substeps_per_day", "must be >= 1"));
        }
        non_negative("epi.process_noise_sigma", e.process_noise_sigma)?;

        self.game_params().validate().map_err(|err| match err {
            Error::Config { key, msg } => Error::config(format!("game.{key}"), msg),
            other => other,
        })?;

        let b = &self.behavior;
        non_negative("behavior.psi_init", b.psi_init)?;
        in_unit("behavior.eta_init", b.eta_init)?;
        in_unit("behavior.nonresponsive_share", b.nonresponsive_share)?;
        if let Some(q) = b.vaccine_propensity {
            if !(0.05..=0.15).contains(&q) {
                return Err(Error::config(
                    "behavior.vaccine_propensity",
                    "must lie in [0.05, 0.15]",
                ));
            }
        }
        if let Some(q) = b.mask_propensity {
            if !(0.40..=0.80).contains(&q) {
                return Err(Error::config(
                    "behavior.mask_propensity",
                    "must lie in [0.40, 0.80]",
                ));
            }
        }

        let p = &self.policy;
        non_negative("policy.d_star", p.d_star)?;
        positive("policy.step_size", p.step_size)?;
        non_negative("policy.psi_max", p.psi_max)?;
        in_unit("policy.eta_max", p.eta_max)?;
        non_negative("policy.push", p.push)?;
        non_negative("policy.target", p.target)?;
        if let Some(s) = p.noise_scale {
            non_negative("policy.noise_scale", s)?;
        }

        let s = &self.simulation;
        if s.t_weeks == 0 {
            return Err(Error::config("simulation.T_weeks", "must be >= 1"));
        }
        if s.n_runs == 0 {
            return Err(Error::config("simulation.n_runs", "must be >= 1"));
        }
        if s.sg_window % 2 == 0 || s.sg_order >= s.sg_window {
            return Err(Error::config(
                "simulation.sg_window",
                "must be odd and exceed sg_order",
            ));
        }
        if !(s.exp_factor > 0.0 && s.exp_factor <= 1.0) {
            return Err(Error::config("simulation.exp_factor", "must lie in (0, 1]"));
        }

        let st = &self.stress;
        non_negative("stress.xi_factor", st.xi_factor)?;
        if e.xi * st.xi_factor > 1.0 {
            return Err(Error::config(
                "stress.xi_factor",
                "scaled xi must stay in [0, 1]",
            ));
        }
        non_negative("stress.incentive_factor", st.incentive_factor)?;
        in_unit("stress.nonresponsive_share", st.nonresponsive_share)?;
        in_unit("stress.delta", st.delta)?;
        Ok(())
    }

    pub fn epi_params(&self) -> EpiParams {
        let e = &self.epi;
        EpiParams {
            birth_rate: e.mu * e.k_total,
            mu: e.mu,
            beta0: e.beta0,
            b: e.b,
            p: e.p,
            k: 1.0 / e.k_inv_days,
            gamma: 1.0 / e.gamma_inv_days,
            delta: e.delta,
            xi: e.xi,
        }
    }

    pub fn game_params(&self) -> GameParams {
        let g = &self.game;
        GameParams {
            i_v: g.i_v,
            i_m: g.i_m,
            lambda1: g.lambda1,
            lambda2: g.lambda2,
            alpha_rsa: g.alpha_rsa,
            a: g.a,
            d_star: self.policy.d_star,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.simulation.n_runs as u64)
            .map(|i| self.simulation.seed_base + i)
            .collect()
    }
}

/// The factorial scenario grid: equilibrium × policy {adaptive, random} ×
/// rate level {high, low} × incentive level {base, doubled}, named
/// `equilibrium/policy/rates/incentives`.
pub fn expand_grid(base: &ScenarioConfig) -> Vec<(String, ScenarioConfig)> {
    let rates = [("high_rates", 0.05, 0.10), ("low_rates", 0.005, 0.01)];
    let incentives = [
        ("base_incentives", 1.0),
        ("doubled_incentives", base.stress.incentive_factor),
    ];
    let mut cells = Vec::with_capacity(24);
    for eq in SimEquilibrium::ALL {
        for policy in [PolicyKind::Adaptive, PolicyKind::Random] {
            for (rate_name, psi, eta) in rates {
                for (inc_name, factor) in incentives {
                    let mut c = *base;
                    c.simulation.equilibrium = eq;
                    c.policy.kind = policy;
                    c.behavior.psi_init = psi;
                    c.behavior.eta_init = eta;
                    c.game.i_v *= factor;
                    c.game.i_m *= factor;
                    cells.push((
                        format!("{}/{}/{rate_name}/{inc_name}", eq.name(), policy.name()),
                        c,
                    ));
                }
            }
        }
    }
    cells
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &ScenarioConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Parse(e.to_string()))
}
