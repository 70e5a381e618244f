//! SVEAIR dynamics, reproduction numbers and the hospitalization observable.
//!
//! Compartments: susceptible, vaccinated, exposed, asymptomatic, infected
//! (symptomatic), recovered. Masking scales the force of infection on `S`
//! only; vaccination moves `S` into `V`, which remains infectable at the
//! leaky rate `1 - delta`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiParams {
    /// Λ, persons/day.
    pub birth_rate: f64,
    /// μ, 1/day.
    pub mu: f64,
    /// β₀, 1/day.
    pub beta0: f64,
    /// Relative infectiousness of asymptomatic cases.
    pub b: f64,
    /// Symptomatic fraction.
    pub p: f64,
    /// Latency rate, 1/day.
    pub k: f64,
    /// Recovery rate, 1/day.
    pub gamma: f64,
    /// Vaccine efficacy.
    pub delta: f64,
    /// Hospitalization ratio ξ.
    pub xi: f64,
}

impl EpiParams {
    /// Baseline values with `Λ = μ·population` so that the total is conserved.
    pub fn baseline(population: f64) -> Self {
        let mu = 1.0 / 27375.0;
        EpiParams {
            birth_rate: mu * population,
            mu,
            beta0: 0.35,
            b: 0.5,
            p: 0.67,
            k: 0.2,
            gamma: 0.1,
            delta: 0.45,
            xi: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("birth_rate", self.birth_rate),
            ("mu", self.mu),
            ("beta0", self.beta0),
        ];
        for (name, v) in rates {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("b", self.b),
            ("p", self.p),
            ("delta", self.delta),
            ("xi", self.xi),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(name, "must lie in [0, 1]"));
            }
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::config("k", "must be > 0"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompartmentState {
    pub s: f64,
    pub v: f64,
    pub e: f64,
    pub a: f64,
    pub i: f64,
    pub r: f64,
}

impl CompartmentState {
    /// Fully susceptible population with `infected` symptomatic seeds.
    pub fn seeded(population: f64, infected: f64) -> Self {
        CompartmentState {
            s: population - infected,
            v: 0.0,
            e: 0.0,
            a: 0.0,
            i: infected,
            r: 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.s + self.v + self.e + self.a + self.i + self.r
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.s, self.v, self.e, self.a, self.i, self.r]
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        CompartmentState {
            s: x[0],
            v: x[1],
            e: x[2],
            a: x[3],
            i: x[4],
            r: x[5],
        }
    }

    /// Share of the unexposed pool that is vaccinated, `V/(S+V)`.
    pub fn vaccinated_share(&self) -> f64 {
        let pool = self.s + self.v;
        if pool > 0.0 {
            self.v / pool
        } else {
            0.0
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRates {
    /// ψ, 1/day.
    pub psi: f64,
    /// η ∈ [0, 1].
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedParams {
    pub psi_hat: f64,
    pub eta_hat: f64,
    pub gamma_hat: f64,
    pub lambda_hat: f64,
}

impl EstimatedParams {
    /// `γ̂` is taken as known and `λ̂` is read off the estimated state.
    pub fn from_state(
        params: &EpiParams,
        psi_hat: f64,
        eta_hat: f64,
        state: &CompartmentState,
    ) -> Result<Self> {
        Ok(EstimatedParams {
            psi_hat,
            eta_hat,
            gamma_hat: params.gamma,
            lambda_hat: force_of_infection(params, state)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives(pub [f64; 6]);

impl Derivatives {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

pub fn force_of_infection(params: &EpiParams, state: &CompartmentState) -> Result<f64> {
    let total = state.total();
    if total <= 0.0 {
        return Err(Error::ZeroPopulation);
    }
    Ok(params.beta0 * (state.i + params.b * state.a) / total)
}

pub fn sveair_derivatives(
    params: &EpiParams,
    behavior: &BehaviorRates,
    state: &CompartmentState,
) -> Result<Derivatives> {
    derivatives_with_gamma(params, params.gamma, behavior, state)
}

/// The receiver's copy of the system: same structure, estimated rates.
pub fn estimated_derivatives(
    params: &EpiParams,
    est: &EstimatedParams,
    state: &CompartmentState,
) -> Result<Derivatives> {
    let behavior = BehaviorRates {
        psi: est.psi_hat,
        eta: est.eta_hat,
    };
    derivatives_with_gamma(params, est.gamma_hat, &behavior, state)
}

fn derivatives_with_gamma(
    params: &EpiParams,
    gamma: f64,
    behavior: &BehaviorRates,
    x: &CompartmentState,
) -> Result<Derivatives> {
    let lambda = force_of_infection(params, x)?;
    let mu = params.mu;
    let k = params.k;
    let new_s = lambda * (1.0 - behavior.eta) * x.s;
    let new_v = lambda * (1.0 - params.delta) * x.v;
    Ok(Derivatives([
        params.birth_rate - new_s - (behavior.psi + mu) * x.s,
        behavior.psi * x.s - new_v - mu * x.v,
        new_s + new_v - (k + mu) * x.e,
        k * (1.0 - params.p) * x.e - (gamma + mu) * x.a,
        k * params.p * x.e - (gamma + mu) * x.i,
        gamma * (x.a + x.i) - mu * x.r,
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: CompartmentState,
    /// Number of compartment values clamped back to zero.
    pub clamp_events: usize,
}

fn rk4<F>(f: &F, x0: CompartmentState, days: f64, substeps_per_day: usize) -> Result<StepOutcome>
where
    F: Fn(&CompartmentState) -> Result<Derivatives>,
{
    if substeps_per_day == 0 {
        return Err(Error::BadFilter("substeps_per_day must be >= 1".into()));
    }
    let n = (days * substeps_per_day as f64).round() as usize;
    let h = 1.0 / substeps_per_day as f64;
    let mut y = x0.to_array();
    let mut clamp_events = 0;
    let shifted = |y: &[f64; 6], d: &[f64; 6], c: f64| {
        let mut out = [0.0; 6];
        for j in 0..6 {
            out[j] = y[j] + c * d[j];
        }
        CompartmentState::from_array(out)
    };
    for _ in 0..n {
        let k1 = f(&CompartmentState::from_array(y))?.0;
        let k2 = f(&shifted(&y, &k1, 0.5 * h))?.0;
        let k3 = f(&shifted(&y, &k2, 0.5 * h))?.0;
        let k4 = f(&shifted(&y, &k3, h))?.0;
        for j in 0..6 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            if y[j] < 0.0 {
                y[j] = 0.0;
                clamp_events += 1;
            }
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged);
        }
    }
    Ok(StepOutcome {
        state: CompartmentState::from_array(y),
        clamp_events,
    })
}

pub fn integrate_days(
    params: &EpiParams,
    behavior: &BehaviorRates,
    state: &CompartmentState,
    days: f64,
    substeps_per_day: usize,
) -> Result<StepOutcome> {
    rk4(
        &|x: &CompartmentState| sveair_derivatives(params, behavior, x),
        *state,
        days,
        substeps_per_day,
    )
}

pub fn integrate_week(
    params: &EpiParams,
    behavior: &BehaviorRates,
    state: &CompartmentState,
    substeps_per_day: usize,
) -> Result<StepOutcome> {
    integrate_days(params, behavior, state, 7.0, substeps_per_day)
}

pub fn integrate_estimated_week(
    params: &EpiParams,
    est: &EstimatedParams,
    state: &CompartmentState,
    substeps_per_day: usize,
) -> Result<StepOutcome> {
    rk4(
        &|x: &CompartmentState| estimated_derivatives(params, est, x),
        *state,
        7.0,
        substeps_per_day,
    )
}

pub fn r0(params: &EpiParams) -> f64 {
    let beta = params.beta0 * (params.p + params.b * (1.0 - params.p));
    beta * params.k / ((params.k + params.mu) * (params.gamma + params.mu))
}

/// `R_c(ψ, η)` at the disease-free equilibrium reached under constant rates.
pub fn r_control(params: &EpiParams, behavior: &BehaviorRates) -> Result<f64> {
    let denom = behavior.psi + params.mu;
    if denom == 0.0 {
        return Err(Error::DegenerateRc);
    }
    let num = (1.0 - params.delta) * behavior.psi + (1.0 - behavior.eta) * params.mu;
    Ok(r0(params) * num / denom)
}

/// `R_c` at a given vaccinated share of the unexposed pool.
///
/// Coincides with [`r_control`] when `coverage = ψ/(ψ+μ)`, the stationary
/// share under rate `ψ`, but carries no depletion term so it tracks the
/// behavioral state rather than the epidemic's progress.
pub fn coverage_rc(params: &EpiParams, coverage: f64, eta: f64) -> f64 {
    r0(params) * ((1.0 - params.delta) * coverage + (1.0 - eta) * (1.0 - coverage))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HerdImmunity {
    pub psi: f64,
    /// True only when `1 < R₀ < 1/(1-δ)`.
    pub valid: bool,
}

pub fn herd_immunity_threshold(params: &EpiParams, eta: f64) -> Result<HerdImmunity> {
    let r0 = r0(params);
    let denom = 1.0 - r0 * (1.0 - params.delta);
    if denom == 0.0 {
        return Err(Error::DegenerateThreshold);
    }
    let psi = params.mu * (r0 * (1.0 - eta) - 1.0) / denom;
    let valid = r0 > 1.0 && r0 * (1.0 - params.delta) < 1.0;
    Ok(HerdImmunity { psi, valid })
}

pub fn hospitalization(params: &EpiParams, state: &CompartmentState) -> f64 {
    params.xi * state.i
}
