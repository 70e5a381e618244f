//! The weekly population/PHA loop, Monte Carlo orchestration and stress tests.
//!
//! Each week: the population reports, the PHA measures its forecast error and
//! updates, then the true epidemic advances one week. Vaccination rates in the
//! configuration are per week; the ODE receives `ψ/7` per day.

use crate::config::{PolicyKind, ResponseMode, ScenarioConfig, SimEquilibrium};
use crate::epi_core::{coverage_rc, integrate_week, BehaviorRates, CompartmentState};
use crate::equilibria::{build_strategy, EquilibriumKind};
use crate::error::{Error, Result};
use crate::policy::{
    adaptive_update, belief, recommend, DistortionRecord, EstimatedModel, PolicyState, PushRule,
};
use crate::signaling::{
    bayes_posterior, deception_level, expected_surprise, information_content_bits,
    sender_utility_rc, type_distribution, BehaviorProfile, Deception, SenderStrategy, TrueStatus,
    N,
};
use crate::smoothing::{smooth_series, SmoothKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

/// Which sender strategy drives the reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ReportStrategy {
    Regime(SimEquilibrium),
    /// The fixed-α partial-pooling matrix.
    Mixing(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportAggregate {
    /// Responders per message `00, 01, 10, 11`.
    pub message_counts: [f64; N],
    pub responders: f64,
    pub silent: f64,
    /// Claimed vaccinated share among responders.
    pub psi_hat: f64,
    /// Claimed masking share among responders.
    pub eta_hat: f64,
    /// True status shares among all individuals.
    pub pi: [f64; N],
    pub deception: Deception,
}

fn status_shares(state: &CompartmentState, eta: f64) -> ([f64; N], [f64; N]) {
    // the non-recovered population can lie, the recovered cannot
    let total = state.total();
    let cov = state.vaccinated_share();
    let infected = state.e + state.a + state.i;
    let vacc_open = (state.v + cov * infected) / total;
    let unvacc_open = (state.s + (1.0 - cov) * infected) / total;
    let rec = state.r / total;
    let open = [
        vacc_open * eta,
        vacc_open * (1.0 - eta),
        unvacc_open * eta,
        unvacc_open * (1.0 - eta),
    ];
    let closed = [
        rec * cov * eta,
        rec * cov * (1.0 - eta),
        rec * (1.0 - cov) * eta,
        rec * (1.0 - cov) * (1.0 - eta),
    ];
    (open, closed)
}

/// Aggregated reports for one week.
///
/// With `rng = None` the counts are expectations; otherwise every cell is
/// drawn binomially. Recovered individuals always report truthfully and a
/// `P(K_s)` share stays silent.
pub fn population_report(
    profile: &BehaviorProfile,
    strategy: &SenderStrategy,
    state: &CompartmentState,
    eta: f64,
    population: f64,
    prior: (f64, f64),
    rng: Option<&mut ChaCha8Rng>,
) -> ReportAggregate {
    let (open, closed) = status_shares(state, eta);
    let respond = 1.0 - profile.non_responsive_share;
    let truthful = SenderStrategy::truthful();
    let mut liars = [0.0; N];
    let mut honest = [0.0; N];
    let mut messages = [0.0; N];
    let mut silent = 0.0;
    match rng {
        None => {
            for c in 0..N {
                liars[c] = open[c] * population * respond;
                honest[c] = closed[c] * population * respond;
                silent += (open[c] + closed[c]) * population * profile.non_responsive_share;
            }
            for c in 0..N {
                for m in 0..N {
                    messages[m] += liars[c] * strategy.g[c][m] + honest[c] * truthful.g[c][m];
                }
            }
        }
        Some(rng) => {
            for c in 0..N {
                for (cell, bucket, g) in [
                    (open[c], &mut liars, strategy),
                    (closed[c], &mut honest, &truthful),
                ] {
                    let n = (cell * population).round().max(0.0) as u64;
                    let r = draw_binomial(rng, n, respond);
                    bucket[c] = r as f64;
                    silent += (n - r) as f64;
                    let mut left = r;
                    let mut mass = 1.0;
                    for m in 0..N {
                        if left == 0 {
                            break;
                        }
                        let w = g.g[c][m];
                        let k = if m == N - 1 || mass <= w {
                            left
                        } else {
                            draw_binomial(rng, left, (w / mass).min(1.0))
                        };
                        messages[m] += k as f64;
                        left -= k;
                        mass -= w;
                    }
                }
            }
        }
    }
    let responders: f64 = messages.iter().sum();
    let (psi_hat, eta_hat) = if responders > 0.0 {
        (
            (messages[0] + messages[1]) / responders,
            (messages[0] + messages[2]) / responders,
        )
    } else {
        prior
    };
    let deception = deception_level(strategy, &liars, responders, silent);
    let mut pi = [0.0; N];
    for c in 0..N {
        pi[c] = open[c] + closed[c];
    }
    ReportAggregate {
        message_counts: messages,
        responders,
        silent,
        psi_hat,
        eta_hat,
        pi,
        deception,
    }
}

fn draw_binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeeklyMetrics {
    pub week: usize,
    pub rc: f64,
    pub s: f64,
    pub v: f64,
    pub e: f64,
    pub a: f64,
    pub i: f64,
    pub r: f64,
    pub hospitalization: f64,
    pub psi_r: f64,
    pub eta_r: f64,
    /// `V/K`.
    pub vaccination_coverage: f64,
    /// True masking share.
    pub mask_coverage: f64,
    pub deception_overall: f64,
    pub deception_vaccination: f64,
    pub deception_masking: f64,
    pub deception_responders: f64,
    pub reported_psi: f64,
    pub reported_eta: f64,
    pub psi_correction: f64,
    pub eta_correction: f64,
    pub believed_rc: f64,
    pub sender_utility: f64,
    pub receiver_utility: f64,
    pub distortion: f64,
    pub information_bits: f64,
}

impl WeeklyMetrics {
    pub const FIELDS: [&'static str; 25] = [
        "rc",
        "s",
        "v",
        "e",
        "a",
        "i",
        "r",
        "hospitalization",
        "psi_r",
        "eta_r",
        "vaccination_coverage",
        "mask_coverage",
        "deception_overall",
        "deception_vaccination",
        "deception_masking",
        "deception_responders",
        "reported_psi",
        "reported_eta",
        "psi_correction",
        "eta_correction",
        "believed_rc",
        "sender_utility",
        "receiver_utility",
        "distortion",
        "information_bits",
    ];

    pub fn values(&self) -> [f64; 25] {
        [
            self.rc,
            self.s,
            self.v,
            self.e,
            self.a,
            self.i,
            self.r,
            self.hospitalization,
            self.psi_r,
            self.eta_r,
            self.vaccination_coverage,
            self.mask_coverage,
            self.deception_overall,
            self.deception_vaccination,
            self.deception_masking,
            self.deception_responders,
            self.reported_psi,
            self.reported_eta,
            self.psi_correction,
            self.eta_correction,
            self.believed_rc,
            self.sender_utility,
            self.receiver_utility,
            self.distortion,
            self.information_bits,
        ]
    }

    pub fn from_values(week: usize, x: &[f64]) -> Self {
        WeeklyMetrics {
            week,
            rc: x[0],
            s: x[1],
            v: x[2],
            e: x[3],
            a: x[4],
            i: x[5],
            r: x[6],
            hospitalization: x[7],
            psi_r: x[8],
            eta_r: x[9],
            vaccination_coverage: x[10],
            mask_coverage: x[11],
            deception_overall: x[12],
            deception_vaccination: x[13],
            deception_masking: x[14],
            deception_responders: x[15],
            reported_psi: x[16],
            reported_eta: x[17],
            psi_correction: x[18],
            eta_correction: x[19],
            believed_rc: x[20],
            sender_utility: x[21],
            receiver_utility: x[22],
            distortion: x[23],
            information_bits: x[24],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub seed: u64,
    pub metrics: Vec<WeeklyMetrics>,
    pub week_control: Option<usize>,
    pub disease_control_score: Option<f64>,
    pub peak_hospitalization: f64,
    pub final_deception: f64,
    pub clamp_events: usize,
    /// False when the integration diverged; `metrics` then stops early.
    pub valid: bool,
}

/// First week whose smoothed `R_c` is below 1.
pub fn week_control(rc: &[f64], cfg: &ScenarioConfig) -> Result<Option<usize>> {
    let smoothed = if rc.len() >= cfg.simulation.sg_window {
        smooth_series(
            rc,
            SmoothKind::SavitzkyGolay {
                window: cfg.simulation.sg_window,
                order: cfg.simulation.sg_order,
            },
        )?
    } else {
        rc.to_vec()
    };
    Ok(smoothed.iter().position(|&x| x < 1.0).map(|i| i + 1))
}

fn control_score(week: Option<usize>, horizon: usize) -> Option<f64> {
    week.map(|w| 1.0 - w as f64 / horizon as f64)
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

const SHARE_FLOOR: f64 = 1e-6;

/// True masking after the population reacts to a recommendation made from belief `believed`.
pub fn respond(mode: ResponseMode, eta: f64, eta_r: f64, believed: f64, cap: f64) -> f64 {
    let eta = eta.clamp(SHARE_FLOOR, 1.0 - SHARE_FLOOR);
    let believed = believed.clamp(SHARE_FLOOR, 1.0 - SHARE_FLOOR);
    let eta_r = eta_r.clamp(SHARE_FLOOR, 1.0 - SHARE_FLOOR);
    let next = match mode {
        ResponseMode::Ratio => eta * eta_r / believed,
        ResponseMode::Odds => sigmoid(logit(eta) + logit(eta_r) - logit(believed)),
    };
    next.clamp(0.0, cap.max(eta))
}

fn strategy_for(which: ReportStrategy, profile: &BehaviorProfile) -> SenderStrategy {
    match which {
        ReportStrategy::Regime(SimEquilibrium::Separating) => {
            build_strategy(EquilibriumKind::Separating, profile)
        }
        ReportStrategy::Regime(SimEquilibrium::Pooling) => {
            build_strategy(EquilibriumKind::Pooling, profile)
        }
        ReportStrategy::Regime(SimEquilibrium::PartialPooling) => {
            SenderStrategy::per_bit(profile.vaccine_propensity, profile.mask_propensity)
        }
        ReportStrategy::Mixing(alpha) => {
            build_strategy(EquilibriumKind::PartialPooling(alpha), profile)
        }
    }
}

/// Algorithm-level options that are not part of the scenario file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopOptions {
    pub strategy: ReportStrategy,
    /// Noise scale for the random policy (already calibrated).
    pub noise_scale: f64,
}

pub fn weekly_loop(cfg: &ScenarioConfig, rng_seed: u64) -> Result<RunResult> {
    let noise_scale = match (cfg.policy.kind, cfg.policy.noise_scale) {
        (PolicyKind::Random, None) => calibrate_noise(cfg)?,
        (_, s) => s.unwrap_or(0.0),
    };
    let opts = LoopOptions {
        strategy: ReportStrategy::Regime(cfg.simulation.equilibrium),
        noise_scale,
    };
    weekly_loop_with(cfg, rng_seed, &opts)
}

pub fn weekly_loop_with(
    cfg: &ScenarioConfig,
    rng_seed: u64,
    opts: &LoopOptions,
) -> Result<RunResult> {
    let stochastic = cfg.simulation.stochastic;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let base = cfg.epi_params();
    let game = cfg.game_params();
    let population = cfg.epi.k_total;
    let horizon = cfg.simulation.t_weeks;

    let draw = |rng: &mut ChaCha8Rng, fixed: Option<f64>, lo: f64, hi: f64| match fixed {
        Some(q) => q,
        None if stochastic => rng.random_range(lo..=hi),
        None => 0.5 * (lo + hi),
    };
    let q_v = draw(&mut rng, cfg.behavior.vaccine_propensity, 0.05, 0.15);
    let q_m = draw(&mut rng, cfg.behavior.mask_propensity, 0.40, 0.80);
    let profile = BehaviorProfile {
        pi: type_distribution(0.0, cfg.behavior.eta_init),
        non_responsive_share: cfg.behavior.nonresponsive_share,
        vaccine_propensity: q_v,
        mask_propensity: q_m,
    };
    let strategy = strategy_for(opts.strategy, &profile);
    let rule = PushRule {
        push: cfg.policy.push,
        target: cfg.policy.target,
    };
    let interacting = cfg.policy.kind != PolicyKind::NoInteraction;
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    let mut y = CompartmentState::seeded(population, cfg.epi.i0);
    let mut psi_week = cfg.behavior.psi_init;
    let mut eta = cfg.behavior.eta_init;
    let mut policy = PolicyState::new(
        psi_week,
        eta,
        cfg.policy.step_size,
        cfg.policy.psi_max,
        cfg.policy.eta_max,
    );
    let mut step = cfg.policy.step_size;
    let mut last_d: Option<f64> = None;
    let mut forecast: Option<(EstimatedModel, f64)> = None;
    let mut r_hat = 0.0;
    let mut prior = (0.0, cfg.behavior.eta_init);
    let mut metrics = Vec::with_capacity(horizon);
    let mut clamp_events = 0;
    let mut valid = true;

    for week in 1..=horizon {
        let silent_all = !interacting;
        let report = if silent_all {
            let quiet = BehaviorProfile {
                non_responsive_share: 1.0,
                ..profile
            };
            population_report(&quiet, &strategy, &y, eta, population, prior, None)
        } else if stochastic {
            population_report(
                &profile,
                &strategy,
                &y,
                eta,
                population,
                prior,
                Some(&mut rng),
            )
        } else {
            population_report(&profile, &strategy, &y, eta, population, prior, None)
        };
        prior = (report.psi_hat, report.eta_hat);

        let observed_h = base.xi * y.i;
        let mut d_now = 0.0;
        let mut believed_rc = f64::NAN;
        if interacting {
            if let Some((model, predicted)) = forecast.take() {
                let record = DistortionRecord::new(observed_h, predicted, cfg.policy.d_star);
                d_now = record.distortion;
                if cfg.policy.kind == PolicyKind::Adaptive {
                    if cfg.policy.halving {
                        if let Some(prev) = last_d {
                            if record.distortion > prev {
                                step *= 0.5;
                            }
                        }
                    }
                    policy = adaptive_update(&policy, &record, &model, step)?.0;
                    policy.step_size = step;
                }
                last_d = Some(record.distortion);
            }
            let b_cov = belief(report.psi_hat, policy.psi_corr);
            let b_eta = belief(report.eta_hat, policy.eta_corr);
            match cfg.policy.kind {
                PolicyKind::Adaptive => {
                    let rec = recommend(&base, &policy, b_cov, b_eta, psi_week, &rule);
                    believed_rc = rec.believed_rc;
                    policy.eta_r = rec.eta_r;
                    policy.psi_r = rec.psi_r;
                    if rec.pushing_mask {
                        eta = respond(
                            cfg.policy.response,
                            eta,
                            rec.eta_r,
                            b_eta,
                            cfg.policy.eta_max,
                        );
                    }
                    psi_week = rec.psi_r;
                }
                PolicyKind::Random => {
                    believed_rc = coverage_rc(&base, b_cov, b_eta);
                    let eps: f64 = noise.sample(&mut rng);
                    let eta_r =
                        (b_eta + opts.noise_scale * eps).clamp(SHARE_FLOOR, cfg.policy.eta_max);
                    policy.eta_r = eta_r;
                    policy.psi_r = psi_week;
                    eta = respond(cfg.policy.response, eta, eta_r, b_eta, cfg.policy.eta_max);
                }
                PolicyKind::NoInteraction => unreachable!(),
            }
            let anchor =
                EstimatedModel::anchor_from_observation(&base, population, observed_h, r_hat);
            let model = EstimatedModel {
                params: base,
                anchor,
                reported_coverage: report.psi_hat,
                reported_eta: report.eta_hat,
                psi_per_day: psi_week / 7.0,
                substeps_per_day: cfg.epi.substeps_per_day,
            };
            let (predicted, end) = model.predict(policy.psi_corr, policy.eta_corr)?;
            r_hat = end.r;
            forecast = Some((model, predicted));
        }

        let mut params = base;
        if stochastic && cfg.epi.process_noise_sigma > 0.0 {
            let z: f64 = noise.sample(&mut rng);
            params.beta0 = base.beta0 * (cfg.epi.process_noise_sigma * z).exp();
        }
        let step_out = match integrate_week(
            &params,
            &BehaviorRates {
                psi: psi_week / 7.0,
                eta,
            },
            &y,
            cfg.epi.substeps_per_day,
        ) {
            Ok(s) => s,
            Err(Error::Diverged) => {
                valid = false;
                break;
            }
            Err(e) => return Err(e),
        };
        y = step_out.state;
        clamp_events += step_out.clamp_events;

        let total = y.total();
        let cov = y.vaccinated_share();
        let rc = coverage_rc(&base, cov, eta);
        let (belief_m, marginal) = bayes_posterior(&strategy, &report.pi);
        let sender: f64 = (0..N)
            .map(|c| {
                report.pi[c] * sender_utility_rc(&strategy, TrueStatus::from_index(c), &game, rc)
            })
            .sum();
        let receiver = -expected_surprise(&belief_m, &marginal) - game.lambda2 * d_now;
        let info = if interacting {
            information_content_bits(&report.pi, &belief_m, &marginal)
        } else {
            0.0
        };
        metrics.push(WeeklyMetrics {
            week,
            rc,
            s: y.s / total,
            v: y.v / total,
            e: y.e / total,
            a: y.a / total,
            i: y.i / total,
            r: y.r / total,
            hospitalization: params.xi * y.i / total,
            psi_r: policy.psi_r,
            eta_r: policy.eta_r,
            vaccination_coverage: y.v / total,
            mask_coverage: eta,
            deception_overall: report.deception.overall_rate,
            deception_vaccination: report.deception.vaccination_rate,
            deception_masking: report.deception.masking_rate,
            deception_responders: report.deception.responder_rate,
            reported_psi: report.psi_hat,
            reported_eta: report.eta_hat,
            psi_correction: policy.psi_corr,
            eta_correction: policy.eta_corr,
            believed_rc,
            sender_utility: sender,
            receiver_utility: receiver,
            distortion: d_now,
            information_bits: info,
        });
    }

    let rc: Vec<f64> = metrics.iter().map(|m| m.rc).collect();
    let wc = if valid { week_control(&rc, cfg)? } else { None };
    let peak = metrics
        .iter()
        .map(|m| m.hospitalization)
        .fold(0.0, f64::max);
    let final_deception = metrics.last().map(|m| m.deception_overall).unwrap_or(0.0);
    Ok(RunResult {
        seed: rng_seed,
        metrics,
        week_control: wc,
        disease_control_score: control_score(wc, horizon),
        peak_hospitalization: peak,
        final_deception,
        clamp_events,
        valid,
    })
}

/// Noise scale for the random baseline: the spread of the weekly changes in
/// the adaptive policy's masking recommendation, from a deterministic run.
pub fn calibrate_noise(cfg: &ScenarioConfig) -> Result<f64> {
    let mut c = *cfg;
    c.policy.kind = PolicyKind::Adaptive;
    c.simulation.stochastic = false;
    let opts = LoopOptions {
        strategy: ReportStrategy::Regime(cfg.simulation.equilibrium),
        noise_scale: 0.0,
    };
    let run = weekly_loop_with(&c, cfg.simulation.seed_base, &opts)?;
    let steps: Vec<f64> = run
        .metrics
        .windows(2)
        .map(|w| w[1].eta_r - w[0].eta_r)
        .collect();
    if steps.len() < 2 {
        return Ok(0.0);
    }
    let mean = steps.iter().sum::<f64>() / steps.len() as f64;
    let var = steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (steps.len() - 1) as f64;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub runs: Vec<RunResult>,
    pub mean: Vec<WeeklyMetrics>,
    pub sd: Vec<WeeklyMetrics>,
    /// Control week of the run-mean `R_c` series.
    pub week_control_of_mean: Option<usize>,
    pub week_control: Vec<Option<usize>>,
    /// Mean over runs that reached control.
    pub mean_week_control: Option<f64>,
    pub controlled_runs: usize,
    pub mean_disease_control_score: Option<f64>,
    pub mean_peak_hospitalization: f64,
    pub mean_final_deception: f64,
    pub invalid_runs: usize,
    pub noise_scale: f64,
}

/// Run `f` on a pool of `threads` workers; `None` reads `EPI_SIGNAL_THREADS`
/// and falls back to the rayon default.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let n = threads.or_else(|| {
        std::env::var("EPI_SIGNAL_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n.filter(|&n| n > 0) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    Ok(pool.install(f))
}

/// Run every seed, in parallel when a thread pool is active, and reduce in seed order.
pub fn monte_carlo(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<SummaryStats> {
    monte_carlo_with(
        cfg,
        seeds,
        ReportStrategy::Regime(cfg.simulation.equilibrium),
    )
}

pub fn monte_carlo_with(
    cfg: &ScenarioConfig,
    seeds: &[u64],
    strategy: ReportStrategy,
) -> Result<SummaryStats> {
    let noise_scale = match (cfg.policy.kind, cfg.policy.noise_scale) {
        (PolicyKind::Random, None) => calibrate_noise(cfg)?,
        (_, s) => s.unwrap_or(0.0),
    };
    let opts = LoopOptions {
        strategy,
        noise_scale,
    };
    let runs: Vec<RunResult> = seeds
        .par_iter()
        .map(|&s| weekly_loop_with(cfg, s, &opts))
        .collect::<Result<Vec<_>>>()?;
    summarize(cfg, runs, noise_scale)
}

fn summarize(cfg: &ScenarioConfig, runs: Vec<RunResult>, noise_scale: f64) -> Result<SummaryStats> {
    let good: Vec<&RunResult> = runs.iter().filter(|r| r.valid).collect();
    let invalid_runs = runs.len() - good.len();
    let weeks = cfg.simulation.t_weeks;
    let nf = WeeklyMetrics::FIELDS.len();
    let mut mean = Vec::with_capacity(weeks);
    let mut sd = Vec::with_capacity(weeks);
    for w in 0..weeks {
        let mut m = vec![0.0; nf];
        let mut s = vec![0.0; nf];
        let n = good.len() as f64;
        for r in &good {
            for (k, v) in r.metrics[w].values().iter().enumerate() {
                m[k] += v / n;
            }
        }
        for r in &good {
            for (k, v) in r.metrics[w].values().iter().enumerate() {
                s[k] += (v - m[k]).powi(2);
            }
        }
        let denom = if good.len() > 1 { n - 1.0 } else { 1.0 };
        for x in s.iter_mut() {
            *x = (*x / denom).sqrt();
        }
        mean.push(WeeklyMetrics::from_values(w + 1, &m));
        sd.push(WeeklyMetrics::from_values(w + 1, &s));
    }
    let rc: Vec<f64> = mean.iter().map(|m| m.rc).collect();
    let week_control_of_mean = if good.is_empty() {
        None
    } else {
        week_control(&rc, cfg)?
    };
    let wcs: Vec<Option<usize>> = runs.iter().map(|r| r.week_control).collect();
    let hit: Vec<f64> = good
        .iter()
        .filter_map(|r| r.week_control.map(|w| w as f64))
        .collect();
    let scores: Vec<f64> = good
        .iter()
        .filter_map(|r| r.disease_control_score)
        .collect();
    let avg = |xs: &[f64]| {
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<f64>() / xs.len() as f64)
        }
    };
    let n = good.len().max(1) as f64;
    Ok(SummaryStats {
        mean_week_control: avg(&hit),
        controlled_runs: hit.len(),
        mean_disease_control_score: avg(&scores),
        mean_peak_hospitalization: good.iter().map(|r| r.peak_hospitalization).sum::<f64>() / n,
        mean_final_deception: good.iter().map(|r| r.final_deception).sum::<f64>() / n,
        week_control: wcs,
        week_control_of_mean,
        runs,
        mean,
        sd,
        invalid_runs,
        noise_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StressFactor {
    HospitalizationRatio,
    Incentives,
    NonResponsiveShare,
    VaccineEfficacy,
}

impl StressFactor {
    pub const ALL: [StressFactor; 4] = [
        StressFactor::HospitalizationRatio,
        StressFactor::Incentives,
        StressFactor::NonResponsiveShare,
        StressFactor::VaccineEfficacy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StressFactor::HospitalizationRatio => "hospitalization_ratio",
            StressFactor::Incentives => "incentives",
            StressFactor::NonResponsiveShare => "non_responsive_share",
            StressFactor::VaccineEfficacy => "vaccine_efficacy",
        }
    }

    pub fn apply(&self, cfg: &ScenarioConfig) -> ScenarioConfig {
        let mut c = *cfg;
        match self {
            StressFactor::HospitalizationRatio => c.epi.xi *= cfg.stress.xi_factor,
            StressFactor::Incentives => {
                c.game.i_v *= cfg.stress.incentive_factor;
                c.game.i_m *= cfg.stress.incentive_factor;
            }
            StressFactor::NonResponsiveShare => {
                c.behavior.nonresponsive_share = cfg.stress.nonresponsive_share
            }
            StressFactor::VaccineEfficacy => c.epi.delta = cfg.stress.delta,
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressRow {
    pub factor: StressFactor,
    pub equilibrium: SimEquilibrium,
    pub base_score: Option<f64>,
    pub perturbed_score: Option<f64>,
    /// Perturbed minus baseline disease-control score, missing scores counted as 0.
    pub delta_score: f64,
    pub base_peak: f64,
    pub perturbed_peak: f64,
    pub peak_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressReport {
    pub rows: Vec<StressRow>,
}

fn score_of(s: &SummaryStats, horizon: usize) -> Option<f64> {
    control_score(s.week_control_of_mean, horizon)
}

pub fn stress_row(
    base: &ScenarioConfig,
    factor: StressFactor,
    eq: SimEquilibrium,
) -> Result<StressRow> {
    let mut b = *base;
    b.simulation.equilibrium = eq;
    let seeds = b.seeds();
    let s0 = monte_carlo(&b, &seeds)?;
    let s1 = monte_carlo(&factor.apply(&b), &seeds)?;
    let horizon = b.simulation.t_weeks;
    let (a, c) = (score_of(&s0, horizon), score_of(&s1, horizon));
    Ok(StressRow {
        factor,
        equilibrium: eq,
        base_score: a,
        perturbed_score: c,
        delta_score: c.unwrap_or(0.0) - a.unwrap_or(0.0),
        base_peak: s0.mean_peak_hospitalization,
        perturbed_peak: s1.mean_peak_hospitalization,
        peak_ratio: s1.mean_peak_hospitalization / s0.mean_peak_hospitalization,
    })
}

pub fn stress_grid(base: &ScenarioConfig) -> Result<StressReport> {
    let mut rows = Vec::new();
    for factor in StressFactor::ALL {
        for eq in SimEquilibrium::ALL {
            rows.push(stress_row(base, factor, eq)?);
        }
    }
    Ok(StressReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub mixing_alpha: f64,
    pub mean_deception: f64,
    pub final_rc: f64,
    pub controlled: bool,
}

/// Empirical tolerance frontier: the largest mean deception among fixed-α
/// mixing runs whose week-`T` `R_c` is below 1 under the adaptive policy.
pub fn tolerance_frontier(
    cfg: &ScenarioConfig,
    alphas: &[f64],
) -> Result<(Option<f64>, Vec<FrontierPoint>)> {
    let mut c = *cfg;
    c.policy.kind = PolicyKind::Adaptive;
    let seeds = c.seeds();
    let mut points = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let s = monte_carlo_with(&c, &seeds, ReportStrategy::Mixing(alpha))?;
        let last = s.mean.last().copied();
        let final_rc = last.map(|m| m.rc).unwrap_or(f64::NAN);
        let dec =
            s.mean.iter().map(|m| m.deception_overall).sum::<f64>() / s.mean.len().max(1) as f64;
        points.push(FrontierPoint {
            mixing_alpha: alpha,
            mean_deception: dec,
            final_rc,
            controlled: final_rc < 1.0,
        });
    }
    let frontier = points
        .iter()
        .filter(|p| p.controlled)
        .map(|p| p.mean_deception)
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |a| a.max(d)))
        });
    Ok((frontier, points))
}
