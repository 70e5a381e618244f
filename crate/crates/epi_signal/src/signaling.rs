//! Two-bit messages, sender/receiver strategies, utilities and deception.
//!
//! Bit 1 is vaccination, bit 2 is masking; `0` means compliant. Statuses and
//! messages share the index `2·b₁ + b₂`, so `00 → 0`, `01 → 1`, `10 → 2`,
//! `11 → 3`. Silent individuals are counted separately instead of occupying a
//! fifth column.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const N: usize = 4;
pub const LABELS: [&str; N] = ["00", "01", "10", "11"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrueStatus {
    pub vaccine: u8,
    pub mask: u8,
}

impl TrueStatus {
    pub const ALL: [TrueStatus; N] = [
        TrueStatus {
            vaccine: 0,
            mask: 0,
        },
        TrueStatus {
            vaccine: 0,
            mask: 1,
        },
        TrueStatus {
            vaccine: 1,
            mask: 0,
        },
        TrueStatus {
            vaccine: 1,
            mask: 1,
        },
    ];

    pub fn index(self) -> usize {
        2 * self.vaccine as usize + self.mask as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    Bits(TrueStatus),
    NoResponse,
}

/// A Table A1 row: a true status plus which non-compliant bits are misreported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BehavioralType {
    pub status: TrueStatus,
    pub lies_vaccine: bool,
    pub lies_mask: bool,
}

impl BehavioralType {
    pub fn message(&self) -> TrueStatus {
        TrueStatus {
            vaccine: if self.lies_vaccine {
                0
            } else {
                self.status.vaccine
            },
            mask: if self.lies_mask { 0 } else { self.status.mask },
        }
    }
}

/// The nine reachable types: a bit can only be misreported when it is non-compliant.
pub fn nine_types() -> Vec<BehavioralType> {
    let mut out = Vec::with_capacity(9);
    for status in TrueStatus::ALL {
        for lv in [false, true] {
            for lm in [false, true] {
                if (lv && status.vaccine == 0) || (lm && status.mask == 0) {
                    continue;
                }
                out.push(BehavioralType {
                    status,
                    lies_vaccine: lv,
                    lies_mask: lm,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    pub pi: [f64; N],
    pub non_responsive_share: f64,
    pub vaccine_propensity: f64,
    pub mask_propensity: f64,
}

impl BehaviorProfile {
    pub fn validate(&self) -> Result<()> {
        check_distribution("pi", &self.pi)?;
        if !(0.0..=1.0).contains(&self.non_responsive_share) {
            return Err(Error::config("nonresponsive_share", "must lie in [0, 1]"));
        }
        if !(0.05..=0.15).contains(&self.vaccine_propensity) {
            return Err(Error::config(
                "vaccine_propensity",
                "must lie in [0.05, 0.15]",
            ));
        }
        if !(0.40..=0.80).contains(&self.mask_propensity) {
            return Err(Error::config("mask_propensity", "must lie in [0.40, 0.80]"));
        }
        Ok(())
    }
}

/// Type distribution when a share `v` is vaccinated and a share `eta` masks, independently.
pub fn type_distribution(v: f64, eta: f64) -> [f64; N] {
    [
        v * eta,
        v * (1.0 - eta),
        (1.0 - v) * eta,
        (1.0 - v) * (1.0 - eta),
    ]
}

fn check_distribution(name: &str, d: &[f64; N]) -> Result<()> {
    if d.iter().any(|&x| !(x >= 0.0)) || (d.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::config(name, "must be a probability distribution"));
    }
    Ok(())
}

/// Whether `m` can be sent by status `c`: compliant bits are never reported as non-compliant.
pub fn feasible(c: usize, m: usize) -> bool {
    let (c, m) = (TrueStatus::from_index(c), TrueStatus::from_index(m));
    m.vaccine <= c.vaccine && m.mask <= c.mask
}

fn hamming_vaccine(c: usize, m: usize) -> f64 {
    (TrueStatus::from_index(c).vaccine != TrueStatus::from_index(m).vaccine) as u8 as f64
}

fn hamming_mask(c: usize, m: usize) -> f64 {
    (TrueStatus::from_index(c).mask != TrueStatus::from_index(m).mask) as u8 as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenderStrategy {
    /// `g[c][m]`.
    pub g: [[f64; N]; N],
}

impl SenderStrategy {
    pub fn truthful() -> Self {
        let mut g = [[0.0; N]; N];
        for (c, row) in g.iter_mut().enumerate() {
            row[c] = 1.0;
        }
        SenderStrategy { g }
    }

    pub fn pooling() -> Self {
        SenderStrategy {
            g: [[1.0, 0.0, 0.0, 0.0]; N],
        }
    }

    /// Each non-compliant bit is misreported independently, with probability
    /// `q_v` for vaccination and `q_m` for masking (the Table A1 rows).
    pub fn per_bit(q_v: f64, q_m: f64) -> Self {
        let mut g = [[0.0; N]; N];
        for (c, row) in g.iter_mut().enumerate() {
            let st = TrueStatus::from_index(c);
            let pv = if st.vaccine == 1 { q_v } else { 0.0 };
            let pm = if st.mask == 1 { q_m } else { 0.0 };
            for lv in [false, true] {
                for lm in [false, true] {
                    let w = (if lv { pv } else { 1.0 - pv }) * (if lm { pm } else { 1.0 - pm });
                    if w == 0.0 {
                        continue;
                    }
                    let t = BehavioralType {
                        status: st,
                        lies_vaccine: lv,
                        lies_mask: lm,
                    };
                    row[t.message().index()] += w;
                }
            }
        }
        SenderStrategy { g }
    }

    pub fn validate(&self) -> Result<()> {
        for (c, row) in self.g.iter().enumerate() {
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::config(
                    "strategy",
                    format!("row {} does not sum to 1", LABELS[c]),
                ));
            }
            for (m, &w) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::config("strategy", "entries must lie in [0, 1]"));
                }
                if w > 0.0 && !feasible(c, m) {
                    return Err(Error::config(
                        "strategy",
                        format!(
                            "status {} cannot claim non-compliance in {}",
                            LABELS[c], LABELS[m]
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverBelief {
    /// `p[m][c]`.
    pub p: [[f64; N]; N],
    /// Whether row `m` came from a positive-probability message.
    pub on_path: [bool; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub i_v: f64,
    pub i_m: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha_rsa: f64,
    pub a: f64,
    pub d_star: f64,
}

impl GameParams {
    pub fn baseline() -> Self {
        GameParams {
            i_v: 1.0,
            i_m: 0.5,
            lambda1: 0.2,
            lambda2: 0.0,
            alpha_rsa: 1.0,
            a: 0.5,
            d_star: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("I_v", self.i_v),
            ("I_m", self.i_m),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("a", self.a),
            ("d_star", self.d_star),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be finite and >= 0"));
            }
        }
        if !(self.alpha_rsa > 0.0) {
            return Err(Error::config("alpha_rsa", "must be > 0"));
        }
        Ok(())
    }
}

/// Incentive gained by sending `m` with status `c`, before R_c scaling.
fn lie_payoff(c: usize, m: usize, game: &GameParams) -> f64 {
    let (cs, ms) = (TrueStatus::from_index(c), TrueStatus::from_index(m));
    let mut u = 0.0;
    if cs.vaccine == 1 && ms.vaccine == 0 {
        u += game.i_v;
    }
    if cs.mask == 1 && ms.mask == 0 {
        u += game.i_m;
    }
    u
}

pub fn sender_utility_base(strategy: &SenderStrategy, c: TrueStatus, game: &GameParams) -> f64 {
    let c = c.index();
    (0..N)
        .map(|m| strategy.g[c][m] * lie_payoff(c, m, game))
        .sum()
}

pub fn sender_utility_rc(
    strategy: &SenderStrategy,
    c: TrueStatus,
    game: &GameParams,
    rc: f64,
) -> f64 {
    sender_utility_base(strategy, c, game) * (-game.a * rc).exp()
}

/// `U_L`: minus the average agreement `Σ_m g(m|c)·p(c|m)`, silent members adding zero.
pub fn semantic_loss(
    strategy: &SenderStrategy,
    belief: &ReceiverBelief,
    prior: &[f64; N],
    responders: f64,
    population: f64,
) -> f64 {
    if responders <= 0.0 || population <= 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for c in 0..N {
        for m in 0..N {
            acc += prior[c] * strategy.g[c][m] * belief.p[m][c];
        }
    }
    -(responders / population) * acc
}

/// Softmax speaker `P_S(m|c) ∝ exp(α_RSA·(U_s(m|c) + λ₁·p(c|m)))` over feasible messages.
pub fn pragmatic_sender(
    game: &GameParams,
    rc: f64,
    belief: &ReceiverBelief,
) -> Result<SenderStrategy> {
    let scale = (-game.a * rc).exp();
    let mut g = [[0.0; N]; N];
    for c in 0..N {
        let feas: Vec<usize> = (0..N).filter(|&m| feasible(c, m)).collect();
        let scores: Vec<f64> = feas
            .iter()
            .map(|&m| {
                game.alpha_rsa * (scale * lie_payoff(c, m, game) + game.lambda1 * belief.p[m][c])
            })
            .collect();
        let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY || top.is_nan() {
            return Err(Error::DegenerateSoftmax);
        }
        let w: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
        let z: f64 = w.iter().sum();
        for (&m, wi) in feas.iter().zip(&w) {
            g[c][m] = wi / z;
        }
    }
    Ok(SenderStrategy { g })
}

/// Receiver posterior and message marginal. Zero-marginal messages get the prior.
pub fn bayes_posterior(strategy: &SenderStrategy, prior: &[f64; N]) -> (ReceiverBelief, [f64; N]) {
    let mut p = [[0.0; N]; N];
    let mut on_path = [false; N];
    let mut marginal = [0.0; N];
    for m in 0..N {
        let joint: Vec<f64> = (0..N).map(|c| strategy.g[c][m] * prior[c]).collect();
        let z: f64 = joint.iter().sum();
        marginal[m] = z;
        if z > 0.0 {
            on_path[m] = true;
            for c in 0..N {
                p[m][c] = joint[c] / z;
            }
        } else {
            p[m] = *prior;
        }
    }
    (ReceiverBelief { p, on_path }, marginal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// Exponent `+λ₂·distortion`, exactly as written.
    #[default]
    AsPrinted,
    /// Exponent `-λ₂·distortion`, favoring low-distortion statuses.
    Minimizing,
}

/// Closed-form constrained inference.
///
/// `distortion[θ][c]` is the squared hospitalization error when the truth is
/// `θ` and the receiver infers `c`; it is averaged over `θ ~ prior`.
pub fn receiver_inference_constrained(
    prior: &[f64; N],
    marginal: &[f64; N],
    distortion: &[[f64; N]; N],
    lambda2: f64,
    sign: SignConvention,
) -> Result<ReceiverBelief> {
    let s = match sign {
        SignConvention::AsPrinted => 1.0,
        SignConvention::Minimizing => -1.0,
    };
    let mut p = [[0.0; N]; N];
    for m in 0..N {
        let pm = marginal[m];
        if !(pm > 0.0) {
            return Err(Error::UndefinedMessage(m));
        }
        let expo: Vec<f64> = (0..N)
            .map(|c| {
                let d: f64 = (0..N).map(|t| prior[t] * distortion[t][c]).sum();
                (s * lambda2 * pm * d - pm) / pm
            })
            .collect();
        let top = expo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = expo.iter().map(|e| (e - top).exp()).collect();
        let z: f64 = w.iter().sum();
        for c in 0..N {
            p[m][c] = w[c] / z;
        }
    }
    Ok(ReceiverBelief {
        p,
        on_path: [true; N],
    })
}

/// `-ln p(c|m)` in nats; infinite when the event has zero probability.
pub fn surprise(belief: &ReceiverBelief, c: TrueStatus, m: TrueStatus) -> f64 {
    let q = belief.p[m.index()][c.index()];
    if q > 0.0 {
        -q.ln()
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deception {
    pub overall: f64,
    pub vaccination: f64,
    pub masking: f64,
    /// The same three values divided by the population.
    pub overall_rate: f64,
    pub vaccination_rate: f64,
    pub masking_rate: f64,
    /// Misreported-bit mass among responders only, in [0, 1].
    pub responder_rate: f64,
}

/// Aggregate deception `½·Σ g·‖m−c‖_H + |K_s|` with bit-restricted components.
///
/// `counts[c]` holds the responders of status `c` who follow `strategy`;
/// responders outside `counts` are truthful and add nothing.
pub fn deception_level(
    strategy: &SenderStrategy,
    counts: &[f64; N],
    responders: f64,
    silent: f64,
) -> Deception {
    let mut hv = 0.0;
    let mut hm = 0.0;
    for c in 0..N {
        for m in 0..N {
            let w = counts[c] * strategy.g[c][m];
            hv += w * hamming_vaccine(c, m);
            hm += w * hamming_mask(c, m);
        }
    }
    let overall = 0.5 * (hv + hm) + silent;
    let vaccination = hv + silent;
    let masking = hm + silent;
    let total = responders + silent;
    let rate = |x: f64| if total > 0.0 { x / total } else { 0.0 };
    Deception {
        overall,
        vaccination,
        masking,
        overall_rate: rate(overall),
        vaccination_rate: rate(vaccination),
        masking_rate: rate(masking),
        responder_rate: if responders > 0.0 {
            0.5 * (hv + hm) / responders
        } else {
            0.0
        },
    }
}

fn entropy_bits(d: &[f64]) -> f64 {
    d.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Mutual information between status and message, in bits.
pub fn information_content_bits(
    prior: &[f64; N],
    belief: &ReceiverBelief,
    marginal: &[f64; N],
) -> f64 {
    let cond: f64 = (0..N)
        .filter(|&m| marginal[m] > 0.0)
        .map(|m| marginal[m] * entropy_bits(&belief.p[m]))
        .sum();
    (entropy_bits(prior) - cond).max(0.0)
}

/// Conditional entropy of status given message, in nats: the expected surprise.
pub fn expected_surprise(belief: &ReceiverBelief, marginal: &[f64; N]) -> f64 {
    (0..N)
        .filter(|&m| marginal[m] > 0.0)
        .map(|m| {
            let h: f64 = belief.p[m]
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| -x * x.ln())
                .sum();
            marginal[m] * h
        })
        .sum()
}
