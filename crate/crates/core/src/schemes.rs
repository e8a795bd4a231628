//! Achievable sum rates of the relay-aided and relay-free transmission schemes.
//!
//! The block-Markov scheme superimposes a current-block codeword (power `χ`)
//! on a resolution codeword for the previous block (power `ψ`). The relay
//! decodes both users, then re-sends the resolution codewords along
//! zero-forcing beamformers that cancel the direct-link copies at the
//! unintended destinations. After backward decoding, destination `k` sees its
//! own resolution codeword (direct plus relay copy) against the current-block
//! codewords of the other users, decoded treating interference as noise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beamform::{zf_beamformers, BeamformError};
use crate::channel::ChannelRealization;
use crate::linalg::log2_det_identity_plus;
use crate::ratecore::{
    bc_sum_capacity, bc_sum_capacity_detailed, mac_max_sum_with_caps, mac_subset_capacity, max_sum_with_caps,
    sinr_rate, MacRegion, RateError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error(transparent)]
    Beamform(#[from] BeamformError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("relay has {antennas} antennas, fewer than the {users} users")]
    InsufficientAntennas { antennas: usize, users: usize },
    #[error("invalid power: {0}")]
    InvalidPower(String),
}

impl SchemeError {
    /// Short tag used when tallying failures.
    pub fn kind(&self) -> &'static str {
        match self {
            SchemeError::Beamform(BeamformError::InsufficientAntennas { .. }) | SchemeError::InsufficientAntennas { .. } => {
                "insufficient_antennas"
            }
            SchemeError::Beamform(BeamformError::RankDeficient { .. }) => "rank_deficient",
            SchemeError::Beamform(BeamformError::PowerInfeasible { .. }) => "power_infeasible",
            SchemeError::Beamform(BeamformError::InvalidInput(_)) => "invalid_beamforming_input",
            SchemeError::Rate(RateError::NotConverged { .. }) => "not_converged",
            SchemeError::Rate(_) => "rate_error",
            SchemeError::InvalidPower(_) => "invalid_power",
        }
    }
}

/// Exact scheme identifiers used in artifacts and configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    TwoHop,
    BlockMarkov,
    NoRelayTdm,
    NoRelayTin,
    CoopBc,
    HalfDuplex,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::TwoHop,
        SchemeId::BlockMarkov,
        SchemeId::NoRelayTdm,
        SchemeId::NoRelayTin,
        SchemeId::CoopBc,
        SchemeId::HalfDuplex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::TwoHop => "two_hop",
            SchemeId::BlockMarkov => "block_markov",
            SchemeId::NoRelayTdm => "no_relay_tdm",
            SchemeId::NoRelayTin => "no_relay_tin",
            SchemeId::CoopBc => "coop_bc",
            SchemeId::HalfDuplex => "half_duplex",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown scheme identifier {s:?}"))
    }
}

/// Source power split `χ + ψ = P` and relay power as functions of `P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PowerPolicy {
    /// `χ = ψ = P/2`, `P_R = P`.
    Symmetric,
    /// `χ = √P`, `ψ = |P − √P|`, `P_R = P`. Meant for `P ≥ 1`.
    Asymmetric,
    /// `χ = ψ = P/2`, `P_R = P²`.
    Abundant,
    /// `χ : ψ = P^chi_exponent : P^psi_exponent` scaled so `χ + ψ = P`,
    /// and `P_R = P^relay_exponent`.
    Custom {
        chi_exponent: f64,
        psi_exponent: f64,
        relay_exponent: f64,
    },
}

impl PowerPolicy {
    pub fn short_name(&self) -> &'static str {
        match self {
            PowerPolicy::Symmetric => "sym",
            PowerPolicy::Asymmetric => "asym",
            PowerPolicy::Abundant => "abundant",
            PowerPolicy::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    /// Current-block codeword power.
    pub chi: f64,
    /// Resolution codeword power.
    pub psi: f64,
    /// Relay power.
    pub relay: f64,
}

pub fn eval_policy(policy: &PowerPolicy, p: f64) -> PowerSplit {
    match *policy {
        PowerPolicy::Symmetric => PowerSplit {
            chi: p / 2.0,
            psi: p / 2.0,
            relay: p,
        },
        PowerPolicy::Asymmetric => {
            let root = p.sqrt();
            PowerSplit {
                chi: root,
                psi: (p - root).abs(),
                relay: p,
            }
        }
        PowerPolicy::Abundant => PowerSplit {
            chi: p / 2.0,
            psi: p / 2.0,
            relay: p * p,
        },
        PowerPolicy::Custom {
            chi_exponent,
            psi_exponent,
            relay_exponent,
        } => {
            // χ = P / (1 + P^(b−a)) stays finite for any exponents
            let chi = if p > 0.0 {
                p / (1.0 + p.powf(psi_exponent - chi_exponent))
            } else {
                0.0
            };
            PowerSplit {
                chi,
                psi: p - chi,
                relay: p.powf(relay_exponent),
            }
        }
    }
}

/// `α` in the destination rate: whether the direct and relay copies of the
/// resolution codeword add in phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combining {
    #[default]
    NonCoherent,
    Coherent,
}

impl Combining {
    pub fn alpha(self) -> f64 {
        match self {
            Combining::NonCoherent => 0.0,
            Combining::Coherent => 1.0,
        }
    }

    pub fn from_alpha(alpha: u8) -> Option<Self> {
        match alpha {
            0 => Some(Combining::NonCoherent),
            1 => Some(Combining::Coherent),
            _ => None,
        }
    }
}

/// How the relay's received power at the intended destination is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// `‖h_Rk‖²·P_R/K`, the beamformer perfectly aligned with `h_Rk`.
    #[default]
    PaperFormula,
    /// `|h_Rk^H t_k|²·ψ` for the actual zero-forcing beamformer.
    Realized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub scheme: SchemeId,
    /// Source power `P`.
    pub power: f64,
    pub per_user: Vec<f64>,
    pub sum: f64,
    pub diagnostics: Vec<String>,
}

impl RateResult {
    fn new(scheme: SchemeId, power: f64, per_user: Vec<f64>, diagnostics: Vec<String>) -> Self {
        let per_user: Vec<f64> = per_user.into_iter().map(|r| r.max(0.0)).collect();
        let sum = per_user.iter().sum();
        Self {
            scheme,
            power,
            per_user,
            sum,
            diagnostics,
        }
    }
}

fn check_power(name: &str, value: f64) -> Result<(), SchemeError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(SchemeError::InvalidPower(format!("{name} = {value}")))
    }
}

fn require_antennas(ch: &ChannelRealization) -> Result<(), SchemeError> {
    if ch.relay_antennas() < ch.users() {
        return Err(SchemeError::InsufficientAntennas {
            antennas: ch.relay_antennas(),
            users: ch.users(),
        });
    }
    Ok(())
}

/// Interference at destination `k` from the other sources, each at `power`.
fn cross_power(ch: &ChannelRealization, k: usize, power: f64) -> f64 {
    let f = ch.direct();
    (0..ch.users())
        .filter(|&j| j != k)
        .map(|j| f[(j, k)].norm_sqr() * power)
        .sum()
}

/// Sources → relay MAC at full power, then relay → destinations BC, each
/// using half of the channel uses.
pub fn two_hop_sum_rate(
    ch: &ChannelRealization,
    p: f64,
    relay_power: f64,
    noise_var: f64,
) -> Result<RateResult, SchemeError> {
    check_power("P", p)?;
    check_power("P_R", relay_power)?;
    let k = ch.users();
    let region = MacRegion::uniform(ch.uplink().clone(), p, noise_var)?;
    let all: Vec<usize> = (0..k).collect();
    let mac = mac_subset_capacity(&region, &all)?;
    let bc = bc_sum_capacity(ch.downlink(), relay_power, noise_var)?;
    let sum = 0.5 * mac.min(bc);
    let hop = if mac <= bc { "mac" } else { "bc" };
    Ok(RateResult::new(
        SchemeId::TwoHop,
        p,
        vec![sum / k as f64; k],
        vec![format!("mac={mac:.6} bc={bc:.6} limiting={hop}")],
    ))
}

/// Destination-side rate caps of the block-Markov scheme, one per user.
pub fn block_markov_caps(
    ch: &ChannelRealization,
    p: f64,
    policy: &PowerPolicy,
    combining: Combining,
    gain_mode: GainMode,
    noise_var: f64,
) -> Result<Vec<f64>, SchemeError> {
    check_power("P", p)?;
    require_antennas(ch)?;
    let k = ch.users();
    let split = eval_policy(policy, p);
    check_power("chi", split.chi)?;
    check_power("psi", split.psi)?;
    check_power("P_R", split.relay)?;
    let f = ch.direct();
    let h = ch.downlink();
    let relay_on = split.relay > 0.0 && split.psi > 0.0;

    let relay_terms: Vec<f64> = match (relay_on, gain_mode) {
        (false, _) => vec![0.0; k],
        (true, GainMode::PaperFormula) => (0..k)
            .map(|u| h.column(u).norm_squared() * split.relay / k as f64)
            .collect(),
        (true, GainMode::Realized) => {
            let target = split.relay / (k as f64 * split.psi);
            let set = zf_beamformers(h, f, target)?;
            (0..k)
                .map(|u| set.effective_gain(h, u).powi(2) * split.psi)
                .collect()
        }
    };

    let alpha = combining.alpha();
    Ok((0..k)
        .map(|u| {
            let own = f[(u, u)].norm_sqr() * split.psi;
            let relay = relay_terms[u];
            let coherent = 2.0 * alpha * f[(u, u)].norm() * (split.psi * relay).sqrt();
            sinr_rate(own + relay + coherent, cross_power(ch, u, split.chi), noise_var)
        })
        .collect())
}

/// Block-Markov superposition with zero-forcing relay, decoded backwards
/// treating interference as noise. End-to-end rates are the largest sum
/// inside both the relay's MAC region (powers `χ`) and the destination caps.
pub fn block_markov_rates(
    ch: &ChannelRealization,
    p: f64,
    policy: &PowerPolicy,
    combining: Combining,
    gain_mode: GainMode,
    noise_var: f64,
) -> Result<RateResult, SchemeError> {
    let caps = block_markov_caps(ch, p, policy, combining, gain_mode, noise_var)?;
    let split = eval_policy(policy, p);
    let region = MacRegion::uniform(ch.uplink().clone(), split.chi, noise_var)?;
    let alloc = mac_max_sum_with_caps(&region, &caps)?;
    let diagnostics = vec![
        format!("caps={caps:?}"),
        format!(
            "bottleneck={:?} capped={:?}",
            alloc.binding.bottleneck, alloc.binding.capped_users
        ),
    ];
    Ok(RateResult::new(SchemeId::BlockMarkov, p, alloc.rates, diagnostics))
}

/// Relay-free time sharing: each user alone for a `1/K` fraction at power `P`.
pub fn no_relay_tdm(ch: &ChannelRealization, p: f64, noise_var: f64) -> Result<RateResult, SchemeError> {
    check_power("P", p)?;
    let k = ch.users();
    let f = ch.direct();
    let rates = (0..k)
        .map(|u| sinr_rate(f[(u, u)].norm_sqr() * p, 0.0, noise_var) / k as f64)
        .collect();
    Ok(RateResult::new(SchemeId::NoRelayTdm, p, rates, Vec::new()))
}

/// Relay-free simultaneous transmission, interference treated as noise.
pub fn no_relay_tin(ch: &ChannelRealization, p: f64, noise_var: f64) -> Result<RateResult, SchemeError> {
    check_power("P", p)?;
    let f = ch.direct();
    let rates = (0..ch.users())
        .map(|u| sinr_rate(f[(u, u)].norm_sqr() * p, cross_power(ch, u, p), noise_var))
        .collect();
    Ok(RateResult::new(SchemeId::NoRelayTin, p, rates, Vec::new()))
}

/// Fully cooperating sources acting as one K-antenna transmitter with total
/// power `K·P`; receiver `k` has channel `(f_1k, …, f_Kk)`.
///
/// Per-user rates are the successive-decoding corner of the optimal dual MAC
/// (users decoded last-to-first), which sums to the broadcast sum capacity.
pub fn cooperative_bc_sum_rate(ch: &ChannelRealization, p: f64, noise_var: f64) -> Result<RateResult, SchemeError> {
    check_power("P", p)?;
    let k = ch.users();
    let sol = bc_sum_capacity_detailed(ch.direct(), k as f64 * p, noise_var)?;
    let scaled: Vec<f64> = sol.powers.iter().map(|q| q / noise_var).collect();
    let mut rates = Vec::with_capacity(k);
    let mut prev = 0.0;
    for u in 0..k {
        let members: Vec<usize> = (0..=u).collect();
        let level = log2_det_identity_plus(ch.direct(), &members, &scaled[..=u]);
        rates.push(level - prev);
        prev = level;
    }
    // the corner telescopes to the objective; rescale away rounding
    let total: f64 = rates.iter().sum();
    if total > 0.0 {
        let fix = sol.sum_rate / total;
        rates.iter_mut().for_each(|r| *r *= fix);
    }
    Ok(RateResult::new(
        SchemeId::CoopBc,
        p,
        rates,
        vec![format!("dual_powers={:?} sweeps={}", sol.powers, sol.sweeps)],
    ))
}

/// Half-duplex relaying: each block is split into two halves carrying the
/// same message. The first half is a plain interference channel; in the second
/// the relay forwards every codeword along zero-forcing beamformers (stream
/// power `P_R/K`), leaving an interference-free channel. The halves are
/// combined by adding their SNRs. The relay decodes from the first half, so
/// its MAC constraints are halved; with `P_R = 0` the relay stays silent and
/// imposes no constraint.
pub fn half_duplex_rates(
    ch: &ChannelRealization,
    p: f64,
    relay_power: f64,
    noise_var: f64,
) -> Result<RateResult, SchemeError> {
    check_power("P", p)?;
    check_power("P_R", relay_power)?;
    require_antennas(ch)?;
    let k = ch.users();
    if p == 0.0 {
        return Ok(RateResult::new(SchemeId::HalfDuplex, p, vec![0.0; k], Vec::new()));
    }
    let f = ch.direct();
    let first: Vec<f64> = (0..k)
        .map(|u| f[(u, u)].norm_sqr() * p / (cross_power(ch, u, p) + noise_var))
        .collect();
    let second: Vec<f64> = if relay_power > 0.0 {
        let set = zf_beamformers(ch.downlink(), f, relay_power / (k as f64 * p))?;
        (0..k)
            .map(|u| (f[(u, u)].norm_sqr() + set.effective_gain(ch.downlink(), u).powi(2)) * p / noise_var)
            .collect()
    } else {
        first.clone()
    };
    let caps: Vec<f64> = (0..k)
        .map(|u| 0.5 * (first[u] + second[u]).ln_1p() / std::f64::consts::LN_2)
        .collect();
    if relay_power == 0.0 {
        // silent relay: nothing to decode
        return Ok(RateResult::new(SchemeId::HalfDuplex, p, caps, vec!["relay off".into()]));
    }
    let region = MacRegion::uniform(ch.uplink().clone(), p, noise_var)?;
    let alloc = max_sum_with_caps(
        k,
        |mask| {
            let members: Vec<usize> = (0..k).filter(|u| mask & (1 << u) != 0).collect();
            0.5 * mac_subset_capacity(&region, &members).unwrap_or(0.0)
        },
        &caps,
    )?;
    Ok(RateResult::new(
        SchemeId::HalfDuplex,
        p,
        alloc.rates,
        vec![format!("caps={caps:?} bottleneck={:?}", alloc.binding.bottleneck)],
    ))
}

/// A scheme together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// Relay power `P^relay_exponent`.
    TwoHop { relay_exponent: f64 },
    BlockMarkov {
        policy: PowerPolicy,
        combining: Combining,
        gain_mode: GainMode,
    },
    NoRelayTdm,
    NoRelayTin,
    CoopBc,
    /// Relay power `P^relay_exponent`.
    HalfDuplex { relay_exponent: f64 },
}

impl Scheme {
    pub fn id(&self) -> SchemeId {
        match self {
            Scheme::TwoHop { .. } => SchemeId::TwoHop,
            Scheme::BlockMarkov { .. } => SchemeId::BlockMarkov,
            Scheme::NoRelayTdm => SchemeId::NoRelayTdm,
            Scheme::NoRelayTin => SchemeId::NoRelayTin,
            Scheme::CoopBc => SchemeId::CoopBc,
            Scheme::HalfDuplex { .. } => SchemeId::HalfDuplex,
        }
    }

    /// `block_markov[asym]`, `block_markov[abundant,coherent]`, or the bare
    /// identifier for the other schemes.
    pub fn default_label(&self) -> String {
        match self {
            Scheme::BlockMarkov {
                policy,
                combining,
                gain_mode,
            } => {
                let mut parts = vec![policy.short_name()];
                if *combining == Combining::Coherent {
                    parts.push("coherent");
                }
                if *gain_mode == GainMode::Realized {
                    parts.push("realized");
                }
                format!("block_markov[{}]", parts.join(","))
            }
            other => other.id().as_str().to_string(),
        }
    }

    pub fn evaluate(&self, ch: &ChannelRealization, p: f64, noise_var: f64) -> Result<RateResult, SchemeError> {
        match self {
            Scheme::TwoHop { relay_exponent } => two_hop_sum_rate(ch, p, p.powf(*relay_exponent), noise_var),
            Scheme::BlockMarkov {
                policy,
                combining,
                gain_mode,
            } => block_markov_rates(ch, p, policy, *combining, *gain_mode, noise_var),
            Scheme::NoRelayTdm => no_relay_tdm(ch, p, noise_var),
            Scheme::NoRelayTin => no_relay_tin(ch, p, noise_var),
            Scheme::CoopBc => cooperative_bc_sum_rate(ch, p, noise_var),
            Scheme::HalfDuplex { relay_exponent } => half_duplex_rates(ch, p, p.powf(*relay_exponent), noise_var),
        }
    }
}
