//! Closed-form per-slot success probabilities on Rayleigh-fading links.
//!
//! The system has two transmitters sharing one receiver slot:
//!
//! - transmitter 1 sends status updates (decoded against an SINR threshold),
//! - transmitter 2 sends energy (harvested against a power threshold),
//! - the receiver splits incoming power between decoding and harvesting
//!   with ratio `power_split` (fraction `power_split^2` of the power feeds
//!   the decoder branch; the complement feeds the harvester).
//!
//! Channel gains are exponential (Rayleigh envelope), so every success
//! probability has a closed form.  This module computes them for the four
//! activity patterns that matter: each transmitter alone and both together.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance under which two mean received powers are treated as
/// equal, switching the joint-harvest probability to its equal-mean limit
/// (the difference quotient degenerates there).
pub const EQUAL_MEAN_RTOL: f64 = 1e-9;

// ----------------------------------------------------------------------------
// parameters

/// One transmitter-to-receiver link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Transmit power in watts.
    pub tx_power: f64,
    /// Distance to the receiver in meters.
    pub distance: f64,
    /// Path-loss exponent.
    pub pathloss_exp: f64,
    /// Mean of the exponential channel power gain.
    pub fading_mean: f64,
}

impl LinkParams {
    pub fn new(tx_power: f64, distance: f64, pathloss_exp: f64, fading_mean: f64) -> Result<Self> {
        let check = |name: &'static str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
            Ok(())
        };
        check("tx_power", tx_power)?;
        check("distance", distance)?;
        check("pathloss_exp", pathloss_exp)?;
        check("fading_mean", fading_mean)?;
        Ok(LinkParams { tx_power, distance, pathloss_exp, fading_mean })
    }

    /// Mean received power before fading: `tx_power * distance^(-pathloss_exp)`.
    pub fn gain(&self) -> f64 {
        self.tx_power * self.distance.powf(-self.pathloss_exp)
    }
}

/// Deterministic path gain of a link.
pub fn link_gain(link: &LinkParams) -> f64 {
    link.gain()
}

/// Full physical-layer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Status-update (data) link.
    pub link1: LinkParams,
    /// Energy link.
    pub link2: LinkParams,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    /// SINR threshold for decoding, linear.
    pub sinr_threshold: f64,
    /// Harvested-power threshold, linear (watts).
    pub energy_threshold: f64,
    /// Power-splitting coefficient in [0, 1]; the decoder branch sees the
    /// squared coefficient of the received power.
    pub power_split: f64,
}

impl ChannelConfig {
    pub fn new(
        link1: LinkParams,
        link2: LinkParams,
        noise_power: f64,
        sinr_threshold: f64,
        energy_threshold: f64,
        power_split: f64,
    ) -> Result<Self> {
        let nonneg = |name: &'static str, v: f64| -> Result<()> {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
            Ok(())
        };
        nonneg("noise_power", noise_power)?;
        nonneg("sinr_threshold", sinr_threshold)?;
        nonneg("energy_threshold", energy_threshold)?;
        if !(0.0..=1.0).contains(&power_split) || !power_split.is_finite() {
            return Err(Error::invalid(
                "power_split",
                format!("must lie in [0, 1], got {power_split}"),
            ));
        }
        Ok(ChannelConfig { link1, link2, noise_power, sinr_threshold, energy_threshold, power_split })
    }

    /// All four per-pattern success probabilities for this configuration.
    pub fn success_probs(&self) -> SuccessProbs {
        SuccessProbs {
            p_d1: p_data_solo(self),
            p_d12: p_data_joint(self),
            p_e2: p_energy_solo(self),
            p_e12: p_energy_joint(self),
        }
    }
}

// ----------------------------------------------------------------------------
// success probabilities

/// Data decoding succeeds when only transmitter 1 is active.
///
/// No interference, full received power to the decoder:
/// `exp(-threshold * noise / (fading_mean1 * gain1))`.
pub fn p_data_solo(cfg: &ChannelConfig) -> f64 {
    let g1 = cfg.link1.gain();
    (-(cfg.sinr_threshold * cfg.noise_power) / (cfg.link1.fading_mean * g1)).exp()
}

/// Data decoding succeeds when both transmitters are active.
///
/// The decoder branch receives `power_split^2` of the power, so the
/// effective noise grows by `1 / (1 - power_split^2)`, and transmitter 2
/// adds Rayleigh interference:
///
/// `exp(-thr * noise / ((1 - rho^2) v1 g1)) / (1 + thr * v2 g2 / (v1 g1))`.
///
/// With `power_split = 1` nothing reaches the decoder branch, so unless the
/// noise term vanishes the probability is zero.
pub fn p_data_joint(cfg: &ChannelConfig) -> f64 {
    let g1 = cfg.link1.gain();
    let g2 = cfg.link2.gain();
    let rho2 = cfg.power_split * cfg.power_split;
    let noise_exp = (cfg.sinr_threshold * cfg.noise_power) / (cfg.link1.fading_mean * g1);
    let noise_factor = if noise_exp == 0.0 {
        1.0
    } else if rho2 >= 1.0 {
        0.0
    } else {
        (-noise_exp / (1.0 - rho2)).exp()
    };
    let interference = 1.0 + cfg.sinr_threshold * cfg.link2.fading_mean * g2 / (cfg.link1.fading_mean * g1);
    noise_factor / interference
}

/// Energy harvesting succeeds when only transmitter 2 is active.
///
/// All received power is harvested: `exp(-thr_e / (v2 g2))`.
pub fn p_energy_solo(cfg: &ChannelConfig) -> f64 {
    let g2 = cfg.link2.gain();
    (-cfg.energy_threshold / (cfg.link2.fading_mean * g2)).exp()
}

/// Energy harvesting succeeds when both transmitters are active.
///
/// The harvester sees the split-off fraction of the sum of two independent
/// exponential powers with means `a = v1 g1` and `b = v2 g2` (a
/// hypoexponential sum), giving
///
/// `P = (a exp(-c/a) - b exp(-c/b)) / (a - b)`, `c = thr_e / power_split^2`.
///
/// When the means coincide the sum is Erlang-2 and the limit
/// `exp(-c/a) (1 + c/a)` applies; the switch uses [`EQUAL_MEAN_RTOL`].
/// With `power_split = 0` nothing is harvested, so a positive threshold
/// cannot be met.
pub fn p_energy_joint(cfg: &ChannelConfig) -> f64 {
    let a = cfg.link1.fading_mean * cfg.link1.gain();
    let b = cfg.link2.fading_mean * cfg.link2.gain();
    let rho2 = cfg.power_split * cfg.power_split;
    if cfg.energy_threshold == 0.0 {
        return 1.0;
    }
    if rho2 == 0.0 {
        return 0.0;
    }
    let c = cfg.energy_threshold / rho2;
    if (a - b).abs() <= EQUAL_MEAN_RTOL * a.max(b) {
        (-c / a).exp() * (1.0 + c / a)
    } else {
        (a * (-c / a).exp() - b * (-c / b).exp()) / (a - b)
    }
}

// ----------------------------------------------------------------------------
// per-slot success probabilities as a value type

/// The four conditional success probabilities, one per activity pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbs {
    /// Data decoded, transmitter 1 alone.
    pub p_d1: f64,
    /// Data decoded, both active.
    pub p_d12: f64,
    /// Energy harvested, transmitter 2 alone.
    pub p_e2: f64,
    /// Energy harvested, both active.
    pub p_e12: f64,
}

impl SuccessProbs {
    /// Validated constructor: each entry must be a probability and
    /// interference can only hurt decoding (`p_d12 <= p_d1`).
    pub fn new(p_d1: f64, p_d12: f64, p_e2: f64, p_e12: f64) -> Result<Self> {
        let check = |name: &'static str, v: f64| -> Result<()> {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {v}")));
            }
            Ok(())
        };
        check("p_d1", p_d1)?;
        check("p_d12", p_d12)?;
        check("p_e2", p_e2)?;
        check("p_e12", p_e12)?;
        if p_d12 > p_d1 {
            return Err(Error::invalid(
                "p_d12",
                format!("joint decoding cannot beat solo decoding ({p_d12} > {p_d1})"),
            ));
        }
        Ok(SuccessProbs { p_d1, p_d12, p_e2, p_e12 })
    }
}

/// Per-slot probabilities of the four (data, energy) outcome combinations
/// under independent activation with probabilities `q1` and `q2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    /// Data decoded and energy harvested.
    pub p_de: f64,
    /// Data decoded, no energy.
    pub p_dne: f64,
    /// No data, energy harvested.
    pub p_nde: f64,
    /// Neither.
    pub p_ndne: f64,
    /// Marginal: data decoded.
    pub p_d: f64,
    /// Marginal: energy harvested.
    pub p_e: f64,
}

impl OutcomeDistribution {
    /// Build from the four joint probabilities; marginals are filled in by
    /// summation so the identities hold exactly.
    pub fn from_joints(p_de: f64, p_dne: f64, p_nde: f64, p_ndne: f64) -> Result<Self> {
        for (name, v) in [
            ("p_de", p_de),
            ("p_dne", p_dne),
            ("p_nde", p_nde),
            ("p_ndne", p_ndne),
        ] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid("outcome", format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        let sum = p_de + p_dne + p_nde + p_ndne;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("outcome", format!("probabilities sum to {sum}, not 1")));
        }
        Ok(OutcomeDistribution {
            p_de,
            p_dne,
            p_nde,
            p_ndne,
            p_d: p_de + p_dne,
            p_e: p_de + p_nde,
        })
    }
}

/// Mix the per-pattern success probabilities over the transmitters'
/// independent activation (probabilities `q1`, `q2`).
///
/// Data requires transmitter 1 active and decoding success; energy requires
/// transmitter 2 active and harvesting success.  Given the activity pattern
/// the two events are independent, which yields the four joint terms below.
pub fn outcome_distribution(sp: &SuccessProbs, q1: f64, q2: f64) -> OutcomeDistribution {
    assert!((0.0..=1.0).contains(&q1), "q1 must lie in [0, 1], got {q1}");
    assert!((0.0..=1.0).contains(&q2), "q2 must lie in [0, 1], got {q2}");
    let both = q1 * q2;
    let p_de = both * sp.p_d12 * sp.p_e12;
    let p_dne = both * sp.p_d12 * (1.0 - sp.p_e12) + q1 * (1.0 - q2) * sp.p_d1;
    let p_nde = both * (1.0 - sp.p_d12) * sp.p_e12 + (1.0 - q1) * q2 * sp.p_e2;
    let p_ndne = (1.0 - p_de - p_dne - p_nde).max(0.0);
    let p_d = both * sp.p_d12 + q1 * (1.0 - q2) * sp.p_d1;
    let p_e = both * sp.p_e12 + (1.0 - q1) * q2 * sp.p_e2;
    OutcomeDistribution { p_de, p_dne, p_nde, p_ndne, p_d, p_e }
}

// ----------------------------------------------------------------------------
