//! Scenario files: the JSON surface of the tool.
//!
//! A scenario holds the full physical parameterization (both links, noise,
//! thresholds, power split — with explicit unit tags), the protocol knobs
//! (activation probabilities q1, q2 and the battery spec), and optional
//! simulation / sweep settings.  Parsing is strict: unknown fields are
//! rejected so typos surface as schema errors instead of silently falling
//! back to defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::{battery_steady_state, AgeMetrics, BatterySpec, BatterySteadyState};
use crate::channel::{outcome_distribution, ChannelConfig, LinkParams, OutcomeDistribution, SuccessProbs};
use crate::error::{Error, Result};
use crate::units::{Power, Threshold};

pub const DEFAULT_HORIZON: u64 = 1_000_000;
pub const DEFAULT_WARMUP: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_GRID_STEP: f64 = 0.01;

// ----------------------------------------------------------------------------
// validated in-memory form

/// A fully validated scenario, all quantities in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub channel: ChannelConfig,
    /// Activation probability of the data transmitter.
    pub q1: f64,
    /// Activation probability of the energy transmitter.
    pub q2: f64,
    pub battery: BatterySpec,
}

impl Scenario {
    /// Everything the closed forms say about this operating point.
    pub fn analyze(&self) -> AnalysisReport {
        let success_probs = self.channel.success_probs();
        let outcome = outcome_distribution(&success_probs, self.q1, self.q2);
        let steady_state = battery_steady_state(&outcome, &self.battery);
        let ages = AgeMetrics::compute(&outcome, &self.battery);
        AnalysisReport {
            q1: self.q1,
            q2: self.q2,
            battery: self.battery,
            success_probs,
            outcome,
            steady_state,
            ages,
        }
    }
}

/// Closed-form analysis of one operating point, from reception
/// probabilities down to the two average ages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub q1: f64,
    pub q2: f64,
    pub battery: BatterySpec,
    pub success_probs: SuccessProbs,
    pub outcome: OutcomeDistribution,
    pub steady_state: BatterySteadyState,
    pub ages: AgeMetrics,
}

// ----------------------------------------------------------------------------
// file schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub channel: ChannelSection,
    pub protocol: ProtocolSection,
    pub battery: BatterySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub link1: LinkSection,
    pub link2: LinkSection,
    pub noise_power: Power,
    pub sinr_threshold: Threshold,
    pub energy_threshold: Threshold,
    pub power_split: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub tx_power: Power,
    pub distance: f64,
    pub pathloss_exp: f64,
    pub fading_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

impl LinkSection {
    fn build(&self, which: &str) -> Result<LinkParams> {
        LinkParams::new(self.tx_power.watts(), self.distance, self.pathloss_exp, self.fading_mean)
            .map_err(|e| Error::Schema(format!("{which}: {e}")))
    }
}

impl ScenarioFile {
    pub fn parse(json: &str) -> Result<ScenarioFile> {
        serde_json::from_str(json).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ScenarioFile> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
        ScenarioFile::parse(&text)
    }

    /// Validate and convert to the linear-unit in-memory form.
    pub fn scenario(&self) -> Result<Scenario> {
        let channel = ChannelConfig::new(
            self.channel.link1.build("channel.link1")?,
            self.channel.link2.build("channel.link2")?,
            self.channel.noise_power.watts(),
            self.channel.sinr_threshold.linear(),
            self.channel.energy_threshold.linear(),
            self.channel.power_split,
        )
        .map_err(|e| Error::Schema(format!("channel: {e}")))?;

        for (name, q) in [("q1", self.protocol.q1), ("q2", self.protocol.q2)] {
            if !q.is_finite() || !(0.0..=1.0).contains(&q) {
                return Err(Error::Schema(format!("protocol.{name} must lie in [0, 1], got {q}")));
            }
        }
        if let BatterySpec::Finite(m) = self.battery {
            if m == 0 {
                return Err(Error::Schema("battery capacity must be at least 1".into()));
            }
        }
        if let Some(sim) = &self.simulation {
            let horizon = sim.horizon.unwrap_or(DEFAULT_HORIZON);
            let warmup = sim.warmup.unwrap_or(DEFAULT_WARMUP);
            if horizon == 0 || warmup >= horizon {
                return Err(Error::Schema(format!(
                    "simulation: need warmup < horizon and horizon >= 1, got warmup={warmup}, horizon={horizon}"
                )));
            }
        }
        if let Some(sweep) = &self.sweep {
            if let Some(step) = sweep.grid_step {
                if !(step > 0.0 && step <= 0.1) {
                    return Err(Error::Schema(format!("sweep.grid_step must lie in (0, 0.1], got {step}")));
                }
            }
        }

        Ok(Scenario {
            channel,
            q1: self.protocol.q1,
            q2: self.protocol.q2,
            battery: self.battery,
        })
    }

    // -- effective settings with defaults applied --

    pub fn sim_horizon(&self) -> u64 {
        self.simulation.as_ref().and_then(|s| s.horizon).unwrap_or(DEFAULT_HORIZON)
    }

    pub fn sim_warmup(&self) -> u64 {
        self.simulation.as_ref().and_then(|s| s.warmup).unwrap_or(DEFAULT_WARMUP)
    }

    /// Seed from the file, if any; callers layer CLI and environment
    /// overrides on top.
    pub fn sim_seed(&self) -> Option<u64> {
        self.simulation.as_ref().and_then(|s| s.seed)
    }

    pub fn grid_step(&self) -> f64 {
        self.sweep.as_ref().and_then(|s| s.grid_step).unwrap_or(DEFAULT_GRID_STEP)
    }
}

// ----------------------------------------------------------------------------
