//! Analysis and simulation of timeliness in a two-transmitter status-update
//! link where the monitor both decodes updates and harvests the energy it
//! needs to act on them.
//!
//! One transmitter sends status updates; the other sends power.  The monitor
//! splits the received signal between decoding and harvesting, banks
//! harvested packets in a battery, and spends one packet per actuation.
//! Freshness is tracked by two ages: time since the newest delivered update
//! was generated, and time since the monitor last acted on one.
//!
//! What lives where:
//!
//! - [`channel`]: Rayleigh-fading success probabilities for data and energy
//!   reception, and the per-slot joint outcome distribution under random
//!   transmitter activation.
//! - [`analytics`]: battery steady state (finite or infinite capacity),
//!   closed-form average ages, and age distributions.
//! - [`optimizer`]: best activation probabilities for either age metric —
//!   closed-form case analysis backed by grid search, plus gradients and
//!   full sweep grids.
//! - [`simulator`]: seeded slot-level simulation of the exact coupled
//!   process, with batch-means error bars and per-slot traces.
//! - [`oracles`]: independent cross-checks (fading-level Monte Carlo,
//!   linear-algebra steady states) and end-to-end validation reports.
//! - [`scenario`]: the JSON scenario schema shared by the CLI and library.
//! - [`units`]: dBm/dB conversions and JSON handling for infinities.

pub mod analytics;
pub mod channel;
pub mod error;
pub mod optimizer;
pub mod oracles;
pub mod scenario;
pub mod simulator;
pub mod units;

pub use analytics::{
    age_pmf, avg_aoa, avg_aoi, battery_steady_state, regime, AgeMetrics, BatterySpec,
    BatterySteadyState, Regime,
};
pub use channel::{
    link_gain, outcome_distribution, ChannelConfig, LinkParams, OutcomeDistribution, SuccessProbs,
};
pub use error::{Error, Result};
pub use optimizer::{
    aoa_critical_points, gradient_aoa2, gradient_aoi, optimize_aoa_finite, optimize_aoa_infinite,
    optimize_aoi, sweep, CriticalPoints, CriticalValue, OptFlag, OptMethod, OptimumReport,
    SweepGrid,
};
pub use oracles::{
    mc_channel, stationary_solve, synthetic_geometric_trace, validate_scenario, ChannelEstimates,
    Estimate, OracleReport,
};
pub use scenario::{AnalysisReport, Scenario, ScenarioFile};
pub use simulator::{
    estimate_cycle_stats, merge_reports, simulate, step, write_trace_csv, CycleStats, SimConfig,
    SimReport, SimState, SlotOutcome, TraceRecord,
};
pub use units::{db_to_linear, dbm_to_watts, fmt_sig, round_half_up, Power, Threshold};
