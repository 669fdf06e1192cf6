//! Seeded slot-level simulation of the exact coupled process: transmitter
//! activity, channel outcomes, battery level, actuation decisions, and both
//! age sample paths.
//!
//! Reproducibility contract: every slot consumes exactly four uniform draws
//! in a fixed order (tx1 activity, tx2 activity, data channel, energy
//! channel) regardless of which branches are taken, so equal seeds give
//! bit-identical runs and common random numbers can be shared across
//! (q1, q2) comparisons.  The channel is sampled at the event level with
//! the closed-form success probabilities; fading-level sampling lives in
//! the oracle module.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::BatterySpec;
use crate::channel::SuccessProbs;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Number of batches used for batch-means standard errors.  The per-slot
/// series are strongly autocorrelated (battery level and ages persist
/// across slots), so naive i.i.d. standard errors would be far too small.
const BATCHES: usize = 100;

// ----------------------------------------------------------------------------
// state and single-slot dynamics

/// Full simulation state after some number of slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimState {
    /// Energy packets in the battery, `B(t)`.
    pub battery: u64,
    /// Age of information in slots, `I(t)`; at least 1.
    pub aoi: u64,
    /// Age of actuation in slots, `A(t)`; at least 1.
    pub aoa: u64,
    /// Slot index `t`.
    pub slot: u64,
    /// Slot of the last actuation, if any has occurred.
    pub last_actuation: Option<u64>,
}

impl SimState {
    /// Cold start: empty battery, both ages 1, clock at 0.
    pub fn initial() -> SimState {
        SimState { battery: 0, aoi: 1, aoa: 1, slot: 0, last_actuation: None }
    }
}

/// What happened within one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub tx1_active: bool,
    pub tx2_active: bool,
    pub data_ok: bool,
    pub energy_ok: bool,
    pub actuated: bool,
}

/// Advance the state by one slot, deterministically in the four uniform
/// draws (order: tx1 activity, tx2 activity, data channel, energy channel).
///
/// Actuation happens when data arrives and the battery holds a packet, or
/// when data and energy arrive together into an empty battery (the fresh
/// packet is consumed on the spot).  The battery then moves by the net of
/// harvest and consumption, clamped to [0, m] for finite capacity — so a
/// full battery stays full under simultaneous harvest-and-consume.
pub fn step(
    state: &SimState,
    sp: &SuccessProbs,
    q1: f64,
    q2: f64,
    spec: &BatterySpec,
    draws: [f64; 4],
) -> (SimState, SlotOutcome) {
    let tx1_active = draws[0] < q1;
    let tx2_active = draws[1] < q2;

    let p_data = match (tx1_active, tx2_active) {
        (true, true) => sp.p_d12,
        (true, false) => sp.p_d1,
        _ => 0.0,
    };
    let p_energy = match (tx1_active, tx2_active) {
        (true, true) => sp.p_e12,
        (false, true) => sp.p_e2,
        _ => 0.0,
    };
    let data_ok = tx1_active && draws[2] < p_data;
    let energy_ok = tx2_active && draws[3] < p_energy;

    let actuated = data_ok && (state.battery > 0 || energy_ok);

    let cap = match spec {
        BatterySpec::Infinite => u64::MAX,
        BatterySpec::Finite(m) => *m as u64,
    };
    let delta = i64::from(energy_ok) - i64::from(actuated);
    let battery = ((state.battery as i64 + delta).max(0) as u64).min(cap);

    let next = SimState {
        battery,
        aoi: if data_ok { 1 } else { state.aoi + 1 },
        aoa: if actuated { 1 } else { state.aoa + 1 },
        slot: state.slot + 1,
        last_actuation: if actuated { Some(state.slot) } else { state.last_actuation },
    };
    let outcome = SlotOutcome { tx1_active, tx2_active, data_ok, energy_ok, actuated };
    (next, outcome)
}

// ----------------------------------------------------------------------------
// whole-run simulation

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// Total slots simulated.
    pub horizon: u64,
    /// Leading slots excluded from statistics.
    pub warmup: u64,
    pub seed: u64,
    /// Record a per-slot trace (one record per simulated slot).
    pub trace: bool,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        if self.warmup >= self.horizon {
            return Err(Error::invalid(
                "warmup",
                format!("must be smaller than horizon ({} >= {})", self.warmup, self.horizon),
            ));
        }
        Ok(())
    }
}

/// One per-slot trace record: the slot's events plus the state right after
/// the slot resolved (so `aoa` reads 1 on actuation rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub slot: u64,
    pub tx1_active: bool,
    pub tx2_active: bool,
    pub data_ok: bool,
    pub energy_ok: bool,
    pub battery: u64,
    pub aoi: u64,
    pub aoa: u64,
    pub actuated: bool,
}

/// Empirical statistics over the counted (post-warmup) slots.
///
/// Ages are sampled after each slot resolves; the battery is sampled as the
/// slot begins (the level the actuation gate actually saw).  Standard
/// errors come from 100 batch means and are `None` when the run is too
/// short to form meaningful batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mean_aoi: f64,
    pub mean_aoa: f64,
    /// Fraction of counted slots with an actuation.
    pub actuation_rate: f64,
    /// Fraction of counted slots that began with an empty battery.
    pub p_empty_hat: f64,
    pub mean_aoi_se: Option<f64>,
    pub mean_aoa_se: Option<f64>,
    pub actuation_rate_se: Option<f64>,
    pub p_empty_se: Option<f64>,
    /// Battery level at slot start → frequency.
    pub occupancy_hist: BTreeMap<u64, f64>,
    /// Age value → frequency.
    pub aoi_hist: BTreeMap<u64, f64>,
    pub aoa_hist: BTreeMap<u64, f64>,
    pub slots_counted: u64,
    pub actuations: u64,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    #[serde(skip)]
    pub trace: Option<Vec<TraceRecord>>,
}

/// Batch-means accumulator for one per-slot series.
struct BatchAcc {
    sums: [f64; BATCHES],
    counts: [u64; BATCHES],
    batch_len: u64,
}

impl BatchAcc {
    fn new(total: u64) -> Option<BatchAcc> {
        let batch_len = total / BATCHES as u64;
        if batch_len < 2 {
            return None;
        }
        Some(BatchAcc { sums: [0.0; BATCHES], counts: [0; BATCHES], batch_len })
    }

    fn push(&mut self, idx: u64, value: f64) {
        let b = ((idx / self.batch_len) as usize).min(BATCHES - 1);
        self.sums[b] += value;
        self.counts[b] += 1;
    }

    fn std_error(&self) -> f64 {
        let means: Vec<f64> = (0..BATCHES).map(|b| self.sums[b] / self.counts[b] as f64).collect();
        let center = means.iter().sum::<f64>() / BATCHES as f64;
        let var = means.iter().map(|m| (m - center) * (m - center)).sum::<f64>() / (BATCHES - 1) as f64;
        (var / BATCHES as f64).sqrt()
    }
}

/// Run the slot process and collect statistics.
///
/// Starts from the cold-start state (empty battery, both ages 1); identical
/// `(scenario, horizon, warmup, seed)` produce bit-identical reports.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let sp = cfg.scenario.channel.success_probs();
    let q1 = cfg.scenario.q1;
    let q2 = cfg.scenario.q2;
    let spec = cfg.scenario.battery;
    let counted_total = cfg.horizon - cfg.warmup;

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut state = SimState::initial();
    let mut trace = if cfg.trace { Some(Vec::with_capacity(cfg.horizon as usize)) } else { None };

    let mut sum_aoi = 0.0f64;
    let mut sum_aoa = 0.0f64;
    let mut actuations = 0u64;
    let mut empty_slots = 0u64;
    let mut occupancy: BTreeMap<u64, u64> = BTreeMap::new();
    let mut aoi_counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut aoa_counts: BTreeMap<u64, u64> = BTreeMap::new();

    let mut acc_aoi = BatchAcc::new(counted_total);
    let mut acc_aoa = BatchAcc::new(counted_total);
    let mut acc_act = BatchAcc::new(counted_total);
    let mut acc_empty = BatchAcc::new(counted_total);

    for t in 0..cfg.horizon {
        let battery_at_start = state.battery;
        let draws = [rng.random(), rng.random(), rng.random(), rng.random()];
        let (next, outcome) = step(&state, &sp, q1, q2, &spec, draws);

        if t >= cfg.warmup {
            let idx = t - cfg.warmup;
            sum_aoi += next.aoi as f64;
            sum_aoa += next.aoa as f64;
            actuations += u64::from(outcome.actuated);
            empty_slots += u64::from(battery_at_start == 0);
            *occupancy.entry(battery_at_start).or_insert(0) += 1;
            *aoi_counts.entry(next.aoi).or_insert(0) += 1;
            *aoa_counts.entry(next.aoa).or_insert(0) += 1;
            if let Some(acc) = acc_aoi.as_mut() {
                acc.push(idx, next.aoi as f64);
            }
            if let Some(acc) = acc_aoa.as_mut() {
                acc.push(idx, next.aoa as f64);
            }
            if let Some(acc) = acc_act.as_mut() {
                acc.push(idx, f64::from(outcome.actuated));
            }
            if let Some(acc) = acc_empty.as_mut() {
                acc.push(idx, f64::from(battery_at_start == 0));
            }
        }
        if let Some(records) = trace.as_mut() {
            records.push(TraceRecord {
                slot: t,
                tx1_active: outcome.tx1_active,
                tx2_active: outcome.tx2_active,
                data_ok: outcome.data_ok,
                energy_ok: outcome.energy_ok,
                battery: next.battery,
                aoi: next.aoi,
                aoa: next.aoa,
                actuated: outcome.actuated,
            });
        }
        state = next;
    }

    let n = counted_total as f64;
    let normalize = |counts: BTreeMap<u64, u64>| -> BTreeMap<u64, f64> {
        counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
    };

    Ok(SimReport {
        mean_aoi: sum_aoi / n,
        mean_aoa: sum_aoa / n,
        actuation_rate: actuations as f64 / n,
        p_empty_hat: empty_slots as f64 / n,
        mean_aoi_se: acc_aoi.map(|a| a.std_error()),
        mean_aoa_se: acc_aoa.map(|a| a.std_error()),
        actuation_rate_se: acc_act.map(|a| a.std_error()),
        p_empty_se: acc_empty.map(|a| a.std_error()),
        occupancy_hist: normalize(occupancy),
        aoi_hist: normalize(aoi_counts),
        aoa_hist: normalize(aoa_counts),
        slots_counted: counted_total,
        actuations,
        horizon: cfg.horizon,
        warmup: cfg.warmup,
        seed: cfg.seed,
        trace,
    })
}

/// Combine reports from independent runs (distinct seeds) by count-weighted
/// averaging.  Standard errors combine as for a weighted mean of
/// independent estimates; the merged report carries the first run's seed
/// and no trace.
pub fn merge_reports(reports: &[SimReport]) -> Result<SimReport> {
    if reports.is_empty() {
        return Err(Error::invalid("reports", "cannot merge zero reports"));
    }
    let total: u64 = reports.iter().map(|r| r.slots_counted).sum();
    let tf = total as f64;

    let wmean = |f: &dyn Fn(&SimReport) -> f64| -> f64 {
        reports.iter().map(|r| f(r) * r.slots_counted as f64).sum::<f64>() / tf
    };
    let wse = |f: &dyn Fn(&SimReport) -> Option<f64>| -> Option<f64> {
        let mut acc = 0.0;
        for r in reports {
            let w = r.slots_counted as f64 / tf;
            acc += (w * f(r)?).powi(2);
        }
        Some(acc.sqrt())
    };
    let whist = |f: &dyn Fn(&SimReport) -> &BTreeMap<u64, f64>| -> BTreeMap<u64, f64> {
        let mut merged: BTreeMap<u64, f64> = BTreeMap::new();
        for r in reports {
            let w = r.slots_counted as f64 / tf;
            for (&k, &v) in f(r) {
                *merged.entry(k).or_insert(0.0) += w * v;
            }
        }
        merged
    };

    Ok(SimReport {
        mean_aoi: wmean(&|r| r.mean_aoi),
        mean_aoa: wmean(&|r| r.mean_aoa),
        actuation_rate: wmean(&|r| r.actuation_rate),
        p_empty_hat: wmean(&|r| r.p_empty_hat),
        mean_aoi_se: wse(&|r| r.mean_aoi_se),
        mean_aoa_se: wse(&|r| r.mean_aoa_se),
        actuation_rate_se: wse(&|r| r.actuation_rate_se),
        p_empty_se: wse(&|r| r.p_empty_se),
        occupancy_hist: whist(&|r| &r.occupancy_hist),
        aoi_hist: whist(&|r| &r.aoi_hist),
        aoa_hist: whist(&|r| &r.aoa_hist),
        slots_counted: total,
        actuations: reports.iter().map(|r| r.actuations).sum(),
        horizon: reports.iter().map(|r| r.horizon).sum(),
        warmup: reports.iter().map(|r| r.warmup).sum(),
        seed: reports[0].seed,
        trace: None,
    })
}

// ----------------------------------------------------------------------------
// renewal-cycle statistics

/// Moments of the inter-actuation intervals and the time-average age they
/// imply through the renewal-reward identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub cycles: usize,
    pub mean_cycle: f64,
    pub second_moment: f64,
    /// `E[T(T+1)] / (2 E[T])` over complete cycles T — what the sawtooth
    /// age process actually averages to, free of any geometric assumption.
    pub implied_time_avg_age: f64,
}

/// Estimate cycle statistics from a per-slot actuation indicator sequence.
/// Only complete cycles (between consecutive actuations) are used; at least
/// 100 are required for the moments to mean anything.
pub fn estimate_cycle_stats(actuated: &[bool]) -> Result<CycleStats> {
    const REQUIRED: usize = 100;
    let mut last: Option<usize> = None;
    let mut count = 0usize;
    let mut sum_t = 0.0f64;
    let mut sum_t2 = 0.0f64;
    let mut sum_tt1 = 0.0f64;
    for (i, &a) in actuated.iter().enumerate() {
        if !a {
            continue;
        }
        if let Some(prev) = last {
            let t = (i - prev) as f64;
            count += 1;
            sum_t += t;
            sum_t2 += t * t;
            sum_tt1 += t * (t + 1.0);
        }
        last = Some(i);
    }
    if count < REQUIRED {
        return Err(Error::InsufficientActuations { found: count, required: REQUIRED });
    }
    Ok(CycleStats {
        cycles: count,
        mean_cycle: sum_t / count as f64,
        second_moment: sum_t2 / count as f64,
        implied_time_avg_age: sum_tt1 / (2.0 * sum_t),
    })
}

// ----------------------------------------------------------------------------
// trace serialization

/// Write trace records as CSV with the canonical header; booleans are 0/1.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "slot,tx1_active,tx2_active,data_ok,energy_ok,battery,aoi,aoa,actuated")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.slot,
            u8::from(r.tx1_active),
            u8::from(r.tx2_active),
            u8::from(r.data_ok),
            u8::from(r.energy_ok),
            r.battery,
            r.aoi,
            r.aoa,
            u8::from(r.actuated),
        )?;
    }
    Ok(())
}

// ----------------------------------------------------------------------------
