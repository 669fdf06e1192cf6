//! Closed-form steady-state quantities for the update/actuation system:
//! battery occupancy, regime classification, average ages, and the
//! geometric age distributions.
//!
//! The battery is a discrete-time birth-death chain: one energy packet
//! arrives per slot with probability `p_nde` (harvest without a data
//! delivery) and one departs with probability `p_dne` (actuation without a
//! simultaneous harvest); the two remaining outcomes leave the level
//! unchanged.  All formulas below are driven by the ratio of those two
//! probabilities, compared — never divided — when only the regime matters.

use serde::{Deserialize, Serialize};

use crate::channel::OutcomeDistribution;
use crate::error::{Error, Result};

/// Battery capacity: unbounded, or a finite number of energy packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatterySpec {
    Infinite,
    /// Capacity in energy packets; must be at least 1.
    Finite(u32),
}

/// Whether energy arrivals keep up with potential consumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Arrivals are slower than consumptions; the battery empties with
    /// positive probability.
    EnergyLimited,
    /// The battery (if unbounded) never empties in steady state —
    /// effectively a grid-powered receiver.
    EnergyUnlimited,
}

/// Steady-state battery occupancy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySteadyState {
    /// Probability the battery is empty.
    pub p_empty: f64,
    /// Complement of `p_empty`.
    pub p_nonempty: f64,
    /// Full occupancy pmf over {0..m}; present only for finite capacity.
    pub pmf: Option<Vec<f64>>,
    pub regime: Regime,
    /// Set when the chain has neither arrivals nor departures, so the
    /// battery is stuck at its initial level (taken to be 0).
    pub frozen: bool,
}

/// Average ages in slots; `f64::INFINITY` is a legal value (for instance
/// when the data source never transmits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeMetrics {
    #[serde(with = "crate::units::json_real")]
    pub avg_aoi: f64,
    #[serde(with = "crate::units::json_real")]
    pub avg_aoa: f64,
}

impl AgeMetrics {
    pub fn compute(out: &OutcomeDistribution, spec: &BatterySpec) -> AgeMetrics {
        AgeMetrics { avg_aoi: avg_aoi(out), avg_aoa: avg_aoa(out, spec) }
    }
}

// ----------------------------------------------------------------------------

/// Classify the energy regime by comparing the battery's birth and death
/// probabilities directly (no division, so `p_dne = 0` is harmless).
pub fn regime(out: &OutcomeDistribution) -> Regime {
    if out.p_nde >= out.p_dne {
        Regime::EnergyUnlimited
    } else {
        Regime::EnergyLimited
    }
}

/// Steady-state occupancy of the battery birth-death chain.
///
/// Infinite capacity: the empty probability is `max(0, 1 - r)` with
/// `r = p_nde / p_dne`.  Finite capacity m: the stationary pmf is
/// geometric, `pi_k ∝ r^k`; it is computed from weights scaled by the
/// largest term so that `r > 1` (even astronomically large) cannot
/// overflow, and `r = 1` falls out as the uniform pmf without a special
/// case.  A chain with neither arrivals nor departures stays at the
/// initial level 0 and is reported with the `frozen` flag.
pub fn battery_steady_state(out: &OutcomeDistribution, spec: &BatterySpec) -> BatterySteadyState {
    let up = out.p_nde;
    let down = out.p_dne;
    let frozen = up == 0.0 && down == 0.0;
    let regime = regime(out);

    let (p_empty, pmf) = match *spec {
        BatterySpec::Infinite => {
            let p_empty = if frozen {
                1.0
            } else if up >= down {
                0.0
            } else {
                1.0 - up / down
            };
            (p_empty, None)
        }
        BatterySpec::Finite(m) => {
            assert!(m >= 1, "finite battery capacity must be at least 1");
            let n = m as usize;
            let mut w = vec![0.0f64; n + 1];
            if frozen {
                w[0] = 1.0;
            } else if down == 0.0 {
                // arrivals only: the chain is absorbed at full capacity
                w[n] = 1.0;
            } else if up <= down {
                let r = up / down;
                w[0] = 1.0;
                for k in 1..=n {
                    w[k] = w[k - 1] * r;
                }
            } else {
                // descending powers of the reciprocal keep every weight <= 1
                let s = down / up;
                w[n] = 1.0;
                for k in (0..n).rev() {
                    w[k] = w[k + 1] * s;
                }
            }
            let total: f64 = w.iter().sum();
            for v in w.iter_mut() {
                *v /= total;
            }
            (w[0], Some(w))
        }
    };

    BatterySteadyState { p_empty, p_nonempty: 1.0 - p_empty, pmf, regime, frozen }
}

/// Average age of information: `1 / p_d`, infinite when data never gets
/// through.
pub fn avg_aoi(out: &OutcomeDistribution) -> f64 {
    if out.p_d > 0.0 {
        1.0 / out.p_d
    } else {
        f64::INFINITY
    }
}

/// Average age of actuation.
///
/// An actuation happens when data arrives and the battery is non-empty, or
/// when data and energy arrive together into an empty battery, so the
/// per-slot reset probability is `p_d * p_nonempty + p_de * p_empty` and
/// the average age is its reciprocal.  In the energy-unlimited regime the
/// empty probability is zero and this reduces to the average AoI exactly.
pub fn avg_aoa(out: &OutcomeDistribution, spec: &BatterySpec) -> f64 {
    let ss = battery_steady_state(out, spec);
    let reset = out.p_d * ss.p_nonempty + out.p_de * ss.p_empty;
    if reset > 0.0 {
        1.0 / reset
    } else {
        f64::INFINITY
    }
}

/// Stationary age distribution under a constant per-slot reset
/// probability: `P(age = k) = p (1-p)^(k-1)` for `k >= 1`.
pub fn age_pmf(reset_prob: f64, k: u64) -> Result<f64> {
    if reset_prob == 0.0 {
        return Err(Error::NoResets);
    }
    if !(0.0..=1.0).contains(&reset_prob) || !reset_prob.is_finite() {
        return Err(Error::invalid("reset_prob", format!("must lie in [0, 1], got {reset_prob}")));
    }
    assert!(k >= 1, "ages start at 1");
    Ok(reset_prob * (1.0 - reset_prob).powf((k - 1) as f64))
}

// ----------------------------------------------------------------------------

#[cfg(test)]
#[allow(clippy::excessive_precision)] // frozen reference values keep all 17 digits
mod tests {
    use super::*;
    use crate::channel::{outcome_distribution, SuccessProbs};

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Unrounded reference probabilities for the two benchmark setups.
    fn sp_far() -> SuccessProbs {
        SuccessProbs::new(0.99999990000000505, 0.61538152300738325, 0.20189651799465538, 0.23266318446132639)
            .unwrap()
    }

    fn sp_near() -> SuccessProbs {
        SuccessProbs::new(0.99999990000000505, 0.33609789612384572, 0.60275166475009523, 0.62839855970887737)
            .unwrap()
    }

    #[test]
    fn infinite_battery_reference() {
        let out = outcome_distribution(&sp_far(), 1.0, 1.0);
        let ss = battery_steady_state(&out, &BatterySpec::Infinite);
        assert_eq!(ss.regime, Regime::EnergyLimited);
        assert!(!ss.frozen);
        assert!(ss.pmf.is_none());
        assert!(approx_eq(ss.p_empty, 0.81049209781648168, 1e-12));
        assert!(approx_eq(ss.p_empty + ss.p_nonempty, 1.0, 1e-15));

        let out = outcome_distribution(&sp_near(), 1.0, 1.0);
        let ss = battery_steady_state(&out, &BatterySpec::Infinite);
        assert_eq!(ss.regime, Regime::EnergyUnlimited);
        assert_eq!(ss.p_empty, 0.0);
        assert_eq!(ss.p_nonempty, 1.0);
    }

    #[test]
    fn infinite_battery_from_two_decimal_inputs() {
        // the same computation fed with 2-decimal rounded success
        // probabilities lands noticeably higher: steady state is sensitive
        // to rounding of the inputs
        let out = OutcomeDistribution {
            p_de: 0.62 * 0.23,
            p_dne: 0.62 * 0.77,
            p_nde: 0.38 * 0.23,
            p_ndne: 0.38 * 0.77,
            p_d: 0.62,
            p_e: 0.23,
        };
        let ss = battery_steady_state(&out, &BatterySpec::Infinite);
        assert!(approx_eq(ss.p_empty, 0.8169250104733976, 1e-12));
    }

    #[test]
    fn finite_battery_small_cases() {
        // r = 0.5, m = 2: weights [1, 1/2, 1/4] -> pmf [4/7, 2/7, 1/7]
        let out = OutcomeDistribution::from_joints(0.05, 0.4, 0.2, 0.35).unwrap();
        let ss = battery_steady_state(&out, &BatterySpec::Finite(2));
        let pmf = ss.pmf.as_ref().unwrap();
        assert!(approx_eq(pmf[0], 4.0 / 7.0, 1e-15));
        assert!(approx_eq(pmf[1], 2.0 / 7.0, 1e-15));
        assert!(approx_eq(pmf[2], 1.0 / 7.0, 1e-15));
        assert_eq!(ss.p_empty, pmf[0]);

        // r = 2: mirrored pmf
        let out = OutcomeDistribution::from_joints(0.05, 0.2, 0.4, 0.35).unwrap();
        let ss = battery_steady_state(&out, &BatterySpec::Finite(2));
        let pmf = ss.pmf.as_ref().unwrap();
        assert!(approx_eq(pmf[0], 1.0 / 7.0, 1e-15));
        assert!(approx_eq(pmf[2], 4.0 / 7.0, 1e-15));
        assert_eq!(ss.regime, Regime::EnergyUnlimited);

        // r = 1: uniform limit, no special-casing needed
        let out = OutcomeDistribution::from_joints(0.1, 0.3, 0.3, 0.3).unwrap();
        let ss = battery_steady_state(&out, &BatterySpec::Finite(4));
        for &v in ss.pmf.as_ref().unwrap() {
            assert!(approx_eq(v, 0.2, 1e-15));
        }
    }

    #[test]
    fn degenerate_chains() {
        // frozen: no arrivals, no departures -> stuck at the initial level 0
        let out = OutcomeDistribution::from_joints(0.5, 0.0, 0.0, 0.5).unwrap();
        for spec in [BatterySpec::Infinite, BatterySpec::Finite(3)] {
            let ss = battery_steady_state(&out, &spec);
            assert!(ss.frozen);
            assert_eq!(ss.p_empty, 1.0);
        }
        // arrivals only -> finite battery pinned at capacity
        let out = OutcomeDistribution::from_joints(0.0, 0.0, 0.4, 0.6).unwrap();
        let ss = battery_steady_state(&out, &BatterySpec::Finite(3));
        assert_eq!(ss.pmf.as_ref().unwrap()[3], 1.0);
        assert_eq!(ss.p_empty, 0.0);
        assert!(!ss.frozen);
    }

    #[test]
    fn finite_converges_to_infinite() {
        // r = 0.9: the m -> infinity limit is approached monotonically
        let out = OutcomeDistribution::from_joints(0.05, 0.4, 0.36, 0.19).unwrap();
        let inf = battery_steady_state(&out, &BatterySpec::Infinite).p_empty;
        let mut prev = f64::INFINITY;
        for m in [1u32, 2, 5, 10, 50] {
            let fin = battery_steady_state(&out, &BatterySpec::Finite(m)).p_empty;
            assert!(fin <= prev, "not monotone at m={m}");
            assert!(fin >= inf - 1e-15, "crossed the limit at m={m}");
            prev = fin;
        }
        let fin = battery_steady_state(&out, &BatterySpec::Finite(1000)).p_empty;
        assert!((fin - inf).abs() / inf < 1e-6);
    }

    #[test]
    fn huge_ratio_is_stable() {
        // r is astronomically large; naive r^k would overflow
        let out = OutcomeDistribution::from_joints(0.0, 1e-300, 0.9, 0.1 - 1e-300).unwrap();
        let ss = battery_steady_state(&out, &BatterySpec::Finite(100));
        let pmf = ss.pmf.as_ref().unwrap();
        assert!(pmf.iter().all(|v| v.is_finite()));
        assert!(approx_eq(pmf.iter().sum::<f64>(), 1.0, 1e-12));
        assert!(approx_eq(pmf[100], 1.0, 1e-12));
    }

    #[test]
    fn average_ages_reference() {
        let out = outcome_distribution(&sp_far(), 1.0, 1.0);
        let ages = AgeMetrics::compute(&out, &BatterySpec::Infinite);
        assert!(approx_eq(ages.avg_aoi, 1.6250081658496629, 1e-12));
        assert!(approx_eq(ages.avg_aoa, 4.2980585962289251, 1e-12));
        let ages = AgeMetrics::compute(&out, &BatterySpec::Finite(1));
        assert!(approx_eq(ages.avg_aoa, 4.5786178057642291, 1e-12));

        let out = outcome_distribution(&sp_near(), 1.0, 1.0);
        let ages = AgeMetrics::compute(&out, &BatterySpec::Infinite);
        assert!(approx_eq(ages.avg_aoi, 2.9753235933125834, 1e-12));
        // energy-unlimited: AoA coincides with AoI bit for bit
        assert_eq!(ages.avg_aoa, ages.avg_aoi);
        let ages = AgeMetrics::compute(&out, &BatterySpec::Finite(1));
        assert!(approx_eq(ages.avg_aoa, 3.2539065766457882, 1e-12));
    }

    #[test]
    fn aoa_dominates_aoi() {
        let sp = sp_far();
        for &q1 in &[0.0, 0.2, 0.7, 1.0] {
            for &q2 in &[0.0, 0.4, 0.9, 1.0] {
                let out = outcome_distribution(&sp, q1, q2);
                for spec in [BatterySpec::Infinite, BatterySpec::Finite(2)] {
                    let ages = AgeMetrics::compute(&out, &spec);
                    assert!(ages.avg_aoa >= ages.avg_aoi, "violated at ({q1},{q2},{spec:?})");
                    if regime(&out) == Regime::EnergyUnlimited && spec == BatterySpec::Infinite {
                        assert_eq!(ages.avg_aoa, ages.avg_aoi);
                    }
                }
            }
        }
    }

    #[test]
    fn infinite_ages_at_dead_corners() {
        let sp = sp_far();
        let out = outcome_distribution(&sp, 0.0, 0.5);
        assert_eq!(avg_aoi(&out), f64::INFINITY);
        assert_eq!(avg_aoa(&out, &BatterySpec::Infinite), f64::INFINITY);
        // data without energy: AoI finite, AoA infinite
        let out = outcome_distribution(&sp, 1.0, 0.0);
        assert!(avg_aoi(&out).is_finite());
        assert_eq!(avg_aoa(&out, &BatterySpec::Infinite), f64::INFINITY);
    }

    #[test]
    fn regime_classification() {
        let sp = sp_far();
        let out = outcome_distribution(&sp, 0.0, 0.5);
        assert_eq!(regime(&out), Regime::EnergyUnlimited); // no departures
        let out = outcome_distribution(&sp, 1.0, 0.0);
        assert_eq!(regime(&out), Regime::EnergyLimited); // no arrivals
        assert_eq!(battery_steady_state(&out, &BatterySpec::Infinite).p_empty, 1.0);
    }

    #[test]
    fn geometric_age_pmf() {
        assert_eq!(age_pmf(1.0, 1).unwrap(), 1.0);
        assert!(approx_eq(age_pmf(0.5, 3).unwrap(), 0.125, 1e-15));
        assert!(matches!(age_pmf(0.0, 5), Err(Error::NoResets)));

        // normalization and mean for a representative reset probability
        let p = 0.3;
        let mut total = 0.0;
        let mut mean = 0.0;
        for k in 1..=400u64 {
            let v = age_pmf(p, k).unwrap();
            total += v;
            mean += k as f64 * v;
        }
        assert!(approx_eq(total, 1.0, 1e-12));
        assert!(approx_eq(mean, 1.0 / p, 1e-9));
    }
}
