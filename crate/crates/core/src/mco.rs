//! Sequential myopic co-optimization over a horizon.
//!
//! Each interval clips the storage limits to what the current SoC allows,
//! applies the threshold rule for that interval only and steps the SoC.
//! No forecast of future renewables is needed.

use std::io::Write;

use serde::Serialize;

use crate::demand::DeviceFleet;
use crate::policy::{Decision, StagePolicy};
use crate::storage::{BatteryState, ClippedLimits};
use crate::tariff::TariffInterval;
use crate::{Instance, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub t: usize,
    pub g: f64,
    pub d: Vec<f64>,
    pub e: f64,
    pub z: f64,
    pub soc_after: f64,
    pub stage_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial_soc: f64,
    pub records: Vec<StageRecord>,
    /// `salvage * (s_T - s_0)`.
    pub terminal_salvage: f64,
    pub cumulative_reward: f64,
}

impl Trajectory {
    pub fn final_soc(&self) -> f64 {
        self.records.last().map_or(self.initial_soc, |r| r.soc_after)
    }

    pub fn net_consumption(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.z)
    }

    /// One row per stage: `t, g, d_1..d_K, e, z, soc, stage_reward`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = self.records.first().map_or(0, |r| r.d.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "g".to_string()];
        header.extend((1..=k).map(|i| format!("d_{i}")));
        header.extend(["e", "z", "soc", "stage_reward"].map(String::from));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.t.to_string(), r.g.to_string()];
            row.extend(r.d.iter().map(|x| x.to_string()));
            row.extend([r.e, r.z, r.soc_after, r.stage_reward].map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Surplus of a decision, less the optional throughput cost `rate * |e|`.
///
/// The throughput cost is experimental and charged on the metered side.
pub fn stage_reward(
    tariff: &TariffInterval,
    fleet: &DeviceFleet,
    decision: &Decision,
    g: f64,
    degradation_cost: f64,
) -> Result<f64> {
    let surplus = tariff.surplus(fleet, &decision.d, decision.e, g)?;
    Ok(surplus - degradation_cost * decision.e.abs())
}

/// What a causal stage rule sees when it decides.
#[derive(Debug, Clone, Copy)]
pub struct StageContext<'a> {
    pub t: usize,
    pub fleet: &'a DeviceFleet,
    pub tariff: &'a TariffInterval,
    pub state: BatteryState,
    pub limits: ClippedLimits,
    pub g: f64,
}

/// Runs a causal stage rule along a renewable path and does the
/// bookkeeping: clipping, SoC steps, rewards and terminal salvage.
pub fn run_policy<F>(inst: &Instance, g: &[f64], mut rule: F) -> Result<Trajectory>
where
    F: FnMut(&StageContext<'_>) -> Result<Decision>,
{
    inst.validate()?;
    inst.check_path(g)?;
    let spec = &inst.battery;
    let mut state = BatteryState::new(inst.initial_soc);
    let mut records = Vec::with_capacity(g.len());
    let mut total = 0.0;
    for (t, &gt) in g.iter().enumerate() {
        let ctx = StageContext {
            t,
            fleet: inst.fleet.at(t),
            tariff: inst.tariff.at(t),
            state,
            limits: spec.clip_limits(state),
            g: gt,
        };
        let decision = rule(&ctx)?;
        state = spec.step_soc(state, decision.e)?;
        let reward = stage_reward(ctx.tariff, ctx.fleet, &decision, gt, inst.degradation_cost)?;
        total += reward;
        records.push(StageRecord {
            t,
            g: gt,
            d: decision.d,
            e: decision.e,
            z: decision.z,
            soc_after: state.soc,
            stage_reward: reward,
        });
    }
    let terminal_salvage = spec.salvage * (state.soc - inst.initial_soc);
    Ok(Trajectory {
        initial_soc: inst.initial_soc,
        records,
        terminal_salvage,
        cumulative_reward: total + terminal_salvage,
    })
}

/// Myopic co-optimization. The salvage-rate regime is classified once for
/// the whole schedule; outside the sandwich the relaxed rule is used.
pub fn run_mco(inst: &Instance, g: &[f64]) -> Result<Trajectory> {
    let policy = StagePolicy::for_schedule(&inst.battery, &inst.tariff);
    run_policy(inst, g, |c| {
        policy.decide(c.fleet, c.tariff, &inst.battery, c.limits, c.g)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::Device;
    use crate::policy::decide;
    use crate::storage::{A1Case, BatterySpec};
    use crate::tariff::TariffSchedule;
    use crate::FleetSchedule;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn instance(horizon: usize, capacity: f64, s0: f64, salvage: f64) -> Instance {
        Instance::new(
            TariffSchedule::constant(TariffInterval::new(0.4, 0.1).unwrap(), horizon).unwrap(),
            FleetSchedule::Stationary(DeviceFleet::new(vec![Device::quadratic(2.0, 1.0, 2.0).unwrap()])),
            BatterySpec::lossless(capacity, 0.5, salvage).unwrap(),
            s0,
        )
        .unwrap()
    }

    #[test]
    fn single_stage_example() {
        let inst = instance(1, 10.0, 5.0, 0.2);
        let tr = run_mco(&inst, &[0.0]).unwrap();
        let r = &tr.records[0];
        assert_relative_eq!(r.d[0], 1.6, epsilon = 1e-12);
        assert_relative_eq!(r.e, -0.5);
        assert_relative_eq!(tr.terminal_salvage, -0.1, epsilon = 1e-12);
        assert_relative_eq!(tr.cumulative_reward, 1.38, epsilon = 1e-12);
    }

    #[test]
    fn stationary_stages_repeat_until_clipped() {
        let inst = instance(6, 100.0, 1.2, 0.2);
        let tr = run_mco(&inst, &[0.0; 6]).unwrap();
        let first = &tr.records[0];
        for r in &tr.records[..2] {
            assert_eq!((r.d.clone(), r.e), (first.d.clone(), first.e));
        }
        // 1.2 kWh lasts two full stages, then 0.2, then nothing
        assert_relative_eq!(tr.records[2].e, -0.2, epsilon = 1e-12);
        assert_eq!(tr.records[3].e, 0.0);
        assert_eq!(tr.final_soc(), 0.0);
        let sum: f64 = tr.records.iter().map(|r| r.stage_reward).sum();
        assert_relative_eq!(tr.cumulative_reward, sum + tr.terminal_salvage, epsilon = 1e-12);
    }

    #[test]
    fn zero_salvage_routes_to_always_discharge() {
        let inst = instance(3, 10.0, 5.0, 0.0);
        assert_eq!(
            StagePolicy::for_schedule(&inst.battery, &inst.tariff),
            StagePolicy::Relaxed(A1Case::AlwaysDischarge)
        );
        let tr = run_mco(&inst, &[3.0, 3.0, 3.0]).unwrap();
        assert!(tr.records.iter().all(|r| r.e == -0.5));
    }

    #[test]
    fn stage_reward_examples() {
        let fleet = DeviceFleet::new(vec![Device::quadratic(2.0, 1.0, 2.0).unwrap()]);
        let t = TariffInterval::new(0.4, 0.1).unwrap();
        let dec = Decision {
            d: vec![1.8],
            e: 0.2,
            z: 0.0,
        };
        let u = fleet.utility_value(&[1.8]).unwrap();
        assert_relative_eq!(stage_reward(&t, &fleet, &dec, 2.0, 0.0).unwrap(), u, epsilon = 1e-12);
        let dec = Decision {
            d: vec![1.6],
            e: -0.5,
            z: 0.6,
        };
        let s = t.surplus(&fleet, &[1.6], -0.5, 0.5).unwrap();
        assert_relative_eq!(
            stage_reward(&t, &fleet, &dec, 0.5, 0.01).unwrap(),
            s - 0.005,
            epsilon = 1e-12
        );
        let dec = Decision {
            d: vec![1.0],
            e: 0.0,
            z: 0.0,
        };
        assert_eq!(
            stage_reward(&t, &fleet, &dec, 1.0, 3.0).unwrap(),
            t.surplus(&fleet, &[1.0], 0.0, 1.0).unwrap()
        );
    }

    #[test]
    fn rejects_bad_path() {
        let inst = instance(2, 10.0, 5.0, 0.2);
        assert!(run_mco(&inst, &[1.0]).is_err());
        assert!(run_mco(&inst, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let inst = instance(2, 10.0, 5.0, 0.2);
        let tr = run_mco(&inst, &[0.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,g,d_1,e,z,soc,stage_reward");
        assert_eq!(lines.count(), 2);
    }

    proptest! {
        #[test]
        fn soc_stays_in_band(
            g in prop::collection::vec(0.0..4.0f64, 1..20),
            cap in 0.5..5.0f64, frac in 0.0..1.0f64, reserve in 0.0..0.4f64,
        ) {
            let mut inst = instance(g.len(), cap, 0.0, 0.2);
            inst.battery = inst.battery.with_min_soc(reserve * cap).unwrap();
            inst.initial_soc = reserve * cap + frac * (1.0 - reserve) * cap;
            let tr = run_mco(&inst, &g).unwrap();
            for r in &tr.records {
                prop_assert!(r.soc_after >= inst.battery.min_soc && r.soc_after <= cap);
                prop_assert!((r.d.iter().sum::<f64>() + r.e - r.g - r.z).abs() < 1e-12);
            }
        }

        #[test]
        fn decisions_are_causal(
            g in prop::collection::vec(0.0..4.0f64, 2..12),
            other in prop::collection::vec(0.0..4.0f64, 12), cut in 0usize..12,
        ) {
            let inst = instance(g.len(), 2.0, 1.0, 0.2);
            let cut = cut % g.len();
            let mut h = g.clone();
            h[cut + 1..].copy_from_slice(&other[cut + 1..g.len()]);
            let a = run_mco(&inst, &g).unwrap();
            let b = run_mco(&inst, &h).unwrap();
            prop_assert_eq!(&a.records[..=cut], &b.records[..=cut]);
        }
    }

    #[test]
    fn matches_direct_threshold_rule_when_unclipped() {
        let inst = instance(4, 100.0, 50.0, 0.2);
        let g = [0.5, 2.0, 3.0, 1.7];
        let tr = run_mco(&inst, &g).unwrap();
        for (r, &gt) in tr.records.iter().zip(&g) {
            let x = decide(
                inst.fleet.at(0),
                inst.tariff.at(0),
                &inst.battery,
                inst.battery.raw_limits(),
                gt,
            )
            .unwrap();
            assert_eq!((x.d, x.e), (r.d.clone(), r.e));
        }
    }
}
