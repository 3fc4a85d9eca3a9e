//! Closed-form single-interval decisions.
//!
//! Every policy here has the same shape: renewable output `g` is spent, in
//! order of decreasing marginal value, on (1) offsetting imports, (2) the
//! discharge band, (3) the idle band, (4) the charge band and finally (5)
//! exports. Each policy differs only in which storage bands exist and how
//! wide they are, so they all share [`ladder`].
//!
//! Breakpoints are evaluated closed on the left. The closed forms are
//! continuous in `g`, so neighbouring branches agree at every breakpoint.

use serde::Serialize;

use crate::demand::DeviceFleet;
use crate::storage::{A1Case, A1Status, BatterySpec, ClippedLimits};
use crate::tariff::{TariffInterval, TariffSchedule};
use crate::{Error, Result};

/// The six ordered renewable breakpoints of the co-optimal policy, in kWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSet {
    /// Below this the prosumer imports (net consumption zone).
    pub import_end: f64,
    /// Below this the battery discharges at its limit.
    pub full_discharge_end: f64,
    /// Above this the battery stops discharging.
    pub discharge_end: f64,
    /// Above this the battery starts charging.
    pub charge_start: f64,
    /// Above this the battery charges at its limit.
    pub full_charge_start: f64,
    /// Above this the prosumer exports (net production zone).
    pub export_start: f64,
}

impl ThresholdSet {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.import_end,
            self.full_discharge_end,
            self.discharge_end,
            self.charge_start,
            self.full_charge_start,
            self.export_start,
        ]
    }

    pub fn is_ordered(&self) -> bool {
        let a = self.as_array();
        a[0] >= 0.0 && a.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Consumption and storage control for one interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub d: Vec<f64>,
    pub e: f64,
    /// Net consumption `1'd + e - g`.
    pub z: f64,
}

impl Decision {
    /// Builds a decision, deriving `z` from the renewable output `g`.
    pub fn new(d: Vec<f64>, e: f64, g: f64) -> Self {
        let z = d.iter().sum::<f64>() + e - g;
        Decision { d, e, z }
    }

    pub fn total_consumption(&self) -> f64 {
        self.d.iter().sum()
    }
}

/// Objective of the single-interval problem: surplus plus the salvage value
/// of the SoC change.
pub fn myopic_objective(
    fleet: &DeviceFleet,
    tariff: &TariffInterval,
    spec: &BatterySpec,
    d: &[f64],
    e: f64,
    g: f64,
) -> Result<f64> {
    Ok(tariff.surplus(fleet, d, e, g)? + spec.salvage * spec.soc_delta(e))
}

fn check_renewable(g: f64) -> Result<()> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::domain(format!("renewable output must be >= 0, got {g}")));
    }
    Ok(())
}

/// Salvage condition for one interval: `export <= tau*salvage` and
/// `salvage/rho <= retail`.
fn interval_a1(spec: &BatterySpec, tariff: &TariffInterval) -> A1Status {
    spec.check_a1(&TariffSchedule::new(vec![*tariff]).expect("validated interval"))
}

/// A storage band: marginal value of energy through it and its width.
#[derive(Debug, Clone, Copy)]
struct Band {
    price: f64,
    width: f64,
}

/// Raw breakpoints. The two lower ones may be negative; [`thresholds`]
/// reports them clamped at zero.
fn breakpoints(
    fleet: &DeviceFleet,
    tariff: &TariffInterval,
    discharge: Option<Band>,
    charge: Option<Band>,
) -> [f64; 6] {
    let f = |p| fleet.aggregate_inverse_marginal(p);
    // a missing band degenerates to zero width at the neighbouring grid rate
    let dis = discharge.unwrap_or(Band {
        price: tariff.retail,
        width: 0.0,
    });
    let chg = charge.unwrap_or(Band {
        price: tariff.export,
        width: 0.0,
    });
    let f_dis = f(dis.price);
    let f_chg = f(chg.price);
    [
        f(tariff.retail) - dis.width,
        f_dis - dis.width,
        f_dis,
        f_chg,
        f_chg + chg.width,
        f(tariff.export) + chg.width,
    ]
}

fn fill(fleet: &DeviceFleet, total: f64) -> Result<Vec<f64>> {
    Ok(fleet.water_fill(total.clamp(0.0, fleet.total_cap()))?.d)
}

/// Seven-branch threshold rule shared by all policies.
fn ladder(
    fleet: &DeviceFleet,
    tariff: &TariffInterval,
    discharge: Option<Band>,
    charge: Option<Band>,
    g: f64,
) -> Result<(Vec<f64>, f64)> {
    let [import_end, full_dis_end, dis_end, chg_start, full_chg_start, export_start] =
        breakpoints(fleet, tariff, discharge, charge);
    let dis = discharge.map_or((tariff.retail, 0.0), |b| (b.price, b.width));
    let chg = charge.map_or((tariff.export, 0.0), |b| (b.price, b.width));

    let out = if g <= import_end {
        (fleet.inverse_marginals(tariff.retail), -dis.1)
    } else if g <= full_dis_end {
        (fill(fleet, g + dis.1)?, -dis.1)
    } else if g <= dis_end {
        (fleet.inverse_marginals(dis.0), g - dis_end)
    } else if g <= chg_start {
        (fill(fleet, g)?, 0.0)
    } else if g <= full_chg_start {
        (fleet.inverse_marginals(chg.0), g - chg_start)
    } else if g <= export_start {
        (fill(fleet, g - chg.1)?, chg.1)
    } else {
        (fleet.inverse_marginals(tariff.export), chg.1)
    };
    Ok(out)
}

fn a1_bands(spec: &BatterySpec, limits: ClippedLimits) -> (Band, Band) {
    (
        Band {
            price: spec.salvage / spec.discharge_eff,
            width: limits.discharge,
        },
        Band {
            price: spec.charge_eff * spec.salvage,
            width: limits.charge,
        },
    )
}

/// Breakpoints of the co-optimal policy for one interval.
///
/// Pass the battery's raw limits for the non-binding-SoC policy or the
/// clipped limits for the myopic algorithm.
pub fn thresholds(
    fleet: &DeviceFleet,
    tariff: &TariffInterval,
    spec: &BatterySpec,
    limits: ClippedLimits,
) -> Result<ThresholdSet> {
    if let A1Status::Violated(case) = interval_a1(spec, tariff) {
        return Err(Error::A1Violated { case });
    }
    let (dis, chg) = a1_bands(spec, limits);
    let b = breakpoints(fleet, tariff, Some(dis), Some(chg));
    Ok(ThresholdSet {
        import_end: b[0].max(0.0),
        full_discharge_end: b[1].max(0.0),
        discharge_end: b[2],
        charge_start: b[3],
        full_charge_start: b[4],
        export_start: b[5],
    })
}

/// Co-optimal consumption and storage decision for renewable output `g`.
pub fn decide(
    fleet: &DeviceFleet,
    tariff: &TariffInterval,
    spec: &BatterySpec,
    limits: ClippedLimits,
    g: f64,
) -> Result<Decision> {
    check_renewable(g)?;
    if let A1Status::Violated(case) = interval_a1(spec, tariff) {
        return Err(Error::A1Violated { case });
    }
    let (dis, chg) = a1_bands(spec, limits);
    let (d, e) = ladder(fleet, tariff, Some(dis), Some(chg), g)?;
    Ok(Decision::new(d, e, g))
}

/// Optimal consumption without storage. `g` may be any real here: the
/// relaxed policies call it with storage-adjusted renewable output.
fn no_storage(fleet: &DeviceFleet, tariff: &TariffInterval, g: f64) -> Result<Vec<f64>> {
    Ok(ladder(fleet, tariff, None, None, g)?.0)
}

/// Optimal consumption without storage for any net renewable supply `g`,
/// including negative values (storage drawing from the meter).
pub fn no_storage_consumption(fleet: &DeviceFleet, tariff: &TariffInterval, g: f64) -> Result<Vec<f64>> {
    no_storage(fleet, tariff, g)
}

/// Best surplus without storage when the net renewable supply is `g`,
/// which may be negative.
pub fn consumption_value(fleet: &DeviceFleet, tariff: &TariffInterval, g: f64) -> Result<f64> {
    let d = no_storage(fleet, tariff, g)?;
    tariff.surplus(fleet, &d, 0.0, g)
}

/// Consumption-only prosumer: imports below `f(retail)`, exports above
/// `f(export)`, net-zero in between.
pub fn decide_no_storage(fleet: &DeviceFleet, tariff: &TariffInterval, g: f64) -> Result<Decision> {
    check_renewable(g)?;
    Ok(Decision::new(no_storage(fleet, tariff, g)?, 0.0, g))
}

/// Passive prosumer: consumption fixed at `f_k(retail)`, storage minimises
/// `|z|`.
pub fn decide_passive(fleet: &DeviceFleet, tariff: &TariffInterval, limits: ClippedLimits, g: f64) -> Result<Decision> {
    check_renewable(g)?;
    let d = fleet.inverse_marginals(tariff.retail);
    let total: f64 = d.iter().sum();
    let e = (g - total).clamp(-limits.discharge, limits.charge);
    Ok(Decision::new(d, e, g))
}

/// Decision when the salvage rate is outside the sandwich, for a regime
/// obtained from [`BatterySpec::check_a1`].
///
/// The regime must match this interval's own rates; use [`StagePolicy`] to
/// apply a schedule-wide classification.
pub fn decide_relaxed_a1(
    fleet: &DeviceFleet,
    tariff: &TariffInterval,
    spec: &BatterySpec,
    limits: ClippedLimits,
    g: f64,
    case: A1Case,
) -> Result<Decision> {
    match interval_a1(spec, tariff) {
        A1Status::Violated(c) if c == case => {}
        other => {
            return Err(Error::domain(format!(
                "regime {case} does not match interval rates ({other:?})"
            )))
        }
    }
    relaxed(fleet, tariff, spec, limits, g, case)
}

fn relaxed(
    fleet: &DeviceFleet,
    tariff: &TariffInterval,
    spec: &BatterySpec,
    limits: ClippedLimits,
    g: f64,
    case: A1Case,
) -> Result<Decision> {
    check_renewable(g)?;
    let (dis, chg) = a1_bands(spec, limits);
    let forced = |e: f64| -> Result<Decision> { Ok(Decision::new(no_storage(fleet, tariff, g - e)?, e, g)) };
    match case {
        A1Case::AlwaysDischarge => forced(-limits.discharge),
        A1Case::AlwaysCharge => forced(limits.charge),
        A1Case::Idle => forced(0.0),
        A1Case::NeverCharge => {
            let (d, e) = ladder(fleet, tariff, Some(dis), None, g)?;
            Ok(Decision::new(d, e, g))
        }
        A1Case::NeverDischarge => {
            let (d, e) = ladder(fleet, tariff, None, Some(chg), g)?;
            Ok(Decision::new(d, e, g))
        }
    }
}

/// Stage rule selected once per schedule from the salvage-rate regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StagePolicy {
    Threshold,
    Relaxed(A1Case),
}

impl StagePolicy {
    pub fn for_schedule(spec: &BatterySpec, schedule: &TariffSchedule) -> Self {
        match spec.check_a1(schedule) {
            A1Status::Satisfied => StagePolicy::Threshold,
            A1Status::Violated(c) => StagePolicy::Relaxed(c),
        }
    }

    pub fn decide(
        &self,
        fleet: &DeviceFleet,
        tariff: &TariffInterval,
        spec: &BatterySpec,
        limits: ClippedLimits,
        g: f64,
    ) -> Result<Decision> {
        match *self {
            StagePolicy::Threshold => decide(fleet, tariff, spec, limits, g),
            StagePolicy::Relaxed(case) => relaxed(fleet, tariff, spec, limits, g, case),
        }
    }
}
