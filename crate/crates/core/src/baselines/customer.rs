//! Heuristic customer types used to put the co-optimal policy in context.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mco::{run_mco, run_policy, Trajectory};
use crate::policy::{decide_no_storage, decide_passive, Decision, StagePolicy};
use crate::{Error, Instance, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomerType {
    /// No renewables, no storage; consumes `f_k(retail)`.
    Consumer,
    /// Discharges to cover consumption during the peak window so renewables
    /// are exported; stores renewables outside it.
    SolarExporter,
    /// Storage cancels the renewable-adjusted consumption whenever it can.
    SelfPowered,
    /// Renewables charge the battery first, consumption absorbs the rest.
    PackagedSdg,
    /// Co-optimizes storage and consumption.
    ActiveSdg,
    /// Storage minimises `|z|` with consumption fixed at `f_k(retail)`.
    PassiveSdg,
}

impl CustomerType {
    pub const ALL: [CustomerType; 6] = [
        CustomerType::Consumer,
        CustomerType::SolarExporter,
        CustomerType::SelfPowered,
        CustomerType::PackagedSdg,
        CustomerType::ActiveSdg,
        CustomerType::PassiveSdg,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CustomerType::Consumer => "consumer",
            CustomerType::SolarExporter => "solar_exporter",
            CustomerType::SelfPowered => "self_powered",
            CustomerType::PackagedSdg => "packaged_sdg",
            CustomerType::ActiveSdg => "active_sdg",
            CustomerType::PassiveSdg => "passive_sdg",
        }
    }
}

impl fmt::Display for CustomerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CustomerType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CustomerType::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::domain(format!("unknown customer type '{s}'")))
    }
}

/// Simulates one customer type on a renewable path. `peak_window` lists the
/// interval indices of the peak period and is required by the solar
/// exporter.
pub fn run_customer_type(
    kind: CustomerType,
    inst: &Instance,
    g: &[f64],
    peak_window: Option<&[usize]>,
) -> Result<Trajectory> {
    let spec = &inst.battery;
    match kind {
        CustomerType::Consumer => {
            inst.check_path(g)?;
            let none = vec![0.0; g.len()];
            run_policy(inst, &none, |c| {
                Ok(Decision::new(c.fleet.inverse_marginals(c.tariff.retail), 0.0, 0.0))
            })
        }
        CustomerType::SolarExporter => {
            let peak = peak_window.ok_or_else(|| Error::domain("solar exporter needs a peak window"))?;
            run_policy(inst, g, |c| {
                let d = c.fleet.inverse_marginals(c.tariff.retail);
                let total: f64 = d.iter().sum();
                let e = if peak.contains(&c.t) {
                    -c.limits.discharge.min(total)
                } else if c.g > 0.0 {
                    c.g.min(c.limits.charge)
                } else {
                    0.0
                };
                Ok(Decision::new(d, e, c.g))
            })
        }
        CustomerType::SelfPowered | CustomerType::PassiveSdg => {
            run_policy(inst, g, |c| decide_passive(c.fleet, c.tariff, c.limits, c.g))
        }
        CustomerType::PackagedSdg => {
            let active = StagePolicy::for_schedule(spec, &inst.tariff);
            run_policy(inst, g, |c| {
                if c.g > 0.0 {
                    let e = c.g.min(c.limits.charge);
                    let d = decide_no_storage(c.fleet, c.tariff, c.g - e)?.d;
                    Ok(Decision::new(d, e, c.g))
                } else {
                    active.decide(c.fleet, c.tariff, spec, c.limits, c.g)
                }
            })
        }
        CustomerType::ActiveSdg => run_mco(inst, g),
    }
}
