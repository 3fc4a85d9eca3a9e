use serde::{Deserialize, Serialize};

use crate::demand::DeviceFleet;
use crate::storage::{A1Status, BatterySpec};
use crate::tariff::TariffSchedule;
use crate::{Error, Result};

/// Device fleet as a function of the interval index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FleetSchedule {
    Stationary(DeviceFleet),
    PerInterval(Vec<DeviceFleet>),
}

impl FleetSchedule {
    pub fn at(&self, t: usize) -> &DeviceFleet {
        match self {
            FleetSchedule::Stationary(f) => f,
            FleetSchedule::PerInterval(v) => &v[t],
        }
    }

    /// Number of devices, which must not change over the horizon.
    pub fn devices(&self) -> usize {
        self.at(0).len()
    }

    fn validate(&self, horizon: usize) -> Result<()> {
        if let FleetSchedule::PerInterval(v) = self {
            if v.len() != horizon {
                return Err(Error::domain(format!(
                    "fleet schedule has {} intervals, tariff has {horizon}",
                    v.len()
                )));
            }
            if v.iter().any(|f| f.len() != v[0].len()) {
                return Err(Error::domain("device count varies across intervals"));
            }
        }
        Ok(())
    }
}

/// Everything that defines a scheduling problem except the renewable path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub tariff: TariffSchedule,
    pub fleet: FleetSchedule,
    pub battery: BatterySpec,
    pub initial_soc: f64,
    /// Experimental per-kWh throughput cost, charged on `|e|`. Zero disables it.
    #[serde(default)]
    pub degradation_cost: f64,
}

impl Instance {
    pub fn new(tariff: TariffSchedule, fleet: FleetSchedule, battery: BatterySpec, initial_soc: f64) -> Result<Self> {
        let inst = Instance {
            tariff,
            fleet,
            battery,
            initial_soc,
            degradation_cost: 0.0,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_degradation_cost(mut self, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::domain("degradation cost must be >= 0"));
        }
        self.degradation_cost = rate;
        Ok(self)
    }

    pub fn horizon(&self) -> usize {
        self.tariff.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.battery.validate()?;
        self.fleet.validate(self.horizon())?;
        let b = &self.battery;
        if !(self.initial_soc >= b.min_soc && self.initial_soc <= b.capacity) {
            return Err(Error::domain(format!(
                "initial SoC {} outside [{}, {}]",
                self.initial_soc, b.min_soc, b.capacity
            )));
        }
        Ok(())
    }

    pub fn a1_status(&self) -> A1Status {
        self.battery.check_a1(&self.tariff)
    }

    /// Sub-problem over intervals `start..start + len` starting from `soc`.
    pub fn window(&self, start: usize, len: usize, soc: f64) -> Instance {
        let fleet = match &self.fleet {
            FleetSchedule::Stationary(f) => FleetSchedule::Stationary(f.clone()),
            FleetSchedule::PerInterval(v) => FleetSchedule::PerInterval(v[start..start + len].to_vec()),
        };
        Instance {
            tariff: self.tariff.window(start, len),
            fleet,
            battery: self.battery,
            initial_soc: soc,
            degradation_cost: self.degradation_cost,
        }
    }

    pub(crate) fn check_path(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.horizon() {
            return Err(Error::domain(format!(
                "renewable path has {} intervals, horizon is {}",
                g.len(),
                self.horizon()
            )));
        }
        if let Some((t, v)) = g.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!("renewable g[{t}] = {v} must be >= 0")));
        }
        Ok(())
    }
}
