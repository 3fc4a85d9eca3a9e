//! Battery model: state-of-charge dynamics, SoC-aware limit clipping and the
//! salvage-value diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tariff::TariffSchedule;
use crate::{Error, Result};

/// Slack on SoC bounds, in kWh.
pub const SOC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    /// Maximum operational SoC `B`.
    pub capacity: f64,
    /// Minimum operational SoC. Zero unless a reserve is configured.
    #[serde(default)]
    pub min_soc: f64,
    /// Per-interval charging limit, metered side.
    pub charge_limit: f64,
    /// Per-interval discharging limit, metered side.
    pub discharge_limit: f64,
    pub charge_eff: f64,
    pub discharge_eff: f64,
    /// Marginal value of energy left in storage at the horizon end.
    pub salvage: f64,
}

impl BatterySpec {
    pub fn new(
        capacity: f64,
        charge_limit: f64,
        discharge_limit: f64,
        charge_eff: f64,
        discharge_eff: f64,
        salvage: f64,
    ) -> Result<Self> {
        let s = BatterySpec {
            capacity,
            min_soc: 0.0,
            charge_limit,
            discharge_limit,
            charge_eff,
            discharge_eff,
            salvage,
        };
        s.validate()?;
        Ok(s)
    }

    /// Lossless battery with symmetric limits.
    pub fn lossless(capacity: f64, limit: f64, salvage: f64) -> Result<Self> {
        Self::new(capacity, limit, limit, 1.0, 1.0, salvage)
    }

    pub fn with_min_soc(mut self, min_soc: f64) -> Result<Self> {
        self.min_soc = min_soc;
        self.validate()?;
        Ok(self)
    }

    pub fn with_limits(mut self, charge: f64, discharge: f64) -> Result<Self> {
        self.charge_limit = charge;
        self.discharge_limit = discharge;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.capacity,
            self.min_soc,
            self.charge_limit,
            self.discharge_limit,
            self.charge_eff,
            self.discharge_eff,
            self.salvage,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("battery parameters must be finite"));
        }
        if self.capacity <= 0.0 {
            return Err(Error::domain(format!("capacity must be > 0, got {}", self.capacity)));
        }
        if self.min_soc < 0.0 || self.min_soc > self.capacity {
            return Err(Error::domain(format!(
                "min_soc {} outside [0, {}]",
                self.min_soc, self.capacity
            )));
        }
        if self.charge_limit < 0.0 || self.discharge_limit < 0.0 {
            return Err(Error::domain("charge/discharge limits must be >= 0"));
        }
        for (name, eff) in [("charge_eff", self.charge_eff), ("discharge_eff", self.discharge_eff)] {
            if !(eff > 0.0 && eff <= 1.0) {
                return Err(Error::domain(format!("{name} must be in (0, 1], got {eff}")));
            }
        }
        if self.salvage < 0.0 {
            return Err(Error::domain("salvage rate must be >= 0"));
        }
        Ok(())
    }

    /// Change in SoC caused by metered storage control `e`.
    pub fn soc_delta(&self, e: f64) -> f64 {
        self.charge_eff * e.max(0.0) - (-e).max(0.0) / self.discharge_eff
    }

    /// Metered control that moves the SoC by `delta`; inverse of [`soc_delta`](Self::soc_delta).
    pub fn control_for_delta(&self, delta: f64) -> f64 {
        if delta >= 0.0 {
            delta / self.charge_eff
        } else {
            delta * self.discharge_eff
        }
    }

    /// `s' = s + tau*[e]+ - [e]-/rho`, rejecting results outside the SoC
    /// band by more than [`SOC_TOL`].
    pub fn step_soc(&self, state: BatteryState, e: f64) -> Result<BatteryState> {
        let next = state.soc + self.soc_delta(e);
        if !next.is_finite() || next < self.min_soc - SOC_TOL || next > self.capacity + SOC_TOL {
            return Err(Error::State(format!(
                "control {e} moves SoC from {} to {next}, outside [{}, {}]",
                state.soc, self.min_soc, self.capacity
            )));
        }
        Ok(BatteryState {
            soc: next.clamp(self.min_soc, self.capacity),
        })
    }

    /// SoC-feasible limits for the current interval.
    pub fn clip_limits(&self, state: BatteryState) -> ClippedLimits {
        let charge = self
            .charge_limit
            .min((self.capacity - state.soc) / self.charge_eff)
            .max(0.0);
        let discharge = self
            .discharge_limit
            .min(self.discharge_eff * (state.soc - self.min_soc))
            .max(0.0);
        ClippedLimits { charge, discharge }
    }

    /// The unclipped limits.
    pub fn raw_limits(&self) -> ClippedLimits {
        ClippedLimits {
            charge: self.charge_limit,
            discharge: self.discharge_limit,
        }
    }

    /// Checks `(1/tau) max export <= salvage <= rho min retail` and, when
    /// it fails, classifies the regime.
    pub fn check_a1(&self, schedule: &TariffSchedule) -> A1Status {
        let max_export = schedule.max_export();
        let min_retail = schedule.min_retail();
        let charge_value = self.charge_eff * self.salvage;
        let discharge_cost = self.salvage / self.discharge_eff;
        if max_export <= charge_value && discharge_cost <= min_retail {
            return A1Status::Satisfied;
        }
        let case = if discharge_cost < max_export {
            A1Case::AlwaysDischarge
        } else if charge_value > min_retail {
            A1Case::AlwaysCharge
        } else if charge_value < max_export && discharge_cost > min_retail {
            A1Case::Idle
        } else if charge_value < max_export {
            A1Case::NeverCharge
        } else {
            A1Case::NeverDischarge
        };
        A1Status::Violated(case)
    }

    /// Sufficient condition for SoC limits never to bind over `horizon`
    /// intervals starting from `s0`.
    pub fn check_a2_sufficient(&self, s0: f64, horizon: usize) -> bool {
        let t = horizon as f64;
        let span = self.capacity - self.min_soc;
        let head = s0 - self.min_soc;
        let up = t * self.charge_eff * self.charge_limit;
        let down = t * self.discharge_limit / self.discharge_eff;
        span > 2.0 * up && head > down && head < span - up
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc: f64,
}

impl BatteryState {
    pub fn new(soc: f64) -> Self {
        BatteryState { soc }
    }
}

/// Per-interval charge/discharge limits after SoC clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClippedLimits {
    pub charge: f64,
    pub discharge: f64,
}

impl ClippedLimits {
    pub fn new(charge: f64, discharge: f64) -> Self {
        ClippedLimits { charge, discharge }
    }

    pub fn contains(&self, e: f64) -> bool {
        e >= -self.discharge - SOC_TOL && e <= self.charge + SOC_TOL
    }
}

/// Regimes when the salvage rate is not sandwiched between the rates.
/// With `m- = max export`, `m+ = min retail`:
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum A1Case {
    /// `salvage/rho < m-`: stored energy is worth less than exporting it.
    AlwaysDischarge,
    /// `tau*salvage > m+`: storing is worth more than the retail price.
    AlwaysCharge,
    /// `salvage/rho > m+` and `tau*salvage < m-`: storage stays idle.
    Idle,
    /// `m+ >= salvage/rho >= m- > tau*salvage`: charging never pays.
    NeverCharge,
    /// `salvage/rho > m+ >= tau*salvage >= m-`: discharging never pays.
    NeverDischarge,
}

impl A1Case {
    pub fn label(self) -> &'static str {
        match self {
            A1Case::AlwaysDischarge => "case 1a",
            A1Case::AlwaysCharge => "case 1b",
            A1Case::Idle => "case 1c",
            A1Case::NeverCharge => "case 2",
            A1Case::NeverDischarge => "case 3",
        }
    }
}

impl fmt::Display for A1Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self {
            A1Case::AlwaysDischarge => "always discharge",
            A1Case::AlwaysCharge => "always charge",
            A1Case::Idle => "idle",
            A1Case::NeverCharge => "never charge",
            A1Case::NeverDischarge => "never discharge",
        };
        write!(f, "{} ({what})", self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum A1Status {
    Satisfied,
    Violated(A1Case),
}

impl A1Status {
    pub fn is_satisfied(self) -> bool {
        matches!(self, A1Status::Satisfied)
    }
}
