//! NEM X billing.
//!
//! Energies are kWh per interval, rates are currency per kWh. A positive
//! payment means the prosumer pays the utility.

use serde::{Deserialize, Serialize};

use crate::demand::DeviceFleet;
use crate::{Error, Result};

/// Tariff parameters for one billing interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TariffInterval {
    /// Retail (import) rate.
    pub retail: f64,
    /// Export compensation rate.
    pub export: f64,
    /// Fixed connection charge per interval.
    #[serde(default)]
    pub fixed: f64,
    /// Utility avoided-cost rate. Only used by the net-cost metric.
    #[serde(default)]
    pub avoided_cost: f64,
}

impl TariffInterval {
    pub fn new(retail: f64, export: f64) -> Result<Self> {
        let t = TariffInterval {
            retail,
            export,
            fixed: 0.0,
            avoided_cost: 0.0,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_fixed(mut self, fixed: f64) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn with_avoided_cost(mut self, rate: f64) -> Self {
        self.avoided_cost = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("retail", self.retail),
            ("export", self.export),
            ("fixed", self.fixed),
            ("avoided_cost", self.avoided_cost),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("{name} rate must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Payment for net consumption `z`: `retail*[z]+ - export*[z]- + fixed`.
    pub fn payment(&self, z: f64) -> f64 {
        self.retail * z.max(0.0) - self.export * (-z).max(0.0) + self.fixed
    }

    /// Prosumer surplus `U(d) - payment(1'd + e - g)`.
    pub fn surplus(&self, fleet: &DeviceFleet, d: &[f64], e: f64, g: f64) -> Result<f64> {
        let utility = fleet.utility_value(d)?;
        let z = d.iter().sum::<f64>() + e - g;
        Ok(utility - self.payment(z))
    }
}

/// An ordered list of tariff intervals covering the scheduling horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TariffSchedule {
    intervals: Vec<TariffInterval>,
}

/// One pair of intervals whose export rate is not strictly below the other's
/// retail rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArbitrageViolation {
    pub export_interval: usize,
    pub retail_interval: usize,
    pub export: f64,
    pub retail: f64,
}

impl TariffSchedule {
    /// Builds a schedule after validating every interval. The no-arbitrage
    /// condition is checked separately by [`TariffSchedule::validate_no_arbitrage`].
    pub fn new(intervals: Vec<TariffInterval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::domain("tariff schedule is empty"));
        }
        for (t, i) in intervals.iter().enumerate() {
            i.validate().map_err(|e| Error::domain(format!("interval {t}: {e}")))?;
        }
        Ok(TariffSchedule { intervals })
    }

    /// Same rates in every interval.
    pub fn constant(interval: TariffInterval, horizon: usize) -> Result<Self> {
        Self::new(vec![interval; horizon])
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn at(&self, t: usize) -> &TariffInterval {
        &self.intervals[t]
    }

    pub fn intervals(&self) -> &[TariffInterval] {
        &self.intervals
    }

    pub fn max_export(&self) -> f64 {
        self.intervals
            .iter()
            .map(|i| i.export)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_retail(&self) -> f64 {
        self.intervals.iter().map(|i| i.retail).fold(f64::INFINITY, f64::min)
    }

    pub fn max_retail(&self) -> f64 {
        self.intervals
            .iter()
            .map(|i| i.retail)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Restricts to intervals `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> TariffSchedule {
        TariffSchedule {
            intervals: self.intervals[start..start + len].to_vec(),
        }
    }

    /// Checks `max export < min retail`. On failure the returned list holds
    /// every `(export interval, retail interval)` pair that breaks it.
    pub fn validate_no_arbitrage(&self) -> Result<std::result::Result<(), Vec<ArbitrageViolation>>> {
        if self.intervals.is_empty() {
            return Err(Error::domain("tariff schedule is empty"));
        }
        if self.max_export() < self.min_retail() {
            return Ok(Ok(()));
        }
        let mut out = Vec::new();
        for (i, a) in self.intervals.iter().enumerate() {
            for (j, b) in self.intervals.iter().enumerate() {
                if a.export >= b.retail {
                    out.push(ArbitrageViolation {
                        export_interval: i,
                        retail_interval: j,
                        export: a.export,
                        retail: b.retail,
                    });
                }
            }
        }
        Ok(Err(out))
    }
}
