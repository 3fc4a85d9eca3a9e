//! Scenario configuration: one versioned JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use der_coopt::baselines::{MpcOptions, WindowConvention};
use der_coopt::demand::{Device, DeviceFleet};
use der_coopt::scenario::RenewableModel;
use der_coopt::storage::{A1Status, BatterySpec};
use der_coopt::tariff::{TariffInterval, TariffSchedule};
use der_coopt::{FleetSchedule, Instance};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// A scalar applied to every interval, or one value per interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Series {
    Scalar(f64),
    PerInterval(Vec<f64>),
}

impl Series {
    pub fn expand(&self, horizon: usize, what: &str) -> Result<Vec<f64>, CliError> {
        match self {
            Series::Scalar(x) => Ok(vec![*x; horizon]),
            Series::PerInterval(v) if v.len() == horizon => Ok(v.clone()),
            Series::PerInterval(v) => Err(CliError::Config(format!(
                "{what} has {} values, horizon is {horizon}",
                v.len()
            ))),
        }
    }
}

fn zero() -> Series {
    Series::Scalar(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TariffConfig {
    pub retail: Series,
    pub export: Series,
    #[serde(default = "zero")]
    pub fixed: Series,
    #[serde(default = "zero")]
    pub avoided_cost: Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub alpha: Series,
    pub beta: Series,
    pub cap: Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    pub capacity: f64,
    #[serde(default)]
    pub min_soc: f64,
    pub charge_limit: f64,
    pub discharge_limit: f64,
    #[serde(default = "one")]
    pub charge_eff: f64,
    #[serde(default = "one")]
    pub discharge_eff: f64,
    pub salvage: f64,
    pub initial_soc: f64,
    /// Experimental throughput cost per kWh.
    #[serde(default)]
    pub degradation_cost: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpConfig {
    #[serde(default = "default_soc_step")]
    pub soc_step: f64,
    /// Grid step for the action search; golden-section search when absent.
    #[serde(default)]
    pub action_step: Option<f64>,
    /// Support size when a normal renewable model is quantized.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_state_cap")]
    pub state_cap: usize,
}

fn default_soc_step() -> f64 {
    0.01
}
fn default_levels() -> usize {
    5
}
fn default_state_cap() -> usize {
    der_coopt::baselines::dp::DEFAULT_STATE_CAP
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            soc_step: default_soc_step(),
            action_step: None,
            levels: default_levels(),
            state_cap: default_state_cap(),
        }
    }
}

/// Axes of the gap sweep. Each level sets `charge_limit = discharge_limit`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub limits: Vec<f64>,
    #[serde(default)]
    pub mean_scales: Vec<f64>,
    #[serde(default)]
    pub std_scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    pub horizon: usize,
    pub tariff: TariffConfig,
    pub fleet: Vec<DeviceConfig>,
    pub battery: BatteryConfig,
    pub renewable: RenewableModel,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// Policies compared against the bound by `gap`.
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<String>,
    #[serde(default)]
    pub dp: DpConfig,
    #[serde(default = "default_lookahead")]
    pub mpc_lookahead: usize,
    #[serde(default)]
    pub mpc_window_convention: WindowConvention,
    #[serde(default)]
    pub peak_window: Vec<usize>,
    #[serde(default = "default_day_length")]
    pub day_length: usize,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_bin")]
    pub histogram_bin: f64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_paths() -> usize {
    100
}
fn default_algorithms() -> Vec<String> {
    vec!["mco".into(), "mpc".into()]
}
fn default_lookahead() -> usize {
    4
}
fn default_day_length() -> usize {
    24
}
fn default_bin() -> f64 {
    0.25
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Config, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be >= 1".into()));
        }
        if self.paths == 0 {
            return Err(CliError::Config("paths must be >= 1".into()));
        }
        if self.mpc_lookahead == 0 {
            return Err(CliError::Config("mpc_lookahead must be >= 1".into()));
        }
        if self.day_length == 0 {
            return Err(CliError::Config("day_length must be >= 1".into()));
        }
        if let Some(t) = self.peak_window.iter().find(|t| **t >= self.horizon) {
            return Err(CliError::Config(format!(
                "peak window interval {t} is beyond the horizon"
            )));
        }
        self.renewable.validate().map_err(config_err)?;
        let tariff = self.tariff_schedule()?;
        if let Err(v) = tariff.validate_no_arbitrage().map_err(config_err)? {
            let first = v[0];
            return Err(CliError::Config(format!(
                "tariff allows arbitrage: export {} in interval {} >= retail {} in interval {} ({} violating pairs)",
                first.export,
                first.export_interval,
                first.retail,
                first.retail_interval,
                v.len()
            )));
        }
        self.instance()?;
        Ok(())
    }

    pub fn tariff_schedule(&self) -> Result<TariffSchedule, CliError> {
        let t = self.horizon;
        let r = self.tariff.retail.expand(t, "tariff.retail")?;
        let x = self.tariff.export.expand(t, "tariff.export")?;
        let f = self.tariff.fixed.expand(t, "tariff.fixed")?;
        let a = self.tariff.avoided_cost.expand(t, "tariff.avoided_cost")?;
        let intervals = (0..t)
            .map(|i| {
                TariffInterval::new(r[i], x[i])
                    .map(|iv| iv.with_fixed(f[i]).with_avoided_cost(a[i]))
                    .and_then(|iv| iv.validate().map(|_| iv))
                    .map_err(|e| CliError::Config(format!("tariff interval {i}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        TariffSchedule::new(intervals).map_err(config_err)
    }

    pub fn fleet_schedule(&self) -> Result<FleetSchedule, CliError> {
        let t = self.horizon;
        let cols = self
            .fleet
            .iter()
            .enumerate()
            .map(|(k, d)| {
                Ok((
                    d.alpha.expand(t, &format!("fleet[{k}].alpha"))?,
                    d.beta.expand(t, &format!("fleet[{k}].beta"))?,
                    d.cap.expand(t, &format!("fleet[{k}].cap"))?,
                ))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let at = |i: usize| -> Result<DeviceFleet, CliError> {
            cols.iter()
                .enumerate()
                .map(|(k, (a, b, c))| {
                    Device::quadratic(a[i], b[i], c[i])
                        .map_err(|e| CliError::Config(format!("fleet[{k}] interval {i}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(DeviceFleet::new)
        };
        let stationary = self.fleet.iter().all(|d| {
            [&d.alpha, &d.beta, &d.cap]
                .iter()
                .all(|s| matches!(s, Series::Scalar(_)))
        });
        if stationary {
            Ok(FleetSchedule::Stationary(at(0)?))
        } else {
            Ok(FleetSchedule::PerInterval((0..t).map(at).collect::<Result<_, _>>()?))
        }
    }

    pub fn battery_spec(&self) -> Result<BatterySpec, CliError> {
        let b = &self.battery;
        BatterySpec::new(
            b.capacity,
            b.charge_limit,
            b.discharge_limit,
            b.charge_eff,
            b.discharge_eff,
            b.salvage,
        )
        .and_then(|s| s.with_min_soc(b.min_soc))
        .map_err(config_err)
    }

    pub fn instance(&self) -> Result<Instance, CliError> {
        Instance::new(
            self.tariff_schedule()?,
            self.fleet_schedule()?,
            self.battery_spec()?,
            self.battery.initial_soc,
        )
        .and_then(|i| i.with_degradation_cost(self.battery.degradation_cost))
        .map_err(config_err)
    }

    pub fn mpc_options(&self) -> MpcOptions {
        MpcOptions {
            lookahead: self.mpc_lookahead,
            convention: self.mpc_window_convention,
        }
    }

    /// Salvage-condition and non-binding-SoC diagnostics, one line each.
    pub fn diagnostics(&self) -> Result<Vec<String>, CliError> {
        let inst = self.instance()?;
        let a1 = match inst.a1_status() {
            A1Status::Satisfied => "salvage rate sandwiched between export and retail rates".to_string(),
            A1Status::Violated(c) => format!("salvage rate outside the sandwich ({c}); relaxed policy in use"),
        };
        let a2 = if inst.battery.check_a2_sufficient(inst.initial_soc, inst.horizon()) {
            "SoC limits cannot bind over the horizon; myopic policy is optimal".to_string()
        } else {
            "SoC limits may bind; myopic policy is not guaranteed optimal".to_string()
        };
        Ok(vec![a1, a2])
    }
}

pub(crate) fn config_err(e: der_coopt::Error) -> CliError {
    CliError::Config(e.to_string())
}
