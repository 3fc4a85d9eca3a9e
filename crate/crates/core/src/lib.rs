//! Co-optimization of behind-the-meter flexible demand and battery storage
//! under net energy metering (NEM X) tariffs.
//!
//! The crate is organised bottom-up:
//!
//! * [`tariff`]: NEM X billing, prosumer surplus and tariff checks.
//! * [`demand`]: concave device utilities, inverse marginals and the
//!   water-filling allocator.
//! * [`storage`]: battery parameters, state-of-charge dynamics and the
//!   salvage-value / non-binding-limit diagnostics.
//! * [`policy`]: closed-form threshold decisions for a single interval.
//! * [`mco`]: the sequential myopic co-optimization over a horizon.
//! * [`baselines`]: dynamic-programming oracle, perfect-foresight bound, MPC
//!   and heuristic customer types.
//! * [`scenario`]: renewable path generation and Monte Carlo metrics.
//!
//! Monte Carlo loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

pub mod baselines;
pub mod demand;
pub mod error;
pub mod exec;
pub mod mco;
pub mod policy;
pub mod problem;
pub mod scenario;
pub mod storage;
pub mod tariff;

pub use error::{Error, Result};
pub use problem::{FleetSchedule, Instance};
