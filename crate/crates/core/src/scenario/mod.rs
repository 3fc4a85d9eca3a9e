//! Renewable path generation and Monte Carlo metrics.

pub mod metrics;
pub mod renewable;

pub use metrics::{
    gap, net_consumption_histogram, rpf_records, surplus_gain_table, utility_net_cost, GapReport, Histogram,
    NetCostSeries, RpfRecord, RpfSummary, SurplusGain, NET_ZERO_TOL,
};
pub use renewable::{bell_profile, path_rng, sample_paths, RenewableModel};
