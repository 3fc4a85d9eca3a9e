//! Monte Carlo metrics: gaps to the bound, surplus gains, net-consumption
//! histograms, reverse power flow and the utility's net cost.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::baselines::CustomerType;
use crate::mco::Trajectory;
use crate::tariff::TariffSchedule;
use crate::{Error, Result};

/// `|z|` below this counts as net-zero.
pub const NET_ZERO_TOL: f64 = 1e-9;

/// Percentage gap `100 (reward - bound) / bound`.
pub fn gap(reward: f64, bound: f64) -> Result<f64> {
    if bound == 0.0 {
        return Err(Error::UndefinedGap);
    }
    Ok(100.0 * (reward - bound) / bound)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub algorithm: String,
    pub gaps: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single path.
    pub std: f64,
}

impl GapReport {
    pub fn new(algorithm: impl Into<String>, gaps: Vec<f64>) -> Self {
        let n = gaps.len() as f64;
        let mean = if gaps.is_empty() {
            0.0
        } else {
            gaps.iter().sum::<f64>() / n
        };
        let std = if gaps.len() < 2 {
            0.0
        } else {
            (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        GapReport {
            algorithm: algorithm.into(),
            gaps,
            mean,
            std,
        }
    }

    pub fn max(&self) -> f64 {
        self.gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurplusGain {
    pub customer: CustomerType,
    pub mean_reward: f64,
    /// Path average of `100 (R - R_consumer) / |R_consumer|`.
    pub gain_percent: f64,
}

/// Gains over the consumer on shared paths. `rewards` maps each type to its
/// cumulative reward per path and must contain the consumer.
pub fn surplus_gain_table(rewards: &BTreeMap<CustomerType, Vec<f64>>) -> Result<Vec<SurplusGain>> {
    let base = rewards
        .get(&CustomerType::Consumer)
        .ok_or_else(|| Error::domain("surplus gains need the consumer reference"))?;
    if base.is_empty() {
        return Err(Error::domain("no paths"));
    }
    if let Some(p) = base.iter().position(|r| *r == 0.0) {
        return Err(Error::domain(format!("consumer reward is zero on path {p}")));
    }
    rewards
        .iter()
        .map(|(&customer, r)| {
            if r.len() != base.len() {
                return Err(Error::domain(format!(
                    "{customer} has {} paths, consumer has {}",
                    r.len(),
                    base.len()
                )));
            }
            let n = r.len() as f64;
            let gain = r.iter().zip(base).map(|(a, b)| 100.0 * (a - b) / b.abs()).sum::<f64>() / n;
            Ok(SurplusGain {
                customer,
                mean_reward: r.iter().sum::<f64>() / n,
                gain_percent: gain,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// Bin centre (a multiple of the width) and count, in increasing order.
    pub bins: Vec<(f64, usize)>,
    /// Samples with `|z| <= NET_ZERO_TOL`; they are also in the centre bin.
    pub net_zero: usize,
    pub total: usize,
}

impl Histogram {
    pub fn net_zero_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.net_zero as f64 / self.total as f64
        }
    }
}

pub fn net_consumption_histogram<'a>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
    bin_width: f64,
) -> Result<Histogram> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::domain("bin width must be > 0"));
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    let (mut net_zero, mut total) = (0, 0);
    for tr in trajectories {
        for z in tr.net_consumption() {
            *counts.entry((z / bin_width).round() as i64).or_default() += 1;
            if z.abs() <= NET_ZERO_TOL {
                net_zero += 1;
            }
            total += 1;
        }
    }
    Ok(Histogram {
        bin_width,
        bins: counts.into_iter().map(|(i, c)| (i as f64 * bin_width, c)).collect(),
        net_zero,
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RpfRecord {
    pub path: usize,
    pub t: usize,
    /// Exported energy `[z]-`.
    pub export: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RpfSummary {
    pub records: Vec<RpfRecord>,
    /// Mean export per interval of day across paths and days.
    pub mean_by_interval: Vec<f64>,
}

/// Reverse power flow for each `(path, t)`, aggregated over intervals of a
/// day of `day_length` intervals.
pub fn rpf_records(trajectories: &[Trajectory], day_length: usize) -> Result<RpfSummary> {
    if day_length == 0 {
        return Err(Error::domain("day length must be >= 1"));
    }
    let mut records = Vec::new();
    let mut sum = vec![0.0; day_length];
    let mut count = vec![0usize; day_length];
    for (path, tr) in trajectories.iter().enumerate() {
        for r in &tr.records {
            let export = (-r.z).max(0.0);
            records.push(RpfRecord { path, t: r.t, export });
            sum[r.t % day_length] += export;
            count[r.t % day_length] += 1;
        }
    }
    let mean_by_interval = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    Ok(RpfSummary {
        records,
        mean_by_interval,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetCostSeries {
    /// Baseline payment minus the DER customer's payment.
    pub bill_savings: Vec<f64>,
    /// `avoided_cost_t * g_t`.
    pub avoided_value: Vec<f64>,
    /// `bill_savings - avoided_value`.
    pub net_cost: Vec<f64>,
}

/// Utility net cost of a DER customer relative to a baseline consumer on
/// the same tariff. Avoided-cost rates come from the tariff.
pub fn utility_net_cost(der: &Trajectory, baseline: &Trajectory, tariff: &TariffSchedule) -> Result<NetCostSeries> {
    let n = der.records.len();
    if baseline.records.len() != n || tariff.len() != n {
        return Err(Error::domain(format!(
            "horizons differ: DER {n}, baseline {}, tariff {}",
            baseline.records.len(),
            tariff.len()
        )));
    }
    let mut out = NetCostSeries {
        bill_savings: Vec::with_capacity(n),
        avoided_value: Vec::with_capacity(n),
        net_cost: Vec::with_capacity(n),
    };
    for ((a, b), rate) in der.records.iter().zip(&baseline.records).zip(tariff.intervals()) {
        let savings = rate.payment(b.z) - rate.payment(a.z);
        let avoided = rate.avoided_cost * a.g;
        out.bill_savings.push(savings);
        out.avoided_value.push(avoided);
        out.net_cost.push(savings - avoided);
    }
    Ok(out)
}
