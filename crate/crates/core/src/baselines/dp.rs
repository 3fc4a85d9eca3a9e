//! Discretized stochastic dynamic program used as an optimality oracle.
//!
//! Backward induction over a uniform SoC grid and the support of a Markov
//! renewable chain:
//!
//! ```text
//! V_T(s, j)  = salvage * (s - s0)
//! V_t(s, j)  = max_e  h_t(g_j - e) - c|e| + sum_k P_t(j, k) V_{t+1}(s + delta(e), k)
//! ```
//!
//! where `h_t(x)` is the best surplus without storage when the net
//! renewable supply is `x`. Values between grid points are interpolated
//! linearly. For each state the action is found by golden-section search
//! (the stage objective is concave in `e`) or by a plain grid.

use std::io::Write;

use serde::Serialize;

use super::markov::MarkovRenewable;
use crate::exec::{try_map_range, Execution};
use crate::mco::{run_policy, Trajectory};
use crate::policy::{consumption_value, no_storage_consumption, Decision};
use crate::storage::BatteryState;
use crate::{Error, Instance, Result};

/// Default cap on `(T+1) * soc points * support levels`.
pub const DEFAULT_STATE_CAP: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSearch {
    /// Golden-section search down to an interval of width `tol`, plus the
    /// two limits and idle.
    GoldenSection { tol: f64 },
    /// Every multiple of `step` in the feasible range, plus the limits.
    Grid { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpOptions {
    pub soc_step: f64,
    pub action: ActionSearch,
    pub state_cap: usize,
    pub exec: Execution,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            soc_step: 1e-2,
            action: ActionSearch::GoldenSection { tol: 1e-9 },
            state_cap: DEFAULT_STATE_CAP,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpSolution {
    pub soc_grid: Vec<f64>,
    pub support: Vec<f64>,
    pub initial: Vec<f64>,
    /// `values[t][i * levels + j]` is `V_t(soc_grid[i], support[j])`.
    pub values: Vec<Vec<f64>>,
    pub action: ActionSearch,
}

impl DpSolution {
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn soc_step(&self) -> f64 {
        if self.soc_grid.len() > 1 {
            self.soc_grid[1] - self.soc_grid[0]
        } else {
            0.0
        }
    }

    /// `V_t(soc, support[j])`, interpolated linearly in SoC.
    pub fn value_at(&self, t: usize, soc: f64, j: usize) -> f64 {
        interpolate(&self.soc_grid, &self.values[t], self.support.len(), soc, j)
    }

    /// Expected value at `t = 0` over the initial renewable distribution.
    pub fn expected_value(&self, soc: f64) -> f64 {
        self.initial
            .iter()
            .enumerate()
            .map(|(j, p)| p * self.value_at(0, soc, j))
            .sum()
    }

    /// Long-format export: `t, soc, g, value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "soc", "g", "value"])?;
        let n = self.support.len();
        for (t, row) in self.values.iter().enumerate() {
            for (i, s) in self.soc_grid.iter().enumerate() {
                for (j, g) in self.support.iter().enumerate() {
                    w.write_record([t.to_string(), s.to_string(), g.to_string(), row[i * n + j].to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn interpolate(grid: &[f64], table: &[f64], levels: usize, soc: f64, j: usize) -> f64 {
    let n = grid.len();
    if n == 1 {
        return table[j];
    }
    let step = grid[1] - grid[0];
    let x = ((soc - grid[0]) / step).clamp(0.0, (n - 1) as f64);
    let i = (x.floor() as usize).min(n - 2);
    let w = x - i as f64;
    (1.0 - w) * table[i * levels + j] + w * table[(i + 1) * levels + j]
}

fn soc_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    let span = max - min;
    if span <= 0.0 {
        return vec![min];
    }
    let n = (span / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| if i == n { max } else { min + span * i as f64 / n as f64 })
        .collect()
}

/// Maximises a unimodal function on `[lo, hi]`, also trying `extra`.
fn golden_max(lo: f64, hi: f64, tol: f64, extra: &[f64], f: &mut dyn FnMut(f64) -> Result<f64>) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut best = f64::NEG_INFINITY;
    for &x in extra {
        if (lo..=hi).contains(&x) {
            best = best.max(f(x)?);
        }
    }
    let (mut a, mut b) = (lo, hi);
    if b - a <= tol {
        return Ok(best.max(f(0.5 * (a + b))?));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(best.max(fc).max(fd))
}

fn grid_max(lo: f64, hi: f64, step: f64, f: &mut dyn FnMut(f64) -> Result<f64>) -> Result<f64> {
    let mut best = f(lo)?.max(f(hi)?);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    for i in first..=last {
        best = best.max(f(i as f64 * step)?);
    }
    Ok(best)
}

pub fn solve_dp(inst: &Instance, renewable: &MarkovRenewable, opts: &DpOptions) -> Result<DpSolution> {
    inst.validate()?;
    renewable.validate()?;
    if !(opts.soc_step > 0.0 && opts.soc_step.is_finite()) {
        return Err(Error::domain("SoC grid step must be > 0"));
    }
    match opts.action {
        ActionSearch::GoldenSection { tol } if !(tol > 0.0) => {
            return Err(Error::domain("search tolerance must be > 0"))
        }
        ActionSearch::Grid { step } if !(step > 0.0) => return Err(Error::domain("action grid step must be > 0")),
        _ => {}
    }
    let spec = &inst.battery;
    let horizon = inst.horizon();
    let levels = renewable.levels();
    let span = spec.capacity - spec.min_soc;
    let points = (span / opts.soc_step).ceil() + 1.0;
    let states = (horizon as f64 + 1.0) * points * levels as f64;
    if states > opts.state_cap as f64 {
        let coarser = opts.soc_step * states / opts.state_cap as f64;
        return Err(Error::ResourceGuard {
            states: states.min(usize::MAX as f64) as usize,
            cap: opts.state_cap,
            hint: format!("use a SoC step of at least {coarser:.3e} kWh, a shorter horizon or fewer renewable levels"),
        });
    }
    let grid = soc_grid(spec.min_soc, spec.capacity, opts.soc_step);
    let ns = grid.len();
    let s0 = inst.initial_soc;

    let mut values = vec![Vec::new(); horizon + 1];
    values[horizon] = (0..ns * levels)
        .map(|x| spec.salvage * (grid[x / levels] - s0))
        .collect();

    for t in (0..horizon).rev() {
        let next = &values[t + 1];
        // expected continuation on the grid, indexed by the current level
        let cont: Vec<f64> = if t + 1 == horizon {
            next.clone()
        } else {
            let p = renewable.matrix(t);
            let mut w = vec![0.0; ns * levels];
            for i in 0..ns {
                for j in 0..levels {
                    w[i * levels + j] = p[j].iter().enumerate().map(|(k, q)| q * next[i * levels + k]).sum();
                }
            }
            w
        };
        let fleet = inst.fleet.at(t);
        let tariff = inst.tariff.at(t);
        let rows = try_map_range(opts.exec, ns, |i| -> Result<Vec<f64>> {
            let s = grid[i];
            let lim = spec.clip_limits(BatteryState::new(s));
            let mut row = Vec::with_capacity(levels);
            for (j, &g) in renewable.support.iter().enumerate() {
                let mut obj = |e: f64| -> Result<f64> {
                    let s_next = (s + spec.soc_delta(e)).clamp(spec.min_soc, spec.capacity);
                    Ok(
                        consumption_value(fleet, tariff, g - e)? - inst.degradation_cost * e.abs()
                            + interpolate(&grid, &cont, levels, s_next, j),
                    )
                };
                let best = match opts.action {
                    ActionSearch::GoldenSection { tol } => golden_max(
                        -lim.discharge,
                        lim.charge,
                        tol,
                        &[-lim.discharge, 0.0, lim.charge],
                        &mut obj,
                    )?,
                    ActionSearch::Grid { step } => grid_max(-lim.discharge, lim.charge, step, &mut obj)?,
                };
                row.push(best);
            }
            Ok(row)
        })?;
        values[t] = rows.into_iter().flatten().collect();
    }

    Ok(DpSolution {
        soc_grid: grid,
        support: renewable.support.clone(),
        initial: renewable.initial.clone(),
        values,
        action: opts.action,
    })
}

/// Follows the DP value function on a realised path: at each interval the
/// storage control maximises stage surplus plus expected continuation,
/// with the renewable output snapped to the nearest support level for the
/// transition law.
pub fn run_dp_policy(
    inst: &Instance,
    renewable: &MarkovRenewable,
    sol: &DpSolution,
    g: &[f64],
    tol: f64,
) -> Result<Trajectory> {
    if sol.horizon() != inst.horizon() {
        return Err(Error::domain("DP solution horizon does not match the instance"));
    }
    let spec = &inst.battery;
    let levels = renewable.levels();
    run_policy(inst, g, |c| {
        let j = renewable.nearest(c.g);
        let weights: Vec<f64> = if c.t + 1 == inst.horizon() {
            let mut w = vec![0.0; levels];
            w[j] = 1.0;
            w
        } else {
            renewable.matrix(c.t)[j].clone()
        };
        let cont = |s: f64| -> f64 {
            weights
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(k, p)| p * sol.value_at(c.t + 1, s, k))
                .sum()
        };
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut obj = |e: f64| -> Result<f64> {
            let s_next = (c.state.soc + spec.soc_delta(e)).clamp(spec.min_soc, spec.capacity);
            let v = consumption_value(c.fleet, c.tariff, c.g - e)? - inst.degradation_cost * e.abs() + cont(s_next);
            if v > best.0 {
                best = (v, e);
            }
            Ok(v)
        };
        let lim = c.limits;
        golden_max(
            -lim.discharge,
            lim.charge,
            tol,
            &[-lim.discharge, 0.0, lim.charge],
            &mut obj,
        )?;
        let e = best.1;
        let d = no_storage_consumption(c.fleet, c.tariff, c.g - e)?;
        Ok(Decision::new(d, e, c.g))
    })
}
