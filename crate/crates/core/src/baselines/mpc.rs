//! Receding-horizon control with point forecasts.
//!
//! At every interval a deterministic window problem is built from the
//! realised renewable output and forecasts of the next few intervals, the
//! relaxed window program is solved, and only the first interval's
//! decision is applied. The window ends with the salvage value of the SoC
//! change over the window.

use serde::{Deserialize, Serialize};

use super::bound::solve_relaxed;
use super::markov::Forecaster;
use crate::mco::{run_policy, Trajectory};
use crate::policy::Decision;
use crate::{Error, Instance, Result};

/// How the lookahead `M` maps to a window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowConvention {
    /// The current interval plus `M - 1` forecasts.
    #[default]
    IncludesCurrent,
    /// The current interval plus `M` forecasts.
    CurrentPlusLookahead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpcOptions {
    pub lookahead: usize,
    #[serde(default)]
    pub convention: WindowConvention,
}

impl MpcOptions {
    pub fn new(lookahead: usize) -> Self {
        MpcOptions {
            lookahead,
            convention: WindowConvention::default(),
        }
    }

    fn window_len(&self) -> usize {
        match self.convention {
            WindowConvention::IncludesCurrent => self.lookahead,
            WindowConvention::CurrentPlusLookahead => self.lookahead + 1,
        }
    }
}

pub fn run_mpc(inst: &Instance, g: &[f64], forecaster: &dyn Forecaster, opts: MpcOptions) -> Result<Trajectory> {
    if opts.lookahead == 0 {
        return Err(Error::domain("MPC lookahead must be >= 1"));
    }
    let horizon = inst.horizon();
    run_policy(inst, g, |c| {
        let len = opts.window_len().min(horizon - c.t);
        let mut path = Vec::with_capacity(len);
        path.push(c.g);
        path.extend(forecaster.forecast(c.t, c.g, len - 1).into_iter().map(|x| x.max(0.0)));
        let window = inst.window(c.t, len, c.state.soc);
        let sol = solve_relaxed(&window, &path)?;
        let e = sol.net_control(0).clamp(-c.limits.discharge, c.limits.charge);
        Ok(Decision::new(sol.d[0].clone(), e, c.g))
    })
}
