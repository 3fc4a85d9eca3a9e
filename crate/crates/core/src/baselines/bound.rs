//! Perfect-foresight upper bound.
//!
//! With the whole renewable path known the horizon problem is a concave
//! program once charging and discharging get separate variables, which
//! drops the complementarity between them. Imports and exports are split
//! the same way so the payment becomes linear. The result is a QP:
//!
//! ```text
//! max  sum_t [ sum_k (a_k d_tk - b_k d_tk^2 / 2) - r_t i_t + x_t o_t - fixed_t - c (ch_t + dis_t) ]
//!      + salvage * sum_t (tau ch_t - dis_t / rho)
//! s.t. sum_k d_tk + ch_t - dis_t - g_t = i_t - o_t
//!      min_soc <= s0 + sum_{u<=t} (tau ch_u - dis_u / rho) <= capacity
//!      0 <= d_tk <= min(cap_k, a_k / b_k), 0 <= ch_t <= charge_limit,
//!      0 <= dis_t <= discharge_limit, i_t, o_t >= 0
//! ```
//!
//! It is solved with the Clarabel interior-point solver.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use serde::Serialize;

use crate::{Error, Instance, Result};

const SOLVER_TOL: f64 = 1e-10;

/// Optimal relaxed schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSolution {
    pub value: f64,
    pub d: Vec<Vec<f64>>,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    /// SoC after each interval under the relaxed dynamics.
    pub soc: Vec<f64>,
    pub iterations: u32,
}

impl BoundSolution {
    /// Net storage control `charge - discharge` in interval `t`.
    pub fn net_control(&self, t: usize) -> f64 {
        self.charge[t] - self.discharge[t]
    }
}

/// Reward of the relaxed perfect-foresight optimum on `g`.
pub fn perfect_foresight_bound(inst: &Instance, g: &[f64]) -> Result<f64> {
    Ok(solve_relaxed(inst, g)?.value)
}

pub fn solve_relaxed(inst: &Instance, g: &[f64]) -> Result<BoundSolution> {
    inst.validate()?;
    inst.check_path(g)?;
    let horizon = g.len();
    let k = inst.fleet.devices();
    let b = &inst.battery;
    let width = k + 4;
    let n = horizon * width;
    let d_ix = |t: usize, j: usize| t * width + j;
    let ch_ix = |t: usize| t * width + k;
    let dis_ix = |t: usize| t * width + k + 1;
    let imp_ix = |t: usize| t * width + k + 2;
    let exp_ix = |t: usize| t * width + k + 3;

    let mut p_diag = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut upper = vec![f64::INFINITY; n];
    let mut fixed = 0.0;
    for t in 0..horizon {
        let fleet = inst.fleet.at(t);
        let tariff = inst.tariff.at(t);
        for (j, dev) in fleet.devices().iter().enumerate() {
            let u = dev
                .utility
                .quadratic()
                .ok_or_else(|| Error::domain("bound needs quadratic utilities"))?;
            p_diag[d_ix(t, j)] = u.beta;
            q[d_ix(t, j)] = -u.alpha;
            upper[d_ix(t, j)] = dev.cap.min(u.satiation());
        }
        q[ch_ix(t)] = -b.salvage * b.charge_eff + inst.degradation_cost;
        q[dis_ix(t)] = b.salvage / b.discharge_eff + inst.degradation_cost;
        q[imp_ix(t)] = tariff.retail;
        q[exp_ix(t)] = -tariff.export;
        upper[ch_ix(t)] = b.charge_limit;
        upper[dis_ix(t)] = b.discharge_limit;
        fixed += tariff.fixed;
    }

    let (mut rows, mut cols, mut vals, mut rhs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut m = 0;
    // energy balance
    for t in 0..horizon {
        for j in 0..k {
            rows.push(m);
            cols.push(d_ix(t, j));
            vals.push(1.0);
        }
        for (c, v) in [(ch_ix(t), 1.0), (dis_ix(t), -1.0), (imp_ix(t), -1.0), (exp_ix(t), 1.0)] {
            rows.push(m);
            cols.push(c);
            vals.push(v);
        }
        rhs.push(g[t]);
        m += 1;
    }
    let zero_rows = m;
    // SoC band, both sides, for every prefix
    for t in 0..horizon {
        for sign in [1.0, -1.0] {
            for u in 0..=t {
                rows.extend([m, m]);
                cols.extend([ch_ix(u), dis_ix(u)]);
                vals.extend([sign * b.charge_eff, -sign / b.discharge_eff]);
            }
            rhs.push(if sign > 0.0 {
                b.capacity - inst.initial_soc
            } else {
                inst.initial_soc - b.min_soc
            });
            m += 1;
        }
    }
    // boxes
    for (j, &ub) in upper.iter().enumerate() {
        rows.push(m);
        cols.push(j);
        vals.push(-1.0);
        rhs.push(0.0);
        m += 1;
        if ub.is_finite() {
            rows.push(m);
            cols.push(j);
            vals.push(1.0);
            rhs.push(ub);
            m += 1;
        }
    }

    let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
    let p = CscMatrix::new_from_triplets(n, n, (0..n).collect(), (0..n).collect(), p_diag);
    let cones = [
        SupportedConeT::ZeroConeT(zero_rows),
        SupportedConeT::NonnegativeConeT(m - zero_rows),
    ];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(SOLVER_TOL)
        .tol_gap_rel(SOLVER_TOL)
        .tol_feas(1e-10)
        .max_iter(200)
        .build()
        .map_err(|e| Error::Numeric(format!("solver settings: {e}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &rhs, &cones, settings)
        .map_err(|e| Error::Numeric(format!("solver setup: {e}")))?;
    solver.solve();
    let sol = &solver.solution;
    if !matches!(sol.status, SolverStatus::Solved | SolverStatus::AlmostSolved) {
        return Err(Error::Numeric(format!(
            "perfect-foresight QP ended with status {:?} after {} iterations (primal residual {:e}, dual residual {:e})",
            sol.status, sol.iterations, sol.r_prim, sol.r_dual
        )));
    }
    let x = &sol.x;
    let clamp = |j: usize| x[j].clamp(0.0, upper[j]);
    let d = (0..horizon)
        .map(|t| (0..k).map(|j| clamp(d_ix(t, j))).collect())
        .collect();
    let charge: Vec<f64> = (0..horizon).map(|t| clamp(ch_ix(t))).collect();
    let discharge: Vec<f64> = (0..horizon).map(|t| clamp(dis_ix(t))).collect();
    let mut soc = Vec::with_capacity(horizon);
    let mut s = inst.initial_soc;
    for t in 0..horizon {
        s += b.charge_eff * charge[t] - discharge[t] / b.discharge_eff;
        soc.push(s);
    }
    Ok(BoundSolution {
        value: -sol.obj_val - fixed,
        d,
        charge,
        discharge,
        soc,
        iterations: sol.iterations,
    })
}
