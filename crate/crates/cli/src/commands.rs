//! Experiment drivers behind the subcommands.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::Serialize;

use der_coopt::baselines::{
    perfect_foresight_bound, run_customer_type, run_dp_policy, run_mpc, solve_dp, ActionSearch, CustomerType,
    DpOptions, DpSolution, Forecaster, MarkovRenewable,
};
use der_coopt::exec::{try_map_range, with_jobs, Execution};
use der_coopt::mco::{run_mco, Trajectory};
use der_coopt::policy::thresholds;
use der_coopt::scenario::{
    gap, net_consumption_histogram, rpf_records, sample_paths, surplus_gain_table, utility_net_cost, GapReport,
    RenewableModel,
};
use der_coopt::storage::{A1Status, BatteryState};
use der_coopt::Instance;

use crate::config::{config_err, Config};
use crate::output::{csv_string, write_csv, write_summary, Cell};
use crate::CliError;

/// Golden-section tolerance for the DP-greedy policy.
const DP_POLICY_TOL: f64 = 1e-9;

/// Overrides and runtime settings from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub jobs: Option<usize>,
    pub window: Option<usize>,
    pub out: Option<PathBuf>,
    pub emit_trajectories: bool,
}

impl RunOptions {
    /// Applies the overrides; the result is what the summary echoes.
    fn resolve(&self, cfg: &Config) -> Result<Config, CliError> {
        let mut c = cfg.clone();
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(p) = self.paths {
            c.paths = p;
        }
        if let Some(m) = self.window {
            c.mpc_lookahead = m;
        }
        if let Some(o) = &self.out {
            c.out_dir = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn out_dir(cfg: &Config) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

/// Policies that can be simulated or compared against the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Mco,
    Mpc,
    Dp,
    Customer(CustomerType),
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Mco => f.write_str("mco"),
            Algorithm::Mpc => f.write_str("mpc"),
            Algorithm::Dp => f.write_str("dp"),
            Algorithm::Customer(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "mco" => Ok(Algorithm::Mco),
            "mpc" => Ok(Algorithm::Mpc),
            "dp" => Ok(Algorithm::Dp),
            other => other
                .parse::<CustomerType>()
                .map(Algorithm::Customer)
                .map_err(|_| CliError::Config(format!("unknown policy '{other}'"))),
        }
    }
}

/// Everything a policy needs besides the instance and the path.
struct Shared {
    forecaster: Box<dyn Forecaster>,
    dp: Option<(MarkovRenewable, DpSolution)>,
    peak: Vec<usize>,
    mpc: der_coopt::baselines::MpcOptions,
}

impl Shared {
    fn new(cfg: &Config, inst: &Instance, model: &RenewableModel, algorithms: &[Algorithm]) -> Result<Self, CliError> {
        let dp = if algorithms.contains(&Algorithm::Dp) {
            let chain = model.to_markov(cfg.horizon, cfg.dp.levels).map_err(config_err)?;
            let opts = DpOptions {
                soc_step: cfg.dp.soc_step,
                action: cfg
                    .dp
                    .action_step
                    .map_or(ActionSearch::GoldenSection { tol: DP_POLICY_TOL }, |step| {
                        ActionSearch::Grid { step }
                    }),
                state_cap: cfg.dp.state_cap,
                exec: Execution::Parallel,
            };
            info!(
                "solving DP on {} SoC points x {} levels",
                (inst.battery.capacity / opts.soc_step).ceil(),
                chain.levels()
            );
            let sol = solve_dp(inst, &chain, &opts)?;
            Some((chain, sol))
        } else {
            None
        };
        Ok(Shared {
            forecaster: model.forecaster(cfg.horizon).map_err(config_err)?,
            dp,
            peak: cfg.peak_window.clone(),
            mpc: cfg.mpc_options(),
        })
    }

    fn run(&self, alg: Algorithm, inst: &Instance, g: &[f64]) -> Result<Trajectory, der_coopt::Error> {
        match alg {
            Algorithm::Mco => run_mco(inst, g),
            Algorithm::Mpc => run_mpc(inst, g, self.forecaster.as_ref(), self.mpc),
            Algorithm::Dp => {
                let (chain, sol) = self.dp.as_ref().expect("DP solved up front");
                run_dp_policy(inst, chain, sol, g, DP_POLICY_TOL)
            }
            Algorithm::Customer(c) => run_customer_type(c, inst, g, Some(&self.peak)),
        }
    }
}

fn parse_algorithms(names: &[String]) -> Result<Vec<Algorithm>, CliError> {
    let mut out = Vec::new();
    for n in names {
        let a: Algorithm = n.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

fn check_peak(algs: &[Algorithm], cfg: &Config) -> Result<(), CliError> {
    if algs.contains(&Algorithm::Customer(CustomerType::SolarExporter)) && cfg.peak_window.is_empty() {
        return Err(CliError::Config("solar_exporter needs a non-empty peak_window".into()));
    }
    Ok(())
}

const THRESHOLD_HEADER: [&str; 9] = [
    "t",
    "limits",
    "regime",
    "import_end",
    "full_discharge_end",
    "discharge_end",
    "charge_start",
    "full_charge_start",
    "export_start",
];

/// Threshold table for every interval (or just `t`) with the raw limits
/// and with the limits clipped at the initial SoC. Returns the CSV text;
/// writes `thresholds.csv` when an output directory is given.
pub fn cmd_thresholds(cfg: &Config, t: Option<usize>, out: Option<&Path>) -> Result<String, CliError> {
    let inst = cfg.instance()?;
    let spec = &inst.battery;
    let range: Vec<usize> = match t {
        Some(t) if t >= inst.horizon() => {
            return Err(CliError::Config(format!(
                "interval {t} is beyond the horizon {}",
                inst.horizon()
            )))
        }
        Some(t) => vec![t],
        None => (0..inst.horizon()).collect(),
    };
    let mut rows = Vec::new();
    for t in range {
        for (label, limits) in [
            ("raw", spec.raw_limits()),
            ("clipped", spec.clip_limits(BatteryState::new(inst.initial_soc))),
        ] {
            let mut row: Vec<Cell> = vec![t.into(), label.into()];
            match thresholds(inst.fleet.at(t), inst.tariff.at(t), spec, limits) {
                Ok(th) => {
                    row.push("ok".into());
                    row.extend(th.as_array().map(Cell::from));
                }
                Err(der_coopt::Error::A1Violated { case }) => {
                    row.push(case.label().replace(' ', "_").into());
                    row.extend((0..6).map(|_| Cell::from("")));
                }
                Err(e) => return Err(e.into()),
            }
            rows.push(row);
        }
    }
    if let Some(dir) = out {
        write_csv(&dir.join("thresholds.csv"), &THRESHOLD_HEADER, &rows)?;
    }
    csv_string(&THRESHOLD_HEADER, &rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub policy: String,
    pub paths: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub dp_expected_value: Option<f64>,
}

/// Runs one policy on `paths` sampled renewable paths.
pub fn cmd_simulate(cfg: &Config, policy: &str, opts: &RunOptions) -> Result<SimulateSummary, CliError> {
    let alg: Algorithm = policy.parse()?;
    let cfg = opts.resolve(cfg)?;
    check_peak(&[alg], &cfg)?;
    let dir = out_dir(&cfg);
    with_jobs(opts.jobs, || -> Result<SimulateSummary, CliError> {
        let inst = cfg.instance()?;
        let shared = Shared::new(&cfg, &inst, &cfg.renewable, &[alg])?;
        let paths = sample_paths(&cfg.renewable, cfg.horizon, cfg.paths, cfg.seed, Execution::Parallel)?;
        let trajs = try_map_range(Execution::Parallel, paths.len(), |i| shared.run(alg, &inst, &paths[i]))?;

        let rows: Vec<Vec<Cell>> = trajs
            .iter()
            .enumerate()
            .map(|(i, tr)| {
                vec![
                    i.into(),
                    tr.cumulative_reward.into(),
                    tr.terminal_salvage.into(),
                    tr.final_soc().into(),
                ]
            })
            .collect();
        write_csv(
            &dir.join("rewards.csv"),
            &["path", "cumulative_reward", "terminal_salvage", "final_soc"],
            &rows,
        )?;
        if opts.emit_trajectories {
            let tdir = dir.join("trajectories");
            std::fs::create_dir_all(&tdir)?;
            for (i, tr) in trajs.iter().enumerate() {
                let f = std::fs::File::create(tdir.join(format!("{alg}_path_{i:05}.csv")))?;
                tr.write_csv(std::io::BufWriter::new(f))?;
            }
            if let Some((_, sol)) = &shared.dp {
                let f = std::fs::File::create(dir.join("dp_values.csv"))?;
                sol.write_csv(std::io::BufWriter::new(f))?;
            }
        }
        let rewards: Vec<f64> = trajs.iter().map(|t| t.cumulative_reward).collect();
        let stats = GapReport::new(alg.to_string(), rewards);
        let summary = SimulateSummary {
            policy: alg.to_string(),
            paths: trajs.len(),
            mean_reward: stats.mean,
            std_reward: stats.std,
            dp_expected_value: shared.dp.as_ref().map(|(_, s)| s.expected_value(inst.initial_soc)),
        };
        write_summary(&dir, "simulate", cfg.seed, &cfg, &summary)?;
        Ok(summary)
    })
}

/// One point of the gap sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepLevel {
    pub level: usize,
    /// Shared charge/discharge limit; `None` keeps the configured limits.
    pub limit: Option<f64>,
    pub mean_scale: f64,
    pub std_scale: f64,
}

fn sweep_levels(cfg: &Config) -> Result<Vec<SweepLevel>, CliError> {
    let s = &cfg.sweep;
    let markov = matches!(cfg.renewable, RenewableModel::Markov(_));
    if markov && (!s.mean_scales.is_empty() || !s.std_scales.is_empty()) {
        return Err(CliError::Config(
            "mean/std scale sweeps need a profile or bell renewable model".into(),
        ));
    }
    let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let limits: Vec<Option<f64>> = if s.limits.is_empty() {
        vec![None]
    } else {
        s.limits.iter().copied().map(Some).collect()
    };
    let mut out = Vec::new();
    for &limit in &limits {
        for &mean_scale in &or(&s.mean_scales, 1.0) {
            for &std_scale in &or(&s.std_scales, 1.0) {
                if !(mean_scale >= 0.0 && std_scale >= 0.0) || limit.is_some_and(|l| !(l >= 0.0)) {
                    return Err(CliError::Config("sweep values must be >= 0".into()));
                }
                out.push(SweepLevel {
                    level: out.len(),
                    limit,
                    mean_scale,
                    std_scale,
                });
            }
        }
    }
    Ok(out)
}

fn limit_cell(l: Option<f64>) -> Cell {
    l.map_or(Cell::from(""), Cell::from)
}

fn scaled(model: &RenewableModel, level: &SweepLevel) -> RenewableModel {
    let mut m = model.clone();
    match &mut m {
        RenewableModel::Profile {
            mean_scale, std_scale, ..
        }
        | RenewableModel::Bell {
            mean_scale, std_scale, ..
        } => {
            *mean_scale *= level.mean_scale;
            *std_scale *= level.std_scale;
        }
        RenewableModel::Markov(_) => {}
    }
    m
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSummaryRow {
    pub level: SweepLevel,
    pub algorithm: String,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub max_gap: f64,
    pub mean_reward: f64,
    pub mean_bound: f64,
}

/// Gaps of every configured algorithm to the perfect-foresight bound over
/// the sweep grid. Writes `gap_report.csv` (one row per level, path and
/// algorithm) and `gap_summary.csv` (one row per level and algorithm).
pub fn cmd_gap(cfg: &Config, opts: &RunOptions) -> Result<Vec<GapSummaryRow>, CliError> {
    let cfg = opts.resolve(cfg)?;
    let algs = parse_algorithms(&cfg.algorithms)?;
    if algs.len() < 2 {
        return Err(CliError::Config("gap needs at least two distinct algorithms".into()));
    }
    check_peak(&algs, &cfg)?;
    let levels = sweep_levels(&cfg)?;
    let dir = out_dir(&cfg);
    with_jobs(opts.jobs, || -> Result<Vec<GapSummaryRow>, CliError> {
        let mut report = Vec::new();
        let mut summary = Vec::new();
        for lv in &levels {
            let mut inst = cfg.instance()?;
            if let Some(l) = lv.limit {
                inst.battery = inst.battery.with_limits(l, l).map_err(config_err)?;
            }
            let model = scaled(&cfg.renewable, lv);
            info!(
                "gap level {}: limit {:?}, mean x{}, std x{}",
                lv.level, lv.limit, lv.mean_scale, lv.std_scale
            );
            let shared = Shared::new(&cfg, &inst, &model, &algs)?;
            let paths = sample_paths(&model, cfg.horizon, cfg.paths, cfg.seed, Execution::Parallel)?;
            let per_path = try_map_range(Execution::Parallel, paths.len(), |i| -> Result<_, CliError> {
                let g = &paths[i];
                let bound = perfect_foresight_bound(&inst, g)
                    .map_err(|e| CliError::Numeric(format!("bound failed on path {i}: {e}")))?;
                let mut out = Vec::with_capacity(algs.len());
                for &a in &algs {
                    let r = shared.run(a, &inst, g)?.cumulative_reward;
                    let gp = gap(r, bound).map_err(|e| CliError::Numeric(format!("path {i}: {e}")))?;
                    out.push((r, gp));
                }
                Ok((bound, out))
            })?;
            for (k, &a) in algs.iter().enumerate() {
                let gaps: Vec<f64> = per_path.iter().map(|p| p.1[k].1).collect();
                let n = per_path.len() as f64;
                for (i, p) in per_path.iter().enumerate() {
                    report.push(vec![
                        lv.level.into(),
                        limit_cell(lv.limit),
                        lv.mean_scale.into(),
                        lv.std_scale.into(),
                        i.into(),
                        a.to_string().into(),
                        p.1[k].0.into(),
                        p.0.into(),
                        p.1[k].1.into(),
                    ]);
                }
                let r = GapReport::new(a.to_string(), gaps);
                summary.push(GapSummaryRow {
                    level: *lv,
                    algorithm: a.to_string(),
                    mean_gap: r.mean,
                    std_gap: r.std,
                    max_gap: r.max(),
                    mean_reward: per_path.iter().map(|p| p.1[k].0).sum::<f64>() / n,
                    mean_bound: per_path.iter().map(|p| p.0).sum::<f64>() / n,
                });
            }
        }
        write_csv(
            &dir.join("gap_report.csv"),
            &[
                "level",
                "limit",
                "mean_scale",
                "std_scale",
                "path",
                "algorithm",
                "reward",
                "bound",
                "gap_percent",
            ],
            &report,
        )?;
        let rows: Vec<Vec<Cell>> = summary
            .iter()
            .map(|s| {
                vec![
                    s.level.level.into(),
                    limit_cell(s.level.limit),
                    s.level.mean_scale.into(),
                    s.level.std_scale.into(),
                    s.algorithm.clone().into(),
                    s.mean_gap.into(),
                    s.std_gap.into(),
                    s.max_gap.into(),
                    s.mean_reward.into(),
                    s.mean_bound.into(),
                ]
            })
            .collect();
        write_csv(
            &dir.join("gap_summary.csv"),
            &[
                "level",
                "limit",
                "mean_scale",
                "std_scale",
                "algorithm",
                "mean_gap_percent",
                "std_gap_percent",
                "max_gap_percent",
                "mean_reward",
                "mean_bound",
            ],
            &rows,
        )?;
        write_summary(&dir, "gap", cfg.seed, &cfg, &summary)?;
        Ok(summary)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub gains: Vec<der_coopt::scenario::SurplusGain>,
    pub net_zero_fraction: BTreeMap<CustomerType, f64>,
}

/// Runs every customer type on shared paths and writes
/// `surplus_gains.csv`, `z_histogram.csv`, `z_net_zero.csv`, `rpf.csv`
/// and `net_cost.csv`.
pub fn cmd_compare(cfg: &Config, opts: &RunOptions) -> Result<CompareSummary, CliError> {
    let cfg = opts.resolve(cfg)?;
    let types = CustomerType::ALL;
    if cfg.peak_window.is_empty() {
        return Err(CliError::Config(
            "compare runs solar_exporter and needs a non-empty peak_window".into(),
        ));
    }
    let dir = out_dir(&cfg);
    with_jobs(opts.jobs, || -> Result<CompareSummary, CliError> {
        let inst = cfg.instance()?;
        let paths = sample_paths(&cfg.renewable, cfg.horizon, cfg.paths, cfg.seed, Execution::Parallel)?;
        let mut trajs: BTreeMap<CustomerType, Vec<Trajectory>> = BTreeMap::new();
        for c in types {
            let t = try_map_range(Execution::Parallel, paths.len(), |i| {
                run_customer_type(c, &inst, &paths[i], Some(&cfg.peak_window))
            })?;
            trajs.insert(c, t);
        }

        let rewards = trajs
            .iter()
            .map(|(c, t)| (*c, t.iter().map(|x| x.cumulative_reward).collect()))
            .collect();
        let gains = surplus_gain_table(&rewards)?;
        let rows: Vec<Vec<Cell>> = gains
            .iter()
            .map(|g| vec![g.customer.label().into(), g.mean_reward.into(), g.gain_percent.into()])
            .collect();
        write_csv(
            &dir.join("surplus_gains.csv"),
            &["customer", "mean_reward", "gain_percent"],
            &rows,
        )?;

        let mut hist_rows = Vec::new();
        let mut zero_rows = Vec::new();
        let mut net_zero_fraction = BTreeMap::new();
        for (c, t) in &trajs {
            let h = net_consumption_histogram(t, cfg.histogram_bin)?;
            for (centre, count) in &h.bins {
                hist_rows.push(vec![
                    c.label().into(),
                    (*centre).into(),
                    (*count).into(),
                    (*count as f64 / h.total as f64).into(),
                ]);
            }
            zero_rows.push(vec![
                c.label().into(),
                h.net_zero.into(),
                h.total.into(),
                h.net_zero_fraction().into(),
            ]);
            net_zero_fraction.insert(*c, h.net_zero_fraction());
        }
        write_csv(
            &dir.join("z_histogram.csv"),
            &["customer", "bin_center", "count", "fraction"],
            &hist_rows,
        )?;
        write_csv(
            &dir.join("z_net_zero.csv"),
            &["customer", "net_zero", "total", "fraction"],
            &zero_rows,
        )?;

        let mut rpf_rows = Vec::new();
        for (c, t) in &trajs {
            let s = rpf_records(t, cfg.day_length)?;
            for (h, m) in s.mean_by_interval.iter().enumerate() {
                rpf_rows.push(vec![c.label().into(), h.into(), (*m).into()]);
            }
        }
        write_csv(
            &dir.join("rpf.csv"),
            &["customer", "interval_of_day", "mean_export"],
            &rpf_rows,
        )?;

        let baseline = &trajs[&CustomerType::Consumer];
        let mut cost_rows = Vec::new();
        for (c, t) in trajs.iter().filter(|(c, _)| **c != CustomerType::Consumer) {
            let n = t.len() as f64;
            let mut acc = vec![[0.0; 3]; cfg.horizon];
            for (der, base) in t.iter().zip(baseline) {
                let s = utility_net_cost(der, base, &inst.tariff)?;
                for (k, a) in acc.iter_mut().enumerate() {
                    a[0] += s.bill_savings[k];
                    a[1] += s.avoided_value[k];
                    a[2] += s.net_cost[k];
                }
            }
            for (k, a) in acc.iter().enumerate() {
                cost_rows.push(vec![
                    c.label().into(),
                    k.into(),
                    (a[0] / n).into(),
                    (a[1] / n).into(),
                    (a[2] / n).into(),
                ]);
            }
        }
        write_csv(
            &dir.join("net_cost.csv"),
            &[
                "customer",
                "t",
                "mean_bill_savings",
                "mean_avoided_value",
                "mean_net_cost",
            ],
            &cost_rows,
        )?;

        let summary = CompareSummary {
            gains,
            net_zero_fraction,
        };
        write_summary(&dir, "compare", cfg.seed, &cfg, &summary)?;
        Ok(summary)
    })
}

/// A1 status of a config, for callers that want it without diagnostics text.
pub fn a1_status(cfg: &Config) -> Result<A1Status, CliError> {
    Ok(cfg.instance()?.a1_status())
}
