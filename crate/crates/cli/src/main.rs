use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use der_coopt_cli::{cmd_compare, cmd_gap, cmd_simulate, cmd_thresholds, CliError, Config, RunOptions};

#[derive(Parser)]
#[command(
    name = "der-coopt",
    version,
    about = "Co-optimize flexible demand and storage under net metering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `out_dir` from the config, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of renewable paths.
    #[arg(long)]
    paths: Option<usize>,
    /// MPC lookahead.
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print and write the threshold table.
    Thresholds {
        #[command(flatten)]
        common: Common,
        /// Single interval to report.
        #[arg(long)]
        t: Option<usize>,
    },
    /// Run one policy over sampled paths.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// mco, mpc, dp or a customer type.
        #[arg(long, default_value = "mco")]
        policy: String,
        /// Also write per-path trajectories.
        #[arg(long)]
        emit_trajectories: bool,
    },
    /// Gaps of the configured algorithms to the perfect-foresight bound.
    Gap {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare all customer types on shared paths.
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
}

fn options(run: &RunArgs, emit_trajectories: bool) -> RunOptions {
    RunOptions {
        seed: run.seed,
        paths: run.paths,
        jobs: run.common.jobs,
        window: run.window,
        out: run.common.out.clone(),
        emit_trajectories,
    }
}

fn load(common: &Common) -> Result<Config, CliError> {
    let cfg = Config::load(&common.config)?;
    for line in cfg.diagnostics()? {
        log::info!("{line}");
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Thresholds { common, t } => {
            let cfg = load(&common)?;
            let dir = common
                .out
                .clone()
                .or(cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            print!("{}", cmd_thresholds(&cfg, t, Some(&dir))?);
        }
        Command::Simulate {
            run,
            policy,
            emit_trajectories,
        } => {
            let cfg = load(&run.common)?;
            let s = cmd_simulate(&cfg, &policy, &options(&run, emit_trajectories))?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::Gap { run } => {
            let cfg = load(&run.common)?;
            for r in cmd_gap(&cfg, &options(&run, false))? {
                println!(
                    "level {} {:>12} mean {:+.6}% std {:.6}% max {:+.6}%",
                    r.level.level, r.algorithm, r.mean_gap, r.std_gap, r.max_gap
                );
            }
        }
        Command::Compare { run } => {
            let cfg = load(&run.common)?;
            let s = cmd_compare(&cfg, &options(&run, false))?;
            for g in &s.gains {
                println!(
                    "{:>14} mean {:.6} gain {:+.3}%",
                    g.customer.label(),
                    g.mean_reward,
                    g.gain_percent
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DER_COOPT_LOG", "info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
