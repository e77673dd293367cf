use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use regime_risk::commands::{self, Overrides, Run};
use regime_risk::output::write_all;

#[derive(Parser)]
#[command(name = "regime-risk", version, about = "Entropic risk of commodity claims under regime switching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit OU parameters to a `date,price` CSV.
    Calibrate {
        /// Price file; alternatively use --config with an `ou.calibrate` section.
        #[arg(long, conflicts_with = "config")]
        csv: Option<PathBuf>,
        /// Observation spacing in years [default: 1/252].
        #[arg(long, requires = "csv")]
        dt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate spot, regime and yield paths.
    Simulate(Common),
    /// Per-state risk of the configured claim.
    Risk(Common),
    /// Risk over the horizon and risk-aversion grids.
    Sweep(Common),
    /// Future risk over time for several convenience yields.
    YieldSweep(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides mc.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides mc.n_paths (grids.simulate_paths for `simulate`).
    #[arg(long)]
    paths: Option<usize>,
    /// Cross-check closed forms by Monte Carlo.
    #[arg(long)]
    mc: bool,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for Monte Carlo; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            paths: self.paths,
            mc: self.mc,
            out: self.out.clone(),
            threads: self.threads,
        }
    }

    fn run(&self, command: &str) -> Result<Run> {
        let path = self.config.as_ref().context("--config <file> is required")?;
        Run::load(path, command, &self.overrides())
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (report, out) = match &cli.command {
        Command::Calibrate { csv: Some(csv), dt, common } => {
            let dt = dt.unwrap_or(1.0 / regime_risk_core::series::TRADING_DAYS_PER_YEAR);
            let report = commands::cmd_calibrate(csv, dt, regime_risk_core::series::TRADING_DAYS_PER_YEAR)?;
            (report, common.out.clone().unwrap_or_else(|| PathBuf::from("out")))
        }
        Command::Calibrate { csv: None, common, .. } => {
            let run = common.run("calibrate")?;
            (commands::cmd_calibrate_config(&run)?, run.out_dir)
        }
        Command::Simulate(c) => {
            let run = c.run("simulate")?;
            (commands::cmd_simulate(&run)?, run.out_dir)
        }
        Command::Risk(c) => {
            let run = c.run("risk")?;
            (commands::cmd_risk(&run)?, run.out_dir)
        }
        Command::Sweep(c) => {
            let run = c.run("sweep")?;
            (commands::cmd_sweep(&run)?, run.out_dir)
        }
        Command::YieldSweep(c) => {
            let run = c.run("yield-sweep")?;
            (commands::cmd_yield_sweep(&run)?, run.out_dir)
        }
    };
    let written = write_all(&out, &report.files)?;
    // A closed stdout (e.g. piped into `head`) is not an error.
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(report.summary.as_bytes());
    for path in written {
        let _ = writeln!(stdout, "wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
