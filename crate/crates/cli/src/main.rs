use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bdharq_cli::{
    cmd_analyze, cmd_optimize, cmd_simulate, cmd_sweep_qoe_methods, cmd_sweep_recovery_vs_loss,
    cmd_sweep_recovery_vs_redundancy, cmd_validate, load_config, CliError, ExperimentConfig,
    Overrides, Table,
};
use bdharq_core::{SimMode, TransmissionPlan, XiSource};
use clap::{Parser, Subcommand, ValueEnum};

/// Recovery-rate analytics, QoE planning and Monte Carlo validation for
/// joint buffer-delay / FEC-redundancy tuning.
#[derive(Debug, Parser)]
#[command(name = "bdharq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file; missing keys fall back to built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per point.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Write CSV here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Packet loss rate (also replaces the swept loss rates).
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Redundancy for `analyze` and `simulate`.
    #[arg(long, global = true, default_value_t = 0.25)]
    r: f64,
    /// Buffer delay, in multiples of the RTT, for `analyze` and `simulate`.
    #[arg(long, global = true, default_value_t = 2.0)]
    d: f64,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Slot)]
    mode: Mode,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Slot,
    Timeline,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Source {
    Gaussian,
    Exact,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Loss moments, recovery rates and QoE of one plan.
    Analyze,
    /// Exhaustive (r, d) search; prints the whole grid with the best row flagged.
    Optimize {
        #[arg(long, value_enum, default_value_t = Source::Gaussian)]
        xi_source: Source,
    },
    /// Monte Carlo estimate of one plan's recovery rate.
    Simulate,
    /// Recovery rate vs redundancy for several buffer delays.
    #[command(name = "sweep-fig2")]
    SweepFig2,
    /// Recovery rate vs loss rate for several redundancies.
    #[command(name = "sweep-fig3")]
    SweepFig3,
    /// QoE of the joint search and the DR/DD baselines per loss rate.
    #[command(name = "sweep-qoe")]
    SweepQoe,
    /// Gaussian-vs-exact and MC-vs-exact checks over the full grid.
    Validate,
}

fn emit(table: &Table, out: Option<&PathBuf>) -> Result<(), CliError> {
    let csv = table.to_csv();
    match out {
        Some(path) => fs::write(path, csv)?,
        None => io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    Overrides { p: cli.p, seed: cli.seed, trials: cli.trials }.apply(&mut cfg)?;
    let plan = TransmissionPlan::new(cli.r, cli.d);
    let mode = match cli.mode {
        Mode::Slot => SimMode::Slot,
        Mode::Timeline => SimMode::Timeline,
    };
    let out = cli.out.as_ref();
    let table = match cli.command {
        Command::Analyze => cmd_analyze(&cfg, &plan)?,
        Command::Optimize { xi_source } => cmd_optimize(
            &cfg,
            match xi_source {
                Source::Gaussian => XiSource::Gaussian,
                Source::Exact => XiSource::Exact,
            },
        )?,
        Command::Simulate => cmd_simulate(&cfg, &plan, mode)?,
        Command::SweepFig2 => cmd_sweep_recovery_vs_redundancy(&cfg)?,
        Command::SweepFig3 => cmd_sweep_recovery_vs_loss(&cfg)?,
        Command::SweepQoe => cmd_sweep_qoe_methods(&cfg)?,
        Command::Validate => {
            let v = cmd_validate(&cfg)?;
            emit(&v.table, out)?;
            for line in v.summary() {
                eprintln!("{line}");
            }
            if v.passed() {
                return Ok(());
            }
            let at = if v.gauss_ok() {
                v.worst_mc.map(|w| w.0.to_string())
            } else {
                v.worst_gauss.map(|p| p.to_string())
            };
            return Err(CliError::Validation(format!(
                "bound violated at {}",
                at.unwrap_or_else(|| "-".into())
            )));
        }
    };
    emit(&table, out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(CliError::Usage(format!("--threads: {e}"))),
        },
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
