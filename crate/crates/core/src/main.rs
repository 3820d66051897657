use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bosonic_vmc::cli::commands::{cmd_ed, cmd_fit, cmd_measure, cmd_optimize, FitMode, FitOptions, OptimizeOptions};
use bosonic_vmc::cli::config::defaults_toml;
use bosonic_vmc::cli::{exit, exit_code, THREADS_ENV};
use bosonic_vmc::estimators::{CriticalExponents, LogTerm};
use bosonic_vmc::Error;

#[derive(Parser)]
#[command(name = "bosonic-vmc", version, about = "Neural-network VMC for the Bose-Hubbard model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the wavefunction with staged stochastic reconfiguration.
    Optimize {
        config: PathBuf,
        /// Run directory, overriding `output.directory`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Continue from the latest checkpoint in the run directory.
        #[arg(long)]
        resume: bool,
    },
    /// Estimate observables of a trained checkpoint.
    Measure {
        config: PathBuf,
        checkpoint: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact diagonalization of the configured model.
    Ed {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit finite-size scaling, entropy scaling or a data collapse to CSV data.
    Fit {
        #[arg(value_enum)]
        mode: Mode,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        beta_over_nu: Option<f64>,
        #[arg(long)]
        inv_nu: Option<f64>,
        /// `absent`, `free`, or a fixed coefficient.
        #[arg(long, default_value = "free")]
        log_term: String,
        /// Critical coupling for the collapse; fitted when omitted.
        #[arg(long)]
        critical: Option<f64>,
    },
    /// Print the default configuration.
    Defaults,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Scaling,
    Entropy,
    Collapse,
}

fn parse_log_term(s: &str) -> Result<LogTerm, Error> {
    match s {
        "absent" => Ok(LogTerm::Absent),
        "free" => Ok(LogTerm::Free),
        other => other
            .parse::<f64>()
            .map(LogTerm::Fixed)
            .map_err(|_| Error::Config(format!("log term must be absent, free or a number, got {other}"))),
    }
}

fn init_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {value}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    init_threads()?;
    match cli.command {
        Command::Optimize { config, output, resume } => {
            let s = cmd_optimize(&OptimizeOptions { config, output, resume })?;
            println!(
                "E/JL^d = {:.6} +- {:.6}  VarE = {:.4e}  vscore = {:.4e}  acceptance = {:.3}",
                s.energy_per_site,
                s.energy_error / s.n_sites as f64,
                s.variance,
                s.vscore,
                s.acceptance
            );
        }
        Command::Measure { config, checkpoint, output } => {
            let r = cmd_measure(&config, &checkpoint, output.as_deref())?;
            println!(
                "E = {:.6} +- {:.6}  rho0 = {:.5} +- {:.5}",
                r.energy.mean, r.energy.error, r.condensate_fraction.mean, r.condensate_fraction.error
            );
        }
        Command::Ed { config, output } => {
            let r = cmd_ed(&config, output.as_deref())?;
            println!("dim = {}  E0 = {:.12}  rho0 = {:.6}", r.dimension, r.ground_energy, r.condensate_fraction);
        }
        Command::Fit {
            mode,
            inputs,
            output,
            beta_over_nu,
            inv_nu,
            log_term,
            critical,
        } => {
            let base = CriticalExponents::default();
            let opts = FitOptions {
                exponents: CriticalExponents {
                    beta_over_nu: beta_over_nu.unwrap_or(base.beta_over_nu),
                    inv_nu: inv_nu.unwrap_or(base.inv_nu),
                },
                log_term: Some(parse_log_term(&log_term)?),
                critical,
            };
            let mode = match mode {
                Mode::Scaling => FitMode::Scaling,
                Mode::Entropy => FitMode::Entropy,
                Mode::Collapse => FitMode::Collapse,
            };
            cmd_fit(mode, &inputs, &output, &opts)?;
            println!("wrote {}", output.display());
        }
        Command::Defaults => print!("{}", defaults_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
