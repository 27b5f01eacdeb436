//! Command-line front end: sweeps, timing, training and the selftest, all
//! driven by a sectioned key=value config file and a master seed.

use clap::{Parser, Subcommand};
use hbf::harness::{
    parse_config, run_ber_sweep, run_rate_sweep, run_selftest, run_timing, run_train,
    HarnessConfig,
};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hbf",
    about = "Hybrid beamforming laboratory: baselines, learned designs, sweeps"
)]
struct Cli {
    /// Sectioned key=value config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; every sweep point derives its own stream from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean spectral efficiency over the SNR / CSI-error grid.
    RateSweep,
    /// QPSK bit-error rate over the same grid.
    BerSweep,
    /// Wall-clock decomposition of each algorithm's design step.
    Timing,
    /// Train the learned strategy across channel realizations.
    Train {
        /// Where to store the trained networks.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Quick end-to-end sanity check.
    Selftest,
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let config_text = match &cli.config {
        Some(path) => fs::read_to_string(path)?,
        None => String::new(),
    };
    let cfg: HarnessConfig = parse_config(&config_text)?;

    let output = match cli.command {
        Command::RateSweep => run_rate_sweep(&cfg, &config_text, cli.seed, cli.threads)?,
        Command::BerSweep => run_ber_sweep(&cfg, &config_text, cli.seed, cli.threads)?,
        Command::Timing => run_timing(&cfg, &config_text, cli.seed)?,
        Command::Train { checkpoint } => {
            let (csv, strategy) = run_train(&cfg, &config_text, cli.seed)?;
            if let Some(path) = checkpoint {
                let agent = strategy
                    .agent()
                    .ok_or("training produced no agent")?;
                let mut file = fs::File::create(&path)?;
                agent.write_checkpoint(&mut file)?;
            }
            csv
        }
        Command::Selftest => run_selftest(cli.seed)?,
    };

    match &cli.out {
        Some(path) => fs::write(path, output)?,
        None => print!("{output}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
