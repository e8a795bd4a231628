use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imrc_cli::{cmd_dof, cmd_montecarlo, cmd_paper_fig, cmd_sweep, parse_window, CliError, ExperimentConfig};

/// Sum-rate sweeps and degrees-of-freedom estimates for the interference
/// channel with a MIMO relay.
#[derive(Debug, Parser)]
#[command(name = "imrc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep every configured scheme over the SNR grid on one channel.
    Sweep {
        config: PathBuf,
        /// Also write sweep_long.csv.
        #[arg(long)]
        long: bool,
    },
    /// Reproduce the two-user example figure.
    PaperFig {
        #[arg(long, default_value = "paper-fig")]
        out: PathBuf,
        /// Add the comparison schemes (coherent, symmetric, relay-free, half-duplex).
        #[arg(long)]
        baselines: bool,
        #[arg(long)]
        long: bool,
    },
    /// Average each scheme over random channel realizations.
    Montecarlo {
        config: PathBuf,
        /// Worker threads (defaults to the config value, then all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Refit slopes from an existing sweep.csv.
    Dof {
        csv: PathBuf,
        #[arg(long, value_name = "LO:HI")]
        window: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep { config, long } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.long_format |= long;
            let outcome = cmd_sweep(&cfg)?;
            for (label, entry) in &outcome.dof {
                match entry.slope() {
                    Some(s) => eprintln!("{label}: slope {s:.4}"),
                    None => eprintln!("{label}: no slope"),
                }
            }
            eprintln!("wrote {}", outcome.output_dir.display());
        }
        Command::PaperFig { out, baselines, long } => {
            let summary = cmd_paper_fig(&out, baselines, long)?;
            eprintln!(
                "standard form a12 = {}, a21 = {}",
                summary.standard_form.a12, summary.standard_form.a21
            );
            for (label, entry) in &summary.dof {
                if let Some(s) = entry.slope() {
                    eprintln!("{label}: slope {s:.4}");
                }
            }
            eprintln!("wrote {}", out.display());
        }
        Command::Montecarlo { config, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            let results = cmd_montecarlo(&cfg, workers)?;
            for r in &results {
                eprintln!(
                    "{}: mean slope {} over {} trials, {} failures",
                    r.scheme,
                    r.slope_mean().map_or("n/a".into(), |s| format!("{s:.4}")),
                    r.slopes.len(),
                    r.failures
                );
            }
            eprintln!("wrote {}", cfg.output_dir.display());
        }
        Command::Dof { csv, window } => {
            let window = parse_window(&window)?;
            let entries = cmd_dof(&csv, window)?;
            let text = serde_json::to_string_pretty(&entries).map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
