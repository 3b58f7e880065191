use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spikesep_cli::config::{parse_band, parse_freqs};
use spikesep_cli::{cmd_bench, cmd_despike, cmd_map, cmd_simulate, CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "spikesep", version, about = "Separate spikes from gamma bursts, map build-up, model pipeline ticks")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Simulation seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write simulated realizations and their ground truth.
    Simulate,
    /// Split a recording into oscillatory and transient parts.
    Despike {
        input: PathBuf,
        /// Target frequency in Hz, or one per channel separated by commas.
        #[arg(long)]
        freq: Option<String>,
    },
    /// Band energy map and build-up detection.
    Map {
        input: PathBuf,
        /// Analysis band as lo:hi in Hz.
        #[arg(long)]
        band: Option<String>,
        /// Recording whose 10-15 Hz band normalises the map (defaults to the input).
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Tick-cost benchmark of the modelled pipeline.
    Bench {
        /// Only this accelerator setting (0 or 2).
        #[arg(long)]
        accel: Option<usize>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Simulate => {
            let files = cmd_simulate(&cfg, &out)?;
            println!("wrote {} realizations to {}", files.len(), out.display());
        }
        Command::Despike { input, freq } => {
            if let Some(f) = freq {
                cfg.target_freqs_hz = Some(parse_freqs(&f)?);
            }
            let d = cmd_despike(&cfg, &input, &out)?;
            for (m, e) in d.masks.iter().zip(&d.max_split_error) {
                println!(
                    "{} Hz: window [{}, {}) scales {:?}, split error {e:e}",
                    m.target_freq_hz(),
                    m.window().start(),
                    m.window().end(),
                    m.scales()
                );
            }
        }
        Command::Map { input, band, reference } => {
            if let Some(b) = band {
                cfg.band_hz = parse_band(&b)?;
            }
            let det = cmd_map(&cfg, &input, reference.as_deref(), &out)?;
            println!("onset {:?}, channels {:?}", det.onset_sample, det.channel_indices);
        }
        Command::Bench { accel } => {
            if accel.is_some() {
                cfg.accelerators = accel;
            }
            let report = cmd_bench(&cfg, &out)?;
            print!("{}", report.to_text(true));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
