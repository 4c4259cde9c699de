use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcone::config::{Overrides, RunConfig};
use qcone::error::CliError;
use qcone::pipeline::{run, Command};
use qcone::synth::{write_scenario, SynthKind};

#[derive(Parser)]
#[command(name = "qcone", version, about = "q-Gaussian forecast cones for index time series")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input series, overriding `data.input`.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate the input, then print a summary.
    IngestCheck(Common),
    /// Write the return, trend and fluctuation series.
    Decompose(Common),
    /// Fit q-Gaussians per horizon and write the parameter curves.
    Fit(Common),
    /// Segment the width curve into zones.
    Zones(Common),
    /// Write the response trend.
    Trend(Common),
    /// Build the forecast cone and simulated paths.
    Forecast(Common),
    /// Score the cone against realized values.
    Score(Common),
    /// Run every stage.
    All(Common),
    /// Write a synthetic series and a matching configuration.
    Synth {
        #[arg(long, value_enum, default_value = "minute")]
        kind: SynthKind,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "synth")]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (command, common) = match cli.command {
        Cmd::Synth { kind, seed, out } => {
            let sc = write_scenario(kind, seed, &out)?;
            eprintln!("synth: {} observations written to {}", sc.series.len(), out.display());
            return Ok(());
        }
        Cmd::IngestCheck(c) => (Command::IngestCheck, c),
        Cmd::Decompose(c) => (Command::Decompose, c),
        Cmd::Fit(c) => (Command::Fit, c),
        Cmd::Zones(c) => (Command::Zones, c),
        Cmd::Trend(c) => (Command::Trend, c),
        Cmd::Forecast(c) => (Command::Forecast, c),
        Cmd::Score(c) => (Command::Score, c),
        Cmd::All(c) => (Command::All, c),
    };
    let overrides = Overrides { seed: common.seed, out: common.out, input: common.input };
    let cfg = RunConfig::load(common.config.as_deref(), &overrides)?;
    let out = run(command, &cfg)?;
    if command == Command::IngestCheck {
        let s = out.series.expect("series");
        println!("observations: {}", s.len());
        println!("resolution_secs: {}", s.resolution_secs());
    }
    for (k, v) in &out.results {
        println!("{k}: {}", toml::Value::try_from(v).map(|v| v.to_string()).unwrap_or_default());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
