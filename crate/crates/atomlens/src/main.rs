use std::path::PathBuf;
use std::process::ExitCode;

use atomlens::commands::{self, Command, FieldArgs, G2Args, ModelArg, Range, ScanArg, SpectrumArgs};
use atomlens::io::Format;
use atomlens::{CliError, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "atomlens", version, about = "Single-atom free-space coupling models")]
struct Cli {
    /// TOML configuration; built-in experiment defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Scattering probability versus focusing strength.
    Field {
        /// Evaluate only one model (default: both).
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Scan variable: u = w_L/f or the beam NA.
        #[arg(long, value_enum, default_value = "na")]
        scan: ScanArg,
        /// Grid as start:stop:points.
        #[arg(long)]
        range: Option<Range>,
        /// Also report both models at the configured geometry.
        #[arg(long)]
        anchor: bool,
    },
    /// Light shifts of the trapped atom's Zeeman sublevels.
    Stark,
    /// Synthesize a transmission spectrum and fit it (or fit --input).
    Spectrum {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Parametric resamples for an uncertainty cross-check.
        #[arg(long, default_value_t = 0)]
        resample: usize,
    },
    /// Simulate detector streams and histogram g2.
    G2 {
        /// Also write the timestamp streams.
        #[arg(long)]
        streams: bool,
    },
    /// Simulate and reduce the trapping-event sequence at one setting.
    Sequence,
    /// Total transmission of the detection loss chain.
    Losses,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    let command = match cli.command {
        Sub::Field { model, scan, range, anchor } => Command::Field(FieldArgs { model, scan, range, anchor }),
        Sub::Stark => Command::Stark,
        Sub::Spectrum { input, resample } => Command::Spectrum(SpectrumArgs { input, resample }),
        Sub::G2 { streams } => Command::G2(G2Args { write_streams: streams }),
        Sub::Sequence => Command::Sequence,
        Sub::Losses => Command::Losses,
    };
    let outputs = commands::run(&cfg, &command)?;
    for w in &outputs.warnings {
        eprintln!("warning: {w}");
    }
    for line in &outputs.stdout {
        println!("{line}");
    }
    Ok(())
}
