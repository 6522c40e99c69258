use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use monge_slit::cli::{self, Command, OutputFormat, EXIT_CONFIG};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Single,
    SweepK,
    Converge,
    BoundCheck,
    Selftest,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Single => Command::Single,
            CommandArg::SweepK => Command::SweepK,
            CommandArg::Converge => Command::Converge,
            CommandArg::BoundCheck => Command::BoundCheck,
            CommandArg::Selftest => Command::Selftest,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Measurement-disturbance experiments on a twin-slit state.
#[derive(Debug, Parser)]
#[command(name = "monge-slit", version)]
struct Args {
    command: CommandArg,
    /// JSON run manifest
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides the manifest's output_path. Stdout if neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let mut manifest = match cli::parse_manifest_with_command(&text, Some(args.command.into())) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Some(out) = args.out {
        manifest.output_path = Some(out);
    }
    if let Some(format) = args.format {
        manifest.output_format = match format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    ExitCode::from(cli::execute(&manifest) as u8)
}
