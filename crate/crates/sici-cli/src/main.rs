use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sici_cli::commands::{
    cmd_check, cmd_compile, cmd_count, cmd_diff, cmd_verify, read_input, Failure,
};
use sici_cli::output::Format;

/// Compile and verify local Bayesian-network structure models.
#[derive(Parser)]
#[command(name = "sici", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Materialize the full conditional probability table of a spec.
    Compile {
        /// Spec file, or `-` for standard input.
        spec: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Write the table here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Rescale each embedded table row to sum to one before validating.
        #[arg(long)]
        normalize_rows: bool,
    },
    /// Validate a spec and report its conditional-independence statements.
    Check {
        /// Spec file, or `-` for standard input.
        spec: String,
        /// JSON file with extra surrounding nodes and edges.
        #[arg(long)]
        ambient: Option<PathBuf>,
        /// Row-sum slack accepted when validating embedded tables.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Report parameter counts: direct table vs structured model.
    Count {
        /// Spec file, or `-` for standard input.
        spec: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Write the report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the compiled table against the brute-force joint-distribution
    /// computation.
    Verify {
        /// Spec file, or `-` for standard input.
        spec: String,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        /// Corrupt one entry of the compiled table first (test hook).
        #[arg(long, hide = true)]
        inject_error: bool,
    },
    /// Compare two table artifacts (CSV or JSON).
    Diff {
        /// First table file, or `-` for standard input.
        a: String,
        /// Second table file.
        b: String,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
}

fn run(cli: Cli) -> Result<(String, Option<PathBuf>), Failure> {
    match cli.command {
        Command::Compile { spec, format, output, normalize_rows } => {
            let text = read_input(&spec)?;
            Ok((cmd_compile(&text, format.into(), normalize_rows)?, output))
        }
        Command::Check { spec, ambient, tolerance } => {
            let text = read_input(&spec)?;
            Ok((cmd_check(&text, ambient.as_deref(), tolerance)?, None))
        }
        Command::Count { spec, format, output } => {
            let text = read_input(&spec)?;
            Ok((cmd_count(&text, format.into())?, output))
        }
        Command::Verify { spec, tolerance, inject_error } => {
            let text = read_input(&spec)?;
            Ok((cmd_verify(&text, tolerance, inject_error)?, None))
        }
        Command::Diff { a, b, tolerance } => {
            let text_a = read_input(&a)?;
            let text_b = read_input(&b)?;
            Ok((cmd_diff(&text_a, &text_b, tolerance)?, None))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((text, output)) => {
            match output {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text) {
                        eprintln!("{}: {e}", path.display());
                        return ExitCode::from(1);
                    }
                }
                None => {
                    print!("{text}");
                    let _ = std::io::stdout().flush();
                }
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("{}", failure.message.trim_end());
            ExitCode::from(failure.exit as u8)
        }
    }
}
