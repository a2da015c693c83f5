use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tensor_qpt::sweep::{render, run_sweep_on_threads, Format, SweepConfig};
use tensor_qpt::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_CAPACITY: u8 = 2;

#[derive(Parser)]
#[command(name = "tensor-qpt", version, about = "Average-case complexity sweeps for tensor-product problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config.
    Run {
        config: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Exit with status 2 if any sweep point ran out of capacity.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn run(config: PathBuf, output: Option<PathBuf>, format: Format, threads: usize, strict: bool) -> Result<u8, Error> {
    let config = SweepConfig::from_path(&config)?;
    let result = run_sweep_on_threads(&config, threads)?;
    let text = render(&result, format)?;
    match output {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    let failures = result.complexity.iter().filter(|r| r.capacity_exhausted).count();
    if failures > 0 {
        eprintln!("warning: {failures} sweep point(s) exhausted engine capacity");
        if strict {
            return Ok(EXIT_CAPACITY);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let Command::Run {
        config,
        output,
        format,
        threads,
        strict,
    } = cli.command;
    match run(config, output, format.into(), threads, strict) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
