use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conflab_cli::{configure_threads, emit, load, run_file, ConfigError, Format, Overrides};

#[derive(Parser)]
#[command(name = "conflab", version, about = "Verify conformal-geometry integral identities numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a scenario file.
    Verify {
        file: PathBuf,
        /// Grid levels for every scenario, e.g. `2,3,4`.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        /// Identity tolerance for every scenario.
        #[arg(long)]
        tol: Option<f64>,
        /// `text` or `machine` (JSON).
        #[arg(long)]
        format: Option<Format>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn verify(
    file: PathBuf,
    levels: Option<Vec<usize>>,
    tol: Option<f64>,
    format: Option<Format>,
    out: Option<PathBuf>,
) -> Result<i32, ConfigError> {
    configure_threads()?;
    let scenarios = load(&file)?;
    let format = format.or(scenarios.format).unwrap_or(Format::Text);
    let report = run_file(&scenarios, &Overrides { levels, tol })?;
    let rendered = emit(&report, format);
    match out {
        Some(path) => {
            std::fs::write(&path, rendered).map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))?
        }
        None => print!("{rendered}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Verify { file, levels, tol, format, out } = cli.command;
    match verify(file, levels, tol, format, out) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
