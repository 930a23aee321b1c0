use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pqc_cli::report::render;
use pqc_cli::{load_spec, run_suite, Format};

#[derive(Parser)]
#[command(name = "pqc", version, about = "Verification engine for paraquaternionic contact geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites selected by a spec file and report the residuals.
    Verify {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the spec seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the sample count.
        #[arg(long)]
        points: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Verify {
        spec,
        format,
        out,
        seed,
        points,
    } = cli.command;
    let mut spec = match load_spec(&spec) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(k) = points {
        if k == 0 {
            eprintln!("error: --points must be at least 1");
            return ExitCode::from(2);
        }
        spec.sample_count = k;
    }
    for w in &spec.warnings {
        eprintln!("warning: {w}");
    }
    let report = match run_suite(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = render(&report, format);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
