use std::path::PathBuf;
use std::process::ExitCode;

use andersonlab::{run, Command};
use clap::Parser;

/// Anderson-model eigenvalue statistics with singular disorder.
#[derive(Debug, Parser)]
#[command(name = "andersonlab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args.command, &args.config, args.seed, args.out, args.workers) {
        Ok(manifest) => {
            println!(
                "wrote {} artifacts and manifest.json ({:.2} s)",
                manifest.outputs.len(),
                manifest.wall_clock_seconds
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("andersonlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
