use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tripoint_cli::{compare, run, Overrides};

#[derive(Parser)]
#[command(
    name = "tripoint",
    about = "Run the common-solution projection iteration from a JSON configuration",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and run one configuration, writing a trace CSV and a
    /// summary JSON.
    Run(CommonArgs),
    /// Run the two scheme variants named in the config over one problem and
    /// write paired traces with a deviation column.
    Compare(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Emit validation reports and stop before iterating.
    #[arg(long)]
    validate_only: bool,
    /// Run even when validation reports failures.
    #[arg(long)]
    force: bool,
    /// Override the configured iteration budget.
    #[arg(long)]
    max_iters: Option<u32>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trace output path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Override the summary output path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            validate_only: self.validate_only,
            force: self.force,
            max_iters: self.max_iters,
            seed: self.seed,
            trace: self.trace.clone(),
            summary: self.summary.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(&args.config, &args.overrides()),
        Command::Compare(args) => compare(&args.config, &args.overrides()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code as u8)
        }
    }
}
