use abrsim_cli::commands::{
    cmd_export_netem, cmd_gen_trace, cmd_validate, ExportNetemArgs, GenTraceArgs, ValidateArgs,
};
use abrsim_cli::experiment::{cmd_run, RunArgs};
use clap::{Parser, Subcommand};

/// Deterministic benchmark harness for adaptive-streaming rate adaptation.
#[derive(Parser)]
#[command(name = "abrsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate adaptation logics over a trace and write the result matrix.
    Run(RunArgs),
    /// Generate a reference-style bandwidth trace file.
    GenTrace(GenTraceArgs),
    /// Convert a trace into a tc/netem shaping script.
    ExportNetem(ExportNetemArgs),
    /// Check trace/ladder/parameter files for well-formedness.
    Validate(ValidateArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::GenTrace(args) => cmd_gen_trace(&args),
        Command::ExportNetem(args) => cmd_export_netem(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
