use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use philap::run::{run, Command, RunArgs};

#[derive(Parser)]
#[command(name = "philap", version, about = "Singular phi-Laplacian boundary value problems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve and write the solution CSV plus a report.
    Solve(Common),
    /// Check a solution CSV against the configured problem.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Classify the hypotheses the problem satisfies.
    Regime(Common),
    /// Grid refinement study.
    Refine(Common),
    /// Print the built-in presets.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, solution) = match cli.command {
        Cmd::ListPresets => {
            let mut out = std::io::stdout().lock();
            for (name, what) in philap::presets::PRESETS {
                if writeln!(out, "{name:<26} {what}").is_err() {
                    break;
                }
            }
            return ExitCode::SUCCESS;
        }
        Cmd::Solve(c) => (Command::Solve, c, None),
        Cmd::Verify { common, solution } => (Command::Verify, common, solution),
        Cmd::Regime(c) => (Command::Regime, c, None),
        Cmd::Refine(c) => (Command::Refine, c, None),
    };
    let code = run(&RunArgs {
        command,
        config: common.config,
        out: common.out,
        seed: common.seed,
        solution,
    });
    ExitCode::from(code as u8)
}
