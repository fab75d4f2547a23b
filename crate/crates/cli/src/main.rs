use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lvpatch_cli::{cmd_analyze, cmd_scenarios_export, cmd_scenarios_list, cmd_simulate, cmd_verify, CliError, Expect, Outcome};

/// Analysis, simulation and verification of patch-structured Lotka-Volterra
/// systems with infinite delay.
///
/// Reports are written to $LVPATCH_REPORT_DIR (default ./lvpatch-reports).
/// Exit codes: 0 success, 1 input error, 2 verification contradiction,
/// 3 numerical failure.
#[derive(Parser)]
#[command(name = "lvpatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a scenario (file path or builtin name) and write reports.
    Analyze { scenario: String },
    /// Simulate one named history and write a CSV plus a plot script.
    Simulate {
        scenario: String,
        #[arg(long)]
        history: String,
        #[arg(long)]
        out: PathBuf,
        /// Write every k-th step.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Classify, then check the prediction by simulation.
    Verify {
        scenario: String,
        #[arg(long)]
        trials: Option<usize>,
        /// Check this behavior instead of the classifier's summary.
        #[arg(long, value_parser = clap::value_parser!(Expect))]
        expect: Option<Expect>,
    },
    /// Bundled scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    List,
    Export {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Analyze { scenario } => cmd_analyze(&scenario),
        Command::Simulate { scenario, history, out, stride } => cmd_simulate(&scenario, &history, &out, stride),
        Command::Verify { scenario, trials, expect } => cmd_verify(&scenario, trials, expect),
        Command::Scenarios { action: ScenarioAction::List } => Ok(cmd_scenarios_list()),
        Command::Scenarios { action: ScenarioAction::Export { name, out } } => cmd_scenarios_export(&name, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
