mod commands;
mod error;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;
use report::RunReport;

/// Reachability for alternating ordered tree-pushdown systems.
#[derive(Debug, Parser)]
#[command(name = "otsat", version)]
struct Cli {
    /// Write a JSON run report to this path.
    #[arg(long, global = true, value_name = "PATH")]
    report: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the rule shapes of a system.
    Validate { system: String },
    /// Print the structural class of a system.
    Classify { system: String },
    /// Saturate a target automaton and print the resulting automaton.
    Prestar {
        system: String,
        /// Automaton file, or `locations:p,q` for control-state reachability.
        target: String,
        /// Keep every generated transition instead of only minimal ones.
        #[arg(long)]
        no_subsumption: bool,
        /// Glue order-n variable states (non-deterministic flat systems with
        /// non-n-alternating targets only).
        #[arg(long)]
        opt_nonalt: bool,
        #[arg(long, value_name = "N")]
        max_transitions: Option<usize>,
        /// Print one line per productive rule labeling on stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Test a configuration against a saturated automaton.
    Member {
        /// Automaton file, `-` for stdin.
        automaton: String,
        config: String,
    },
    /// Decide whether the target is reachable from a configuration.
    Reach {
        system: String,
        config: String,
        /// Automaton file, or `locations:p,q`.
        target: String,
        #[arg(long, value_name = "N")]
        max_transitions: Option<usize>,
    },
    /// Translate a model into a system.
    Encode {
        kind: ModelKind,
        file: String,
        /// Also print the encoding of this model configuration.
        #[arg(long, value_name = "CONFIG")]
        init: Option<String>,
    },
    /// Print the alternating successor tree of a configuration.
    Simulate {
        system: String,
        config: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Compare bounded search against saturation or a claimed verdict.
    OracleCheck {
        system: String,
        config: String,
        target: String,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 10)]
        size_cap: usize,
        /// Also run saturation and compare.
        #[arg(long)]
        saturate: bool,
        #[arg(long)]
        claim: Option<Claim>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    Ompds,
    Apds,
    Krivine,
    Oampds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Claim {
    Reachable,
    Unreachable,
}

/// Colored diagnostics are opt-in.
fn color_enabled() -> bool {
    std::env::var("OTSAT_COLOR").is_ok_and(|v| v == "1")
}

fn print_error(e: &CliError) {
    let tag = if color_enabled() { "\x1b[1;31merror\x1b[0m" } else { "error" };
    let mut err = std::io::stderr().lock();
    for line in e.to_string().lines() {
        let _ = writeln!(err, "{tag}: {line}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut rep = RunReport::new(commands::name(&cli.command));
    let result = commands::run(&cli.command, &mut rep);
    let code = match &result {
        Ok(code) => *code,
        Err(e) => {
            print_error(e);
            rep.error = Some(e.to_string());
            e.exit_code()
        }
    };
    rep.exit_code = code;
    if let Some(path) = &cli.report {
        if let Err(e) = std::fs::write(path, rep.to_json()) {
            let e = CliError::Io {
                path: path.display().to_string(),
                source: e,
            };
            print_error(&e);
            return ExitCode::from(e.exit_code());
        }
    }
    ExitCode::from(code)
}
