use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shr_cli::{cmd_apply, cmd_dot, cmd_run, cmd_steps, cmd_validate, color_from_env, Io, RunOptions};
use shr_core::engine::SyncPolicy;

/// Synchronized hyperedge replacement for component assemblies.
#[derive(Parser)]
#[command(name = "shr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a spec; prints diagnostics with positions.
    Validate { file: PathBuf },
    /// List the transitions available from the spec's graph.
    Steps {
        file: PathBuf,
        #[arg(long, default_value_t = SyncPolicy::Milner)]
        policy: SyncPolicy,
    },
    /// Apply one transition and print the rewritten spec.
    Apply {
        file: PathBuf,
        index: usize,
        #[arg(long, default_value_t = SyncPolicy::Milner)]
        policy: SyncPolicy,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute the scenario section, or rewrite freely when there is none.
    Run {
        file: PathBuf,
        #[arg(long)]
        max_steps: Option<usize>,
        /// JSON-lines trace, one object per step.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Directory receiving step-NNN.dot files.
        #[arg(long)]
        dot_dir: Option<PathBuf>,
        #[arg(long, default_value_t = SyncPolicy::Milner)]
        policy: SyncPolicy,
    },
    /// Print the spec's graph in Graphviz DOT.
    Dot {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    let mut io = Io {
        out: &mut stdout,
        err: &mut stderr,
        color: color_from_env(),
    };
    let status = match cli.command {
        Command::Validate { file } => cmd_validate(&file, &mut io),
        Command::Steps { file, policy } => cmd_steps(&file, policy, &mut io),
        Command::Apply { file, index, policy, out } => cmd_apply(&file, index, policy, out.as_deref(), &mut io),
        Command::Run {
            file,
            max_steps,
            trace,
            dot_dir,
            policy,
        } => {
            let opts = RunOptions {
                policy,
                max_steps,
                trace,
                dot_dir,
            };
            cmd_run(&file, &opts, &mut io)
        }
        Command::Dot { file, out } => cmd_dot(&file, out.as_deref(), &mut io),
    };
    ExitCode::from(status.code() as u8)
}
