mod check;
mod exit;
mod run;
mod services;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use exit::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Spec,
}

#[derive(Debug, Parser)]
#[command(
    name = "treble",
    version,
    about = "Vendor interface toolchain: compile, check, serve, call and test HALs"
)]
struct Cli {
    /// Registry address: a unix socket path or `inproc:<name>`.
    #[arg(long, global = true, env = "TREBLE_REGISTRY")]
    registry: Option<String>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile .hal files into one .spec file per interface.
    Compile {
        inputs: Vec<PathBuf>,
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
    },
    /// Run a compatibility check; exits 1 when incompatible.
    Check {
        #[command(subcommand)]
        mode: check::CheckMode,
    },
    /// Host a built-in service and register it until killed.
    Serve(run::ServeArgs),
    /// Call one method and print what it returns.
    Call(run::CallArgs),
    /// Fuzz a service; exits 1 when anything is found.
    Fuzz(run::FuzzArgs),
    /// Record a trace of random calls, or summarize a trace.
    Profile(run::ProfileArgs),
    /// Run IPC microbenchmarks.
    Bench(run::BenchArgs),
    /// Serve the TCP agent host-side tests drive.
    Agent(run::AgentArgs),
    /// Rank test modules whose HAL traffic a noise run already covers.
    SelectTests(run::SelectArgs),
}

pub struct Globals {
    pub registry: String,
    pub format: Option<Format>,
}

impl Globals {
    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let globals = Globals {
        registry: cli.registry.unwrap_or_else(treble::wire::registry_address),
        format: cli.format,
    };
    match cli.command {
        Command::Compile { inputs, out } => check::compile(&inputs, &out),
        Command::Check { mode } => check::check(mode, &globals),
        Command::Serve(a) => run::serve(a, &globals),
        Command::Call(a) => run::call(a, &globals),
        Command::Fuzz(a) => run::fuzz(a, &globals),
        Command::Profile(a) => run::profile(a, &globals),
        Command::Bench(a) => run::bench(a, &globals),
        Command::Agent(a) => run::agent(a, &globals),
        Command::SelectTests(a) => run::select_tests(a, &globals),
    }
}

fn main() -> ExitCode {
    // Hosted services may panic on purpose (the fuzzer's target); one line each.
    std::panic::set_hook(Box::new(|info| {
        let thread = std::thread::current();
        eprintln!(
            "treble: {} panicked: {info}",
            thread.name().unwrap_or("thread")
        );
    }));
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(f) => {
            if let Some(msg) = f.message() {
                eprintln!("treble: {msg}");
            }
            ExitCode::from(f.code())
        }
    }
}
