use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zenoflux::PropagatorRegistry;
use zenoflux_cli::{load_config, run_experiment, run_self_test, CliError, RunOptions};

#[derive(Parser)]
#[command(
    name = "zenoflux",
    version,
    about = "Repeated no-click measurement and arrival-time experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Experiment config file.
        config: PathBuf,
        /// Output directory (overrides output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random seed (overrides run.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; falls back to ZENOFLUX_THREADS.
        #[arg(long, env = "ZENOFLUX_THREADS")]
        threads: Option<usize>,
    },
    /// Run the built-in checks.
    SelfTest,
    /// Parse and validate a config file without running it.
    Validate {
        /// Experiment config file.
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let cfg = load_config(&config)?;
            if let Some(n) = threads.filter(|&n| n > 0) {
                // a pool set up earlier in the process is fine to keep
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let manifest = run_experiment(&cfg, &RunOptions { out, seed })?;
            println!("{} run finished in {:.2}s", cfg.run.kind, manifest.wall_clock_seconds);
            for f in &manifest.files {
                println!("  {}  {}", f.sha256, manifest.directory.join(&f.name).display());
            }
            if let Some(msg) = manifest.breakdown {
                return Err(CliError::Breakdown(msg));
            }
            Ok(())
        }
        Command::SelfTest => {
            let report = run_self_test(&PropagatorRegistry::with_builtins(), &mut io::stdout());
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Breakdown("self-test failed".into()))
            }
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!("{}: valid {} config", config.display(), cfg.run.kind);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zenoflux: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
