use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use facetflow::scenario::{self, RunOptions};

#[derive(Parser)]
#[command(name = "facetflow", version, about = "Anisotropic total variation flow scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a catalog entry by name.
    Run {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// List catalog scenarios and the configuration keys.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            println!("scenarios:");
            for t in scenario::catalog() {
                println!("  {:<24} {}", t.name, t.description);
            }
            println!("\nkeys:\n{}", scenario::schema_help());
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed, quiet } => {
            let start = Instant::now();
            let outcome = scenario::run_file(&config, &RunOptions { out, seed, quiet });
            if let Some(e) = &outcome.error {
                eprintln!("error: {e}");
            }
            if !quiet {
                if let Some(m) = &outcome.manifest {
                    for c in &m.checks {
                        println!("{} {:<28} value {:.6e} bound {:.6e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
                    }
                    println!("{}: {} ({} artifacts)", m.scenario, m.status, m.artifacts.len());
                }
                if let Some(d) = &outcome.dir {
                    println!("output: {}", d.display());
                }
                eprintln!("elapsed {:.2}s", start.elapsed().as_secs_f64());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
    }
}
