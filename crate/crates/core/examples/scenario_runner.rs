//! Run a catalog scenario through the library and print its manifest.

use facetflow::scenario::{self, RunOptions};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "evolve-tent-1d".into());
    let out = std::env::temp_dir().join(format!("facetflow-{name}"));
    let outcome = scenario::run_file(&name, &RunOptions { out: Some(out), seed: Some(1), quiet: true });
    if let Some(m) = &outcome.manifest {
        for c in &m.checks {
            println!("{:<28} {:.4e} (bound {:.4e}) {}", c.name, c.value, c.bound, if c.passed { "ok" } else { "FAILED" });
        }
        println!("artifacts: {:?}", m.artifacts);
    }
    if let Some(e) = outcome.error {
        println!("error: {e}");
    }
    println!("exit code {}", outcome.exit_code);
}
