//! Scenario files, the runner behind the `facetflow` binary and its artifacts.

pub mod config;
pub mod output;
mod runners;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{schema_help, ScenarioConfig, ScenarioKind, SCHEMA};
pub use output::{fmt_f64, parse_snapshot, snapshot_text, Check, Manifest, Snapshot, Table};
pub use runners::{initial_data, ordered_pair, random_field, RunData};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

/// A named, ready-to-run scenario file.
pub struct Template {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

const CATALOG: &[Template] = &[
    Template {
        name: "anisotropy-tour",
        description: "Wulff projection, mollified Hessian floor and speed ellipticity for the quartic density",
        text: "scenario = anisotropy-check\nname = anisotropy-tour\ngrid.dim = 2\nanisotropy.kind = quartic\nevolve.m = 8\nseed = 7\n",
    },
    Template {
        name: "resolvent-tent-1d",
        description: "facet half-length and drop of the resolvent of a 1D tent",
        text: "scenario = resolvent\nname = resolvent-tent-1d\ngrid.n = 512\ninitial.kind = tent\ninitial.slope = 0.5\nresolvent.a = 0.005\nresolvent.tolerance = 1e-5\n",
    },
    Template {
        name: "resolvent-pairs-1d",
        description: "order preservation of the resolvent on random ordered pairs",
        text: "scenario = resolvent\nname = resolvent-pairs-1d\ngrid.n = 256\ninitial.kind = random\nresolvent.a = 0.001\nresolvent.tolerance = 1e-9\nresolvent.pairs = 10\nseed = 3\n",
    },
    Template {
        name: "facet-curvature-1d",
        description: "constant curvature -1/r on a 1D facet of half-length r",
        text: "scenario = curvature\nname = facet-curvature-1d\ngrid.n = 256\ninitial.kind = facet\ninitial.radius = 0.125\nresolvent.a_list = 0.001, 0.0005, 0.00025, 0.000125\n",
    },
    Template {
        name: "disk-curvature-2d",
        description: "curvature -2/r on a disk facet (slow: a 256 x 256 grid)",
        text: "scenario = curvature\nname = disk-curvature-2d\ngrid.dim = 2\ngrid.n = 256\ninitial.kind = facet\ninitial.radius = 0.2\nresolvent.a_list = 0.0004, 0.0002, 0.0001\n",
    },
    Template {
        name: "smooth-curvature-2d",
        description: "difference quotient against the discrete smooth curvature",
        text: "scenario = curvature\nname = smooth-curvature-2d\ngrid.dim = 2\ngrid.n = 64\ninitial.kind = smooth\ninitial.amplitude = 0.2\nresolvent.a_list = 0.0001\nresolvent.tolerance = 0.001\n",
    },
    Template {
        name: "monotonicity-nested-1d",
        description: "curvature ordering on the common facet of nested 1D facets",
        text: "scenario = monotonicity\nname = monotonicity-nested-1d\ngrid.n = 256\ninitial.radius = 0.15\nmonotonicity.outer_radius = 0.3\ncheck.tolerance = 0.02\n",
    },
    Template {
        name: "monotonicity-disks-2d",
        description: "curvature ordering for nested disks",
        text: "scenario = monotonicity\nname = monotonicity-disks-2d\ngrid.dim = 2\ngrid.n = 64\ninitial.radius = 0.15\nmonotonicity.outer_radius = 0.3\nresolvent.a_list = 0.002, 0.001\ncheck.tolerance = 0.02\n",
    },
    Template {
        name: "evolve-tent-1d",
        description: "total variation flow of a tent with the Lipschitz monitor",
        text: "scenario = evolve\nname = evolve-tent-1d\ngrid.n = 256\ninitial.kind = tent\nevolve.m = 32\nevolve.final_time = 0.004\nevolve.snapshots = 4\n",
    },
    Template {
        name: "evolve-constant",
        description: "constants move with the driving speed",
        text: "scenario = evolve\nname = evolve-constant\ngrid.dim = 2\ngrid.n = 32\nspeed.law = driven\nspeed.driving = 0.5\ninitial.kind = constant\ninitial.value = 0.3\nevolve.final_time = 0.01\n",
    },
    Template {
        name: "stability-sin-1d",
        description: "self-convergence in the mollification index",
        text: "scenario = evolve\nname = stability-sin-1d\ngrid.n = 128\ninitial.kind = sin\nevolve.final_time = 0.005\nevolve.m_list = 4, 8\n",
    },
    Template {
        name: "compare-random-1d",
        description: "ordered random pairs stay ordered under the flow",
        text: "scenario = compare\nname = compare-random-1d\ngrid.n = 128\ninitial.amplitude = 0.1\ncompare.pairs = 5\nevolve.final_time = 0.005\nseed = 11\n",
    },
    Template {
        name: "barrier-1d",
        description: "barrier constants, conjugate bounds and the evolved barrier",
        text: "scenario = barrier\nname = barrier-1d\ngrid.n = 128\nbarrier.delta = 0.25\nbarrier.k = 1\nbarrier.samples = 500\nevolve.final_time = 0.002\n",
    },
    Template {
        name: "viscosity-tent-1d",
        description: "faceted test at the peak of an evolving tent",
        text: "scenario = viscosity-test\nname = viscosity-tent-1d\ngrid.n = 256\ninitial.kind = tent\nevolve.m = 32\nevolve.final_time = 0.003\nevolve.snapshots = 6\nresolvent.a_list = 0.001, 0.0005\n",
    },
    Template {
        name: "cfl-violation",
        description: "a safety factor above one is rejected as a numerical failure",
        text: "scenario = evolve\nname = cfl-violation\ngrid.n = 64\ninitial.kind = sin\nevolve.cfl = 10\n",
    },
];

pub fn catalog() -> &'static [Template] {
    CATALOG
}

pub fn template(name: &str) -> Option<&'static Template> {
    CATALOG.iter().find(|t| t.name == name)
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub manifest: Option<Manifest>,
    pub dir: Option<PathBuf>,
    pub error: Option<String>,
}

fn schema_failure(e: Error) -> Outcome {
    Outcome { exit_code: EXIT_SCHEMA, manifest: None, dir: None, error: Some(e.to_string()) }
}

/// Exit code of an error raised while running.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Precondition(_) | Error::GridMismatch(_) => EXIT_SCHEMA,
        _ => EXIT_NUMERICAL,
    }
}

/// Parse a scenario file, or a catalog name when no such file exists.
pub fn load(spec: &str) -> crate::Result<ScenarioConfig> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(t) = template(spec) {
            return ScenarioConfig::parse(t.text);
        }
    }
    ScenarioConfig::from_file(path)
}

pub fn run_file(spec: &str, opts: &RunOptions) -> Outcome {
    match load(spec) {
        Ok(cfg) => run(cfg, opts),
        Err(e) => schema_failure(e),
    }
}

/// Run a scenario and write its artifacts and `manifest.json`.
pub fn run(mut cfg: ScenarioConfig, opts: &RunOptions) -> Outcome {
    if let Some(seed) = opts.seed {
        if let Err(e) = cfg.set("seed", &seed.to_string()) {
            return schema_failure(e);
        }
    }
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output_dir());
    if let Err(e) = fs::create_dir_all(&dir) {
        return Outcome { exit_code: EXIT_NUMERICAL, manifest: None, dir: Some(dir), error: Some(e.to_string()) };
    }
    let mut manifest = Manifest {
        tool: "facetflow".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: cfg.name(),
        kind: cfg.kind.name().into(),
        seed: cfg.seed(),
        config: cfg.echo(),
        status: String::new(),
        error: None,
        checks: Vec::new(),
        artifacts: Vec::new(),
        exit_code: 0,
    };
    let result = runners::dispatch(&cfg).and_then(|data| {
        let mut files = Vec::new();
        for t in &data.tables {
            t.write(&dir)?;
            files.push(t.file.clone());
        }
        for s in &data.snapshots {
            s.write(&dir)?;
            files.push(s.file.clone());
        }
        Ok((data.checks, files))
    });
    match result {
        Ok((checks, mut files)) => {
            files.sort();
            let ok = checks.iter().all(|c| c.passed);
            manifest.exit_code = if ok { EXIT_OK } else { EXIT_CHECK };
            manifest.status = if ok { "passed" } else { "check_failed" }.into();
            manifest.checks = checks;
            manifest.artifacts = files;
        }
        Err(e) => {
            manifest.exit_code = exit_code_for(&e);
            manifest.status = if manifest.exit_code == EXIT_SCHEMA { "schema_error" } else { "numerical_failure" }.into();
            manifest.error = Some(e.to_string());
        }
    }
    let error = manifest.error.clone();
    let exit_code = match manifest.write(&dir) {
        Ok(_) => manifest.exit_code,
        Err(_) => EXIT_NUMERICAL,
    };
    Outcome { exit_code, manifest: Some(manifest), dir: Some(dir), error }
}
