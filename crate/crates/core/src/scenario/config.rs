//! Flat `key = value` scenario files with dotted section keys.
//!
//! Lines starting with `#` are comments. Lists are comma separated.
//! Every key is declared in [`SCHEMA`]; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    AnisotropyCheck,
    Resolvent,
    Curvature,
    Monotonicity,
    Evolve,
    Compare,
    Barrier,
    ViscosityTest,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::AnisotropyCheck,
        ScenarioKind::Resolvent,
        ScenarioKind::Curvature,
        ScenarioKind::Monotonicity,
        ScenarioKind::Evolve,
        ScenarioKind::Compare,
        ScenarioKind::Barrier,
        ScenarioKind::ViscosityTest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::AnisotropyCheck => "anisotropy-check",
            ScenarioKind::Resolvent => "resolvent",
            ScenarioKind::Curvature => "curvature",
            ScenarioKind::Monotonicity => "monotonicity",
            ScenarioKind::Evolve => "evolve",
            ScenarioKind::Compare => "compare",
            ScenarioKind::Barrier => "barrier",
            ScenarioKind::ViscosityTest => "viscosity-test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug)]
pub enum KeyType {
    Text(&'static [&'static str]),
    Name,
    Integer { min: u64, max: u64 },
    Float { min: f64, max: f64 },
    FloatList { min: f64, max: f64 },
}

pub struct KeySpec {
    pub key: &'static str,
    pub ty: KeyType,
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

const KINDS: &[&str] = &["anisotropy-check", "resolvent", "curvature", "monotonicity", "evolve", "compare", "barrier", "viscosity-test"];
const POS: f64 = f64::MIN_POSITIVE;

pub const SCHEMA: &[KeySpec] = &[
    KeySpec { key: "scenario", ty: KeyType::Text(KINDS), default: None, doc: "scenario kind" },
    KeySpec { key: "name", ty: KeyType::Name, default: Some(""), doc: "run label (defaults to the kind)" },
    KeySpec { key: "seed", ty: KeyType::Integer { min: 0, max: u64::MAX }, default: Some("0"), doc: "ChaCha8 seed for sampled data" },
    KeySpec { key: "output.dir", ty: KeyType::Name, default: Some("facetflow-out"), doc: "artifact directory" },
    KeySpec { key: "grid.dim", ty: KeyType::Integer { min: 1, max: 2 }, default: Some("1"), doc: "torus dimension" },
    KeySpec { key: "grid.n", ty: KeyType::Integer { min: 8, max: 4096 }, default: Some("128"), doc: "nodes per axis" },
    KeySpec { key: "anisotropy.kind", ty: KeyType::Text(&["euclidean", "elliptic", "quartic"]), default: Some("euclidean"), doc: "surface energy density W" },
    KeySpec { key: "speed.law", ty: KeyType::Text(&["tv_flow", "graph_flow", "driven", "zero"]), default: Some("tv_flow"), doc: "speed law F" },
    KeySpec { key: "speed.driving", ty: KeyType::Float { min: -1e6, max: 1e6 }, default: Some("0"), doc: "driving constant c of the driven law" },
    KeySpec {
        key: "initial.kind",
        ty: KeyType::Text(&["tent", "sin", "constant", "facet", "smooth", "random"]),
        default: Some("tent"),
        doc: "initial data or resolvent input",
    },
    KeySpec { key: "initial.slope", ty: KeyType::Float { min: POS, max: 1e3 }, default: Some("0.5"), doc: "tent slope" },
    KeySpec { key: "initial.amplitude", ty: KeyType::Float { min: 0.0, max: 1e3 }, default: Some("0.2"), doc: "sin / random amplitude" },
    KeySpec { key: "initial.value", ty: KeyType::Float { min: -1e6, max: 1e6 }, default: Some("0"), doc: "constant value" },
    KeySpec { key: "initial.radius", ty: KeyType::Float { min: POS, max: 0.5 }, default: Some("0.2"), doc: "facet half-length (1D) or disk radius (2D)" },
    KeySpec { key: "initial.depth", ty: KeyType::Float { min: POS, max: 1e3 }, default: Some("0.1"), doc: "drop from the facet to the plateau" },
    KeySpec { key: "resolvent.a", ty: KeyType::Float { min: POS, max: 1.0 }, default: Some("0.005"), doc: "resolvent step a" },
    KeySpec {
        key: "resolvent.a_list",
        ty: KeyType::FloatList { min: POS, max: 1.0 },
        default: Some("0.001, 0.0005, 0.00025"),
        doc: "decreasing steps for curvature extrapolation",
    },
    KeySpec { key: "resolvent.tolerance", ty: KeyType::Float { min: POS, max: 1.0 }, default: Some("0.005"), doc: "certified relative error of the difference quotient" },
    KeySpec { key: "resolvent.pairs", ty: KeyType::Integer { min: 0, max: 10_000 }, default: Some("0"), doc: "random ordered pairs for the comparison check" },
    KeySpec { key: "monotonicity.outer_radius", ty: KeyType::Float { min: POS, max: 0.5 }, default: Some("0.3"), doc: "radius of the outer facet" },
    KeySpec { key: "evolve.m", ty: KeyType::Float { min: 1.0, max: 1e6 }, default: Some("16"), doc: "mollification index m" },
    KeySpec { key: "evolve.m_list", ty: KeyType::FloatList { min: 1.0, max: 1e6 }, default: Some(""), doc: "indices for the m-stability check (each paired with 2m)" },
    KeySpec { key: "evolve.final_time", ty: KeyType::Float { min: POS, max: 1e3 }, default: Some("0.004"), doc: "final time T" },
    KeySpec { key: "evolve.cfl", ty: KeyType::Float { min: POS, max: 1e6 }, default: Some("0.9"), doc: "safety factor; the scheme needs it in (0, 1)" },
    KeySpec { key: "evolve.snapshots", ty: KeyType::Integer { min: 1, max: 10_000 }, default: Some("4"), doc: "equally spaced snapshots" },
    KeySpec { key: "compare.pairs", ty: KeyType::Integer { min: 1, max: 10_000 }, default: Some("20"), doc: "random ordered pairs" },
    KeySpec { key: "barrier.delta", ty: KeyType::Float { min: POS, max: 0.5 }, default: Some("0.25"), doc: "barrier radius δ" },
    KeySpec { key: "barrier.k", ty: KeyType::Float { min: POS, max: 1e3 }, default: Some("1"), doc: "sup bound K" },
    KeySpec { key: "barrier.samples", ty: KeyType::Integer { min: 1, max: 1_000_000 }, default: Some("2000"), doc: "samples for the conjugate bounds" },
    KeySpec { key: "viscosity.eta", ty: KeyType::Float { min: POS, max: 0.5 }, default: Some("0.05"), doc: "general-position radius η" },
    KeySpec { key: "check.tolerance", ty: KeyType::Float { min: 0.0, max: 1e3 }, default: Some("0.05"), doc: "relative tolerance of value checks" },
];

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Text(String),
    Integer(u64),
    Float(f64),
    List(Vec<f64>),
}

/// Parsed and validated scenario, defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    values: BTreeMap<&'static str, Value>,
    /// Keys exactly as given in the file.
    given: BTreeMap<String, String>,
}

fn schema_error(line: usize, msg: impl fmt::Display) -> Error {
    if line == 0 {
        Error::Config(msg.to_string())
    } else {
        Error::Config(format!("line {line}: {msg}"))
    }
}

fn parse_value(spec: &KeySpec, raw: &str, line: usize) -> Result<Value> {
    let bad = |what: &str| schema_error(line, format!("{} = '{raw}': {what}", spec.key));
    match spec.ty {
        KeyType::Text(choices) => {
            if choices.contains(&raw) {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(bad(&format!("expected one of {}", choices.join(", "))))
            }
        }
        KeyType::Name => Ok(Value::Text(raw.to_string())),
        KeyType::Integer { min, max } => {
            let v: u64 = raw.parse().map_err(|_| bad("expected a non-negative integer"))?;
            if v < min || v > max {
                return Err(bad(&format!("outside [{min}, {max}]")));
            }
            Ok(Value::Integer(v))
        }
        KeyType::Float { min, max } => {
            let v: f64 = raw.parse().map_err(|_| bad("expected a number"))?;
            if !(v >= min && v <= max) {
                return Err(bad(&format!("outside [{min:e}, {max:e}]")));
            }
            Ok(Value::Float(v))
        }
        KeyType::FloatList { min, max } => {
            let mut out = Vec::new();
            for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let v: f64 = part.parse().map_err(|_| bad("expected comma separated numbers"))?;
                if !(v >= min && v <= max) {
                    return Err(bad(&format!("entry {v} outside [{min:e}, {max:e}]")));
                }
                out.push(v);
            }
            Ok(Value::List(out))
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut given = BTreeMap::new();
        let mut lines = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| schema_error(line_no, "expected 'key = value'"))?;
            let (k, v) = (k.trim(), v.trim());
            if SCHEMA.iter().all(|s| s.key != k) {
                return Err(schema_error(line_no, format!("unknown key '{k}'")));
            }
            if given.insert(k.to_string(), v.to_string()).is_some() {
                return Err(schema_error(line_no, format!("duplicate key '{k}'")));
            }
            lines.insert(k.to_string(), line_no);
        }
        let mut values = BTreeMap::new();
        for spec in SCHEMA {
            let (raw, line) = match given.get(spec.key) {
                Some(v) => (v.as_str(), lines[spec.key]),
                None => match spec.default {
                    Some(d) => (d, 0),
                    None => return Err(schema_error(0, format!("missing required key '{}'", spec.key))),
                },
            };
            values.insert(spec.key, parse_value(spec, raw, line)?);
        }
        let kind = match &values["scenario"] {
            Value::Text(s) => ScenarioKind::parse(s).expect("validated choice"),
            _ => unreachable!("scenario is a text key"),
        };
        let cfg = ScenarioConfig { kind, values, given };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let dim = self.integer("grid.dim") as usize;
        let a = self.floats("resolvent.a_list");
        if a.windows(2).any(|w| w[1] >= w[0]) {
            return Err(schema_error(0, "resolvent.a_list must be strictly decreasing"));
        }
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(schema_error(0, msg)) };
        match self.kind {
            ScenarioKind::Curvature => need(!a.is_empty(), "curvature needs a non-empty resolvent.a_list"),
            ScenarioKind::Monotonicity => {
                need(!a.is_empty(), "monotonicity needs a non-empty resolvent.a_list")?;
                need(self.float("monotonicity.outer_radius") > self.float("initial.radius"), "monotonicity.outer_radius must exceed initial.radius")
            }
            ScenarioKind::ViscosityTest => need(dim == 1 && self.text("initial.kind") == "tent", "viscosity-test runs on a 1D tent"),
            ScenarioKind::Barrier => need(dim == 1 || self.integer("grid.n") <= 64, "2D barrier runs are limited to grid.n <= 64"),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        let n = self.text("name");
        if n.is_empty() {
            self.kind.name().to_string()
        } else {
            n.to_string()
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::Text(s)) => s,
            _ => panic!("'{key}' is not a text key"),
        }
    }

    pub fn integer(&self, key: &str) -> u64 {
        match self.values.get(key) {
            Some(Value::Integer(v)) => *v,
            _ => panic!("'{key}' is not an integer key"),
        }
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Float(v)) => *v,
            _ => panic!("'{key}' is not a float key"),
        }
    }

    pub fn floats(&self, key: &str) -> &[f64] {
        match self.values.get(key) {
            Some(Value::List(v)) => v,
            _ => panic!("'{key}' is not a list key"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.integer("seed")
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.text("output.dir"))
    }

    /// Replace one key, re-validating the result.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let spec = SCHEMA.iter().find(|s| s.key == key).ok_or_else(|| schema_error(0, format!("unknown key '{key}'")))?;
        let v = parse_value(spec, raw, 0)?;
        self.values.insert(spec.key, v);
        self.given.insert(key.to_string(), raw.to_string());
        self.validate()
    }

    /// Effective configuration, one `key = value` per schema entry.
    pub fn echo(&self) -> BTreeMap<String, String> {
        SCHEMA
            .iter()
            .map(|s| {
                let raw = self.given.get(s.key).cloned().unwrap_or_else(|| s.default.unwrap_or("").to_string());
                (s.key.to_string(), raw)
            })
            .collect()
    }

    /// Keys as written in the source file.
    pub fn given(&self) -> &BTreeMap<String, String> {
        &self.given
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.given {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Schema documentation, one key per line.
pub fn schema_help() -> String {
    let mut out = String::new();
    for s in SCHEMA {
        let ty = match s.ty {
            KeyType::Text(c) => c.join("|"),
            KeyType::Name => "text".to_string(),
            KeyType::Integer { min, max } => format!("integer in [{min}, {max}]"),
            KeyType::Float { .. } => "number".to_string(),
            KeyType::FloatList { .. } => "numbers, comma separated".to_string(),
        };
        let default = match s.default {
            Some("") => "(empty)".to_string(),
            Some(d) => d.to_string(),
            None => "required".to_string(),
        };
        out.push_str(&format!("  {:<26} {:<40} default {:<24} {}\n", s.key, ty, default, s.doc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = ScenarioConfig::parse("# tent\nscenario = resolvent\ngrid.n = 512\nresolvent.a_list = 1e-3, 5e-4\n").unwrap();
        assert_eq!(c.kind, ScenarioKind::Resolvent);
        assert_eq!(c.integer("grid.n"), 512);
        assert_eq!(c.floats("resolvent.a_list"), &[1e-3, 5e-4]);
        assert_eq!(c.float("initial.slope"), 0.5);
        assert_eq!(c.name(), "resolvent");
        assert!(c.floats("evolve.m_list").is_empty());
        let again = ScenarioConfig::parse(&c.to_text()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn schema_errors() {
        for bad in [
            "grid.n = 64",
            "scenario = nope",
            "scenario = evolve\ngrid.n = 3",
            "scenario = evolve\ncolour = red",
            "scenario = evolve\ngrid.n = 64\ngrid.n = 32",
            "scenario = evolve\nevolve.m = x",
            "scenario = curvature\nresolvent.a_list = 1e-3, 2e-3",
            "scenario = evolve\njust text",
        ] {
            assert!(matches!(ScenarioConfig::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
