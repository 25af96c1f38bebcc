//! Sectioned TOML configuration documents.
//!
//! Parsing is strict: unknown sections and keys are errors, and every problem in a document is
//! reported together with its key path. Invariants of the scenario itself come from
//! [`ScenarioConfig::violations`].

use crate::error::{CliError, Violation};
use crate::verification::Suite;
use radelastic::energies::ReportLevel;
use radelastic::nullform::CoefficientSet;
use radelastic::radialfield::RadialGrid;
use radelastic::solver::{DataFamily, OutputPlan, ScenarioConfig, Thresholds, TimeStep};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

/// Default CFL number when neither `time.cfl` nor `time.dt` is given.
pub const DEFAULT_CFL: f64 = 0.4;

/// Amplitude sweep settings for the dichotomy experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomySpec {
    /// Explicit amplitudes, nonnegative and strictly ascending.
    pub amplitudes: Vec<f64>,
    /// Bisection bracket `[lo, hi]` for the largest amplitude whose null run stays bounded.
    pub bracket: Option<[f64; 2]>,
    /// Multiples of the bisected amplitude added to the sweep.
    pub multiples: Vec<f64>,
    /// Relative bracket width at which bisection stops.
    pub tolerance: f64,
    /// `d1` of the non-null partner runs.
    pub nonnull_d1: f64,
}

impl Default for DichotomySpec {
    fn default() -> Self {
        Self {
            amplitudes: Vec::new(),
            bracket: None,
            multiples: vec![10.0, 12.0, 14.0],
            tolerance: 0.02,
            nonnull_d1: 1.0,
        }
    }
}

/// Refinement study settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSpec {
    pub levels: usize,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self { levels: 3 }
    }
}

/// Verification suite selection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifySpec {
    /// Comma-separated suite names; empty or `all` selects every suite.
    pub suite: String,
}

/// A parsed configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub scenario: ScenarioConfig,
    pub dichotomy: DichotomySpec,
    pub convergence: ConvergenceSpec,
    pub verify: VerifySpec,
}

const SECTIONS: [(&str, &[&str]); 10] = [
    ("run", &["id", "seed"]),
    ("grid", &["radius", "cells"]),
    ("time", &["t_final", "cfl", "dt"]),
    ("material", &["c1", "c2", "d1", "d2", "d3", "d4", "d5"]),
    ("data", &["family", "epsilon", "width", "plateau", "support", "center"]),
    ("output", &["cadence", "snapshots", "level"]),
    ("thresholds", &["blowup_factor", "steepening", "smallness", "boundary_tol", "h_bound"]),
    ("dichotomy", &["amplitudes", "bracket", "multiples", "tolerance", "nonnull_d1"]),
    ("convergence", &["levels"]),
    ("verify", &["suite"]),
];

struct Reader<'a> {
    root: &'a Table,
    errs: Vec<Violation>,
}

impl<'a> Reader<'a> {
    fn push(&mut self, path: String, message: impl Into<String>) {
        self.errs.push(Violation { path, message: message.into() });
    }

    fn check_layout(&mut self) {
        for (name, value) in self.root {
            match SECTIONS.iter().find(|(s, _)| s == name) {
                None => self.push(name.clone(), "unknown section"),
                Some((_, keys)) => match value {
                    Value::Table(t) => {
                        for k in t.keys() {
                            if !keys.contains(&k.as_str()) {
                                self.push(format!("{name}.{k}"), "unknown key");
                            }
                        }
                    }
                    _ => self.push(name.clone(), "must be a table"),
                },
            }
        }
    }

    fn get(&self, sec: &str, key: &str) -> Option<&'a Value> {
        self.root.get(sec).and_then(Value::as_table).and_then(|t| t.get(key))
    }

    fn float(&mut self, sec: &str, key: &str, default: Option<f64>) -> f64 {
        match self.get(sec, key) {
            Some(Value::Float(x)) => *x,
            Some(Value::Integer(i)) => *i as f64,
            Some(_) => {
                self.push(format!("{sec}.{key}"), "must be a number");
                f64::NAN
            }
            None => default.unwrap_or_else(|| {
                self.push(format!("{sec}.{key}"), "required key is missing");
                f64::NAN
            }),
        }
    }

    fn opt_float(&mut self, sec: &str, key: &str) -> Option<f64> {
        self.get(sec, key).map(|_| self.float(sec, key, None))
    }

    fn uint(&mut self, sec: &str, key: &str, default: Option<u64>) -> Option<u64> {
        match self.get(sec, key) {
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(_) => {
                self.push(format!("{sec}.{key}"), "must be a nonnegative integer");
                None
            }
            None => {
                if default.is_none() {
                    self.push(format!("{sec}.{key}"), "required key is missing");
                }
                default
            }
        }
    }

    fn string(&mut self, sec: &str, key: &str, default: &str) -> String {
        match self.get(sec, key) {
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                self.push(format!("{sec}.{key}"), "must be a string");
                default.to_string()
            }
            None => default.to_string(),
        }
    }

    fn floats(&mut self, sec: &str, key: &str) -> Option<Vec<f64>> {
        let v = self.get(sec, key)?;
        let Value::Array(items) = v else {
            self.push(format!("{sec}.{key}"), "must be an array of numbers");
            return Some(Vec::new());
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, it) in items.iter().enumerate() {
            match it {
                Value::Float(x) => out.push(*x),
                Value::Integer(n) => out.push(*n as f64),
                _ => self.push(format!("{sec}.{key}[{i}]"), "must be a number"),
            }
        }
        Some(out)
    }
}

fn ascending(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn family_keys(family: &str) -> &'static [&'static str] {
    match family {
        "gaussian" => &["width"],
        "bump" => &["plateau", "support"],
        "ring" => &["center", "width"],
        _ => &[],
    }
}

fn read_family(rd: &mut Reader) -> Option<DataFamily> {
    let name = rd.string("data", "family", "bump");
    let base = match DataFamily::parse(&name) {
        Ok(f) => f,
        Err(e) => {
            rd.push("data.family".into(), e.to_string());
            return None;
        }
    };
    for key in ["width", "plateau", "support", "center"] {
        if rd.get("data", key).is_some() && !family_keys(&name).contains(&key) {
            rd.push(format!("data.{key}"), format!("not a parameter of family {name}"));
        }
    }
    Some(match base {
        DataFamily::Gaussian { width } => {
            DataFamily::Gaussian { width: rd.float("data", "width", Some(width)) }
        }
        DataFamily::Bump { plateau, support } => DataFamily::Bump {
            plateau: rd.float("data", "plateau", Some(plateau)),
            support: rd.float("data", "support", Some(support)),
        },
        DataFamily::Ring { center, width } => DataFamily::Ring {
            center: rd.float("data", "center", Some(center)),
            width: rd.float("data", "width", Some(width)),
        },
    })
}

fn read_level(rd: &mut Reader) -> ReportLevel {
    match rd.string("output", "level", "full").as_str() {
        "energy" => ReportLevel::Energy,
        "full" => ReportLevel::Full,
        "identity" => ReportLevel::Identity,
        other => {
            rd.push("output.level".into(), format!("expected energy, full or identity, got {other}"));
            ReportLevel::Full
        }
    }
}

fn read_dichotomy(rd: &mut Reader) -> DichotomySpec {
    let d = DichotomySpec::default();
    let amplitudes = rd.floats("dichotomy", "amplitudes").unwrap_or_default();
    if amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) || !ascending(&amplitudes) {
        rd.push("dichotomy.amplitudes".into(), "must be nonnegative and strictly ascending");
    }
    let bracket = rd.floats("dichotomy", "bracket").map(|b| {
        if b.len() != 2 || !(b[0] > 0.0 && b[1] > b[0] && b[1].is_finite()) {
            rd.push("dichotomy.bracket".into(), "must be [lo, hi] with 0 < lo < hi");
        }
        [b.first().copied().unwrap_or(f64::NAN), b.get(1).copied().unwrap_or(f64::NAN)]
    });
    let multiples = rd.floats("dichotomy", "multiples").unwrap_or(d.multiples);
    if multiples.iter().any(|m| !(*m > 0.0 && m.is_finite())) || !ascending(&multiples) {
        rd.push("dichotomy.multiples".into(), "must be positive and strictly ascending");
    }
    let tolerance = rd.float("dichotomy", "tolerance", Some(d.tolerance));
    if !(tolerance > 0.0 && tolerance < 1.0) {
        rd.push("dichotomy.tolerance".into(), format!("must lie in (0, 1), got {tolerance}"));
    }
    let nonnull_d1 = rd.float("dichotomy", "nonnull_d1", Some(d.nonnull_d1));
    if !(nonnull_d1 != 0.0 && nonnull_d1.is_finite()) {
        rd.push("dichotomy.nonnull_d1".into(), format!("must be finite and nonzero, got {nonnull_d1}"));
    }
    DichotomySpec { amplitudes, bracket, multiples, tolerance, nonnull_d1 }
}

/// Parses and validates a full document, collecting every violation.
pub fn parse_document(text: &str) -> Result<Document, CliError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        CliError::Config(vec![Violation { path: "<document>".into(), message: e.message().to_string() }])
    })?;
    let mut rd = Reader { root: &root, errs: Vec::new() };
    rd.check_layout();

    let id = rd.string("run", "id", "run");
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
        rd.push("run.id".into(), "must be a nonempty name of letters, digits, '-', '_' or '.'");
    }
    let seed = rd.uint("run", "seed", Some(0)).unwrap_or(0);

    let radius = rd.float("grid", "radius", None);
    let cells = rd.uint("grid", "cells", None);
    let t_final = rd.float("time", "t_final", None);
    let time_step = match (rd.opt_float("time", "cfl"), rd.opt_float("time", "dt")) {
        (Some(_), Some(_)) => {
            rd.push("time".into(), "give either cfl or dt, not both");
            TimeStep::Cfl(DEFAULT_CFL)
        }
        (Some(c), None) => TimeStep::Cfl(c),
        (None, Some(dt)) => TimeStep::Dt(dt),
        (None, None) => TimeStep::Cfl(DEFAULT_CFL),
    };
    let coeffs = CoefficientSet {
        c1: rd.float("material", "c1", Some(1.0)),
        c2: rd.float("material", "c2", Some(0.5)),
        d1: rd.float("material", "d1", Some(0.0)),
        d2: rd.float("material", "d2", Some(0.0)),
        d3: rd.float("material", "d3", Some(0.0)),
        d4: rd.float("material", "d4", Some(0.0)),
        d5: rd.float("material", "d5", Some(0.0)),
    };
    let family = read_family(&mut rd);
    let epsilon = rd.float("data", "epsilon", None);
    let output = OutputPlan {
        cadence: rd.float("output", "cadence", Some(1.0)),
        snapshots: rd.floats("output", "snapshots").unwrap_or_default(),
        level: read_level(&mut rd),
        store_states: false,
    };
    let d = Thresholds::default();
    let thresholds = Thresholds {
        blowup_factor: rd.float("thresholds", "blowup_factor", Some(d.blowup_factor)),
        steepening: rd.float("thresholds", "steepening", Some(d.steepening)),
        smallness: rd.float("thresholds", "smallness", Some(d.smallness)),
        boundary_tol: rd.float("thresholds", "boundary_tol", Some(d.boundary_tol)),
        h_bound: rd.float("thresholds", "h_bound", Some(d.h_bound)),
    };
    let dichotomy = read_dichotomy(&mut rd);
    let levels = rd.uint("convergence", "levels", Some(3)).unwrap_or(3) as usize;
    if levels < 3 {
        rd.push("convergence.levels".into(), format!("at least 3 levels are needed, got {levels}"));
    }
    let suite = rd.string("verify", "suite", "");
    if let Err(e) = Suite::parse_selector(&suite) {
        rd.push("verify.suite".into(), e.to_string());
    }

    let grid = match cells.map(|c| RadialGrid::new(radius, c as usize)) {
        Some(Ok(g)) => Some(g),
        Some(Err(e)) => {
            rd.push("grid".into(), e.to_string());
            None
        }
        None => None,
    };
    let mut errs = rd.errs;
    let scenario = match (grid, family) {
        (Some(grid), Some(family)) => {
            let cfg = ScenarioConfig {
                id,
                seed,
                grid,
                time_step,
                t_final,
                coeffs,
                family,
                epsilon,
                output,
                thresholds,
            };
            for (path, message) in cfg.violations() {
                if !errs.iter().any(|v| v.path == path) {
                    errs.push(Violation { path, message });
                }
            }
            Some(cfg)
        }
        _ => None,
    };
    match scenario {
        Some(scenario) if errs.is_empty() => Ok(Document {
            scenario,
            dichotomy,
            convergence: ConvergenceSpec { levels },
            verify: VerifySpec { suite },
        }),
        _ => Err(CliError::Config(errs)),
    }
}

/// Parses a document and returns its scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    parse_document(text).map(|d| d.scenario)
}

fn table(entries: Vec<(&str, Value)>) -> Value {
    Value::Table(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

/// Canonical text of a document; parsing it yields an equal document.
pub fn emit_document(doc: &Document) -> String {
    let c = &doc.scenario;
    let time = match c.time_step {
        TimeStep::Cfl(x) => ("cfl", x),
        TimeStep::Dt(x) => ("dt", x),
    };
    let data = match c.family {
        DataFamily::Gaussian { width } => vec![("width", Value::Float(width))],
        DataFamily::Bump { plateau, support } => {
            vec![("plateau", Value::Float(plateau)), ("support", Value::Float(support))]
        }
        DataFamily::Ring { center, width } => {
            vec![("center", Value::Float(center)), ("width", Value::Float(width))]
        }
    };
    let level = match c.output.level {
        ReportLevel::Energy => "energy",
        ReportLevel::Full => "full",
        ReportLevel::Identity => "identity",
    };
    let k = &c.coeffs;
    let t = &c.thresholds;
    let dc = &doc.dichotomy;
    let mut dich = vec![
        ("amplitudes", floats(&dc.amplitudes)),
        ("multiples", floats(&dc.multiples)),
        ("tolerance", Value::Float(dc.tolerance)),
        ("nonnull_d1", Value::Float(dc.nonnull_d1)),
    ];
    if let Some(b) = dc.bracket {
        dich.push(("bracket", floats(&b)));
    }
    let mut data_sec = vec![
        ("family", Value::String(c.family.name().into())),
        ("epsilon", Value::Float(c.epsilon)),
    ];
    data_sec.extend(data);
    let root = table(vec![
        ("run", table(vec![("id", Value::String(c.id.clone())), ("seed", Value::Integer(c.seed as i64))])),
        (
            "grid",
            table(vec![
                ("radius", Value::Float(c.grid.radius())),
                ("cells", Value::Integer(c.grid.cells() as i64)),
            ]),
        ),
        ("time", table(vec![("t_final", Value::Float(c.t_final)), (time.0, Value::Float(time.1))])),
        (
            "material",
            table(vec![
                ("c1", Value::Float(k.c1)),
                ("c2", Value::Float(k.c2)),
                ("d1", Value::Float(k.d1)),
                ("d2", Value::Float(k.d2)),
                ("d3", Value::Float(k.d3)),
                ("d4", Value::Float(k.d4)),
                ("d5", Value::Float(k.d5)),
            ]),
        ),
        ("data", table(data_sec)),
        (
            "output",
            table(vec![
                ("cadence", Value::Float(c.output.cadence)),
                ("snapshots", floats(&c.output.snapshots)),
                ("level", Value::String(level.into())),
            ]),
        ),
        (
            "thresholds",
            table(vec![
                ("blowup_factor", Value::Float(t.blowup_factor)),
                ("steepening", Value::Float(t.steepening)),
                ("smallness", Value::Float(t.smallness)),
                ("boundary_tol", Value::Float(t.boundary_tol)),
                ("h_bound", Value::Float(t.h_bound)),
            ]),
        ),
        ("dichotomy", table(dich)),
        ("convergence", table(vec![("levels", Value::Integer(doc.convergence.levels as i64))])),
        ("verify", table(vec![("suite", Value::String(doc.verify.suite.clone()))])),
    ]);
    toml::to_string(&root).expect("a table of plain values always serializes")
}

/// Document with default experiment sections around a scenario.
pub fn document_for(scenario: ScenarioConfig) -> Document {
    Document {
        scenario,
        dichotomy: DichotomySpec::default(),
        convergence: ConvergenceSpec::default(),
        verify: VerifySpec::default(),
    }
}

/// Canonical text of a scenario with default experiment sections.
pub fn emit_config(cfg: &ScenarioConfig) -> String {
    emit_document(&document_for(cfg.clone()))
}

/// Hex SHA-256 of the canonical text.
pub fn config_hash(doc: &Document) -> String {
    format!("{:x}", Sha256::digest(emit_document(doc).as_bytes()))
}
