//! JSON scenario documents: definitions, an optional evolution and a list
//! of probability queries, evaluated into a report.

mod expr;
mod run;
pub mod sample;

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Map, Value as Json};

pub use expr::{spin_operators, BorelSpec, Ctor, Expr, IntervalSpec, Value};
pub use run::{run_queries, sample_query, Report, Row, TOL_TANGLED, Z_LIMIT};
pub use sample::{sample_sequence, SampleReport};

use crate::error::Error;
use expr::{parse_real, parse_reals};

/// Scenario shipped with the crate: the spin-singlet table.
pub const EPR_SCENARIO: &str = include_str!("../../scenarios/epr.json");
/// Scenario shipped with the crate: the decay-detector table.
pub const DEVICE_SCENARIO: &str = include_str!("../../scenarios/device.json");

/// Category of a scenario error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    UnknownName,
    InvariantViolation,
    DimMismatch,
    Other,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Syntax => "SyntaxError",
            ErrorKind::UnknownName => "UnknownName",
            ErrorKind::InvariantViolation => "InvariantViolation",
            ErrorKind::DimMismatch => "DimMismatch",
            ErrorKind::Other => "Error",
        }
    }
}

/// Problem with a scenario document, located by line/column for JSON syntax
/// errors and by field path otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioError {
    pub kind: ErrorKind,
    pub path: String,
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl ScenarioError {
    pub fn new(kind: ErrorKind, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind, path: path.into(), message: message.into(), line: None, column: None }
    }

    pub(crate) fn syntax_at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Syntax, path, message)
    }

    pub(crate) fn from_engine(path: &str, e: Error) -> Self {
        let kind = match e {
            Error::DimMismatch { .. } | Error::NonSquare { .. } => ErrorKind::DimMismatch,
            Error::NotHermitian { .. }
            | Error::NotUnitary { .. }
            | Error::NotContraction { .. }
            | Error::InvariantViolation(_)
            | Error::InvalidData(_)
            | Error::BadWeights { .. }
            | Error::NonIncreasingTimes
            | Error::TimeCount { .. } => ErrorKind::InvariantViolation,
            _ => ErrorKind::Other,
        };
        Self::new(kind, path, e.to_string())
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " at line {l}, column {c}")?;
        }
        if !self.path.is_empty() {
            write!(f, " at {}", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ScenarioError {}

/// Source of the evolution operators.
#[derive(Clone, Debug, PartialEq)]
pub enum EvolutionSpec {
    /// `U(s, t) = e^{−i(t−s)H/ℏ}`.
    Hamiltonian(Expr),
    /// Piecewise-constant `U_t`: the operator of the last step with
    /// `t_k ≤ t`, identity before the first step.
    UnitaryFamily(Vec<(f64, Expr)>),
    /// `W(s, t) = e^{−(t−s)G}` for positive semidefinite `G`.
    Contraction(Expr),
}

/// State operand of a query.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    None,
    Expr(Expr),
}

/// What a query computes.
#[derive(Clone, Debug, PartialEq)]
pub enum QuerySpec {
    ProbEvent { event: Expr, state: StateSpec },
    ProbObsIn { obs: Expr, set: BorelSpec, state: StateSpec },
    Consecutive { events: Vec<Expr>, state: StateSpec },
    Conditional { target: Vec<Expr>, given: Vec<Expr>, state: StateSpec },
    WithEvolution { target: Vec<Expr>, given: Vec<Expr>, times: Vec<f64>, state: StateSpec },
    Delta { e1: Expr, e2: Expr, e0: Expr },
    Entropy { obs: Expr, base: f64, state: StateSpec },
    Moment { obs: Expr, order: usize, central: bool, state: StateSpec },
    Expectation { op: Expr, state: StateSpec },
    Sample { events: Vec<Expr>, times: Option<Vec<f64>>, state: StateSpec, trials: u64, seed: u64 },
}

impl QuerySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            QuerySpec::ProbEvent { .. } => "prob_event",
            QuerySpec::ProbObsIn { .. } => "prob_obs_in",
            QuerySpec::Consecutive { .. } => "consecutive",
            QuerySpec::Conditional { .. } => "conditional",
            QuerySpec::WithEvolution { .. } => "with_evolution",
            QuerySpec::Delta { .. } => "delta",
            QuerySpec::Entropy { .. } => "entropy",
            QuerySpec::Moment { .. } => "moment",
            QuerySpec::Expectation { .. } => "expectation",
            QuerySpec::Sample { .. } => "sample",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub label: String,
    pub spec: QuerySpec,
}

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_ENTROPY_BASE: f64 = 2.0;

/// A parsed scenario document.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub dim: usize,
    pub hbar: f64,
    pub defs: BTreeMap<String, Expr>,
    pub evolution: Option<EvolutionSpec>,
    pub queries: Vec<Query>,
}

/// Parses and validates a scenario: every definition and query operand is
/// evaluated once, so name, type and dimension errors surface here.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| ScenarioError {
        kind: ErrorKind::Syntax,
        path: String::new(),
        message: e.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
    })?;
    let scenario = Scenario::from_json(&doc)?;
    scenario.validate()?;
    Ok(scenario)
}

fn required<'a>(obj: &'a Map<String, Json>, key: &str, path: &str) -> Result<&'a Json, ScenarioError> {
    obj.get(key)
        .ok_or_else(|| ScenarioError::syntax_at(path, format!("missing field '{key}'")))
}

fn parse_exprs(v: &Json, path: &str) -> Result<Vec<Expr>, ScenarioError> {
    let items = v
        .as_array()
        .ok_or_else(|| ScenarioError::syntax_at(path, "expected an array of events"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, x)| Expr::parse(x, &format!("{path}[{i}]")))
        .collect()
}

fn parse_state(obj: &Map<String, Json>, path: &str) -> Result<StateSpec, ScenarioError> {
    match required(obj, "state", path)? {
        Json::String(s) if s == "none" => Ok(StateSpec::None),
        v => Ok(StateSpec::Expr(Expr::parse(v, &format!("{path}.state"))?)),
    }
}

fn parse_u64(obj: &Map<String, Json>, key: &str, default: u64, path: &str) -> Result<u64, ScenarioError> {
    match obj.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ScenarioError::syntax_at(format!("{path}.{key}"), "expected a non-negative integer")),
    }
}

fn parse_times(v: &Json, path: &str) -> Result<Vec<f64>, ScenarioError> {
    let times = parse_reals(v, path)?;
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ScenarioError::new(ErrorKind::InvariantViolation, path, "times must be finite and strictly increasing"));
    }
    Ok(times)
}

fn check_time_count(times: &[f64], events: usize, path: &str) -> Result<(), ScenarioError> {
    if times.len() != events + 1 {
        return Err(ScenarioError::new(
            ErrorKind::InvariantViolation,
            path,
            format!("expected {} times (a start time and one per event), found {}", events + 1, times.len()),
        ));
    }
    Ok(())
}

impl Query {
    fn from_json(v: &Json, index: usize) -> Result<Query, ScenarioError> {
        let path = format!("queries[{index}]");
        let obj = v.as_object().ok_or_else(|| ScenarioError::syntax_at(&path, "expected an object"))?;
        let kind = required(obj, "kind", &path)?
            .as_str()
            .ok_or_else(|| ScenarioError::syntax_at(format!("{path}.kind"), "expected a string"))?;
        let label = match obj.get("label") {
            None => format!("{kind}#{index}"),
            Some(Json::String(s)) => s.clone(),
            Some(_) => return Err(ScenarioError::syntax_at(format!("{path}.label"), "expected a string")),
        };
        let expr = |key: &str| Expr::parse(required(obj, key, &path)?, &format!("{path}.{key}"));
        let exprs = |key: &str| parse_exprs(required(obj, key, &path)?, &format!("{path}.{key}"));
        let optional_exprs = |key: &str| match obj.get(key) {
            None => Ok(Vec::new()),
            Some(v) => parse_exprs(v, &format!("{path}.{key}")),
        };
        let spec = match kind {
            "prob_event" => QuerySpec::ProbEvent { event: expr("event")?, state: parse_state(obj, &path)? },
            "prob_obs_in" => QuerySpec::ProbObsIn {
                obs: expr("obs")?,
                set: BorelSpec::parse(obj, &path)?,
                state: parse_state(obj, &path)?,
            },
            "consecutive" => QuerySpec::Consecutive { events: exprs("events")?, state: parse_state(obj, &path)? },
            "conditional" => QuerySpec::Conditional {
                target: exprs("target")?,
                given: exprs("given")?,
                state: parse_state(obj, &path)?,
            },
            "with_evolution" => {
                let target = exprs("target")?;
                let given = optional_exprs("given")?;
                let times = parse_times(required(obj, "times", &path)?, &format!("{path}.times"))?;
                check_time_count(&times, target.len() + given.len(), &format!("{path}.times"))?;
                QuerySpec::WithEvolution { target, given, times, state: parse_state(obj, &path)? }
            }
            "delta" => QuerySpec::Delta { e1: expr("e1")?, e2: expr("e2")?, e0: expr("e0")? },
            "entropy" => QuerySpec::Entropy {
                obs: expr("obs")?,
                base: match obj.get("base") {
                    None => DEFAULT_ENTROPY_BASE,
                    Some(b) => parse_real(b, &format!("{path}.base"))?,
                },
                state: parse_state(obj, &path)?,
            },
            "moment" => QuerySpec::Moment {
                obs: expr("obs")?,
                order: parse_u64(obj, "order", 1, &path)? as usize,
                central: match obj.get("central") {
                    None => false,
                    Some(Json::Bool(b)) => *b,
                    Some(_) => return Err(ScenarioError::syntax_at(format!("{path}.central"), "expected true or false")),
                },
                state: parse_state(obj, &path)?,
            },
            "expectation" => QuerySpec::Expectation { op: expr("op")?, state: parse_state(obj, &path)? },
            "sample" => {
                let events = exprs("events")?;
                let times = match obj.get("times") {
                    None => None,
                    Some(v) => {
                        let times = parse_times(v, &format!("{path}.times"))?;
                        check_time_count(&times, events.len(), &format!("{path}.times"))?;
                        Some(times)
                    }
                };
                let trials = parse_u64(obj, "trials", DEFAULT_TRIALS, &path)?;
                if trials == 0 {
                    return Err(ScenarioError::new(ErrorKind::InvariantViolation, format!("{path}.trials"), "trials must be at least 1"));
                }
                QuerySpec::Sample {
                    events,
                    times,
                    state: parse_state(obj, &path)?,
                    trials,
                    seed: parse_u64(obj, "seed", DEFAULT_SEED, &path)?,
                }
            }
            other => {
                return Err(ScenarioError::new(ErrorKind::UnknownName, format!("{path}.kind"), format!("unknown query kind '{other}'")))
            }
        };
        Ok(Query { label, spec })
    }

    fn to_json(&self) -> Json {
        let mut o = Map::new();
        o.insert("label".into(), json!(self.label));
        o.insert("kind".into(), json!(self.spec.kind()));
        let list = |v: &[Expr]| Json::Array(v.iter().map(Expr::to_json).collect());
        let state_json = |s: &StateSpec| match s {
            StateSpec::None => json!("none"),
            StateSpec::Expr(e) => e.to_json(),
        };
        match &self.spec {
            QuerySpec::ProbEvent { event, state } => {
                o.insert("event".into(), event.to_json());
                o.insert("state".into(), state_json(state));
            }
            QuerySpec::ProbObsIn { obs, set, state } => {
                o.insert("obs".into(), obs.to_json());
                set.write(&mut o);
                o.insert("state".into(), state_json(state));
            }
            QuerySpec::Consecutive { events, state } => {
                o.insert("events".into(), list(events));
                o.insert("state".into(), state_json(state));
            }
            QuerySpec::Conditional { target, given, state } => {
                o.insert("target".into(), list(target));
                o.insert("given".into(), list(given));
                o.insert("state".into(), state_json(state));
            }
            QuerySpec::WithEvolution { target, given, times, state } => {
                o.insert("target".into(), list(target));
                o.insert("given".into(), list(given));
                o.insert("times".into(), json!(times));
                o.insert("state".into(), state_json(state));
            }
            QuerySpec::Delta { e1, e2, e0 } => {
                o.insert("e1".into(), e1.to_json());
                o.insert("e2".into(), e2.to_json());
                o.insert("e0".into(), e0.to_json());
            }
            QuerySpec::Entropy { obs, base, state } => {
                o.insert("obs".into(), obs.to_json());
                o.insert("base".into(), json!(base));
                o.insert("state".into(), state_json(state));
            }
            QuerySpec::Moment { obs, order, central, state } => {
                o.insert("obs".into(), obs.to_json());
                o.insert("order".into(), json!(order));
                o.insert("central".into(), json!(central));
                o.insert("state".into(), state_json(state));
            }
            QuerySpec::Expectation { op, state } => {
                o.insert("op".into(), op.to_json());
                o.insert("state".into(), state_json(state));
            }
            QuerySpec::Sample { events, times, state, trials, seed } => {
                o.insert("events".into(), list(events));
                if let Some(t) = times {
                    o.insert("times".into(), json!(t));
                }
                o.insert("state".into(), state_json(state));
                o.insert("trials".into(), json!(trials));
                o.insert("seed".into(), json!(seed));
            }
        }
        Json::Object(o)
    }
}

impl EvolutionSpec {
    fn from_json(v: &Json) -> Result<Self, ScenarioError> {
        let path = "evolution";
        let obj = v.as_object().ok_or_else(|| ScenarioError::syntax_at(path, "expected an object"))?;
        if let Some(h) = obj.get("hamiltonian") {
            return Ok(EvolutionSpec::Hamiltonian(Expr::parse(h, "evolution.hamiltonian")?));
        }
        if let Some(g) = obj.get("contraction") {
            return Ok(EvolutionSpec::Contraction(Expr::parse(g, "evolution.contraction")?));
        }
        if let Some(steps) = obj.get("unitary_family") {
            let items = steps
                .as_array()
                .filter(|a| !a.is_empty())
                .ok_or_else(|| ScenarioError::syntax_at("evolution.unitary_family", "expected a non-empty array of steps"))?;
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let p = format!("evolution.unitary_family[{i}]");
                let o = item.as_object().ok_or_else(|| ScenarioError::syntax_at(&p, "expected {\"t\": …, \"op\": …}"))?;
                let t = parse_real(required(o, "t", &p)?, &format!("{p}.t"))?;
                let op = Expr::parse(required(o, "op", &p)?, &format!("{p}.op"))?;
                out.push((t, op));
            }
            if out.windows(2).any(|w| w[0].0 >= w[1].0) || out.iter().any(|(t, _)| !t.is_finite()) {
                return Err(ScenarioError::new(
                    ErrorKind::InvariantViolation,
                    "evolution.unitary_family",
                    "step times must be finite and strictly increasing",
                ));
            }
            return Ok(EvolutionSpec::UnitaryFamily(out));
        }
        Err(ScenarioError::syntax_at(path, "expected 'hamiltonian', 'unitary_family' or 'contraction'"))
    }

    fn to_json(&self) -> Json {
        match self {
            EvolutionSpec::Hamiltonian(h) => json!({ "hamiltonian": h.to_json() }),
            EvolutionSpec::Contraction(g) => json!({ "contraction": g.to_json() }),
            EvolutionSpec::UnitaryFamily(steps) => json!({
                "unitary_family": steps.iter().map(|(t, op)| json!({ "t": t, "op": op.to_json() })).collect::<Vec<_>>()
            }),
        }
    }
}

impl Scenario {
    /// Structural parse without evaluating any expression.
    pub fn from_json(doc: &Json) -> Result<Scenario, ScenarioError> {
        let obj = doc.as_object().ok_or_else(|| ScenarioError::syntax_at("", "top level must be an object"))?;
        if let Some(k) = obj.keys().find(|k| !["dim", "hbar", "defs", "evolution", "queries"].contains(&k.as_str())) {
            return Err(ScenarioError::syntax_at(k.as_str(), format!("unknown top-level field '{k}'")));
        }
        let dim = required(obj, "dim", "")?
            .as_u64()
            .filter(|&d| d >= 1)
            .ok_or_else(|| ScenarioError::syntax_at("dim", "expected a positive integer"))? as usize;
        let hbar = match obj.get("hbar") {
            None => 1.0,
            Some(h) => parse_real(h, "hbar")?,
        };
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(ScenarioError::new(ErrorKind::InvariantViolation, "hbar", "hbar must be positive"));
        }
        let mut defs = BTreeMap::new();
        if let Some(d) = obj.get("defs") {
            let d = d.as_object().ok_or_else(|| ScenarioError::syntax_at("defs", "expected an object"))?;
            for (name, v) in d {
                if name == "none" {
                    return Err(ScenarioError::syntax_at(format!("defs.{name}"), "'none' is reserved"));
                }
                defs.insert(name.clone(), Expr::parse(v, &format!("defs.{name}"))?);
            }
        }
        let evolution = obj.get("evolution").map(EvolutionSpec::from_json).transpose()?;
        let queries = match obj.get("queries") {
            None => Vec::new(),
            Some(q) => q
                .as_array()
                .ok_or_else(|| ScenarioError::syntax_at("queries", "expected an array"))?
                .iter()
                .enumerate()
                .map(|(i, v)| Query::from_json(v, i))
                .collect::<Result<_, _>>()?,
        };
        Ok(Scenario { dim, hbar, defs, evolution, queries })
    }

    pub fn to_json(&self) -> Json {
        let mut o = Map::new();
        o.insert("dim".into(), json!(self.dim));
        o.insert("hbar".into(), json!(self.hbar));
        o.insert(
            "defs".into(),
            Json::Object(self.defs.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()),
        );
        if let Some(e) = &self.evolution {
            o.insert("evolution".into(), e.to_json());
        }
        o.insert("queries".into(), Json::Array(self.queries.iter().map(Query::to_json).collect()));
        Json::Object(o)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serialisable")
    }

    /// Evaluates every definition and prepares every query.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        run::prepare(self).map(|_| ())
    }

    pub fn query(&self, label: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.label == label)
    }
}
