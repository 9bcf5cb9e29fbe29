//! Operator and state expressions of the scenario format.

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Map, Value as Json};

use super::{ErrorKind, ScenarioError};
use crate::error::Error;
use crate::hilbert::{self, BorelSet, Event, Interval, Observable, PureState};
use crate::linalg::{c, CMatrix, CVector, C64};

/// Built-in operator constructors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ctor {
    SpinX,
    SpinY,
    SpinZ,
    TotalSpinSq,
    Identity,
}

impl Ctor {
    fn name(self) -> &'static str {
        match self {
            Ctor::SpinX => "spin_x",
            Ctor::SpinY => "spin_y",
            Ctor::SpinZ => "spin_z",
            Ctor::TotalSpinSq => "total_spin_sq",
            Ctor::Identity => "identity",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "spin_x" => Ctor::SpinX,
            "spin_y" => Ctor::SpinY,
            "spin_z" => Ctor::SpinZ,
            "total_spin_sq" => Ctor::TotalSpinSq,
            "identity" => Ctor::Identity,
            _ => return None,
        })
    }
}

/// One interval of a Borel set as written in a document.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

/// Union of intervals and points.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BorelSpec {
    pub intervals: Vec<IntervalSpec>,
    pub points: Vec<f64>,
}

impl BorelSpec {
    pub fn to_set(&self) -> crate::Result<BorelSet> {
        let intervals = self
            .intervals
            .iter()
            .map(|iv| Interval::new(iv.lo, iv.hi, iv.lo_closed, iv.hi_closed))
            .collect::<crate::Result<Vec<_>>>()?;
        BorelSet::new(intervals, self.points.clone())
    }

    pub(crate) fn parse(obj: &Map<String, Json>, path: &str) -> Result<Self, ScenarioError> {
        let mut spec = BorelSpec::default();
        if let Some(b) = obj.get("borel") {
            let items = b
                .as_array()
                .ok_or_else(|| ScenarioError::syntax_at(format!("{path}.borel"), "expected an array of intervals"))?;
            for (i, item) in items.iter().enumerate() {
                let p = format!("{path}.borel[{i}]");
                let o = as_object(item, &p)?;
                let lo = parse_bound(o.get("lo"), f64::NEG_INFINITY, &format!("{p}.lo"))?;
                let hi = parse_bound(o.get("hi"), f64::INFINITY, &format!("{p}.hi"))?;
                let lo_closed = parse_flag(o.get("lo_closed"), lo.is_finite(), &format!("{p}.lo_closed"))?;
                let hi_closed = parse_flag(o.get("hi_closed"), hi.is_finite(), &format!("{p}.hi_closed"))?;
                Interval::new(lo, hi, lo_closed, hi_closed)
                    .map_err(|e| ScenarioError::from_engine(&p, e))?;
                spec.intervals.push(IntervalSpec { lo, hi, lo_closed, hi_closed });
            }
        }
        if let Some(p) = obj.get("points") {
            spec.points = parse_reals(p, &format!("{path}.points"))?;
        }
        Ok(spec)
    }

    pub(crate) fn write(&self, obj: &mut Map<String, Json>) {
        let intervals: Vec<Json> = self
            .intervals
            .iter()
            .map(|iv| {
                json!({
                    "lo": bound_json(iv.lo),
                    "hi": bound_json(iv.hi),
                    "lo_closed": iv.lo_closed,
                    "hi_closed": iv.hi_closed,
                })
            })
            .collect();
        obj.insert("borel".into(), Json::Array(intervals));
        obj.insert("points".into(), json!(self.points));
    }
}

/// An expression producing a vector or an operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Ref(String),
    Matrix(Vec<Vec<C64>>),
    Vector(Vec<C64>),
    Ctor { ctor: Ctor, dim: Option<usize> },
    Projector(Box<Expr>),
    Tensor(Vec<Expr>),
    PvmEvent { obs: Box<Expr>, set: BorelSpec },
    Complement(Box<Expr>),
    Adjoint(Box<Expr>),
    Scale { factor: C64, of: Box<Expr> },
    Sum(Vec<Expr>),
    Event(Box<Expr>),
    Normalize(Box<Expr>),
    Density(Box<Expr>),
    Mixture { weights: Vec<f64>, states: Vec<Expr> },
}

/// Evaluated expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Vector(CVector),
    Matrix(CMatrix),
    Event(Event),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Vector(_) => "vector",
            Value::Matrix(_) => "matrix",
            Value::Event(_) => "event",
        }
    }

    pub fn matrix(&self) -> Option<&CMatrix> {
        match self {
            Value::Matrix(m) => Some(m),
            Value::Event(e) => Some(e.matrix()),
            Value::Vector(_) => None,
        }
    }
}

fn as_object<'a>(v: &'a Json, path: &str) -> Result<&'a Map<String, Json>, ScenarioError> {
    v.as_object().ok_or_else(|| ScenarioError::syntax_at(path, "expected an object"))
}

fn parse_bound(v: Option<&Json>, default: f64, path: &str) -> Result<f64, ScenarioError> {
    match v {
        None => Ok(default),
        Some(Json::String(s)) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Some(Json::String(s)) if s == "+inf" || s == "inf" => Ok(f64::INFINITY),
        Some(x) => parse_real(x, path),
    }
}

fn bound_json(x: f64) -> Json {
    if x == f64::NEG_INFINITY {
        json!("-inf")
    } else if x == f64::INFINITY {
        json!("+inf")
    } else {
        json!(x)
    }
}

fn parse_flag(v: Option<&Json>, default: bool, path: &str) -> Result<bool, ScenarioError> {
    match v {
        None => Ok(default),
        Some(Json::Bool(b)) => Ok(*b),
        Some(_) => Err(ScenarioError::syntax_at(path, "expected true or false")),
    }
}

pub(crate) fn parse_real(v: &Json, path: &str) -> Result<f64, ScenarioError> {
    v.as_f64().ok_or_else(|| ScenarioError::syntax_at(path, "expected a number"))
}

pub(crate) fn parse_reals(v: &Json, path: &str) -> Result<Vec<f64>, ScenarioError> {
    let items = v.as_array().ok_or_else(|| ScenarioError::syntax_at(path, "expected an array of numbers"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, x)| parse_real(x, &format!("{path}[{i}]")))
        .collect()
}

/// A number, or a `[re, im]` pair.
pub(crate) fn parse_complex(v: &Json, path: &str) -> Result<C64, ScenarioError> {
    if let Some(x) = v.as_f64() {
        return Ok(c(x, 0.0));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(c(parse_real(re, path)?, parse_real(im, path)?)),
        _ => Err(ScenarioError::syntax_at(path, "expected a number or a [re, im] pair")),
    }
}

pub(crate) fn complex_json(z: C64) -> Json {
    json!([z.re, z.im])
}

fn parse_complex_list(v: &Json, path: &str) -> Result<Vec<C64>, ScenarioError> {
    let items = v.as_array().ok_or_else(|| ScenarioError::syntax_at(path, "expected an array"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, x)| parse_complex(x, &format!("{path}[{i}]")))
        .collect()
}

fn parse_rows(v: &Json, path: &str) -> Result<Vec<Vec<C64>>, ScenarioError> {
    let rows = v.as_array().ok_or_else(|| ScenarioError::syntax_at(path, "expected an array of rows"))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| parse_complex_list(r, &format!("{path}[{i}]")))
        .collect()
}

fn array_depth(v: &Json) -> usize {
    match v {
        Json::Array(items) => 1 + items.first().map_or(0, array_depth),
        _ => 0,
    }
}

/// Bare arrays: depth 1 is a real vector, depth 2 with every inner array of
/// length 2 is a complex vector, other depth-2 arrays are real matrices and
/// depth 3 is a complex matrix.
fn parse_literal(items: &[Json], path: &str) -> Result<Expr, ScenarioError> {
    let whole = Json::Array(items.to_vec());
    match array_depth(&whole) {
        1 => Ok(Expr::Vector(parse_complex_list(&whole, path)?)),
        2 if items.iter().all(|r| r.as_array().is_some_and(|a| a.len() == 2)) => {
            Ok(Expr::Vector(parse_complex_list(&whole, path)?))
        }
        2 | 3 => Ok(Expr::Matrix(parse_rows(&whole, path)?)),
        _ => Err(ScenarioError::syntax_at(path, "unrecognised array literal")),
    }
}

impl Expr {
    pub fn parse(v: &Json, path: &str) -> Result<Expr, ScenarioError> {
        match v {
            Json::String(name) => Ok(Expr::Ref(name.clone())),
            Json::Array(items) => parse_literal(items, path),
            Json::Object(obj) => Self::parse_object(obj, path),
            _ => Err(ScenarioError::syntax_at(path, "expected a name, an array or an expression object")),
        }
    }

    fn parse_object(obj: &Map<String, Json>, path: &str) -> Result<Expr, ScenarioError> {
        let key = ["matrix", "vector", "ctor", "projector", "tensor", "pvm_event", "complement", "adjoint", "scale", "sum", "event", "normalize", "density", "mixture"]
            .into_iter()
            .find(|k| obj.contains_key(*k))
            .ok_or_else(|| ScenarioError::syntax_at(path, "unknown expression form"))?;
        let inner = &obj[key];
        let sub = format!("{path}.{key}");
        let boxed = |v: &Json| Self::parse(v, &sub).map(Box::new);
        let list = |v: &Json| -> Result<Vec<Expr>, ScenarioError> {
            let items = v.as_array().ok_or_else(|| ScenarioError::syntax_at(&sub, "expected an array"))?;
            items.iter().enumerate().map(|(i, x)| Self::parse(x, &format!("{sub}[{i}]"))).collect()
        };
        Ok(match key {
            "matrix" => Expr::Matrix(parse_rows(inner, &sub)?),
            "vector" => Expr::Vector(parse_complex_list(inner, &sub)?),
            "ctor" => {
                let name = inner.as_str().ok_or_else(|| ScenarioError::syntax_at(&sub, "expected a constructor name"))?;
                let ctor = Ctor::from_name(name)
                    .ok_or_else(|| ScenarioError::new(ErrorKind::UnknownName, &sub, format!("unknown constructor '{name}'")))?;
                let dim = match obj.get("dim") {
                    None => None,
                    Some(d) => Some(
                        d.as_u64()
                            .filter(|&d| d >= 1)
                            .ok_or_else(|| ScenarioError::syntax_at(format!("{path}.dim"), "expected a positive integer"))?
                            as usize,
                    ),
                };
                Expr::Ctor { ctor, dim }
            }
            "projector" => Expr::Projector(boxed(inner)?),
            "tensor" => {
                let parts = list(inner)?;
                if parts.len() < 2 {
                    return Err(ScenarioError::syntax_at(&sub, "tensor needs at least two factors"));
                }
                Expr::Tensor(parts)
            }
            "pvm_event" => {
                let o = as_object(inner, &sub)?;
                let obs = o.get("obs").ok_or_else(|| ScenarioError::syntax_at(&sub, "missing 'obs'"))?;
                Expr::PvmEvent { obs: Box::new(Self::parse(obs, &format!("{sub}.obs"))?), set: BorelSpec::parse(o, &sub)? }
            }
            "complement" => Expr::Complement(boxed(inner)?),
            "adjoint" => Expr::Adjoint(boxed(inner)?),
            "scale" => {
                let o = as_object(inner, &sub)?;
                let factor = o.get("factor").ok_or_else(|| ScenarioError::syntax_at(&sub, "missing 'factor'"))?;
                let of = o.get("of").ok_or_else(|| ScenarioError::syntax_at(&sub, "missing 'of'"))?;
                Expr::Scale {
                    factor: parse_complex(factor, &format!("{sub}.factor"))?,
                    of: Box::new(Self::parse(of, &format!("{sub}.of"))?),
                }
            }
            "sum" => {
                let terms = list(inner)?;
                if terms.is_empty() {
                    return Err(ScenarioError::syntax_at(&sub, "empty sum"));
                }
                Expr::Sum(terms)
            }
            "event" => Expr::Event(boxed(inner)?),
            "normalize" => Expr::Normalize(boxed(inner)?),
            "density" => Expr::Density(boxed(inner)?),
            "mixture" => {
                let o = as_object(inner, &sub)?;
                let weights = o.get("weights").ok_or_else(|| ScenarioError::syntax_at(&sub, "missing 'weights'"))?;
                let states = o.get("states").ok_or_else(|| ScenarioError::syntax_at(&sub, "missing 'states'"))?;
                let items = states
                    .as_array()
                    .ok_or_else(|| ScenarioError::syntax_at(format!("{sub}.states"), "expected an array"))?;
                Expr::Mixture {
                    weights: parse_reals(weights, &format!("{sub}.weights"))?,
                    states: items
                        .iter()
                        .enumerate()
                        .map(|(i, x)| Self::parse(x, &format!("{sub}.states[{i}]")))
                        .collect::<Result<_, _>>()?,
                }
            }
            _ => unreachable!(),
        })
    }

    pub fn to_json(&self) -> Json {
        match self {
            Expr::Ref(name) => json!(name),
            Expr::Matrix(rows) => {
                let rows: Vec<Json> = rows.iter().map(|r| Json::Array(r.iter().map(|z| complex_json(*z)).collect())).collect();
                json!({ "matrix": rows })
            }
            Expr::Vector(v) => json!({ "vector": v.iter().map(|z| complex_json(*z)).collect::<Vec<_>>() }),
            Expr::Ctor { ctor, dim } => match dim {
                Some(d) => json!({ "ctor": ctor.name(), "dim": d }),
                None => json!({ "ctor": ctor.name() }),
            },
            Expr::Projector(x) => json!({ "projector": x.to_json() }),
            Expr::Tensor(parts) => json!({ "tensor": parts.iter().map(Expr::to_json).collect::<Vec<_>>() }),
            Expr::PvmEvent { obs, set } => {
                let mut o = Map::new();
                o.insert("obs".into(), obs.to_json());
                set.write(&mut o);
                json!({ "pvm_event": o })
            }
            Expr::Complement(x) => json!({ "complement": x.to_json() }),
            Expr::Adjoint(x) => json!({ "adjoint": x.to_json() }),
            Expr::Scale { factor, of } => json!({ "scale": { "factor": complex_json(*factor), "of": of.to_json() } }),
            Expr::Sum(terms) => json!({ "sum": terms.iter().map(Expr::to_json).collect::<Vec<_>>() }),
            Expr::Event(x) => json!({ "event": x.to_json() }),
            Expr::Normalize(x) => json!({ "normalize": x.to_json() }),
            Expr::Density(x) => json!({ "density": x.to_json() }),
            Expr::Mixture { weights, states } => json!({
                "mixture": { "weights": weights, "states": states.iter().map(Expr::to_json).collect::<Vec<_>>() }
            }),
        }
    }
}

/// Spin-`j` matrices `(S_x, S_y, S_z)` in dimension `d = 2j + 1`, ordered
/// from `m = j` down to `m = −j`.
pub fn spin_operators(d: usize) -> (CMatrix, CMatrix, CMatrix) {
    let j = (d as f64 - 1.0) / 2.0;
    let m = |k: usize| j - k as f64;
    let mut plus = CMatrix::zeros(d, d).to_rows();
    for k in 1..d {
        let mk = m(k);
        plus[k - 1][k] = c((j * (j + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let plus = CMatrix::from_rows(&plus).expect("square");
    let minus = plus.adjoint();
    let sx = (&plus + &minus).scale_real(0.5);
    let sy = (&plus - &minus).scale(c(0.0, -0.5));
    let sz = CMatrix::from_real_diag(&(0..d).map(m).collect::<Vec<_>>());
    (sx, sy, sz)
}

/// `(S⊗I + I⊗S)²` for two spins of dimension `√d` each.
fn total_spin_sq(d: usize) -> Option<CMatrix> {
    let k = (d as f64).sqrt().round() as usize;
    if k < 2 || k * k != d {
        return None;
    }
    let (sx, sy, sz) = spin_operators(k);
    let id = CMatrix::identity(k);
    let mut total = CMatrix::zeros(d, d);
    for s in [&sx, &sy, &sz] {
        let sum = &s.kron(&id) + &id.kron(s);
        total = &total + &(&sum * &sum);
    }
    Some(total)
}

/// Evaluates definitions on demand, memoising results and detecting cycles.
pub(crate) struct Env<'a> {
    pub dim: usize,
    defs: &'a BTreeMap<String, Expr>,
    cache: HashMap<String, Value>,
    active: Vec<String>,
}

impl<'a> Env<'a> {
    pub fn new(dim: usize, defs: &'a BTreeMap<String, Expr>) -> Self {
        Self { dim, defs, cache: HashMap::new(), active: Vec::new() }
    }

    /// Path naming where an expression's problems should be reported: the
    /// definition itself for references, the use site otherwise.
    pub fn blame(expr: &Expr, path: &str) -> String {
        match expr {
            Expr::Ref(name) => format!("defs.{name}"),
            _ => path.to_string(),
        }
    }

    pub fn lookup(&mut self, name: &str, path: &str) -> Result<Value, ScenarioError> {
        if let Some(v) = self.cache.get(name) {
            return Ok(v.clone());
        }
        let expr = self
            .defs
            .get(name)
            .ok_or_else(|| ScenarioError::new(ErrorKind::UnknownName, path, format!("unknown name '{name}'")))?;
        if self.active.iter().any(|n| n == name) {
            return Err(ScenarioError::new(
                ErrorKind::InvariantViolation,
                format!("defs.{name}"),
                format!("definition cycle: {} -> {name}", self.active.join(" -> ")),
            ));
        }
        self.active.push(name.to_string());
        let result = self.eval(expr, &format!("defs.{name}"));
        self.active.pop();
        let value = result?;
        self.cache.insert(name.to_string(), value.clone());
        Ok(value)
    }

    pub fn eval(&mut self, expr: &Expr, path: &str) -> Result<Value, ScenarioError> {
        let engine = |e: Error| ScenarioError::from_engine(path, e);
        Ok(match expr {
            Expr::Ref(name) => self.lookup(name, path)?,
            Expr::Matrix(rows) => Value::Matrix(CMatrix::from_rows(rows).map_err(engine)?),
            Expr::Vector(v) => Value::Vector(CVector::new(v.clone()).map_err(engine)?),
            Expr::Ctor { ctor, dim } => Value::Matrix(self.ctor(*ctor, *dim, path)?),
            Expr::Projector(x) => {
                let v = self.vector(x, &format!("{path}.projector"))?;
                Value::Event(Event::projector_onto(&v).map_err(engine)?)
            }
            Expr::Tensor(parts) => {
                let mut acc = self.eval(&parts[0], &format!("{path}.tensor[0]"))?;
                for (i, p) in parts.iter().enumerate().skip(1) {
                    let next = self.eval(p, &format!("{path}.tensor[{i}]"))?;
                    acc = match (acc, next) {
                        (Value::Vector(a), Value::Vector(b)) => Value::Vector(a.kron(&b)),
                        (Value::Event(a), Value::Event(b)) => Value::Event(a.tensor(&b)),
                        (a, b) => match (a.matrix(), b.matrix()) {
                            (Some(a), Some(b)) => Value::Matrix(a.kron(b)),
                            _ => {
                                return Err(ScenarioError::new(
                                    ErrorKind::InvariantViolation,
                                    path,
                                    format!("cannot tensor a {} with a {}", a.kind(), b.kind()),
                                ))
                            }
                        },
                    };
                }
                acc
            }
            Expr::PvmEvent { obs, set } => {
                let obs = self.observable(obs, &format!("{path}.pvm_event.obs"))?;
                let set = set.to_set().map_err(engine)?;
                Value::Event(obs.event_in(&set))
            }
            Expr::Complement(x) => Value::Event(hilbert::complement(&self.event(x, &format!("{path}.complement"))?)),
            Expr::Adjoint(x) => match self.eval(x, &format!("{path}.adjoint"))? {
                Value::Event(e) => Value::Event(e),
                Value::Matrix(m) => Value::Matrix(m.adjoint()),
                Value::Vector(_) => return Err(self.type_error(x, path, "adjoint", "an operator")),
            },
            Expr::Scale { factor, of } => match self.eval(of, &format!("{path}.scale.of"))? {
                Value::Vector(v) => Value::Vector(v.scale(*factor)),
                other => Value::Matrix(other.matrix().expect("operator").scale(*factor)),
            },
            Expr::Sum(terms) => {
                let mut acc = self.eval(&terms[0], &format!("{path}.sum[0]"))?;
                for (i, t) in terms.iter().enumerate().skip(1) {
                    let p = format!("{path}.sum[{i}]");
                    let next = self.eval(t, &p)?;
                    acc = match (&acc, &next) {
                        (Value::Vector(a), Value::Vector(b)) if a.dim() == b.dim() => Value::Vector(a + b),
                        _ => match (acc.matrix(), next.matrix()) {
                            (Some(a), Some(b)) if a.rows() == b.rows() && a.cols() == b.cols() => Value::Matrix(a + b),
                            _ => {
                                return Err(ScenarioError::new(
                                    ErrorKind::DimMismatch,
                                    p,
                                    format!("cannot add a {} to a {}", next.kind(), acc.kind()),
                                ))
                            }
                        },
                    };
                }
                acc
            }
            Expr::Event(x) => Value::Event(self.event(x, &format!("{path}.event"))?),
            Expr::Normalize(x) => {
                let v = self.vector(x, &format!("{path}.normalize"))?;
                Value::Vector(v.normalized().ok_or_else(|| {
                    ScenarioError::new(ErrorKind::InvariantViolation, path, "cannot normalise the zero vector")
                })?)
            }
            Expr::Density(x) => {
                let psi = self.pure_state(x, &format!("{path}.density"))?;
                Value::Matrix(hilbert::density_from_pure(&psi).matrix().clone())
            }
            Expr::Mixture { weights, states } => {
                let mut rhos = Vec::with_capacity(states.len());
                for (i, s) in states.iter().enumerate() {
                    let p = format!("{path}.mixture.states[{i}]");
                    rhos.push(match self.eval(s, &p)? {
                        Value::Vector(v) => hilbert::density_from_pure(
                            &PureState::new(v).map_err(|e| ScenarioError::from_engine(&Self::blame(s, &p), e))?,
                        ),
                        other => hilbert::DensityMatrix::new(other.matrix().expect("operator").clone())
                            .map_err(|e| ScenarioError::from_engine(&Self::blame(s, &p), e))?,
                    });
                }
                Value::Matrix(hilbert::mixture(weights, &rhos).map_err(engine)?.matrix().clone())
            }
        })
    }

    fn ctor(&self, ctor: Ctor, dim: Option<usize>, path: &str) -> Result<CMatrix, ScenarioError> {
        let bad = |d: usize, what: &str| {
            ScenarioError::new(ErrorKind::DimMismatch, path, format!("{} needs {what}, got dimension {d}", ctor.name()))
        };
        Ok(match ctor {
            Ctor::Identity => CMatrix::identity(dim.unwrap_or(self.dim)),
            Ctor::SpinX | Ctor::SpinY | Ctor::SpinZ => {
                let d = dim.unwrap_or(2);
                if d < 2 {
                    return Err(bad(d, "dimension at least 2"));
                }
                let (x, y, z) = spin_operators(d);
                match ctor {
                    Ctor::SpinX => x,
                    Ctor::SpinY => y,
                    _ => z,
                }
            }
            Ctor::TotalSpinSq => {
                let d = dim.unwrap_or(4);
                total_spin_sq(d).ok_or_else(|| bad(d, "a square dimension of at least 4"))?
            }
        })
    }

    fn type_error(&self, expr: &Expr, path: &str, what: &str, wanted: &str) -> ScenarioError {
        ScenarioError::new(ErrorKind::InvariantViolation, Self::blame(expr, path), format!("{what} needs {wanted}"))
    }

    fn check_dim(&self, d: usize, expr: &Expr, path: &str) -> Result<(), ScenarioError> {
        if d != self.dim {
            return Err(ScenarioError::new(
                ErrorKind::DimMismatch,
                Self::blame(expr, path),
                format!("dimension {d} does not match the scenario dimension {}", self.dim),
            ));
        }
        Ok(())
    }

    fn vector(&mut self, expr: &Expr, path: &str) -> Result<CVector, ScenarioError> {
        match self.eval(expr, path)? {
            Value::Vector(v) => Ok(v),
            other => Err(self.type_error(expr, path, "this position", &format!("a vector, found a {}", other.kind()))),
        }
    }

    /// Any square operator, at any dimension.
    pub fn operator(&mut self, expr: &Expr, path: &str) -> Result<CMatrix, ScenarioError> {
        match self.eval(expr, path)? {
            Value::Vector(_) => Err(self.type_error(expr, path, "this position", "an operator, found a vector")),
            other => {
                let m = other.matrix().expect("operator").clone();
                m.dim().map_err(|e| ScenarioError::from_engine(&Self::blame(expr, path), e))?;
                Ok(m)
            }
        }
    }

    /// A projection; raw matrices are validated here.
    pub fn event(&mut self, expr: &Expr, path: &str) -> Result<Event, ScenarioError> {
        match self.eval(expr, path)? {
            Value::Event(e) => Ok(e),
            Value::Matrix(m) => Event::try_new(m).map_err(|e| ScenarioError::from_engine(&Self::blame(expr, path), e)),
            Value::Vector(_) => Err(self.type_error(expr, path, "this position", "an event, found a vector")),
        }
    }

    pub fn observable(&mut self, expr: &Expr, path: &str) -> Result<Observable, ScenarioError> {
        let m = self.operator(expr, path)?;
        Observable::new(m).map_err(|e| ScenarioError::from_engine(&Self::blame(expr, path), e))
    }

    pub fn pure_state(&mut self, expr: &Expr, path: &str) -> Result<PureState, ScenarioError> {
        let v = self.vector(expr, path)?;
        PureState::new(v).map_err(|e| ScenarioError::from_engine(&Self::blame(expr, path), e))
    }

    /// Event at the scenario dimension.
    pub fn event_here(&mut self, expr: &Expr, path: &str) -> Result<Event, ScenarioError> {
        let e = self.event(expr, path)?;
        self.check_dim(e.dim(), expr, path)?;
        Ok(e)
    }

    /// Operator at the scenario dimension.
    pub fn operator_here(&mut self, expr: &Expr, path: &str) -> Result<CMatrix, ScenarioError> {
        let m = self.operator(expr, path)?;
        self.check_dim(m.rows(), expr, path)?;
        Ok(m)
    }

    pub fn observable_here(&mut self, expr: &Expr, path: &str) -> Result<Observable, ScenarioError> {
        let o = self.observable(expr, path)?;
        self.check_dim(o.dim(), expr, path)?;
        Ok(o)
    }

    /// A vector becomes a pure state, an operator a density matrix.
    pub fn state_here(&mut self, expr: &Expr, path: &str) -> Result<crate::born::QState, ScenarioError> {
        let blame = Self::blame(expr, path);
        let state = match self.eval(expr, path)? {
            Value::Vector(v) => {
                crate::born::QState::Pure(PureState::new(v).map_err(|e| ScenarioError::from_engine(&blame, e))?)
            }
            other => crate::born::QState::Density(
                hilbert::DensityMatrix::new(other.matrix().expect("operator").clone())
                    .map_err(|e| ScenarioError::from_engine(&blame, e))?,
            ),
        };
        self.check_dim(state.dim().expect("state"), expr, path)?;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(defs: &[(&str, Json)], name: &str) -> Result<Value, ScenarioError> {
        let defs: BTreeMap<String, Expr> =
            defs.iter().map(|(k, v)| (k.to_string(), Expr::parse(v, k).unwrap())).collect();
        Env::new(4, &defs).lookup(name, "test")
    }

    #[test]
    fn spin_half_matches_pauli_over_two() {
        let (x, y, z) = spin_operators(2);
        let (px, py, pz) = crate::entanglement::spin_matrices();
        assert!(x.max_abs_diff(&px) < 1e-15 && y.max_abs_diff(&py) < 1e-15 && z.max_abs_diff(&pz) < 1e-15);
    }

    #[test]
    fn spin_one_commutation() {
        let (x, y, z) = spin_operators(3);
        let lhs = x.commutator(&y);
        assert!(lhs.max_abs_diff(&z.scale(c(0.0, 1.0))) < 1e-14);
        let casimir = &(&(&x * &x) + &(&y * &y)) + &(&z * &z);
        assert!(casimir.max_abs_diff(&CMatrix::identity(3).scale_real(2.0)) < 1e-14);
    }

    #[test]
    fn total_spin_of_two_halves() {
        let m = total_spin_sq(4).unwrap();
        assert!(m.max_abs_diff(&crate::entanglement::total_spin_sq()) < 1e-14);
        assert!(total_spin_sq(5).is_none());
    }

    #[test]
    fn bare_literals() {
        assert_eq!(Expr::parse(&json!([1, 0]), "x").unwrap(), Expr::Vector(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        assert_eq!(Expr::parse(&json!([[0, 1]]), "x").unwrap(), Expr::Vector(vec![c(0.0, 1.0)]));
        assert!(matches!(Expr::parse(&json!([[1, 0, 0], [0, 1, 0]]), "x").unwrap(), Expr::Matrix(r) if r.len() == 2));
        assert!(matches!(Expr::parse(&json!([[[1, 0]]]), "x").unwrap(), Expr::Matrix(r) if r.len() == 1));
    }

    #[test]
    fn cycles_and_unknown_names() {
        let err = eval(&[("a", json!({"adjoint": "b"})), ("b", json!({"adjoint": "a"}))], "a").unwrap_err();
        assert_eq!(err.kind, ErrorKind::InvariantViolation);
        let err = eval(&[("a", json!({"adjoint": "zz"}))], "a").unwrap_err();
        assert_eq!(err.kind, ErrorKind::UnknownName);
    }

    #[test]
    fn complement_requires_projection() {
        let defs = [("m", json!({"matrix": [[1, 1], [0, 1]]})), ("c", json!({"complement": "m"}))];
        let err = eval(&defs, "c").unwrap_err();
        assert_eq!(err.kind, ErrorKind::InvariantViolation);
        assert_eq!(err.path, "defs.m");
    }

    #[test]
    fn tensor_of_events_stays_an_event() {
        let defs = [
            ("p", json!({"projector": [1, 0]})),
            ("q", json!({"tensor": ["p", {"ctor": "identity", "dim": 2}]})),
            ("r", json!({"tensor": ["p", "p"]})),
        ];
        assert!(matches!(eval(&defs, "q").unwrap(), Value::Matrix(_)));
        assert!(matches!(eval(&defs, "r").unwrap(), Value::Event(e) if e.rank() == 1));
    }
}
