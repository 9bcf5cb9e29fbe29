//! Query preparation and evaluation.

use serde::Serialize;
use serde_json::{json, Map, Value as Json};

use super::expr::{Env, Expr};
use super::sample::{sample_sequence, SampleReport};
use super::{ErrorKind, EvolutionSpec, QuerySpec, Scenario, ScenarioError, StateSpec};
use crate::born::{self, EventSequence, QState};
use crate::entanglement;
use crate::error::Result;
use crate::hilbert::{BorelSet, Observable, PureState};
use crate::linalg::{self, cr, CMatrix};
use crate::models::{EvolutionFamily, TOL_UNITARY};

/// Samples with `|z|` above this are reported as failures.
pub const Z_LIMIT: f64 = 4.0;
/// `Δ` magnitudes above this mark a tangled triple.
pub const TOL_TANGLED: f64 = 1e-12;

/// A query with every operand evaluated.
pub(crate) enum Prepared {
    ProbEvent(crate::hilbert::Event, QState),
    ProbObsIn(Observable, BorelSet, QState),
    Consecutive(EventSequence, QState),
    Conditional(EventSequence, EventSequence, QState),
    WithEvolution(EventSequence, EventSequence, Vec<f64>, QState),
    Delta(crate::hilbert::Event, crate::hilbert::Event, crate::hilbert::Event),
    Entropy(Observable, f64, QState),
    Moment(Observable, usize, bool, QState),
    Expectation(CMatrix, QState),
    Sample { seq: EventSequence, times: Option<Vec<f64>>, psi: PureState, trials: u64, seed: u64 },
}

pub(crate) struct PreparedScenario {
    pub evolution: Option<EvolutionFamily>,
    pub queries: Vec<(String, &'static str, Prepared)>,
}

fn evolution_family(spec: &EvolutionSpec, env: &mut Env, hbar: f64) -> std::result::Result<EvolutionFamily, ScenarioError> {
    let dim = env.dim;
    match spec {
        EvolutionSpec::Hamiltonian(h) => {
            let path = "evolution.hamiltonian";
            let m = env.operator_here(h, path)?;
            EvolutionFamily::schrodinger(&m, hbar).map_err(|e| ScenarioError::from_engine(&Env::blame(h, path), e))
        }
        EvolutionSpec::UnitaryFamily(steps) => {
            let mut ops = Vec::with_capacity(steps.len());
            for (i, (t, op)) in steps.iter().enumerate() {
                let path = format!("evolution.unitary_family[{i}].op");
                let u = env.operator_here(op, &path)?;
                let deviation = linalg::unitarity_defect(&u).map_err(|e| ScenarioError::from_engine(&path, e))?;
                if deviation > TOL_UNITARY {
                    return Err(ScenarioError::new(
                        ErrorKind::InvariantViolation,
                        Env::blame(op, &path),
                        format!("operator is not unitary (deviation {deviation:.3e})"),
                    ));
                }
                ops.push((*t, u));
            }
            Ok(EvolutionFamily::unitary_family(dim, move |t| {
                ops.iter()
                    .rev()
                    .find(|(tk, _)| *tk <= t)
                    .map_or_else(|| CMatrix::identity(dim), |(_, u)| u.clone())
            }))
        }
        EvolutionSpec::Contraction(g) => {
            let path = "evolution.contraction";
            let m = env.operator_here(g, path)?;
            let blame = Env::blame(g, path);
            let eig = linalg::hermitian_eig_auto(&m).map_err(|e| ScenarioError::from_engine(&blame, e))?;
            let floor = -1e-12 * eig.max_abs_eigenvalue().max(1.0);
            if eig.eigenvalues.first().is_some_and(|&l| l < floor) {
                return Err(ScenarioError::new(ErrorKind::InvariantViolation, blame, "generator must be positive semidefinite"));
            }
            Ok(EvolutionFamily::generic(dim, move |s, t| eig.apply_function(|l| cr((-(t - s) * l).exp()))))
        }
    }
}

fn sequence(env: &mut Env, exprs: &[Expr], path: &str) -> std::result::Result<EventSequence, ScenarioError> {
    let events = exprs
        .iter()
        .enumerate()
        .map(|(i, e)| env.event_here(e, &format!("{path}[{i}]")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    EventSequence::new(events).map_err(|e| ScenarioError::from_engine(path, e))
}

fn state(env: &mut Env, spec: &StateSpec, path: &str) -> std::result::Result<QState, ScenarioError> {
    match spec {
        StateSpec::None => Ok(QState::NoState),
        StateSpec::Expr(e) => env.state_here(e, &format!("{path}.state")),
    }
}

/// Evaluates definitions, the evolution and every query operand.
pub(crate) fn prepare(s: &Scenario) -> std::result::Result<PreparedScenario, ScenarioError> {
    let mut env = Env::new(s.dim, &s.defs);
    for name in s.defs.keys() {
        env.lookup(name, &format!("defs.{name}"))?;
    }
    let evolution = s.evolution.as_ref().map(|e| evolution_family(e, &mut env, s.hbar)).transpose()?;
    let mut queries = Vec::with_capacity(s.queries.len());
    for (i, q) in s.queries.iter().enumerate() {
        let p = format!("queries[{i}]");
        let needs_evolution = || {
            ScenarioError::new(ErrorKind::InvariantViolation, format!("{p}.times"), "times given but the scenario has no evolution")
        };
        let prepared = match &q.spec {
            QuerySpec::ProbEvent { event, state: st } => {
                Prepared::ProbEvent(env.event_here(event, &format!("{p}.event"))?, state(&mut env, st, &p)?)
            }
            QuerySpec::ProbObsIn { obs, set, state: st } => Prepared::ProbObsIn(
                env.observable_here(obs, &format!("{p}.obs"))?,
                set.to_set().map_err(|e| ScenarioError::from_engine(&format!("{p}.borel"), e))?,
                state(&mut env, st, &p)?,
            ),
            QuerySpec::Consecutive { events, state: st } => {
                Prepared::Consecutive(sequence(&mut env, events, &format!("{p}.events"))?, state(&mut env, st, &p)?)
            }
            QuerySpec::Conditional { target, given, state: st } => Prepared::Conditional(
                sequence(&mut env, target, &format!("{p}.target"))?,
                sequence(&mut env, given, &format!("{p}.given"))?,
                state(&mut env, st, &p)?,
            ),
            QuerySpec::WithEvolution { target, given, times, state: st } => {
                if evolution.is_none() {
                    return Err(needs_evolution());
                }
                Prepared::WithEvolution(
                    sequence(&mut env, target, &format!("{p}.target"))?,
                    sequence(&mut env, given, &format!("{p}.given"))?,
                    times.clone(),
                    state(&mut env, st, &p)?,
                )
            }
            QuerySpec::Delta { e1, e2, e0 } => Prepared::Delta(
                env.event_here(e1, &format!("{p}.e1"))?,
                env.event_here(e2, &format!("{p}.e2"))?,
                env.event_here(e0, &format!("{p}.e0"))?,
            ),
            QuerySpec::Entropy { obs, base, state: st } => {
                Prepared::Entropy(env.observable_here(obs, &format!("{p}.obs"))?, *base, state(&mut env, st, &p)?)
            }
            QuerySpec::Moment { obs, order, central, state: st } => Prepared::Moment(
                env.observable_here(obs, &format!("{p}.obs"))?,
                *order,
                *central,
                state(&mut env, st, &p)?,
            ),
            QuerySpec::Expectation { op, state: st } => {
                Prepared::Expectation(env.operator_here(op, &format!("{p}.op"))?, state(&mut env, st, &p)?)
            }
            QuerySpec::Sample { events, times, state: st, trials, seed } => {
                if times.is_some() && evolution.is_none() {
                    return Err(needs_evolution());
                }
                let psi = match state(&mut env, st, &p)? {
                    QState::Pure(psi) => psi,
                    _ => {
                        return Err(ScenarioError::new(
                            ErrorKind::InvariantViolation,
                            format!("{p}.state"),
                            "sampling needs a pure state",
                        ))
                    }
                };
                Prepared::Sample {
                    seq: sequence(&mut env, events, &format!("{p}.events"))?,
                    times: times.clone(),
                    psi,
                    trials: *trials,
                    seed: *seed,
                }
            }
        };
        queries.push((q.label.clone(), q.spec.kind(), prepared));
    }
    Ok(PreparedScenario { evolution, queries })
}

/// One line of a [`Report`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub label: String,
    pub kind: String,
    pub value: Option<f64>,
    pub zero_denominator: bool,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Json>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Row {
    /// No error, and for samples a frequency consistent with the analytic value.
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.extra.get("pass").and_then(Json::as_bool).unwrap_or(true)
    }
}

/// Query results in document order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(Row::passed)
    }

    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("serialisable") + "\n")
            .collect()
    }

    /// Aligned columns: label, kind, value, flags.
    pub fn to_table(&self) -> String {
        let header = ["label", "kind", "value", "notes"].map(String::from);
        let mut lines = vec![header];
        for r in &self.rows {
            let value = r.value.map_or_else(|| "-".to_string(), |v| format!("{v:.12}"));
            let mut notes = Vec::new();
            if r.zero_denominator {
                notes.push("zero_denominator".to_string());
            }
            for (k, v) in &r.extra {
                notes.push(format!("{k}={v}"));
            }
            if let Some(e) = &r.error {
                notes.push(format!("error: {e}"));
            }
            lines.push([r.label.clone(), r.kind.clone(), value, notes.join(" ")]);
        }
        let widths: Vec<usize> = (0..3).map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for l in &lines {
            let mut line = String::new();
            for (c, w) in widths.iter().enumerate() {
                line.push_str(&l[c]);
                line.push_str(&" ".repeat(w - l[c].chars().count() + 2));
            }
            line.push_str(&l[3]);
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

pub(crate) fn sample_report(p: &Prepared, evolution: Option<&EvolutionFamily>, trials: Option<u64>, seed: Option<u64>) -> Result<SampleReport> {
    let (seq, times, psi, default_trials, default_seed) = match p {
        Prepared::Sample { seq, times, psi, trials, seed } => (seq.clone(), times.clone(), psi.clone(), *trials, *seed),
        Prepared::Consecutive(seq, QState::Pure(psi)) => (seq.clone(), None, psi.clone(), super::DEFAULT_TRIALS, super::DEFAULT_SEED),
        Prepared::WithEvolution(target, given, times, QState::Pure(psi)) => {
            (given.then(target)?, Some(times.clone()), psi.clone(), super::DEFAULT_TRIALS, super::DEFAULT_SEED)
        }
        _ => {
            return Err(crate::Error::InvalidArgument(
                "only sample, consecutive and with_evolution queries on a pure state can be sampled".into(),
            ))
        }
    };
    let timing = match (&times, evolution) {
        (Some(t), Some(evo)) => Some((t.as_slice(), evo)),
        (None, _) => None,
        (Some(_), None) => return Err(crate::Error::InvalidArgument("no evolution for the given times".into())),
    };
    sample_sequence(&seq, timing, &psi, trials.unwrap_or(default_trials), seed.unwrap_or(default_seed))
}

fn execute(p: &Prepared, evolution: Option<&EvolutionFamily>) -> Result<(f64, bool, Map<String, Json>)> {
    let mut extra = Map::new();
    let prob = |v: Result<born::ProbValue>| v.map(|v| (v.value, v.zero_denominator, Map::new()));
    match p {
        Prepared::ProbEvent(e, s) => prob(born::prob_event(e, s)),
        Prepared::ProbObsIn(t, set, s) => prob(born::prob_obs_in(t, set, s)),
        Prepared::Consecutive(seq, s) => prob(born::consecutive(seq, s)),
        Prepared::Conditional(target, given, s) => prob(born::conditional(target, given, s)),
        Prepared::WithEvolution(target, given, times, s) => {
            let evo = evolution.expect("checked when preparing");
            if given.is_empty() {
                prob(born::prob_with_evolution(target, times, evo, s))
            } else {
                prob(born::conditional_with_evolution(target, given, times, evo, s))
            }
        }
        Prepared::Delta(e1, e2, e0) => {
            let (d12, d21) = entanglement::delta(e1, e2, e0)?;
            extra.insert("delta_21".into(), json!(d21));
            extra.insert("tangled".into(), json!(d12.abs().max(d21.abs()) > TOL_TANGLED));
            Ok((d12, false, extra))
        }
        Prepared::Entropy(t, base, s) => Ok((born::entropy(t, s, *base)?, false, extra)),
        Prepared::Moment(t, k, central, s) => {
            let v = if *central { born::central_moment(t, *k, s)? } else { born::moment(t, *k, s)? };
            Ok((v, false, extra))
        }
        Prepared::Expectation(a, s) => Ok((born::expected_value(a, s)?, false, extra)),
        Prepared::Sample { .. } => {
            let r = sample_report(p, evolution, None, None)?;
            extra.insert("analytic".into(), json!(r.analytic));
            extra.insert("successes".into(), json!(r.successes));
            extra.insert("trials".into(), json!(r.trials));
            extra.insert("seed".into(), json!(r.seed));
            match (r.z_score, r.exact_match) {
                (Some(z), _) => {
                    extra.insert("z_score".into(), json!(z));
                    extra.insert("pass".into(), json!(z.abs() <= Z_LIMIT));
                }
                (None, Some(m)) => {
                    extra.insert("exact_match".into(), json!(m));
                    extra.insert("pass".into(), json!(m));
                }
                (None, None) => {}
            }
            Ok((r.frequency, false, extra))
        }
    }
}

/// Evaluates every query in document order. Failures are recorded in the
/// row and do not stop later queries.
pub fn run_queries(s: &Scenario) -> std::result::Result<Report, ScenarioError> {
    let prepared = prepare(s)?;
    let rows = prepared
        .queries
        .iter()
        .map(|(label, kind, p)| {
            let (value, zero_denominator, extra, error) = match execute(p, prepared.evolution.as_ref()) {
                Ok((v, z, extra)) => (Some(v), z, extra, None),
                Err(e) => (None, false, Map::new(), Some(e.to_string())),
            };
            Row { label: label.clone(), kind: kind.to_string(), value, zero_denominator, extra, error }
        })
        .collect();
    Ok(Report { rows })
}

/// Runs the sampler for the query labelled `label`, overriding its trial
/// count and seed when given.
pub fn sample_query(
    s: &Scenario,
    label: &str,
    trials: Option<u64>,
    seed: Option<u64>,
) -> std::result::Result<SampleReport, ScenarioError> {
    let prepared = prepare(s)?;
    let (index, (_, _, p)) = prepared
        .queries
        .iter()
        .enumerate()
        .find(|(_, (l, _, _))| l == label)
        .ok_or_else(|| ScenarioError::new(ErrorKind::UnknownName, "queries", format!("no query labelled '{label}'")))?;
    sample_report(p, prepared.evolution.as_ref(), trials, seed)
        .map_err(|e| ScenarioError::from_engine(&format!("queries[{index}]"), e))
}

#[cfg(test)]
mod tests {
    use super::super::parse_scenario;
    use super::*;

    #[test]
    fn trivial_rows_are_exact() {
        let doc = r#"{"dim": 2, "defs": {"I": {"ctor": "identity"}, "Z": {"scale": {"factor": 0, "of": "I"}}, "psi": [0.6, 0.8]},
            "queries": [
              {"label": "one", "kind": "prob_event", "event": "I", "state": "psi"},
              {"label": "zero", "kind": "prob_event", "event": {"event": "Z"}, "state": "psi"},
              {"label": "empty", "kind": "consecutive", "events": [], "state": "none"}
            ]}"#;
        let r = run_queries(&parse_scenario(doc).unwrap()).unwrap();
        let values: Vec<f64> = r.rows.iter().map(|r| r.value.unwrap()).collect();
        assert_eq!(values, vec![1.0, 0.0, 1.0]);
        assert!(r.all_passed());
    }

    #[test]
    fn failed_rows_do_not_stop_the_run() {
        let doc = r#"{"dim": 2, "defs": {"T": {"ctor": "spin_z"}},
            "queries": [
              {"label": "bad", "kind": "moment", "obs": "T", "order": 2, "state": "none"},
              {"label": "good", "kind": "prob_obs_in", "obs": "T", "points": [0.5], "state": [1, 0]}
            ]}"#;
        let r = run_queries(&parse_scenario(doc).unwrap()).unwrap();
        assert!(r.rows[0].error.is_some() && r.rows[0].value.is_none());
        assert_eq!(r.rows[1].value, Some(1.0));
        assert!(!r.all_passed());
    }

    #[test]
    fn unitary_family_steps() {
        let doc = r#"{"dim": 2,
            "defs": {"X": {"matrix": [[0, 1], [1, 0]]}, "up": {"projector": [1, 0]}, "psi": [1, 0]},
            "evolution": {"unitary_family": [{"t": 1, "op": "X"}]},
            "queries": [
              {"label": "before", "kind": "with_evolution", "target": ["up"], "times": [0, 0.5], "state": "psi"},
              {"label": "after", "kind": "with_evolution", "target": ["up"], "times": [0, 2], "state": "psi"}
            ]}"#;
        let r = run_queries(&parse_scenario(doc).unwrap()).unwrap();
        assert_eq!(r.row("before").unwrap().value, Some(1.0));
        assert!(r.row("after").unwrap().value.unwrap() < 1e-15);
    }

    #[test]
    fn contraction_evolution_decays() {
        let doc = r#"{"dim": 2, "defs": {"G": {"matrix": [[0, 0], [0, 1]]}, "psi": [0, 1]},
            "evolution": {"contraction": "G"},
            "queries": [
              {"label": "p", "kind": "with_evolution", "target": [{"ctor": "identity"}], "times": [0, 2], "state": "psi"},
              {"label": "s", "kind": "sample", "events": [{"ctor": "identity"}], "times": [0, 2], "state": "psi", "trials": 10}
            ]}"#;
        let r = run_queries(&parse_scenario(doc).unwrap()).unwrap();
        assert!((r.rows[0].value.unwrap() - (-4.0f64).exp()).abs() < 1e-14);
        assert!(r.rows[1].error.as_deref().unwrap().contains("unitary"));
    }

    #[test]
    fn table_columns_align() {
        let doc = r#"{"dim": 2, "queries": [
            {"label": "a", "kind": "prob_event", "event": {"ctor": "identity"}, "state": "none"},
            {"label": "longer label", "kind": "consecutive", "events": [], "state": "none"}]}"#;
        let table = run_queries(&parse_scenario(doc).unwrap()).unwrap().to_table();
        let starts: Vec<usize> = table.lines().map(|l| l.find("prob_event").or(l.find("consecutive")).or(l.find("kind")).unwrap()).collect();
        assert!(starts.windows(2).all(|w| w[0] == w[1]));
    }
}
