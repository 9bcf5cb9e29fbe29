//! Time evolution: evolution families, models (pairs of event and state
//! flows), and checks for invariance, isomorphism and conservation of
//! probability.
//!
//! Every model here acts by conjugation. The event flow is
//! `E_t(P) = A_t P A_t†` and the state flow is `S_t ρ = W(0,t) ρ W(0,t)†`
//! where `W(s,t)` carries states from time `s` to time `t`.

use std::fmt;
use std::sync::Arc;

use crate::born::{self, EventSequence, ProbValue, Propagator, QState};
use crate::error::{Error, Result};
use crate::hilbert::{check_dim, BorelSet, DensityMatrix, Event, Observable, PureState};
use crate::linalg::{self, CMatrix, EigenDecomposition, C64};

/// Unitarity and contraction checks use this tolerance.
pub const TOL_UNITARY: f64 = 1e-10;

type UnitaryFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;
type TwoTimeFn = Arc<dyn Fn(f64, f64) -> CMatrix + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Schrodinger { hamiltonian: CMatrix, eig: EigenDecomposition, hbar: f64 },
    Unitary(UnitaryFn),
    Generic(TwoTimeFn),
}

/// Source of the evolution operators `U(s, t)` taking time `s` to time `t`.
#[derive(Clone)]
pub struct EvolutionFamily {
    dim: usize,
    kind: Kind,
}

impl fmt::Debug for EvolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Schrodinger { hbar, .. } => format!("Schrodinger(hbar = {hbar})"),
            Kind::Unitary(_) => "UnitaryFamily".to_string(),
            Kind::Generic(_) => "GenericFamily".to_string(),
        };
        write!(f, "EvolutionFamily {{ dim: {}, kind: {kind} }}", self.dim)
    }
}

impl EvolutionFamily {
    /// `U(s, t) = e^{−i(t−s)H/ℏ}`.
    pub fn schrodinger(hamiltonian: &CMatrix, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        let eig = linalg::hermitian_eig_auto(hamiltonian)?;
        Ok(Self {
            dim: eig.dim(),
            kind: Kind::Schrodinger { hamiltonian: hamiltonian.clone(), eig, hbar },
        })
    }

    /// `U(s, t) = U_t U_s†` from a family of unitaries `t ↦ U_t`.
    /// Unitarity is checked each time an operator is produced.
    pub fn unitary_family(dim: usize, family: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        Self { dim, kind: Kind::Unitary(Arc::new(family)) }
    }

    /// Arbitrary two-time family of contractions, `‖U(s,t)‖ ≤ 1`.
    pub fn generic(dim: usize, family: impl Fn(f64, f64) -> CMatrix + Send + Sync + 'static) -> Self {
        Self { dim, kind: Kind::Generic(Arc::new(family)) }
    }

    /// The trivial evolution `U = I`.
    pub fn identity(dim: usize) -> Self {
        Self::unitary_family(dim, move |_| CMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self.kind, Kind::Generic(_))
    }

    pub fn hamiltonian(&self) -> Option<&CMatrix> {
        match &self.kind {
            Kind::Schrodinger { hamiltonian, .. } => Some(hamiltonian),
            _ => None,
        }
    }

    pub fn hbar(&self) -> Option<f64> {
        match &self.kind {
            Kind::Schrodinger { hbar, .. } => Some(*hbar),
            _ => None,
        }
    }

    fn checked_unitary(&self, u: CMatrix) -> Result<CMatrix> {
        check_dim(self.dim, u.dim()?)?;
        let deviation = linalg::unitarity_defect(&u)?;
        if deviation > TOL_UNITARY {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    /// `U(s, t)`
    pub fn operator(&self, s: f64, t: f64) -> Result<CMatrix> {
        match &self.kind {
            Kind::Schrodinger { eig, hbar, .. } => Ok(linalg::exp_unitary_from_eig(eig, t - s, *hbar)),
            Kind::Unitary(f) => {
                let ut = self.checked_unitary(f(t))?;
                let us = self.checked_unitary(f(s))?;
                Ok(&ut * &us.adjoint())
            }
            Kind::Generic(f) => {
                let u = f(s, t);
                check_dim(self.dim, u.dim()?)?;
                let norm = u.operator_norm()?;
                if norm > 1.0 + TOL_UNITARY {
                    return Err(Error::NotContraction { norm });
                }
                Ok(u)
            }
        }
    }

    /// `U_t = U(0, t)`
    pub fn at(&self, t: f64) -> Result<CMatrix> {
        match &self.kind {
            Kind::Unitary(f) => self.checked_unitary(f(t)),
            _ => self.operator(0.0, t),
        }
    }
}

impl Propagator for EvolutionFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn propagate(&self, from: f64, to: f64) -> Result<CMatrix> {
        self.operator(from, to)
    }
}

type EventConjugator = Arc<dyn Fn(f64) -> Result<CMatrix> + Send + Sync>;
type StatePropagator = Arc<dyn Fn(f64, f64) -> Result<CMatrix> + Send + Sync>;

/// A model: event flow `P ↦ A_t P A_t†` and state flow `ρ ↦ W(0,t) ρ W(0,t)†`.
#[derive(Clone)]
pub struct Model {
    label: String,
    dim: usize,
    event_conjugator: EventConjugator,
    state_propagator: StatePropagator,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Model {{ label: {:?}, dim: {} }}", self.label, self.dim)
    }
}

impl Model {
    /// Builds a model from `t ↦ A_t` and `(s, t) ↦ W(s, t)`.
    pub fn from_parts(
        label: impl Into<String>,
        dim: usize,
        event_conjugator: impl Fn(f64) -> Result<CMatrix> + Send + Sync + 'static,
        state_propagator: impl Fn(f64, f64) -> Result<CMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            dim,
            event_conjugator: Arc::new(event_conjugator),
            state_propagator: Arc::new(state_propagator),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `A_t`
    pub fn event_conjugator(&self, t: f64) -> Result<CMatrix> {
        (self.event_conjugator)(t)
    }

    /// `W(s, t)`
    pub fn state_propagator(&self, s: f64, t: f64) -> Result<CMatrix> {
        (self.state_propagator)(s, t)
    }

    /// `E_t(P) = A_t P A_t†`, again a projection for unitary `A_t`.
    pub fn event_flow(&self, t: f64, event: &Event) -> Result<Event> {
        event.conjugate_by(&self.event_conjugator(t)?)
    }

    /// `E_t` applied to every atom of a pvm.
    pub fn event_flow_matrix(&self, t: f64, m: &CMatrix) -> Result<CMatrix> {
        check_dim(self.dim, m.dim()?)?;
        Ok(m.conjugate_by(&self.event_conjugator(t)?))
    }

    /// `S_t ρ = W(0,t) ρ W(0,t)†`. The result has trace below one when the
    /// state evolution is a strict contraction.
    pub fn state_flow_matrix(&self, t: f64, rho: &CMatrix) -> Result<CMatrix> {
        check_dim(self.dim, rho.dim()?)?;
        Ok(rho.conjugate_by(&self.state_propagator(0.0, t)?))
    }

    /// `S_t` on a state. Pure states stay pure; the state must evolve unitarily.
    pub fn state_flow(&self, t: f64, state: &QState) -> Result<QState> {
        let w = self.state_propagator(0.0, t)?;
        match state {
            QState::Pure(psi) => {
                check_dim(self.dim, psi.dim())?;
                Ok(QState::Pure(psi.evolve(&w)?))
            }
            QState::Density(rho) => Ok(QState::Density(rho.evolve(&w)?)),
            QState::NoState => Ok(QState::NoState),
        }
    }

    /// The same model viewed through a fixed unitary `W`:
    /// `A'_t = W A_t W†`, `W'(s,t) = W W(s,t) W†`.
    pub fn conjugated(&self, w: &CMatrix) -> Result<Model> {
        check_dim(self.dim, w.dim()?)?;
        let deviation = linalg::unitarity_defect(w)?;
        if deviation > TOL_UNITARY {
            return Err(Error::NotUnitary { deviation });
        }
        let (a, s) = (self.event_conjugator.clone(), self.state_propagator.clone());
        let (w1, w2) = (w.clone(), w.clone());
        Ok(Model::from_parts(
            format!("{} (conjugated)", self.label),
            self.dim,
            move |t| Ok(a(t)?.conjugate_by(&w1)),
            move |s0, t| Ok(s(s0, t)?.conjugate_by(&w2)),
        ))
    }

    /// `M = Ẽ_n W(t_{n−1},t_n) ⋯ Ẽ_1 W(t_0,t_1) W(0,t_0)` with `Ẽ_j = E_{t_j}(E_j)`.
    fn sequence_operator(&self, seq: &EventSequence, times: &[f64]) -> Result<CMatrix> {
        if times.len() != seq.len() + 1 {
            return Err(Error::TimeCount { expected: seq.len() + 1, found: times.len() });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonIncreasingTimes);
        }
        let mut m = self.state_propagator(0.0, times[0])?;
        for (j, e) in seq.events().iter().enumerate() {
            let flowed = self.event_flow_matrix(times[j + 1], e.matrix())?;
            let w = self.state_propagator(times[j], times[j + 1])?;
            m = &(&flowed * &w) * &m;
        }
        Ok(m)
    }

    /// Consecutive probability of `seq` with event `j` at time `times[j + 1]`,
    /// starting from the time-zero state `s` evolved to `times[0]`.
    pub fn sequence_prob(&self, seq: &EventSequence, times: &[f64], s: &QState) -> Result<ProbValue> {
        let m = self.sequence_operator(seq, times)?;
        Ok(clamp(born::weight_of(&m, s)?))
    }

    /// Ratio of [`Model::sequence_prob`] values on one time grid covering `given ⧺ target`.
    pub fn conditional_prob(
        &self,
        target: &EventSequence,
        given: &EventSequence,
        times: &[f64],
        s: &QState,
    ) -> Result<ProbValue> {
        let joint = given.then(target)?;
        if times.len() != joint.len() + 1 {
            return Err(Error::TimeCount { expected: joint.len() + 1, found: times.len() });
        }
        let denominator = self.sequence_prob(given, &times[..=given.len()], s)?.value;
        let numerator = self.sequence_prob(&joint, times, s)?.value;
        Ok(if denominator <= born::TOL_DENOMINATOR {
            ProbValue { value: 0.0, zero_denominator: true }
        } else {
            clamp(numerator / denominator)
        })
    }
}

fn clamp(raw: f64) -> ProbValue {
    ProbValue { value: raw.clamp(0.0, 1.0), zero_denominator: false }
}

/// States evolve by `e^{−itH/ℏ}`, events are fixed.
pub fn schrodinger_model(h: &CMatrix, hbar: f64) -> Result<Model> {
    let family = EvolutionFamily::schrodinger(h, h_hbar(hbar)?)?;
    let dim = family.dim();
    Ok(Model::from_parts("schrodinger", dim, move |_| Ok(CMatrix::identity(dim)), move |s, t| family.operator(s, t)))
}

/// Events evolve by `P ↦ U_t† P U_t`, states are fixed.
pub fn heisenberg_model(h: &CMatrix, hbar: f64) -> Result<Model> {
    let family = EvolutionFamily::schrodinger(h, h_hbar(hbar)?)?;
    let dim = family.dim();
    Ok(Model::from_parts(
        "heisenberg",
        dim,
        move |t| Ok(family.at(t)?.adjoint()),
        move |_, _| Ok(CMatrix::identity(dim)),
    ))
}

fn h_hbar(hbar: f64) -> Result<f64> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(hbar)
    } else {
        Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")))
    }
}

/// Moves a base model into the frame `V_t`: states `ψ ↦ V_t ψ`, events
/// `P ↦ V_t P V_t†`. Any family of unitaries is accepted; no continuity in
/// `t` is required.
pub fn interaction_model(base: &Model, frame: &EvolutionFamily) -> Result<Model> {
    check_dim(base.dim(), frame.dim())?;
    if !frame.is_unitary() {
        return Err(Error::NotUnitary { deviation: f64::NAN });
    }
    let (a, w) = (base.event_conjugator.clone(), base.state_propagator.clone());
    let (v1, v2) = (frame.clone(), frame.clone());
    Ok(Model::from_parts(
        format!("interaction({})", base.label()),
        base.dim(),
        move |t| Ok(&v1.at(t)? * &a(t)?),
        move |s, t| Ok(&(&v2.at(t)? * &w(s, t)?) * &v2.at(s)?.adjoint()),
    ))
}

/// States evolve by a two-time family of contractions, events are fixed.
pub fn state_model(family: &EvolutionFamily) -> Model {
    let dim = family.dim();
    let f = family.clone();
    Model::from_parts(
        if family.is_unitary() { "state-evolution" } else { "contraction" },
        dim,
        move |_| Ok(CMatrix::identity(dim)),
        move |s, t| f.operator(s, t),
    )
}

/// Nothing evolves.
pub fn static_model(dim: usize) -> Model {
    Model::from_parts("static", dim, move |_| Ok(CMatrix::identity(dim)), move |_, _| Ok(CMatrix::identity(dim)))
}

/// `Tr(E_t(P_T(B)) S_t ρ)`
pub fn time_dependent_prob(
    model: &Model,
    t_obs: &Observable,
    set: &BorelSet,
    rho: &DensityMatrix,
    t: f64,
) -> Result<ProbValue> {
    Ok(clamp(raw_time_dependent(model, t_obs.event_in(set).matrix(), rho.matrix(), t)?))
}

fn raw_time_dependent(model: &Model, p: &CMatrix, rho: &CMatrix, t: f64) -> Result<f64> {
    check_dim(model.dim(), p.dim()?)?;
    let flowed = model.event_flow_matrix(t, p)?;
    let state = model.state_flow_matrix(t, rho)?;
    Ok((&flowed * &state).trace()?.re)
}

/// A probability evaluated in two models for comparison.
#[derive(Clone, Debug)]
pub enum Instance {
    /// `P(T ∈ B)` at time `t` from the time-zero state `ρ`.
    Single { observable: Observable, set: BorelSet, rho: DensityMatrix, t: f64 },
    /// Consecutive probability with event `j` at `times[j + 1]`.
    Sequence { events: EventSequence, times: Vec<f64>, state: QState },
    /// Conditional probability on a shared time grid.
    Conditional { target: EventSequence, given: EventSequence, times: Vec<f64>, state: QState },
}

impl Instance {
    fn evaluate(&self, model: &Model) -> Result<f64> {
        match self {
            Instance::Single { observable, set, rho, t } => {
                time_dependent_prob(model, observable, set, rho, *t).map(|p| p.value)
            }
            Instance::Sequence { events, times, state } => model.sequence_prob(events, times, state).map(|p| p.value),
            Instance::Conditional { target, given, times, state } => {
                model.conditional_prob(target, given, times, state).map(|p| p.value)
            }
        }
    }
}

/// Per-instance deviations between two evaluations.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    /// `(instance index, message)` for instances that could not be evaluated.
    pub failures: Vec<(usize, String)>,
    pub pass: bool,
}

impl CheckReport {
    fn from_pairs(results: Vec<Result<(f64, f64)>>, tol: f64) -> Self {
        let mut deviations = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok((a, b)) => deviations.push((a - b).abs()),
                Err(e) => {
                    deviations.push(f64::INFINITY);
                    failures.push((i, e.to_string()));
                }
            }
        }
        let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
        let pass = failures.is_empty() && max_deviation <= tol;
        Self { deviations, max_deviation, failures, pass }
    }
}

/// Evaluates every instance in both models and compares.
pub fn check_invariance(a: &Model, b: &Model, instances: &[Instance], tol: f64) -> CheckReport {
    let results = instances
        .iter()
        .map(|inst| Ok((inst.evaluate(a)?, inst.evaluate(b)?)))
        .collect();
    CheckReport::from_pairs(results, tol)
}

/// Preservation of probability under the family `t ↦ W_t`: the instance is
/// evaluated in model `a`, and its image (`T' = W_t T W_t†`, `ρ' = W_t ρ W_t†`,
/// events `W_{t_j} E_j W_{t_j}†`, state transformed at `t_0`) in model `b`.
pub fn check_isomorphism(
    w: &EvolutionFamily,
    a: &Model,
    b: &Model,
    instances: &[Instance],
    tol: f64,
) -> Result<CheckReport> {
    if !w.is_unitary() {
        return Err(Error::NotUnitary { deviation: f64::NAN });
    }
    let mut results = Vec::with_capacity(instances.len());
    for inst in instances {
        let image = transform_instance(w, inst)?;
        results.push(inst.evaluate(a).and_then(|pa| Ok((pa, image.evaluate(b)?))));
    }
    Ok(CheckReport::from_pairs(results, tol))
}

fn transform_sequence(w: &EvolutionFamily, seq: &EventSequence, times: &[f64]) -> Result<EventSequence> {
    if times.len() != seq.len() + 1 {
        return Err(Error::TimeCount { expected: seq.len() + 1, found: times.len() });
    }
    let events = seq
        .events()
        .iter()
        .enumerate()
        .map(|(j, e)| e.conjugate_by(&w.at(times[j + 1])?))
        .collect::<Result<Vec<_>>>()?;
    EventSequence::new(events)
}

fn transform_state(w: &CMatrix, s: &QState) -> Result<QState> {
    Ok(match s {
        QState::Pure(psi) => QState::Pure(psi.evolve(w)?),
        QState::Density(rho) => QState::Density(rho.evolve(w)?),
        QState::NoState => QState::NoState,
    })
}

fn transform_instance(w: &EvolutionFamily, inst: &Instance) -> Result<Instance> {
    Ok(match inst {
        Instance::Single { observable, set, rho, t } => {
            let wt = w.at(*t)?;
            Instance::Single {
                observable: Observable::new(observable.matrix().conjugate_by(&wt).hermitian_part())?,
                set: set.clone(),
                rho: rho.evolve(&wt)?,
                t: *t,
            }
        }
        Instance::Sequence { events, times, state } => Instance::Sequence {
            events: transform_sequence(w, events, times)?,
            times: times.clone(),
            state: transform_state(&w.at(times[0])?, state)?,
        },
        Instance::Conditional { target, given, times, state } => {
            let joint = given.then(target)?;
            let moved = transform_sequence(w, &joint, times)?;
            let (g, t) = moved.events().split_at(given.len());
            Instance::Conditional {
                target: EventSequence::new(t.to_vec())?,
                given: EventSequence::new(g.to_vec())?,
                times: times.clone(),
                state: transform_state(&w.at(times[0])?, state)?,
            }
        }
    })
}

/// Conservation of probability at time `t`: the atom probabilities
/// `Tr(E_t(P_j) S_t ρ)` lie in `[−tol, 1 + tol]` and sum to `1 ± tol`.
pub fn check_conservation(model: &Model, t_obs: &Observable, rho: &DensityMatrix, t: f64, tol: f64) -> bool {
    let mut total = 0.0;
    for atom in t_obs.pvm().atoms() {
        match raw_time_dependent(model, atom.projector.matrix(), rho.matrix(), t) {
            Ok(p) if (-tol..=1.0 + tol).contains(&p) => total += p,
            _ => return false,
        }
    }
    (total - 1.0).abs() <= tol
}

/// Finite-difference derivative of `p(t) = ‖E e^{−itH/ℏ}ψ‖²` against the
/// commutator formula `⟨ψ_t, (i/ℏ)[H, E] ψ_t⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / h²`
    pub c: f64,
}

pub fn heisenberg_derivative_check(
    h: &Observable,
    e: &Event,
    psi: &PureState,
    t: f64,
    step: f64,
    hbar: f64,
) -> Result<DerivativeCheck> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    check_dim(h.dim(), e.dim())?;
    check_dim(h.dim(), psi.dim())?;
    let family = EvolutionFamily::schrodinger(h.matrix(), h_hbar(hbar)?)?;
    let p = |time: f64| -> Result<f64> {
        let psi_t = family.at(time)?.apply(psi.vector());
        Ok(e.matrix().apply(&psi_t).norm_sqr())
    };
    let lhs = (p(t + step)? - p(t - step)?) / (2.0 * step);
    let psi_t = family.at(t)?.apply(psi.vector());
    let generator = h.matrix().commutator(e.matrix()).scale(C64::new(0.0, 1.0 / hbar));
    let rhs = psi_t.inner(&generator.apply(&psi_t)).re;
    Ok(DerivativeCheck { lhs, rhs, c: (lhs - rhs).abs() / (step * step) })
}
