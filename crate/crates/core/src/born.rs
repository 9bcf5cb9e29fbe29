//! Born's rule in all its forms: single events, consecutive sequences,
//! conditionals, time evolution, the no-state variant, and the derived
//! quantities (independence, moments, expectations, entropy).
//!
//! Sequences are ordered in time with index 0 earliest, so the operator
//! product is `E_n ⋯ E_1` with the first event rightmost.

use crate::error::{Error, Result};
use crate::hilbert::{check_dim, DensityMatrix, Event, Observable, PureState, BorelSet};
use crate::linalg::{CMatrix, CVector, C64, TOL_HERM};

/// Conditional denominators at or below this value trigger the zero convention.
pub const TOL_DENOMINATOR: f64 = 1e-12;
/// Longest sequence accepted by [`sequence_independent`].
pub const SEQUENCE_INDEPENDENCE_CAP: usize = 12;
/// Slack allowed when checking that partial probabilities do not increase.
pub const TOL_MONOTONE: f64 = 1e-10;
/// Eigenvalues of two observables closer than this are treated as one point.
pub const TOL_MERGE: f64 = 1e-8;

/// A state, or the absence of one.
#[derive(Clone, Debug, PartialEq)]
pub enum QState {
    Pure(PureState),
    Density(DensityMatrix),
    /// Probabilities are operator norms, `P(E) = ‖E‖²`.
    NoState,
}

impl QState {
    pub fn dim(&self) -> Option<usize> {
        match self {
            QState::Pure(psi) => Some(psi.dim()),
            QState::Density(rho) => Some(rho.dim()),
            QState::NoState => None,
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, dim),
            None => Ok(()),
        }
    }
}

impl From<PureState> for QState {
    fn from(psi: PureState) -> Self {
        QState::Pure(psi)
    }
}

impl From<DensityMatrix> for QState {
    fn from(rho: DensityMatrix) -> Self {
        QState::Density(rho)
    }
}

/// A probability in `[0, 1]`, with a flag set when it came from the
/// zero-denominator convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbValue {
    pub value: f64,
    pub zero_denominator: bool,
}

impl ProbValue {
    fn clamped(raw: f64) -> Self {
        Self { value: raw.clamp(0.0, 1.0), zero_denominator: false }
    }

    fn zero_denominator() -> Self {
        Self { value: 0.0, zero_denominator: true }
    }
}

/// Time-ordered list of events of one dimension. Empty is allowed.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct EventSequence {
    events: Vec<Event>,
}

impl EventSequence {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        if let Some(first) = events.first() {
            for e in &events[1..] {
                check_dim(first.dim(), e.dim())?;
            }
        }
        Ok(Self { events })
    }

    /// The empty sequence.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.events.first().map(Event::dim)
    }

    /// `self ⧺ later`
    pub fn then(&self, later: &EventSequence) -> Result<EventSequence> {
        let mut events = self.events.clone();
        events.extend_from_slice(&later.events);
        EventSequence::new(events)
    }

    /// `E_n ⋯ E_1` in dimension `dim`.
    pub fn product(&self, dim: usize) -> Result<CMatrix> {
        if let Some(d) = self.dim() {
            check_dim(dim, d)?;
        }
        Ok(CMatrix::time_ordered_product(dim, self.events.iter().map(Event::matrix)))
    }
}

impl FromIterator<Event> for EventSequence {
    /// Panics on mixed dimensions; use [`EventSequence::new`] for checked input.
    fn from_iter<I: IntoIterator<Item = Event>>(iter: I) -> Self {
        EventSequence::new(iter.into_iter().collect()).expect("events of one dimension")
    }
}

/// Supplies the evolution operator from time `from` to time `to`.
pub trait Propagator {
    fn dim(&self) -> usize;
    fn propagate(&self, from: f64, to: f64) -> Result<CMatrix>;
}

/// Raw (unclamped) `‖Mψ‖²`, `Tr(M†Mρ)` or `‖M‖²_op`.
pub(crate) fn weight_of(m: &CMatrix, s: &QState) -> Result<f64> {
    s.check(m.cols())?;
    match s {
        QState::Pure(psi) => Ok(m.apply(psi.vector()).norm_sqr()),
        QState::Density(rho) => Ok((&(&m.adjoint() * m) * rho.matrix()).trace()?.re),
        QState::NoState => Ok(m.operator_norm()?.powi(2)),
    }
}

/// `P(E|s)`
pub fn prob_event(e: &Event, s: &QState) -> Result<ProbValue> {
    match s {
        QState::Pure(psi) => {
            check_dim(psi.dim(), e.dim())?;
            Ok(ProbValue::clamped(e.matrix().apply(psi.vector()).norm_sqr()))
        }
        QState::Density(rho) => {
            check_dim(rho.dim(), e.dim())?;
            Ok(ProbValue::clamped((e.matrix() * rho.matrix()).trace()?.re))
        }
        QState::NoState => weight_of(e.matrix(), s).map(ProbValue::clamped),
    }
}

/// `P(T ∈ B|s)`
pub fn prob_obs_in(t: &Observable, set: &BorelSet, s: &QState) -> Result<ProbValue> {
    prob_event(&t.event_in(set), s)
}

fn sequence_dim(seq: &EventSequence, s: &QState) -> Option<usize> {
    seq.dim().or_else(|| s.dim())
}

/// `P(E_1, …, E_n|s)`; the empty sequence has probability 1.
pub fn consecutive(seq: &EventSequence, s: &QState) -> Result<ProbValue> {
    let Some(dim) = sequence_dim(seq, s) else {
        return Ok(ProbValue::clamped(1.0));
    };
    s.check(dim)?;
    if let QState::Pure(psi) = s {
        let mut v = psi.vector().clone();
        for e in seq.events() {
            v = e.matrix().apply(&v);
        }
        return Ok(ProbValue::clamped(v.norm_sqr()));
    }
    weight_of(&seq.product(dim)?, s).map(ProbValue::clamped)
}

fn ratio(numerator: f64, denominator: f64) -> ProbValue {
    if denominator <= TOL_DENOMINATOR {
        ProbValue::zero_denominator()
    } else {
        ProbValue::clamped(numerator / denominator)
    }
}

/// `P(target | given, s) = P(given ⧺ target|s) / P(given|s)`, or 0 with the
/// flag set when the denominator vanishes.
pub fn conditional(target: &EventSequence, given: &EventSequence, s: &QState) -> Result<ProbValue> {
    let joint = given.then(target)?;
    let denominator = consecutive(given, s)?.value;
    let numerator = consecutive(&joint, s)?.value;
    Ok(ratio(numerator, denominator))
}

fn check_times(times: &[f64], expected: usize) -> Result<()> {
    if times.len() != expected {
        return Err(Error::TimeCount { expected, found: times.len() });
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonIncreasingTimes);
    }
    Ok(())
}

/// `E_n U(t_{n−1}→t_n) ⋯ E_1 U(t_0→t_1)`
fn evolved_product(seq: &EventSequence, times: &[f64], evo: &dyn Propagator) -> Result<CMatrix> {
    let dim = evo.dim();
    let mut m = CMatrix::identity(dim);
    for (j, e) in seq.events().iter().enumerate() {
        check_dim(dim, e.dim())?;
        let u = evo.propagate(times[j], times[j + 1])?;
        m = &(e.matrix() * &u) * &m;
    }
    Ok(m)
}

/// Consecutive probability with the evolution from `t_{j−1}` to `t_j`
/// applied before the `j`-th event. Needs `seq.len() + 1` strictly
/// increasing times.
pub fn prob_with_evolution(
    seq: &EventSequence,
    times: &[f64],
    evo: &dyn Propagator,
    s: &QState,
) -> Result<ProbValue> {
    check_times(times, seq.len() + 1)?;
    let m = evolved_product(seq, times, evo)?;
    weight_of(&m, s).map(ProbValue::clamped)
}

/// Ratio of [`prob_with_evolution`] values on one time grid covering
/// `given ⧺ target`.
pub fn conditional_with_evolution(
    target: &EventSequence,
    given: &EventSequence,
    times: &[f64],
    evo: &dyn Propagator,
    s: &QState,
) -> Result<ProbValue> {
    let joint = given.then(target)?;
    check_times(times, joint.len() + 1)?;
    let denominator = prob_with_evolution(given, &times[..=given.len()], evo, s)?.value;
    let numerator = prob_with_evolution(&joint, times, evo, s)?.value;
    Ok(ratio(numerator, denominator))
}

/// `(Δ₁₂, Δ₂₁)` with `Δ₁₂ = P(E1, E2|s) − P(E1|s)P(E2|s)`.
pub fn independence_defect(e1: &Event, e2: &Event, s: &QState) -> Result<(f64, f64)> {
    check_dim(e1.dim(), e2.dim())?;
    let p1 = prob_event(e1, s)?.value;
    let p2 = prob_event(e2, s)?.value;
    let p12 = consecutive(&EventSequence::new(vec![e1.clone(), e2.clone()])?, s)?.value;
    let p21 = consecutive(&EventSequence::new(vec![e2.clone(), e1.clone()])?, s)?.value;
    Ok((p12 - p1 * p2, p21 - p1 * p2))
}

/// True iff every order-preserving subsequence has consecutive probability
/// equal to the product of its single-event probabilities, within `tol`.
pub fn sequence_independent(seq: &EventSequence, s: &QState, tol: f64) -> Result<bool> {
    let n = seq.len();
    if n > SEQUENCE_INDEPENDENCE_CAP {
        return Err(Error::TooLong { len: n, cap: SEQUENCE_INDEPENDENCE_CAP });
    }
    let singles: Vec<f64> =
        seq.events().iter().map(|e| prob_event(e, s).map(|p| p.value)).collect::<Result<_>>()?;
    for mask in 1u32..(1 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let picked: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub = EventSequence::new(picked.iter().map(|&i| seq.events()[i].clone()).collect())?;
        let joint = consecutive(&sub, s)?.value;
        let product: f64 = picked.iter().map(|&i| singles[i]).product();
        if (joint - product).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compares the spectral distributions of `S` and `T` in `ρ` on the merged
/// union of their eigenvalues.
pub fn identically_distributed(s: &Observable, t: &Observable, rho: &DensityMatrix, tol: f64) -> Result<bool> {
    check_dim(s.dim(), t.dim())?;
    check_dim(s.dim(), rho.dim())?;
    let state = QState::Density(rho.clone());
    let mut masses: Vec<(f64, f64, f64)> = Vec::new();
    for (which, obs) in [(0, s), (1, t)] {
        for atom in obs.pvm().atoms() {
            let p = prob_event(&atom.projector, &state)?.value;
            let (ps, pt) = if which == 0 { (p, 0.0) } else { (0.0, p) };
            masses.push((atom.value, ps, pt));
        }
    }
    masses.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, f64, f64)> = Vec::new();
    for (value, ps, pt) in masses {
        match groups.last_mut() {
            Some(g) if value - g.0 <= TOL_MERGE => {
                g.0 = value;
                g.1 += ps;
                g.2 += pt;
            }
            _ => groups.push((value, ps, pt)),
        }
    }
    Ok(groups.iter().all(|(_, ps, pt)| (ps - pt).abs() <= tol))
}

/// Splits `P(F, E|ψ)` for `F = ∨ F_j` into the diagonal sum
/// `Σ_j P(F_j, E|ψ)` and the interference term `Σ_{j≠k} ⟨ψ, F_j E F_k ψ⟩`.
pub fn interference_decomposition(e: &Event, parts: &[Event], psi: &PureState) -> Result<(f64, f64)> {
    check_dim(psi.dim(), e.dim())?;
    for (j, f) in parts.iter().enumerate() {
        check_dim(e.dim(), f.dim())?;
        for g in &parts[..j] {
            if (f.matrix() * g.matrix()).operator_norm()? > TOL_HERM {
                return Err(Error::NotOrthogonal);
            }
        }
    }
    let projected: Vec<CVector> = parts.iter().map(|f| f.matrix().apply(psi.vector())).collect();
    let mut diagonal = 0.0;
    let mut cross = C64::new(0.0, 0.0);
    for (j, fj) in projected.iter().enumerate() {
        for (k, fk) in projected.iter().enumerate() {
            let term = fj.inner(&e.matrix().apply(fk));
            if j == k {
                diagonal += term.re;
            } else {
                cross += term;
            }
        }
    }
    Ok((diagonal, cross.re))
}

/// `A(ϕ, ψ) = ⟨ϕ, ψ⟩`
pub fn amplitude(phi: &PureState, psi: &PureState) -> Result<C64> {
    check_dim(phi.dim(), psi.dim())?;
    Ok(phi.vector().inner(psi.vector()))
}

/// `A(E, ψ) = Eψ`
pub fn amplitude_event(e: &Event, psi: &PureState) -> Result<CVector> {
    check_dim(e.dim(), psi.dim())?;
    Ok(e.matrix().apply(psi.vector()))
}

/// `⟨ψ, Aψ⟩` or `Tr(Aρ)` for Hermitian `A`.
pub fn expected_value(a: &CMatrix, s: &QState) -> Result<f64> {
    let dim = a.dim()?;
    let deviation = a.hermiticity_defect()?;
    if deviation > TOL_HERM * a.operator_norm()?.max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    s.check(dim)?;
    match s {
        QState::Pure(psi) => Ok(psi.vector().inner(&a.apply(psi.vector())).re),
        QState::Density(rho) => Ok((a * rho.matrix()).trace()?.re),
        QState::NoState => Err(Error::NoStateUnsupported),
    }
}

/// `(λ_j, p_j)` over the atoms of `T`.
fn distribution(t: &Observable, s: &QState) -> Result<Vec<(f64, f64)>> {
    if matches!(s, QState::NoState) {
        return Err(Error::NoStateUnsupported);
    }
    t.pvm()
        .atoms()
        .iter()
        .map(|a| prob_event(&a.projector, s).map(|p| (a.value, p.value)))
        .collect()
}

/// `m_k = Σ_j λ_j^k p_j`, `k ≥ 1`.
pub fn moment(t: &Observable, k: usize, s: &QState) -> Result<f64> {
    if k == 0 || k > i32::MAX as usize {
        return Err(Error::BadOrder(k));
    }
    Ok(distribution(t, s)?.iter().map(|(l, p)| l.powi(k as i32) * p).sum())
}

/// `σ_k = Σ_j (λ_j − m₁)^k p_j`, `k ≥ 2`.
pub fn central_moment(t: &Observable, k: usize, s: &QState) -> Result<f64> {
    if k < 2 || k > i32::MAX as usize {
        return Err(Error::BadOrder(k));
    }
    let dist = distribution(t, s)?;
    let mean: f64 = dist.iter().map(|(l, p)| l * p).sum();
    Ok(dist.iter().map(|(l, p)| (l - mean).powi(k as i32) * p).sum())
}

/// `√σ₂`
pub fn std_dev(t: &Observable, s: &QState) -> Result<f64> {
    Ok(central_moment(t, 2, s)?.max(0.0).sqrt())
}

/// `E(A_1, …, A_n|ρ) = Tr(A_n ⋯ A_1 ρ)`
pub fn time_ordered_expectation(ops: &[CMatrix], rho: &DensityMatrix) -> Result<C64> {
    let dim = rho.dim();
    for a in ops {
        check_dim(dim, a.dim()?)?;
    }
    (&CMatrix::time_ordered_product(dim, ops) * rho.matrix()).trace()
}

/// Result of [`conditional_expectation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalExpectation {
    pub value: C64,
    pub zero_denominator: bool,
}

/// `E(A_1, …, A_n, E_1, …, E_k|ρ) / E(E_1, …, E_k|ρ)`. The denominator is
/// the time-ordered expectation `Tr(E_k ⋯ E_1 ρ)`, which in general differs
/// from the consecutive probability.
pub fn conditional_expectation(
    ops: &[CMatrix],
    cond: &EventSequence,
    rho: &DensityMatrix,
) -> Result<ConditionalExpectation> {
    let events: Vec<CMatrix> = cond.events().iter().map(|e| e.matrix().clone()).collect();
    let denominator = time_ordered_expectation(&events, rho)?;
    let mut all = ops.to_vec();
    all.extend(events);
    let numerator = time_ordered_expectation(&all, rho)?;
    if denominator.norm() <= TOL_DENOMINATOR {
        return Ok(ConditionalExpectation { value: C64::new(0.0, 0.0), zero_denominator: true });
    }
    Ok(ConditionalExpectation { value: numerator / denominator, zero_denominator: false })
}

/// Shannon entropy of the spectral distribution of `T`, with `0 log 0 = 0`.
pub fn entropy(t: &Observable, s: &QState, base: f64) -> Result<f64> {
    if !(base > 1.0) || !base.is_finite() {
        return Err(Error::InvalidArgument(format!("entropy base must exceed 1, got {base}")));
    }
    let ln_base = base.ln();
    Ok(distribution(t, s)?
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(_, p)| -p * p.ln() / ln_base)
        .sum::<f64>()
        .max(0.0))
}

/// Result of [`sequence_limit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceLimit {
    pub value: f64,
    pub converged: bool,
    /// Number of events consumed.
    pub steps: usize,
}

/// Partial probabilities `p_n = P(E_1, …, E_n|ρ)` of an infinite sequence,
/// stopping once successive values differ by at most `tol` or after
/// `n_max` events. `event_at(j)` is the event at 0-based position `j`.
pub fn sequence_limit(
    event_at: impl Fn(usize) -> Event,
    rho: &DensityMatrix,
    n_max: usize,
    tol: f64,
) -> Result<SequenceLimit> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let dim = rho.dim();
    let state = QState::Density(rho.clone());
    let mut m = CMatrix::identity(dim);
    let mut previous = 1.0;
    for step in 1..=n_max {
        let e = event_at(step - 1);
        check_dim(dim, e.dim())?;
        m = e.matrix() * &m;
        let next = weight_of(&m, &state)?;
        if next > previous + TOL_MONOTONE {
            return Err(Error::MonotonicityViolated { step, previous, next });
        }
        if step > 1 && (previous - next).abs() <= tol {
            return Ok(SequenceLimit { value: next.clamp(0.0, 1.0), converged: true, steps: step });
        }
        previous = next;
    }
    Ok(SequenceLimit { value: previous.clamp(0.0, 1.0), converged: false, steps: n_max })
}
