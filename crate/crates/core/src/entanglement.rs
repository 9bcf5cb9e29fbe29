//! Spin-½ pairs, the singlet, tangled event triples and Schmidt
//! decompositions of bipartite pure states.

use rand::Rng;

use crate::born::{self, QState};
use crate::error::{Error, Result};
use crate::hilbert::{check_dim, pvm_of_auto, BorelSet, Event, PureState};
use crate::linalg::{self, c, cr, CMatrix, CVector, C64};
use crate::random;

/// Default threshold below which a Schmidt coefficient counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Conditioning events with `‖E₀‖²` at or below this are treated as zero.
pub const TOL_ZERO_EVENT: f64 = 1e-12;

/// `(S₁, S₂, S₃)` for spin ½.
pub fn spin_matrices() -> (CMatrix, CMatrix, CMatrix) {
    let half = |z: C64| z * 0.5;
    let s1 = CMatrix::from_rows(&[vec![cr(0.0), half(cr(1.0))], vec![half(cr(1.0)), cr(0.0)]]);
    let s2 = CMatrix::from_rows(&[vec![cr(0.0), half(c(0.0, -1.0))], vec![half(c(0.0, 1.0)), cr(0.0)]]);
    let s3 = CMatrix::from_real_diag(&[0.5, -0.5]);
    (s1.expect("2x2"), s2.expect("2x2"), s3)
}

/// `S² = Σ_k (S_k ⊗ I + I ⊗ S_k)²` on `ℂ² ⊗ ℂ²`.
pub fn total_spin_sq() -> CMatrix {
    let (s1, s2, s3) = spin_matrices();
    let id = CMatrix::identity(2);
    [s1, s2, s3].iter().fold(CMatrix::zeros(4, 4), |acc, s| {
        let total = &s.kron(&id) + &id.kron(s);
        &acc + &(&total * &total)
    })
}

/// `ψ₀ = (ε₁⊗ε₂ − ε₂⊗ε₁)/√2`
pub fn singlet() -> PureState {
    let e1 = CVector::basis(2, 0);
    let e2 = CVector::basis(2, 1);
    let v = &e1.kron(&e2) - &e2.kron(&e1);
    PureState::normalized(&v).expect("non-zero")
}

/// The three events of the spin-singlet experiment, `E₀` earliest.
#[derive(Clone, Debug, PartialEq)]
pub struct EprTriple {
    /// Total spin zero.
    pub e0: Event,
    /// First particle has spin `+½` along the third axis.
    pub e1: Event,
    /// Second particle has spin `−½` along the third axis.
    pub e2: Event,
}

/// `E₀ = P_{S²}({0})`, `E₁ = P_{S₃⊗I}({½})`, `E₂ = P_{I⊗S₃}({−½})`.
pub fn epr_triple() -> EprTriple {
    let (_, _, s3) = spin_matrices();
    let id = CMatrix::identity(2);
    let e0 = pvm_of_auto(&total_spin_sq()).expect("Hermitian").eval(&BorelSet::point(0.0));
    let e1 = pvm_of_auto(&s3.kron(&id)).expect("Hermitian").eval(&BorelSet::point(0.5));
    let e2 = pvm_of_auto(&id.kron(&s3)).expect("Hermitian").eval(&BorelSet::point(-0.5));
    EprTriple { e0, e1, e2 }
}

/// No-state conditional `P(X|E₀) = ‖X E₀‖² / ‖E₀‖²`.
fn conditioned(x: &CMatrix, e0: &Event, norm0: f64) -> Result<f64> {
    Ok((x * e0.matrix()).operator_norm()?.powi(2) / norm0)
}

/// `(Δ₁₂, Δ₂₁)` with `Δ₁₂ = P(E₁E₂|E₀) − P(E₁|E₀)P(E₂|E₀)`, where the
/// operator `E₁E₂` means `E₂` after `E₀` and then `E₁`.
pub fn delta(e1: &Event, e2: &Event, e0: &Event) -> Result<(f64, f64)> {
    check_dim(e0.dim(), e1.dim())?;
    check_dim(e0.dim(), e2.dim())?;
    let norm0 = e0.matrix().operator_norm()?.powi(2);
    if norm0 <= TOL_ZERO_EVENT {
        return Err(Error::ZeroConditioningEvent);
    }
    let p1 = conditioned(e1.matrix(), e0, norm0)?;
    let p2 = conditioned(e2.matrix(), e0, norm0)?;
    let p12 = conditioned(&(e1.matrix() * e2.matrix()), e0, norm0)?;
    let p21 = conditioned(&(e2.matrix() * e1.matrix()), e0, norm0)?;
    Ok((p12 - p1 * p2, p21 - p1 * p2))
}

/// True iff either order of [`delta`] exceeds `tol` in magnitude.
pub fn is_tangled(e0: &Event, e1: &Event, e2: &Event, tol: f64) -> Result<bool> {
    let (d12, d21) = delta(e1, e2, e0)?;
    Ok(d12.abs().max(d21.abs()) > tol)
}

/// Factorisation `H = ℂ^{d1} ⊗ ℂ^{d2}`; vector index `i·d2 + j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bipartition {
    d1: usize,
    d2: usize,
}

impl Bipartition {
    pub fn new(d1: usize, d2: usize) -> Result<Self> {
        if d1 < 2 || d2 < 2 {
            return Err(Error::InvalidArgument(format!("bipartition factors must be at least 2, got {d1}x{d2}")));
        }
        Ok(Self { d1, d2 })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn dim(&self) -> usize {
        self.d1 * self.d2
    }
}

/// `ψ = Σ_j λ_j ϕ_j ⊗ χ_j` with `λ` descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtForm {
    /// All `min(d1, d2)` coefficients, descending.
    pub coefficients: Vec<f64>,
    pub left_vectors: Vec<CVector>,
    pub right_vectors: Vec<CVector>,
    /// Number of coefficients above the rank tolerance.
    pub rank: usize,
}

impl SchmidtForm {
    /// `Σ_j λ_j ϕ_j ⊗ χ_j`
    pub fn reconstruct(&self) -> CVector {
        let dim = self.left_vectors[0].dim() * self.right_vectors[0].dim();
        self.coefficients
            .iter()
            .zip(self.left_vectors.iter().zip(&self.right_vectors))
            .fold(CVector::zeros(dim), |acc, (l, (a, b))| &acc + &a.kron(b).scale(cr(*l)))
    }
}

/// Schmidt decomposition through the SVD of the `d1 × d2` coefficient matrix.
/// Each left vector is rotated so its largest-magnitude entry is real positive.
pub fn schmidt(psi: &PureState, bp: Bipartition, rank_tol: f64) -> Result<SchmidtForm> {
    check_dim(bp.dim(), psi.dim())?;
    let coeffs = CMatrix::from_row_major(bp.d1, bp.d2, &psi.vector().entries())?;
    let svd = linalg::svd(&coeffs)?;
    let k = bp.d1.min(bp.d2);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut coefficients = Vec::with_capacity(k);
    let mut left_vectors = Vec::with_capacity(k);
    let mut right_vectors = Vec::with_capacity(k);
    for idx in order {
        let left: Vec<C64> = (0..bp.d1).map(|i| svd.u.get(i, idx)).collect();
        let right: Vec<C64> = (0..bp.d2).map(|j| svd.v_adjoint.get(idx, j)).collect();
        let pivot = left.iter().copied().fold(cr(0.0), |m, z| if z.norm() > m.norm() { z } else { m });
        let phase = if pivot.norm() > 0.0 { pivot / pivot.norm() } else { cr(1.0) };
        left_vectors.push(CVector::new(left.iter().map(|z| z * phase.conj()).collect())?);
        right_vectors.push(CVector::new(right.iter().map(|z| z * phase).collect())?);
        coefficients.push(svd.singular_values[idx]);
    }
    let rank = coefficients.iter().filter(|l| **l > rank_tol).count();
    Ok(SchmidtForm { coefficients, left_vectors, right_vectors, rank })
}

/// Schmidt rank at least 2.
pub fn is_entangled_state(psi: &PureState, bp: Bipartition, rank_tol: f64) -> Result<bool> {
    Ok(schmidt(psi, bp, rank_tol)?.rank >= 2)
}

/// `E₁ = |ϕ₁⟩⟨ϕ₁| ⊗ I` and `E₂ = I ⊗ |χ₂⟩⟨χ₂|` from the two leading Schmidt
/// terms. With respect to `ψ`, `P(E₁) = λ₁²`, `P(E₂) = λ₂²` and `P(E₁E₂) = 0`.
pub fn witness_events(psi: &PureState, bp: Bipartition) -> Result<(Event, Event)> {
    let form = schmidt(psi, bp, DEFAULT_RANK_TOL)?;
    if form.rank < 2 {
        return Err(Error::NotEntangled);
    }
    local_pair(&form.left_vectors[0], &form.right_vectors[1], bp)
}

fn local_pair(phi: &CVector, chi: &CVector, bp: Bipartition) -> Result<(Event, Event)> {
    let f1 = Event::projector_onto(phi)?;
    let f2 = Event::projector_onto(chi)?;
    Ok((f1.tensor(&Event::identity(bp.d2)), Event::identity(bp.d1).tensor(&f2)))
}

/// Outcome of checking the equivalence of entanglement of `ψ`, entanglement
/// of a local event pair with respect to `ψ`, and tangledness of the triple
/// `(|ψ⟩⟨ψ|, E₁, E₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub schmidt_coefficients: Vec<f64>,
    /// Schmidt rank at least 2.
    pub entangled_state: bool,
    /// Some local pair has nonzero independence defect in `ψ`.
    pub events_entangled: bool,
    /// Some local pair is tangled after conditioning on `|ψ⟩⟨ψ|`.
    pub triple_tangled: bool,
    /// `(Δ₁₂, Δ₂₁)` of the witness pair, for entangled states.
    pub witness_delta: Option<(f64, f64)>,
    /// Largest `|Δ|` over the random local pairs, for product states.
    pub max_sampled_delta: f64,
    pub trials: usize,
    /// All three statements agree.
    pub consistent: bool,
}

/// For an entangled `ψ`, evaluates the witness pair; for a product `ψ`,
/// draws `trials` random local pairs `(F₁⊗I, I⊗F₂)` and records the largest
/// defect, which should stay within `tol`.
pub fn verify_equivalence<R: Rng + ?Sized>(
    psi: &PureState,
    bp: Bipartition,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<EquivalenceReport> {
    let form = schmidt(psi, bp, DEFAULT_RANK_TOL)?;
    let e0 = Event::projector_onto(psi.vector())?;
    let state = QState::Pure(psi.clone());
    let entangled_state = form.rank >= 2;
    let mut report = EquivalenceReport {
        schmidt_coefficients: form.coefficients.clone(),
        entangled_state,
        events_entangled: false,
        triple_tangled: false,
        witness_delta: None,
        max_sampled_delta: 0.0,
        trials: 0,
        consistent: false,
    };
    if entangled_state {
        let (e1, e2) = local_pair(&form.left_vectors[0], &form.right_vectors[1], bp)?;
        let (i12, i21) = born::independence_defect(&e1, &e2, &state)?;
        let d = delta(&e1, &e2, &e0)?;
        report.events_entangled = i12.abs().max(i21.abs()) > tol;
        report.triple_tangled = d.0.abs().max(d.1.abs()) > tol;
        report.witness_delta = Some(d);
    } else {
        for _ in 0..trials {
            let f1 = random::event(rng, bp.d1);
            let f2 = random::event(rng, bp.d2);
            let e1 = f1.tensor(&Event::identity(bp.d2));
            let e2 = Event::identity(bp.d1).tensor(&f2);
            let (i12, i21) = born::independence_defect(&e1, &e2, &state)?;
            let (d12, d21) = delta(&e1, &e2, &e0)?;
            let worst_pure = i12.abs().max(i21.abs());
            let worst_triple = d12.abs().max(d21.abs());
            report.events_entangled |= worst_pure > tol;
            report.triple_tangled |= worst_triple > tol;
            report.max_sampled_delta = report.max_sampled_delta.max(worst_pure).max(worst_triple);
        }
        report.trials = trials;
    }
    report.consistent =
        report.entangled_state == report.events_entangled && report.events_entangled == report.triple_tangled;
    Ok(report)
}
