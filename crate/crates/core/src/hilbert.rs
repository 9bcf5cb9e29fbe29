//! Events, states, Borel sets and projection-valued measures.
//!
//! An [`Event`] is an orthogonal projection. Raw matrices are accepted
//! through [`Event::try_new`], which tolerates small rounding (as found in
//! file input) by snapping to the nearest projection, and rejects anything
//! further away. A [`Pvm`] is the finite list of spectral atoms of a
//! Hermitian matrix: one `(eigenvalue, projector)` pair per distinct
//! eigenvalue.

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix, CVector, EigenDecomposition, C64};

/// Projection and state invariants are checked to this operator-norm tolerance.
pub const TOL_EVENT: f64 = 1e-10;
/// Eigenvalues within this distance of 0 or 1 are snapped when building an event.
pub const TOL_EVENT_SNAP: f64 = 1e-6;
/// Pvm orthogonality and resolution-of-identity tolerance.
pub const TOL_PVM: f64 = 1e-9;
/// Cluster tolerance for the eigenvalue-2 eigenspace of `E + F` in [`meet`].
pub const TOL_MEET: f64 = 1e-8;
/// Relative tolerance for matching a Borel point against an eigenvalue.
pub const TOL_POINT: f64 = 1e-9;

/// A quantum event: an orthogonal projection `E = E² = E†`.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    matrix: CMatrix,
}

impl Event {
    /// Validates a raw matrix as a projection.
    ///
    /// Matrices within [`TOL_EVENT`] of a projection are kept as given.
    /// Otherwise the Hermitian part is diagonalised and, if every
    /// eigenvalue lies within [`TOL_EVENT_SNAP`] of 0 or 1, replaced by the
    /// projector onto the eigenvalue-1 eigenvectors.
    pub fn try_new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.dim()?;
        if !matrix.is_finite() {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        let herm = matrix.hermiticity_defect()?;
        let idem = (&(&matrix * &matrix) - &matrix).operator_norm()?;
        if herm <= TOL_EVENT && idem <= TOL_EVENT {
            return Ok(Self { matrix });
        }
        if herm > TOL_EVENT_SNAP {
            return Err(Error::InvariantViolation(format!(
                "not self-adjoint (‖E − E†‖ = {herm:.3e})"
            )));
        }
        let eig = linalg::hermitian_eig_auto(&matrix.hermitian_part())?;
        let mut projector = CMatrix::zeros(dim, dim);
        for (lambda, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
            if (lambda - 1.0).abs() <= TOL_EVENT_SNAP {
                projector = &projector + &CMatrix::outer(v, v);
            } else if lambda.abs() > TOL_EVENT_SNAP {
                return Err(Error::InvariantViolation(format!(
                    "not idempotent: eigenvalue {lambda:.6} is neither 0 nor 1"
                )));
            }
        }
        Ok(Self { matrix: projector })
    }

    /// Wraps a matrix already known to be a projection.
    pub(crate) fn from_projector_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim) }
    }

    /// Rank-one projector `|v⟩⟨v| / ‖v‖²`.
    pub fn projector_onto(v: &CVector) -> Result<Self> {
        let u = v
            .normalized()
            .ok_or_else(|| Error::InvalidArgument("cannot project onto the zero vector".into()))?;
        Ok(Self { matrix: CMatrix::outer(&u, &u) })
    }

    /// Projector onto the span of the given vectors.
    pub fn projector_onto_span(vectors: &[CVector]) -> Result<Self> {
        let dim = vectors
            .first()
            .map(CVector::dim)
            .ok_or_else(|| Error::InvalidArgument("empty span".into()))?;
        let mut basis: Vec<CVector> = Vec::new();
        for v in vectors {
            if v.dim() != dim {
                return Err(Error::DimMismatch { expected: dim, found: v.dim() });
            }
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    w = &w - &b.scale(b.inner(&w));
                }
            }
            if w.norm() > 1e-12 * v.norm().max(1.0) {
                basis.push(w.normalized().expect("non-zero"));
            }
        }
        let matrix = basis
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, b| &acc + &CMatrix::outer(b, b));
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Rank, read off the trace.
    pub fn rank(&self) -> usize {
        self.matrix.trace().map(|t| t.re.round().max(0.0) as usize).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.frobenius_norm() <= TOL_EVENT
    }

    /// `E ⊗ F`, again a projection.
    pub fn tensor(&self, other: &Event) -> Event {
        Self { matrix: self.matrix.kron(&other.matrix) }
    }

    /// `U E U†` for unitary `U`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Event> {
        check_dim(self.dim(), u.dim()?)?;
        let deviation = linalg::unitarity_defect(u)?;
        if deviation > TOL_EVENT {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix: self.matrix.conjugate_by(u) })
    }

    /// `‖E² − E‖_op` and `‖E − E†‖_op`.
    pub fn projection_defects(&self) -> Result<(f64, f64)> {
        let idem = (&(&self.matrix * &self.matrix) - &self.matrix).operator_norm()?;
        Ok((idem, self.matrix.hermiticity_defect()?))
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, found })
    }
}

/// A unit vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    vector: CVector,
}

impl PureState {
    pub fn new(vector: CVector) -> Result<Self> {
        let n = vector.norm();
        if (n - 1.0).abs() > TOL_EVENT {
            return Err(Error::InvariantViolation(format!("state vector has norm {n}, expected 1")));
        }
        Ok(Self { vector })
    }

    /// Normalises a non-zero vector.
    pub fn normalized(vector: &CVector) -> Result<Self> {
        vector
            .normalized()
            .map(|vector| Self { vector })
            .ok_or_else(|| Error::InvariantViolation("state vector is zero".into()))
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        Self { vector: CVector::basis(dim, i) }
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.dim()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        Self { vector: self.vector.kron(&other.vector) }
    }

    /// `Uψ` for unitary `U`.
    pub fn evolve(&self, u: &CMatrix) -> Result<PureState> {
        check_dim(self.dim(), u.dim()?)?;
        PureState::normalized(&u.apply(&self.vector))
    }
}

/// A positive, trace-one, self-adjoint matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        matrix.dim()?;
        let herm = matrix.hermiticity_defect()?;
        if herm > TOL_EVENT {
            return Err(Error::InvariantViolation(format!(
                "density matrix not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace()?;
        if (tr - cr(1.0)).norm() > TOL_EVENT {
            return Err(Error::InvariantViolation(format!("density matrix trace {} ≠ 1", tr.re)));
        }
        let eig = linalg::hermitian_eig_auto(&matrix.hermitian_part())?;
        if let Some(min) = eig.eigenvalues.first() {
            if *min < -TOL_EVENT {
                return Err(Error::InvariantViolation(format!(
                    "density matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    /// `I/d`
    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `UρU†` for unitary `U`.
    pub fn evolve(&self, u: &CMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim(), u.dim()?)?;
        let deviation = linalg::unitarity_defect(u)?;
        if deviation > TOL_EVENT {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix: self.matrix.conjugate_by(u) })
    }
}

/// `|ψ⟩⟨ψ|`
pub fn density_from_pure(psi: &PureState) -> DensityMatrix {
    DensityMatrix { matrix: CMatrix::outer(psi.vector(), psi.vector()) }
}

/// Convex combination `Σ w_k ρ_k`.
pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<DensityMatrix> {
    if weights.len() != states.len() {
        return Err(Error::DimMismatch { expected: weights.len(), found: states.len() });
    }
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) || (sum - 1.0).abs() > TOL_EVENT {
        return Err(Error::BadWeights { sum });
    }
    let dim = states[0].dim();
    let mut acc = CMatrix::zeros(dim, dim);
    for (w, rho) in weights.iter().zip(states) {
        check_dim(dim, rho.dim())?;
        acc = &acc + &rho.matrix.scale_real(*w);
    }
    Ok(DensityMatrix { matrix: acc })
}

/// An interval of the real line with optional infinite ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!("invalid interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi, lo_closed, hi_closed })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, false)
    }

    pub fn real_line() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY, lo_closed: false, hi_closed: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    /// Intersection: an interval, a single point, or nothing.
    fn intersect(&self, other: &Interval) -> (Option<Interval>, Option<f64>) {
        let (lo, lo_closed) = match self.lo.total_cmp(&other.lo) {
            std::cmp::Ordering::Greater => (self.lo, self.lo_closed),
            std::cmp::Ordering::Less => (other.lo, other.lo_closed),
            std::cmp::Ordering::Equal => (self.lo, self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.total_cmp(&other.hi) {
            std::cmp::Ordering::Less => (self.hi, self.hi_closed),
            std::cmp::Ordering::Greater => (other.hi, other.hi_closed),
            std::cmp::Ordering::Equal => (self.hi, self.hi_closed && other.hi_closed),
        };
        if lo < hi {
            (Some(Interval { lo, hi, lo_closed, hi_closed }), None)
        } else if lo == hi && lo_closed && hi_closed && lo.is_finite() {
            (None, Some(lo))
        } else {
            (None, None)
        }
    }
}

/// A finite union of intervals together with a finite set of points.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BorelSet {
    pub intervals: Vec<Interval>,
    pub points: Vec<f64>,
}

impl BorelSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn real_line() -> Self {
        Self { intervals: vec![Interval::real_line()], points: Vec::new() }
    }

    pub fn point(x: f64) -> Self {
        Self { intervals: Vec::new(), points: vec![x] }
    }

    pub fn points(xs: &[f64]) -> Self {
        Self { intervals: Vec::new(), points: xs.to_vec() }
    }

    pub fn interval(interval: Interval) -> Self {
        Self { intervals: vec![interval], points: Vec::new() }
    }

    pub fn new(intervals: Vec<Interval>, points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("Borel points must be finite".into()));
        }
        for iv in &intervals {
            Interval::new(iv.lo, iv.hi, iv.lo_closed, iv.hi_closed)?;
        }
        Ok(Self { intervals, points })
    }

    /// Membership. Points match within a relative tolerance of [`TOL_POINT`].
    pub fn contains(&self, x: f64) -> bool {
        x.is_finite()
            && (self.intervals.iter().any(|iv| iv.contains(x))
                || self.points.iter().any(|p| (x - p).abs() <= TOL_POINT * p.abs().max(1.0)))
    }

    pub fn union(&self, other: &BorelSet) -> BorelSet {
        let mut out = self.clone();
        out.intervals.extend_from_slice(&other.intervals);
        out.points.extend_from_slice(&other.points);
        out
    }

    pub fn intersect(&self, other: &BorelSet) -> BorelSet {
        let mut out = BorelSet::empty();
        for a in &self.intervals {
            for b in &other.intervals {
                match a.intersect(b) {
                    (Some(iv), _) => out.intervals.push(iv),
                    (None, Some(p)) => out.points.push(p),
                    _ => {}
                }
            }
        }
        for &p in &self.points {
            if other.contains(p) {
                out.points.push(p);
            }
        }
        for &p in &other.points {
            if self.contains(p) && !out.points.contains(&p) {
                out.points.push(p);
            }
        }
        out
    }
}

/// One spectral atom of a pvm.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub projector: Event,
}

/// Projection-valued measure with finitely many atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct Pvm {
    dim: usize,
    atoms: Vec<Atom>,
}

impl Pvm {
    /// Validates strictly increasing values, mutual orthogonality and the
    /// resolution of the identity.
    pub fn from_atoms(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvariantViolation("pvm needs at least one atom".into()));
        }
        let mut total = CMatrix::zeros(dim, dim);
        for (i, atom) in atoms.iter().enumerate() {
            check_dim(dim, atom.projector.dim())?;
            if !atom.value.is_finite() {
                return Err(Error::InvariantViolation("pvm value must be finite".into()));
            }
            if i > 0 && atoms[i - 1].value >= atom.value {
                return Err(Error::InvariantViolation("pvm values must be strictly increasing".into()));
            }
            for other in &atoms[..i] {
                let overlap = (atom.projector.matrix() * other.projector.matrix()).operator_norm()?;
                if overlap > TOL_PVM {
                    return Err(Error::InvariantViolation(format!(
                        "pvm projectors not orthogonal (‖P_i P_j‖ = {overlap:.3e})"
                    )));
                }
            }
            total = &total + atom.projector.matrix();
        }
        let resolution = total.distance(&CMatrix::identity(dim))?;
        if resolution > TOL_PVM {
            return Err(Error::InvariantViolation(format!(
                "pvm projectors do not resolve the identity (defect {resolution:.3e})"
            )));
        }
        Ok(Self { dim, atoms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn values(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.value).collect()
    }

    /// `P(B) = Σ_{λ_j ∈ B} P_j`
    pub fn eval(&self, set: &BorelSet) -> Event {
        pvm_eval(self, set)
    }

    pub fn reconstruct(&self) -> CMatrix {
        reconstruct(self)
    }

    pub fn functional_calculus(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        functional_calculus(self, f)
    }
}

/// Spectral pvm of a Hermitian matrix. Atom values are cluster means.
pub fn pvm_of(t: &CMatrix, tol_cluster: f64) -> Result<Pvm> {
    let eig = linalg::hermitian_eig(t, tol_cluster)?;
    Ok(pvm_from_eig(&eig))
}

/// [`pvm_of`] with the default clustering tolerance.
pub fn pvm_of_auto(t: &CMatrix) -> Result<Pvm> {
    Ok(pvm_from_eig(&linalg::hermitian_eig_auto(t)?))
}

pub(crate) fn pvm_from_eig(eig: &EigenDecomposition) -> Pvm {
    let values = eig.cluster_values();
    let atoms = values
        .into_iter()
        .enumerate()
        .map(|(k, value)| Atom { value, projector: Event::from_projector_unchecked(eig.cluster_projector(k)) })
        .collect();
    Pvm { dim: eig.dim(), atoms }
}

pub fn pvm_eval(pvm: &Pvm, set: &BorelSet) -> Event {
    let mut sum = CMatrix::zeros(pvm.dim, pvm.dim);
    for atom in pvm.atoms.iter().filter(|a| set.contains(a.value)) {
        sum = &sum + atom.projector.matrix();
    }
    Event::from_projector_unchecked(sum)
}

/// `Σ λ_j P_j`
pub fn reconstruct(pvm: &Pvm) -> CMatrix {
    functional_calculus(pvm, cr)
}

/// `f(T) = Σ f(λ_j) P_j`
pub fn functional_calculus(pvm: &Pvm, f: impl Fn(f64) -> C64) -> CMatrix {
    pvm.atoms
        .iter()
        .fold(CMatrix::zeros(pvm.dim, pvm.dim), |acc, a| &acc + &a.projector.matrix().scale(f(a.value)))
}

/// A self-adjoint matrix together with its spectral pvm.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
    pvm: Pvm,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let pvm = pvm_of_auto(&matrix)?;
        Ok(Self { matrix, pvm })
    }

    pub fn with_cluster_tol(matrix: CMatrix, tol_cluster: f64) -> Result<Self> {
        let pvm = pvm_of(&matrix, tol_cluster)?;
        Ok(Self { matrix, pvm })
    }

    pub fn from_pvm(pvm: Pvm) -> Self {
        Self { matrix: reconstruct(&pvm), pvm }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn pvm(&self) -> &Pvm {
        &self.pvm
    }

    pub fn dim(&self) -> usize {
        self.pvm.dim
    }

    /// The event `T ∈ B`.
    pub fn event_in(&self, set: &BorelSet) -> Event {
        pvm_eval(&self.pvm, set)
    }
}

/// `I − E`
pub fn complement(e: &Event) -> Event {
    Event::from_projector_unchecked(&CMatrix::identity(e.dim()) - e.matrix())
}

/// Projector onto `Ran E ∩ Ran F`: the eigenvalue-2 eigenspace of `E + F`.
pub fn meet(e: &Event, f: &Event) -> Result<Event> {
    check_dim(e.dim(), f.dim())?;
    let sum = e.matrix() + f.matrix();
    let eig = linalg::hermitian_eig(&sum.hermitian_part(), TOL_MEET)?;
    let dim = e.dim();
    let mut p = CMatrix::zeros(dim, dim);
    for (lambda, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        if (lambda - 2.0).abs() <= TOL_MEET {
            p = &p + &CMatrix::outer(v, v);
        }
    }
    Ok(Event::from_projector_unchecked(p))
}

/// `complement(meet(complement E, complement F))`
pub fn join(e: &Event, f: &Event) -> Result<Event> {
    Ok(complement(&meet(&complement(e), &complement(f))?))
}

/// True iff `‖EF‖_op ≤ tol`.
pub fn orthogonal(e: &Event, f: &Event, tol: f64) -> Result<bool> {
    check_dim(e.dim(), f.dim())?;
    Ok((e.matrix() * f.matrix()).operator_norm()? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn s3() -> CMatrix {
        CMatrix::from_real_diag(&[0.5, -0.5])
    }

    fn e1() -> Event {
        Event::projector_onto(&CVector::basis(2, 0)).unwrap()
    }

    fn diag_event() -> Event {
        Event::projector_onto(&CVector::from_real(&[1.0, 1.0]).unwrap()).unwrap()
    }

    #[test]
    fn pvm_of_diagonal() {
        let pvm = pvm_of_auto(&CMatrix::from_real_diag(&[1.0, 2.0, 2.0])).unwrap();
        assert_eq!(pvm.atoms().len(), 2);
        assert!((pvm.atoms()[0].value - 1.0).abs() < 1e-14);
        assert!((pvm.atoms()[1].value - 2.0).abs() < 1e-14);
        assert!(pvm.atoms()[0].projector.matrix().max_abs_diff(&CMatrix::from_real_diag(&[1.0, 0.0, 0.0])) < 1e-14);
        assert!(pvm.atoms()[1].projector.matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.0, 1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn pvm_of_spin_z() {
        let pvm = pvm_of_auto(&s3()).unwrap();
        let e2 = CMatrix::from_real_diag(&[0.0, 1.0]);
        let e1 = CMatrix::from_real_diag(&[1.0, 0.0]);
        assert!((pvm.atoms()[0].value + 0.5).abs() < 1e-15);
        assert!(pvm.atoms()[0].projector.matrix().max_abs_diff(&e2) < 1e-15);
        assert!(pvm.atoms()[1].projector.matrix().max_abs_diff(&e1) < 1e-15);
    }

    #[test]
    fn pvm_eval_selects_atoms() {
        let pvm = pvm_of_auto(&CMatrix::from_real_diag(&[1.0, 2.0, 2.0])).unwrap();
        assert!(pvm.eval(&BorelSet::empty()).is_zero());
        assert!(pvm.eval(&BorelSet::real_line()).matrix().max_abs_diff(&CMatrix::identity(3)) < 1e-14);
        let b = BorelSet::interval(Interval::half_open(1.5, 3.0).unwrap());
        assert!(pvm.eval(&b).matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.0, 1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn reconstruct_examples() {
        let pvm = pvm_of_auto(&s3()).unwrap();
        assert!(reconstruct(&pvm).max_abs_diff(&s3()) < 1e-12);
        let atoms = vec![
            Atom { value: 0.0, projector: Event::try_new(CMatrix::from_real_diag(&[1.0, 0.0])).unwrap() },
            Atom { value: 1.0, projector: Event::try_new(CMatrix::from_real_diag(&[0.0, 1.0])).unwrap() },
        ];
        let pvm = Pvm::from_atoms(2, atoms).unwrap();
        assert!(reconstruct(&pvm).max_abs_diff(&CMatrix::from_real_diag(&[0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn from_atoms_rejects_bad_pvms() {
        let half = Event::try_new(CMatrix::from_real_diag(&[1.0, 0.0])).unwrap();
        let not_resolving = vec![Atom { value: 0.0, projector: half.clone() }];
        assert!(Pvm::from_atoms(2, not_resolving).is_err());
        let unordered = vec![
            Atom { value: 1.0, projector: half.clone() },
            Atom { value: 0.0, projector: complement(&half) },
        ];
        assert!(Pvm::from_atoms(2, unordered).is_err());
        let overlapping = vec![
            Atom { value: 0.0, projector: half.clone() },
            Atom { value: 1.0, projector: Event::identity(2) },
        ];
        assert!(Pvm::from_atoms(2, overlapping).is_err());
    }

    #[test]
    fn functional_calculus_examples() {
        let pvm = pvm_of_auto(&s3()).unwrap();
        assert!(functional_calculus(&pvm, cr).max_abs_diff(&reconstruct(&pvm)) < 1e-15);
        assert!(functional_calculus(&pvm, |_| cr(1.0)).max_abs_diff(&CMatrix::identity(2)) < 1e-15);
        let b = BorelSet::point(0.5);
        let chi = functional_calculus(&pvm, |x| cr(if b.contains(x) { 1.0 } else { 0.0 }));
        assert!(chi.max_abs_diff(pvm.eval(&b).matrix()) < 1e-15);
    }

    #[test]
    fn complement_examples() {
        assert_eq!(complement(&Event::zero(3)), Event::identity(3));
        let e = diag_event();
        assert!(complement(&complement(&e)).matrix().max_abs_diff(e.matrix()) < 1e-15);
    }

    #[test]
    fn meet_lattice_identities() {
        let e = diag_event();
        assert!(meet(&e, &e).unwrap().matrix().max_abs_diff(e.matrix()) < 1e-10);
        assert!(meet(&e, &Event::identity(2)).unwrap().matrix().max_abs_diff(e.matrix()) < 1e-10);
    }

    #[test]
    fn non_commuting_pair_has_zero_meet() {
        let (a, b) = (e1(), diag_event());
        let ab = a.matrix() * b.matrix();
        let ba = b.matrix() * a.matrix();
        assert!(ab.frobenius_norm() > 0.1 && ba.frobenius_norm() > 0.1);
        assert!(ab.max_abs_diff(&ba) > 0.1);
        assert!(meet(&a, &b).unwrap().is_zero());
        assert!(!orthogonal(&a, &b, 1e-10).unwrap());
        assert!(((a.matrix() * b.matrix()).operator_norm().unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_examples() {
        let a = Event::try_new(CMatrix::from_real_diag(&[1.0, 0.0])).unwrap();
        let b = Event::try_new(CMatrix::from_real_diag(&[0.0, 1.0])).unwrap();
        assert!(orthogonal(&a, &b, 1e-12).unwrap());
        let e = diag_event();
        assert!(orthogonal(&e, &complement(&e), 1e-12).unwrap());
    }

    #[test]
    fn join_is_defined_through_complements() {
        let a = Event::try_new(CMatrix::from_real_diag(&[1.0, 0.0, 0.0])).unwrap();
        let b = Event::try_new(CMatrix::from_real_diag(&[0.0, 1.0, 0.0])).unwrap();
        let j = join(&a, &b).unwrap();
        assert!(j.matrix().max_abs_diff(&CMatrix::from_real_diag(&[1.0, 1.0, 0.0])) < 1e-10);
    }

    #[test]
    fn event_validation() {
        let bad = CMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(Event::try_new(bad), Err(Error::InvariantViolation(_))));
        let not_idempotent = CMatrix::from_real_diag(&[0.5, 1.0]);
        assert!(matches!(Event::try_new(not_idempotent), Err(Error::InvariantViolation(_))));
        // rounding noise is snapped to the nearest projection
        let h = 0.5 + 1e-9;
        let noisy = CMatrix::from_real_rows(&[vec![h, 0.5], vec![0.5, 0.5]]).unwrap();
        let e = Event::try_new(noisy).unwrap();
        let (idem, herm) = e.projection_defects().unwrap();
        assert!(idem < 1e-12 && herm < 1e-12);
    }

    #[test]
    fn density_examples() {
        let rho = density_from_pure(&PureState::basis(2, 0));
        assert!(rho.matrix().max_abs_diff(&CMatrix::from_real_diag(&[1.0, 0.0])) < 1e-15);
        let mixed = mixture(
            &[0.5, 0.5],
            &[
                DensityMatrix::new(CMatrix::from_real_diag(&[1.0, 0.0])).unwrap(),
                DensityMatrix::new(CMatrix::from_real_diag(&[0.0, 1.0])).unwrap(),
            ],
        )
        .unwrap();
        assert!(mixed.matrix().max_abs_diff(&CMatrix::identity(2).scale_real(0.5)) < 1e-15);
        assert!(matches!(mixture(&[0.7, 0.7], &[rho.clone(), rho.clone()]), Err(Error::BadWeights { .. })));
        assert!(DensityMatrix::new(CMatrix::from_real_diag(&[1.5, -0.5])).is_err());
        assert!(PureState::new(CVector::from_real(&[1.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn borel_intersection() {
        let a = BorelSet::interval(Interval::closed(0.0, 1.0).unwrap());
        let b = BorelSet::interval(Interval::closed(1.0, 2.0).unwrap());
        let ab = a.intersect(&b);
        assert!(ab.contains(1.0));
        assert!(!ab.contains(0.5) && !ab.contains(1.5));
        let open = BorelSet::interval(Interval::new(1.0, 2.0, false, true).unwrap());
        assert!(!a.intersect(&open).contains(1.0));
        assert!(BorelSet::point(0.5).intersect(&a).contains(0.5));
    }

    #[test]
    fn span_projector() {
        let v1 = CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let v2 = CVector::new(vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let e = Event::projector_onto_span(&[v1.clone(), v2, v1]).unwrap();
        assert_eq!(e.rank(), 2);
        assert!(e.matrix().max_abs_diff(&CMatrix::from_real_diag(&[1.0, 1.0, 0.0])) < 1e-14);
    }
}
