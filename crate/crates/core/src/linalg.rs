//! Dense complex linear algebra kernel.
//!
//! [`CMatrix`] and [`CVector`] wrap `nalgebra` storage behind a small,
//! validated surface. All operators in the crate are built from these two
//! types. Eigen and singular value solvers are delegated to `faer`;
//! clustering of degenerate eigenvalues and re-orthonormalisation of the
//! eigenspaces happen here.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative Hermiticity tolerance used by [`hermitian_eig`].
pub const TOL_HERM: f64 = 1e-10;
/// Relative factor for the default eigenvalue clustering tolerance.
pub const TOL_CLUSTER_REL: f64 = 1e-8;


fn to_faer(m: &DMatrix<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

/// Dense complex column vector.
#[derive(Clone, PartialEq)]
pub struct CVector(DVector<C64>);

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix({}x{})", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "\n  [")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            write!(f, " ]")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CVector[")?;
        for z in self.0.iter() {
            write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
        }
        write!(f, " ]")
    }
}

fn check_finite<'a>(it: impl IntoIterator<Item = &'a C64>) -> Result<()> {
    if it.into_iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidData("non-finite entry".into()))
    }
}

impl CMatrix {
    /// Builds a matrix from rows. Rows must be non-empty, rectangular and finite.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if r == 0 || cols == 0 {
            return Err(Error::InvalidData("matrix must have at least one row and column".into()));
        }
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::InvalidData("ragged matrix rows".into()));
        }
        check_finite(rows.iter().flatten())?;
        Ok(Self(DMatrix::from_fn(r, cols, |i, j| rows[i][j])))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: &[C64]) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidData(format!(
                "expected {} entries for a {rows}x{cols} matrix, found {}",
                rows * cols,
                data.len()
            )));
        }
        check_finite(data)?;
        Ok(Self(DMatrix::from_row_slice(rows, cols, data)))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&x| cr(x)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self::from_diag(&diag.iter().map(|&x| cr(x)).collect::<Vec<_>>())
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &CVector, b: &CVector) -> Self {
        Self(&a.0 * b.0.adjoint())
    }

    pub(crate) fn from_na(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn as_na(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(Error::NonSquare { rows: self.rows(), cols: self.cols() })
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect()).collect()
    }

    pub fn adjoint(&self) -> Self {
        adjoint(self)
    }

    pub fn scale(&self, z: C64) -> Self {
        Self(&self.0 * z)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(cr(x))
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        CVector(&self.0 * &v.0)
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        kron(self, other)
    }

    pub fn trace(&self) -> Result<C64> {
        trace(self)
    }

    pub fn operator_norm(&self) -> Result<f64> {
        operator_norm(self)
    }

    /// Frobenius norm; a cheap upper bound on the operator norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `[A, B] = AB − BA`
    pub fn commutator(&self, other: &CMatrix) -> Self {
        &(self * other) - &(other * self)
    }

    /// `(M + M†)/2`
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * cr(0.5))
    }

    /// `‖M − M†‖_op`
    pub fn hermiticity_defect(&self) -> Result<f64> {
        operator_norm(&(self - &self.adjoint()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Operator-norm distance to another matrix of the same shape.
    pub fn distance(&self, other: &CMatrix) -> Result<f64> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimMismatch { expected: self.rows(), found: other.rows() });
        }
        operator_norm(&(self - other))
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Conjugation `U M U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        &(u * self) * &u.adjoint()
    }

    /// Product `Mₙ ⋯ M₁` of operators listed in time order (first applied first).
    pub fn time_ordered_product<'a>(dim: usize, ops: impl IntoIterator<Item = &'a CMatrix>) -> Self {
        ops.into_iter().fold(Self::identity(dim), |acc, m| m * &acc)
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Mul<&'a CVector> for &'a CMatrix {
    type Output = CVector;
    fn mul(self, rhs: &'a CVector) -> CVector {
        CVector(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-&self.0)
    }
}

impl CVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidData("vector must have at least one entry".into()));
        }
        check_finite(&entries)?;
        Ok(Self(DVector::from_vec(entries)))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| cr(x)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    /// Standard basis vector `e_i` of `ℂ^dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = cr(1.0);
        Self(v)
    }

    pub fn as_na(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize) -> C64 {
        self.0[i]
    }

    pub fn entries(&self) -> Vec<C64> {
        self.0.iter().copied().collect()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &CVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn scale(&self, z: C64) -> Self {
        Self(&self.0 * z)
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(cr(1.0 / n)))
    }

    pub fn kron(&self, other: &CVector) -> Self {
        Self(self.0.kronecker(&other.0))
    }
}

impl<'a> Add<&'a CVector> for &'a CVector {
    type Output = CVector;
    fn add(self, rhs: &'a CVector) -> CVector {
        CVector(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a CVector> for &'a CVector {
    type Output = CVector;
    fn sub(self, rhs: &'a CVector) -> CVector {
        CVector(&self.0 - &rhs.0)
    }
}

/// Conjugate transpose.
pub fn adjoint(m: &CMatrix) -> CMatrix {
    CMatrix(m.0.adjoint())
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix(a.0.kronecker(&b.0))
}

pub fn trace(m: &CMatrix) -> Result<C64> {
    m.dim()?;
    Ok(m.0.trace())
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    if m.0.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    let sv = to_faer(&m.0)
        .singular_values()
        .map_err(|_| Error::NoConvergence("singular value decomposition"))?;
    Ok(sv.into_iter().fold(0.0, f64::max))
}

/// Thin singular value decomposition `M = U Σ V†`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors as columns.
    pub u: CMatrix,
    /// In solver order, not necessarily sorted.
    pub singular_values: Vec<f64>,
    /// `V†`, right singular vectors as rows.
    pub v_adjoint: CMatrix,
}

/// SVD with a reconstruction check, so a silently wrong factorisation is
/// reported as non-convergence.
pub fn svd(m: &CMatrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::InvalidData("non-finite entry".into()));
    }
    let svd = to_faer(&m.0)
        .thin_svd()
        .map_err(|_| Error::NoConvergence("singular value decomposition"))?;
    let u = from_faer(svd.U());
    let v_t = from_faer(svd.V()).adjoint();
    let singular_values: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    let sigma = DMatrix::from_diagonal(&DVector::from_iterator(singular_values.len(), singular_values.iter().map(|&x| cr(x))));
    let rebuilt = &u * sigma * &v_t;
    let scale = m.0.norm().max(1.0);
    if (rebuilt - &m.0).norm() > 1e-10 * scale {
        return Err(Error::NoConvergence("singular value decomposition"));
    }
    Ok(Svd { u: CMatrix(u), singular_values, v_adjoint: CMatrix(v_t) })
}

/// Spectral data of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal, paired with `eigenvalues`.
    pub eigenvectors: Vec<CVector>,
    /// Index groups of numerically equal eigenvalues, in ascending order.
    pub clusters: Vec<Vec<usize>>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Σ λ_j |v_j⟩⟨v_j|`
    pub fn rebuild(&self) -> CMatrix {
        self.apply_function(cr)
    }

    /// `Σ f(λ_j) |v_j⟩⟨v_j|`
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.dim();
        let mut v = DMatrix::<C64>::zeros(n, n);
        for (k, vec) in self.eigenvectors.iter().enumerate() {
            v.set_column(k, &vec.0);
        }
        let d = DVector::from_iterator(n, self.eigenvalues.iter().map(|&x| f(x)));
        let vd = &v * DMatrix::from_diagonal(&d);
        CMatrix(vd * v.adjoint())
    }

    /// Mean eigenvalue of each cluster, ascending.
    pub fn cluster_values(&self) -> Vec<f64> {
        self.clusters
            .iter()
            .map(|c| c.iter().map(|&i| self.eigenvalues[i]).sum::<f64>() / c.len() as f64)
            .collect()
    }

    /// Projector `Σ_{j∈cluster} |v_j⟩⟨v_j|`.
    pub fn cluster_projector(&self, cluster: usize) -> CMatrix {
        let n = self.dim();
        let mut p = DMatrix::<C64>::zeros(n, n);
        for &i in &self.clusters[cluster] {
            let v = &self.eigenvectors[i].0;
            p += v * v.adjoint();
        }
        CMatrix(p)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Default clustering tolerance `1e-8 · max(1, ‖M‖_op)`.
pub fn default_cluster_tol(norm: f64) -> f64 {
    TOL_CLUSTER_REL * norm.max(1.0)
}

/// Hermitian eigendecomposition with the default clustering tolerance.
pub fn hermitian_eig_auto(m: &CMatrix) -> Result<EigenDecomposition> {
    hermitian_eig_impl(m, None)
}

/// Eigendecomposition of a Hermitian matrix, clustering eigenvalues whose
/// successive gaps are at most `tol_cluster`.
pub fn hermitian_eig(m: &CMatrix, tol_cluster: f64) -> Result<EigenDecomposition> {
    hermitian_eig_impl(m, Some(tol_cluster))
}

fn hermitian_eig_impl(m: &CMatrix, tol_cluster: Option<f64>) -> Result<EigenDecomposition> {
    let n = m.dim()?;
    if !m.is_finite() {
        return Err(Error::InvalidData("non-finite entry".into()));
    }
    let norm = operator_norm(m)?;
    let deviation = m.hermiticity_defect()?;
    if deviation > TOL_HERM * norm.max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let sym = m.hermitian_part();
    let eig = to_faer(&sym.0)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence("Hermitian eigensolver"))?;
    let values: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
    let vectors = from_faer(eig.U());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut eigenvectors: Vec<CVector> = order.iter().map(|&i| CVector(vectors.column(i).into_owned())).collect();

    let tol = tol_cluster.unwrap_or_else(|| default_cluster_tol(norm));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match clusters.last_mut() {
            Some(last) if eigenvalues[i] - eigenvalues[*last.last().unwrap()] <= tol => last.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    for cluster in &clusters {
        if cluster.len() > 1 {
            orthonormalize(&mut eigenvectors, cluster);
        }
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors, clusters })
}

/// Modified Gram-Schmidt, two passes, on the listed vectors in place.
fn orthonormalize(vectors: &mut [CVector], indices: &[usize]) {
    for _pass in 0..2 {
        for (pos, &i) in indices.iter().enumerate() {
            let mut v = vectors[i].0.clone();
            for &j in &indices[..pos] {
                let u = &vectors[j].0;
                let proj = u.dotc(&v);
                v -= u * proj;
            }
            let n = v.norm();
            if n > 0.0 {
                v /= cr(n);
            }
            vectors[i].0 = v;
        }
    }
}

/// `e^{−itH/ℏ}` via the spectral decomposition of `H`.
pub fn exp_unitary(h: &CMatrix, t: f64, hbar: f64) -> Result<CMatrix> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let eig = hermitian_eig_auto(h)?;
    Ok(exp_unitary_from_eig(&eig, t, hbar))
}

/// `e^{−itH/ℏ}` from a precomputed decomposition of `H`.
pub fn exp_unitary_from_eig(eig: &EigenDecomposition, t: f64, hbar: f64) -> CMatrix {
    eig.apply_function(|lambda| C64::from_polar(1.0, -t * lambda / hbar))
}

/// `‖U†U − I‖_op`
pub fn unitarity_defect(u: &CMatrix) -> Result<f64> {
    let n = u.dim()?;
    operator_norm(&(&(&u.adjoint() * u) - &CMatrix::identity(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn degenerate_spectra_rebuild_to_machine_precision() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        for i in 0..300 {
            let d = 1 + i % 16;
            let m = crate::random::degenerate_hermitian(&mut rng, d);
            let eig = hermitian_eig_auto(&m).unwrap();
            assert!(eig.rebuild().distance(&m).unwrap() <= 1e-12 * m.operator_norm().unwrap().max(1.0), "d = {d}");
            let g = crate::random::ginibre(&mut rng, 1 + i % 4, 1 + (i / 4) % 4);
            let f = svd(&g).unwrap();
            let sigma = CMatrix::from_real_diag(&f.singular_values);
            let err = (&(&f.u * &sigma) * &f.v_adjoint).distance(&g).unwrap();
            assert!(err <= 1e-12, "svd residual {err:e}");
        }
    }

    fn s3() -> CMatrix {
        CMatrix::from_real_diag(&[0.5, -0.5])
    }

    fn pseudo_random_matrix(n: usize, seed: u64) -> CMatrix {
        // xorshift; tests here only need arbitrary dense entries
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let data: Vec<C64> = (0..n * n).map(|_| c(next(), next())).collect();
        CMatrix::from_row_major(n, n, &data).unwrap()
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(adjoint(&CMatrix::identity(3)), CMatrix::identity(3));
        let m = CMatrix::from_rows(&[vec![cr(0.0), c(0.0, 1.0)], vec![cr(0.0), cr(0.0)]]).unwrap();
        let expected = CMatrix::from_rows(&[vec![cr(0.0), cr(0.0)], vec![c(0.0, -1.0), cr(0.0)]]).unwrap();
        assert_eq!(adjoint(&m), expected);
        let psi = CVector::new(vec![c(0.3, 0.1), c(-0.2, 0.7)]).unwrap();
        let phi = CVector::new(vec![c(1.0, -0.5), c(0.4, 0.0)]).unwrap();
        assert!(adjoint(&CMatrix::outer(&psi, &phi)).max_abs_diff(&CMatrix::outer(&phi, &psi)) < 1e-15);
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&CMatrix::identity(2), &CMatrix::identity(2)), CMatrix::identity(4));
        let f1 = pseudo_random_matrix(2, 1);
        let f2 = pseudo_random_matrix(2, 2);
        let i2 = CMatrix::identity(2);
        let lhs = &kron(&f1, &i2) * &kron(&i2, &f2);
        assert!(lhs.max_abs_diff(&kron(&f1, &f2)) < 1e-14);
    }

    #[test]
    fn trace_examples() {
        assert_eq!(trace(&CMatrix::identity(5)).unwrap(), cr(5.0));
        let psi = CVector::from_real(&[0.6, 0.8]).unwrap();
        assert!((trace(&CMatrix::outer(&psi, &psi)).unwrap() - cr(1.0)).norm() < 1e-15);
        let a = pseudo_random_matrix(4, 3);
        let b = pseudo_random_matrix(4, 4);
        let ab = trace(&(&a * &b)).unwrap();
        let ba = trace(&(&b * &a)).unwrap();
        assert!((ab - ba).norm() <= 1e-12);
        assert!(matches!(trace(&CMatrix::zeros(2, 3)), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(operator_norm(&CMatrix::zeros(3, 3)).unwrap(), 0.0);
        let e = CMatrix::from_real_diag(&[1.0, 0.0, 1.0]);
        assert!((operator_norm(&e).unwrap() - 1.0).abs() < 1e-14);
        let psi = CVector::new(vec![c(1.0, 2.0), c(-0.5, 0.3), c(0.0, 1.0)]).unwrap();
        let phi = CVector::new(vec![c(0.2, 0.0), c(3.0, -1.0), c(0.7, 0.7)]).unwrap();
        let n = operator_norm(&CMatrix::outer(&psi, &phi)).unwrap();
        assert!((n - psi.norm() * phi.norm()).abs() < 1e-12);
    }

    #[test]
    fn eig_diagonal_with_degeneracy() {
        let eig = hermitian_eig_auto(&CMatrix::from_real_diag(&[2.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.eigenvalues.len(), 3);
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert_eq!(eig.clusters, vec![vec![0], vec![1, 2]]);
    }

    #[test]
    fn eig_spin_z() {
        let eig = hermitian_eig_auto(&s3()).unwrap();
        assert!((eig.eigenvalues[0] + 0.5).abs() < 1e-15);
        assert!((eig.eigenvalues[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMatrix::from_rows(&[vec![cr(0.0), cr(1.0)], vec![cr(0.0), cr(0.0)]]).unwrap();
        assert!(matches!(hermitian_eig_auto(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_round_trip_random() {
        for seed in 0..20 {
            let n = 1 + (seed as usize % 8);
            let a = pseudo_random_matrix(n, seed + 100);
            let h = a.hermitian_part();
            let eig = hermitian_eig_auto(&h).unwrap();
            let scale = operator_norm(&h).unwrap().max(1.0);
            assert!(eig.rebuild().distance(&h).unwrap() <= 1e-10 * scale);
            for i in 0..n {
                for j in 0..n {
                    let ip = eig.eigenvectors[i].inner(&eig.eigenvectors[j]);
                    let delta = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - cr(delta)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn exp_unitary_examples() {
        let h = s3();
        assert!(exp_unitary(&h, 0.0, 1.0).unwrap().max_abs_diff(&CMatrix::identity(2)) < 1e-15);
        assert!(exp_unitary(&h, 4.0 * PI, 1.0).unwrap().max_abs_diff(&CMatrix::identity(2)) < 1e-14);
        let minus_i = CMatrix::identity(2).scale_real(-1.0);
        assert!(exp_unitary(&h, 2.0 * PI, 1.0).unwrap().max_abs_diff(&minus_i) < 1e-14);
        assert!(exp_unitary(&h, 1.0, 0.0).is_err());
    }

    #[test]
    fn exp_unitary_group_law() {
        let h = pseudo_random_matrix(5, 77).hermitian_part();
        let (s, t) = (3.7, -8.2);
        let us = exp_unitary(&h, s, 1.0).unwrap();
        let ut = exp_unitary(&h, t, 1.0).unwrap();
        let ust = exp_unitary(&h, s + t, 1.0).unwrap();
        assert!(unitarity_defect(&us).unwrap() <= 1e-10);
        assert!((&us * &ut).distance(&ust).unwrap() <= 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CMatrix::from_rows(&[]).is_err());
        assert!(CMatrix::from_rows(&[vec![cr(1.0)], vec![cr(1.0), cr(2.0)]]).is_err());
        assert!(CMatrix::from_rows(&[vec![cr(f64::NAN)]]).is_err());
        assert!(CVector::new(vec![]).is_err());
    }

    #[test]
    fn svd_of_exact_rank_one_complex_matrix() {
        let a = [c(-0.2031592639389053, 0.0697814191187438), c(0.2506557678950747, -0.30918398165989147)];
        let scale = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
        let b = [c(1.0, 0.0), c(2.0746, -0.4)];
        let m = CMatrix::from_rows(&[vec![b[0] * a[0], b[0] * a[1]], vec![b[1] * a[0], b[1] * a[1]]]).unwrap();
        let d = svd(&m).unwrap();
        let mut sv = d.singular_values.clone();
        sv.sort_by(|x, y| y.total_cmp(x));
        let expected = scale * (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
        assert!((sv[0] - expected).abs() < 1e-12);
        assert!(sv[1].abs() < 1e-12);
        let sigma = CMatrix::from_real_diag(&d.singular_values);
        assert!((&(&d.u * &sigma) * &d.v_adjoint).max_abs_diff(&m) < 1e-12);
    }
}
