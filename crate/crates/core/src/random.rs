//! Random instance generators for property checks and the `check` command.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{DensityMatrix, Event, PureState};
use crate::linalg::{c, CMatrix, CVector, C64};

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal)) / 2f64.sqrt()
}

/// Vector with i.i.d. complex Gaussian entries.
pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    CVector::new((0..dim).map(|_| complex_normal(rng)).collect()).expect("non-empty")
}

/// Uniformly distributed unit vector.
pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> PureState {
    loop {
        let v = gaussian_vector(rng, dim);
        if v.norm() > 1e-6 {
            return PureState::normalized(&v).expect("non-zero");
        }
    }
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let data: Vec<C64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    CMatrix::from_row_major(rows, cols, &data).expect("shape")
}

/// Random Hermitian matrix `(G + G†)/2`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    ginibre(rng, dim, dim).hermitian_part()
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = ginibre(rng, dim, dim);
    let qr = g.as_na().clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    CMatrix::from_na(q)
}

/// Projector of the given rank onto a Haar-random subspace.
pub fn event_of_rank<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Event {
    let u = unitary(rng, dim);
    let diag: Vec<f64> = (0..dim).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
    let p = CMatrix::from_real_diag(&diag).conjugate_by(&u);
    Event::from_projector_unchecked(p.hermitian_part())
}

/// Projector of uniformly random rank in `0..=dim`.
pub fn event<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Event {
    let rank = rng.gen_range(0..=dim);
    event_of_rank(rng, dim, rank)
}

/// Random full-rank density matrix `GG†/Tr(GG†)`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    let g = ginibre(rng, dim, dim);
    let m = &g * &g.adjoint();
    let tr = m.trace().expect("square").re;
    DensityMatrix::from_matrix_unchecked(m.scale_real(1.0 / tr).hermitian_part())
}

/// Hermitian matrix with repeated eigenvalues drawn from a small integer set.
pub fn degenerate_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let u = unitary(rng, dim);
    let diag: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2..=2) as f64).collect();
    CMatrix::from_real_diag(&diag).conjugate_by(&u).hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_satisfy_their_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..6 {
            assert!(unitarity_defect(&unitary(&mut rng, d)).unwrap() < 1e-12);
            assert!((pure_state(&mut rng, d).vector().norm() - 1.0).abs() < 1e-12);
            let (idem, herm) = event(&mut rng, d).projection_defects().unwrap();
            assert!(idem < 1e-12 && herm < 1e-12);
            assert!(DensityMatrix::new(density(&mut rng, d).matrix().clone()).is_ok());
            assert!(hermitian(&mut rng, d).hermiticity_defect().unwrap() == 0.0);
        }
    }
}
