//! Reference computations on plain nested vectors, independent of the
//! library's linear algebra.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use qprob::linalg::{CMatrix, CVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type M = Vec<Vec<C>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn m(a: &CMatrix) -> M {
    a.to_rows()
}

pub fn v(a: &CVector) -> Vec<C> {
    a.entries()
}

pub fn identity(n: usize) -> M {
    (0..n).map(|i| (0..n).map(|j| C::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect()
}

pub fn mul(a: &M, b: &M) -> M {
    let (n, k, p) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..p).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

pub fn apply(a: &M, x: &[C]) -> Vec<C> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, y)| r * y).sum()).collect()
}

pub fn adjoint(a: &M) -> M {
    (0..a[0].len()).map(|j| (0..a.len()).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn add(a: &M, b: &M) -> M {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn sub(a: &M, b: &M) -> M {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

pub fn scale(a: &M, z: C) -> M {
    a.iter().map(|r| r.iter().map(|x| x * z).collect()).collect()
}

pub fn norm_sqr(x: &[C]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn inner(x: &[C], y: &[C]) -> C {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn max_abs(a: &M) -> f64 {
    a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `e^A` by scaling and squaring with a Taylor series.
pub fn expm(a: &M) -> M {
    let n = a.len();
    let norm: f64 = a.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let b = scale(a, C::new(0.5f64.powi(squarings as i32), 0.0));
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..30 {
        term = scale(&mul(&term, &b), C::new(1.0 / k as f64, 0.0));
        sum = add(&sum, &term);
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

/// `e^{−i t H}`.
pub fn propagator(h: &M, t: f64) -> M {
    expm(&scale(h, C::new(0.0, -t)))
}

/// `‖E_n ⋯ E_1 ψ‖²`.
pub fn consecutive(events: &[M], psi: &[C]) -> f64 {
    let mut x = psi.to_vec();
    for e in events {
        x = apply(e, &x);
    }
    norm_sqr(&x)
}

/// Heisenberg-picture consecutive probability: events `U_t† E U_t` with
/// `U_t = e^{−itH}`, applied to the time-zero state.
pub fn heisenberg_consecutive(h: &M, events: &[M], times: &[f64], psi: &[C]) -> f64 {
    let moved: Vec<M> = events
        .iter()
        .zip(times)
        .map(|(e, &t)| {
            let u = propagator(h, t);
            mul(&mul(&adjoint(&u), e), &u)
        })
        .collect();
    consecutive(&moved, psi)
}
