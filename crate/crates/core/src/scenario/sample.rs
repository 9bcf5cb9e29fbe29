//! Monte Carlo sampler for sequences of measurements.
//!
//! Each trial walks the sequence one event at a time, answering YES with
//! probability `‖E v‖² / ‖v‖²` and stopping at the first NO. The overall
//! success frequency estimates the consecutive probability, and the
//! per-step counts estimate each conditional factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::born::{self, EventSequence, Propagator, QState};
use crate::error::{Error, Result};
use crate::hilbert::{check_dim, PureState};
use crate::linalg::{CMatrix, CVector};
use crate::models::EvolutionFamily;

/// Analytic values within this distance of 0 or 1 are compared exactly.
pub const TOL_DEGENERATE: f64 = 1e-12;

/// Outcome of [`sample_sequence`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub trials: u64,
    pub successes: u64,
    pub frequency: f64,
    pub analytic: f64,
    /// `(frequency − analytic) / √(analytic(1 − analytic)/trials)`, when the
    /// analytic value is not 0 or 1.
    pub z_score: Option<f64>,
    /// For analytic 0 or 1: whether the frequency matched it exactly.
    pub exact_match: Option<bool>,
    pub seed: u64,
    /// Trials that reached step `j`.
    pub step_attempts: Vec<u64>,
    /// Trials that answered YES at step `j`.
    pub step_successes: Vec<u64>,
}

impl SampleReport {
    /// Empirical `P(E_{k+1}, … | E_1, …, E_k)`: successes among trials that
    /// passed the first `k` events. `None` if no trial got that far.
    pub fn conditional_frequency(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return Some(self.frequency);
        }
        let reached = *self.step_attempts.get(k)?;
        (reached > 0).then(|| self.successes as f64 / reached as f64)
    }

    /// Product of the per-step empirical conditionals.
    pub fn chain_product(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let mut product = 1.0;
        for (a, s) in self.step_attempts.iter().zip(&self.step_successes) {
            if *a == 0 {
                return 0.0;
            }
            product *= *s as f64 / *a as f64;
        }
        product
    }
}

/// z-score of a binomial frequency against `analytic`, or the exact-match
/// flag when `analytic` is 0 or 1.
pub fn score(frequency: f64, analytic: f64, trials: u64) -> (Option<f64>, Option<bool>) {
    if analytic <= TOL_DEGENERATE || analytic >= 1.0 - TOL_DEGENERATE {
        (None, Some(frequency == analytic.round()))
    } else {
        let sd = (analytic * (1.0 - analytic) / trials as f64).sqrt();
        (Some((frequency - analytic) / sd), None)
    }
}

/// Samples `trials` runs of `seq` from `psi`. With `times` and `evo`, the
/// state evolves from `times[j]` to `times[j + 1]` before event `j`.
/// Trial `i` draws from ChaCha8 seeded with `seed` on stream `i`.
pub fn sample_sequence(
    seq: &EventSequence,
    timing: Option<(&[f64], &EvolutionFamily)>,
    psi: &PureState,
    trials: u64,
    seed: u64,
) -> Result<SampleReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let dim = psi.dim();
    if let Some(d) = seq.dim() {
        check_dim(dim, d)?;
    }
    let state = QState::Pure(psi.clone());
    let (steps, analytic) = match timing {
        Some((times, evo)) => {
            if !evo.is_unitary() {
                return Err(Error::NonUnitaryEvolution);
            }
            check_dim(dim, evo.dim())?;
            let analytic = born::prob_with_evolution(seq, times, evo, &state)?.value;
            let steps = seq
                .events()
                .iter()
                .enumerate()
                .map(|(j, e)| Ok(e.matrix() * &evo.propagate(times[j], times[j + 1])?))
                .collect::<Result<Vec<CMatrix>>>()?;
            (steps, analytic)
        }
        None => {
            let analytic = born::consecutive(seq, &state)?.value;
            (seq.events().iter().map(|e| e.matrix().clone()).collect(), analytic)
        }
    };

    let n = steps.len();
    let mut attempts = vec![0u64; n];
    let mut passes = vec![0u64; n];
    let mut successes = 0u64;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        if run_trial(&steps, psi.vector(), &mut rng, &mut attempts, &mut passes) {
            successes += 1;
        }
    }
    let frequency = successes as f64 / trials as f64;
    let (z_score, exact_match) = score(frequency, analytic, trials);
    let report = SampleReport {
        trials,
        successes,
        frequency,
        analytic,
        z_score,
        exact_match,
        seed,
        step_attempts: attempts,
        step_successes: passes,
    };
    let chain = report.chain_product();
    if (chain - frequency).abs() > 1e-12 {
        return Err(Error::InvariantViolation(format!(
            "per-step frequencies multiply to {chain}, overall frequency is {frequency}"
        )));
    }
    Ok(report)
}

fn run_trial<R: Rng>(
    steps: &[CMatrix],
    psi: &CVector,
    rng: &mut R,
    attempts: &mut [u64],
    passes: &mut [u64],
) -> bool {
    let mut v = psi.clone();
    for (j, step) in steps.iter().enumerate() {
        attempts[j] += 1;
        let before = v.norm_sqr();
        let w = step.apply(&v);
        let p = if before > 0.0 { w.norm_sqr() / before } else { 0.0 };
        if rng.gen::<f64>() >= p {
            return false;
        }
        passes[j] += 1;
        v = w.normalized().unwrap_or(w);
    }
    true
}
