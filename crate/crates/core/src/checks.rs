//! Self-check suites behind `qprob check`: randomised invariants and the
//! regression tables of the shipped scenarios.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::born::{self, EventSequence, QState};
use crate::entanglement::{self, Bipartition};
use crate::error::Result;
use crate::hilbert::{self, density_from_pure};
use crate::models::{self, EvolutionFamily, Instance};
use crate::random;
use crate::scenario::{self, sample_sequence, Report};

/// Which checks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Invariants,
    Tables,
    All,
}

/// Result of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    /// Table printed along with the result.
    pub table: Option<String>,
}

impl Outcome {
    fn new(name: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name, pass, detail: detail.into(), table: None }
    }

    fn from_result(name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((pass, detail)) => Self::new(name, pass, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

const TOL: f64 = 1e-10;
const DIMS: [usize; 3] = [2, 3, 4];

pub fn run(suite: Suite, seed: u64, instances: usize) -> Vec<Outcome> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Invariants | Suite::All) {
        out.extend(invariants(seed, instances));
    }
    if matches!(suite, Suite::Tables | Suite::All) {
        out.extend(tables(seed));
    }
    out
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn max_over(n: usize, mut f: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..n {
        worst = worst.max(f(i)?);
    }
    Ok(worst)
}

fn within(worst: f64, tol: f64) -> (bool, String) {
    (worst <= tol, format!("max deviation {worst:.3e} (tol {tol:.0e})"))
}

pub fn invariants(seed: u64, n: usize) -> Vec<Outcome> {
    vec![
        Outcome::from_result("probability bounds and complements", {
            let mut rng = rng_for(seed, 1);
            max_over(n, |i| {
                let d = DIMS[i % 3];
                let e = random::event(&mut rng, d);
                let rho = QState::Density(random::density(&mut rng, d));
                let p = born::prob_event(&e, &rho)?.value;
                let q = born::prob_event(&hilbert::complement(&e), &rho)?.value;
                Ok(if (0.0..=1.0).contains(&p) { (p + q - 1.0).abs() } else { f64::INFINITY })
            })
            .map(|w| within(w, TOL))
        }),
        Outcome::from_result("chain rule for consecutive events", {
            let mut rng = rng_for(seed, 2);
            max_over(n, |i| {
                let d = DIMS[i % 3];
                let (e, f) = (random::event_of_rank(&mut rng, d, 1), random::event(&mut rng, d));
                let s = QState::Pure(random::pure_state(&mut rng, d));
                let first = EventSequence::new(vec![e.clone()])?;
                let joint = born::consecutive(&EventSequence::new(vec![e, f.clone()])?, &s)?.value;
                let chained = born::consecutive(&first, &s)?.value
                    * born::conditional(&EventSequence::new(vec![f])?, &first, &s)?.value;
                Ok((joint - chained).abs())
            })
            .map(|w| within(w, TOL))
        }),
        Outcome::from_result("pure state agrees with its density matrix", {
            let mut rng = rng_for(seed, 3);
            max_over(n, |i| {
                let d = DIMS[i % 3];
                let seq: EventSequence = (0..3).map(|_| random::event(&mut rng, d)).collect();
                let psi = random::pure_state(&mut rng, d);
                let a = born::consecutive(&seq, &QState::Pure(psi.clone()))?.value;
                let b = born::consecutive(&seq, &QState::Density(density_from_pure(&psi)))?.value;
                Ok((a - b).abs())
            })
            .map(|w| within(w, TOL))
        }),
        Outcome::from_result("commuting events are order independent", {
            let mut rng = rng_for(seed, 4);
            max_over(n, |i| {
                let d = DIMS[i % 3] + 1;
                let pvm = hilbert::pvm_of_auto(&random::degenerate_hermitian(&mut rng, d))?;
                let atoms = pvm.atoms();
                let e = atoms[0].projector.clone();
                let f = hilbert::join(&e, &atoms[atoms.len() - 1].projector)?;
                let s = QState::Density(random::density(&mut rng, d));
                let ef = born::consecutive(&EventSequence::new(vec![e.clone(), f.clone()])?, &s)?.value;
                let fe = born::consecutive(&EventSequence::new(vec![f, e])?, &s)?.value;
                Ok((ef - fe).abs())
            })
            .map(|w| within(w, TOL))
        }),
        Outcome::from_result("spectral reconstruction", {
            let mut rng = rng_for(seed, 5);
            max_over(n, |i| {
                let t = random::hermitian(&mut rng, DIMS[i % 3]);
                let pvm = hilbert::pvm_of_auto(&t)?;
                Ok(pvm.reconstruct().distance(&t)? / t.operator_norm()?.max(1.0))
            })
            .map(|w| within(w, 1e-9))
        }),
        Outcome::from_result("evolution cocycle", {
            let mut rng = rng_for(seed, 6);
            max_over(n, |i| {
                let evo = EvolutionFamily::schrodinger(&random::hermitian(&mut rng, DIMS[i % 3]), 1.0)?;
                let (r, s, t) = (0.3, 1.1, 2.6);
                (&evo.operator(s, t)? * &evo.operator(r, s)?).distance(&evo.operator(r, t)?)
            })
            .map(|w| within(w, TOL))
        }),
        Outcome::from_result("Schrodinger and Heisenberg pictures agree", {
            let mut rng = rng_for(seed, 7);
            (|| {
                let mut worst = 0.0f64;
                for i in 0..n {
                    let d = DIMS[i % 3];
                    let h = random::hermitian(&mut rng, d);
                    let a = models::schrodinger_model(&h, 1.0)?;
                    let b = models::heisenberg_model(&h, 1.0)?;
                    let events: EventSequence = (0..3).map(|_| random::event(&mut rng, d)).collect();
                    let inst = Instance::Sequence {
                        events,
                        times: vec![0.0, 0.4, 1.3, 2.0],
                        state: QState::Density(random::density(&mut rng, d)),
                    };
                    let report = models::check_invariance(&a, &b, &[inst], TOL);
                    worst = worst.max(report.max_deviation);
                }
                Ok(within(worst, TOL))
            })()
        }),
        Outcome::from_result("entanglement equivalence", {
            let mut rng = rng_for(seed, 8);
            (|| {
                let mut bad = 0usize;
                for i in 0..n {
                    let bp = Bipartition::new(2 + i % 2, 2 + (i / 2) % 2)?;
                    let psi = if i % 3 == 0 {
                        random::pure_state(&mut rng, bp.d1()).tensor(&random::pure_state(&mut rng, bp.d2()))
                    } else {
                        random::pure_state(&mut rng, bp.dim())
                    };
                    let r = entanglement::verify_equivalence(&psi, bp, 8, 1e-9, &mut rng)?;
                    if !r.consistent {
                        bad += 1;
                    }
                }
                Ok((bad == 0, format!("{bad} inconsistent of {n}")))
            })()
        }),
        Outcome::from_result("sampler frequency matches analytic value", {
            let mut rng = rng_for(seed, 9);
            (|| {
                let seq: EventSequence = (0..2).map(|_| random::event_of_rank(&mut rng, 3, 2)).collect();
                let psi = random::pure_state(&mut rng, 3);
                let r = sample_sequence(&seq, None, &psi, 100_000, seed)?;
                let z = r.z_score.unwrap_or(0.0);
                let pass = r.exact_match.unwrap_or(true) && z.abs() <= scenario::Z_LIMIT;
                Ok((pass, format!("frequency {:.5} vs {:.5}, z = {z:.3}", r.frequency, r.analytic)))
            })()
        }),
    ]
}

/// Expected values of the spin-singlet scenario, in document order.
pub const EPR_EXPECTED: [f64; 9] = [1.0, 1.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.0, 0.0];
/// Expected values of the decay-detector scenario, in document order.
pub const DEVICE_EXPECTED: [f64; 4] = [1.0, 0.0, 0.0, 1.0];

fn table_check(name: &'static str, text: &str, expected: &[f64], tol: f64) -> Outcome {
    let report: Report = match scenario::parse_scenario(text).and_then(|s| scenario::run_queries(&s)) {
        Ok(r) => r,
        Err(e) => return Outcome::new(name, false, e.to_string()),
    };
    let values: Vec<Option<f64>> = report.rows.iter().map(|r| r.value).collect();
    let pass = values.len() == expected.len()
        && values.iter().zip(expected).all(|(v, e)| v.is_some_and(|v| (v - e).abs() <= tol));
    let worst = values
        .iter()
        .zip(expected)
        .map(|(v, e)| v.map_or(f64::INFINITY, |v| (v - e).abs()))
        .fold(0.0, f64::max);
    let mut o = Outcome::new(name, pass, format!("{} rows, max deviation {worst:.3e}", values.len()));
    o.table = Some(report.to_table());
    o
}

pub fn tables(seed: u64) -> Vec<Outcome> {
    let mut out = vec![
        table_check("spin-singlet conditional table", scenario::EPR_SCENARIO, &EPR_EXPECTED, 1e-12),
        table_check("decay-detector conditional table", scenario::DEVICE_SCENARIO, &DEVICE_EXPECTED, 0.0),
    ];
    let triple = entanglement::epr_triple();
    out.push(Outcome::from_result(
        "spin-singlet triple is tangled",
        entanglement::delta(&triple.e1, &triple.e2, &triple.e0).map(|(d12, d21)| {
            let pass = (d12 - 0.25).abs() <= 1e-12 && (d21 - 0.25).abs() <= 1e-12;
            (pass, format!("delta = ({d12:.15}, {d21:.15})"))
        }),
    ));
    out.push(Outcome::from_result("singlet correlation holds in every repetition", {
        let mut rng = rng_for(seed, 10);
        (|| {
            let psi = random::pure_state(&mut rng, 4);
            let seq = EventSequence::new(vec![triple.e0.clone(), triple.e2.clone(), triple.e1.clone()])?;
            let r = sample_sequence(&seq, None, &psi, 100_000, seed)?;
            let reached = r.step_attempts[2];
            let pass = reached > 0 && r.step_successes[2] == reached;
            Ok((pass, format!("{} of {reached} trials passing E0, E2 also passed E1", r.step_successes[2])))
        })()
    }));
    out
}
