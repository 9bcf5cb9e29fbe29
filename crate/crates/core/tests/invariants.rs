mod common;

use proptest::prelude::*;
use qprob::born::{self, EventSequence, QState};
use qprob::hilbert::{self, density_from_pure, BorelSet, Event};
use qprob::linalg::CMatrix;
use qprob::models::{self, EvolutionFamily, Instance};
use qprob::random;

const TOL: f64 = 1e-10;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

fn events(rng: &mut rand_chacha::ChaCha8Rng, d: usize, n: usize) -> Vec<Event> {
    (0..n).map(|_| random::event(rng, d)).collect()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn consecutive_matches_direct_product(seed in any::<u64>(), d in 1usize..5, n in 1usize..5) {
        let mut rng = common::rng(seed);
        let es = events(&mut rng, d, n);
        let psi = random::pure_state(&mut rng, d);
        let got = born::consecutive(&EventSequence::new(es.clone())?, &QState::Pure(psi.clone()))?.value;
        let mats: Vec<_> = es.iter().map(|e| common::m(e.matrix())).collect();
        let want = common::consecutive(&mats, &common::v(psi.vector()));
        prop_assert!((got - want).abs() <= TOL, "{got} vs {want}");
    }

    #[test]
    fn event_and_complement_sum_to_one(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = common::rng(seed);
        let e = random::event(&mut rng, d);
        let rho = QState::Density(random::density(&mut rng, d));
        let p = born::prob_event(&e, &rho)?.value;
        let q = born::prob_event(&hilbert::complement(&e), &rho)?.value;
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + q - 1.0).abs() <= TOL);
    }

    #[test]
    fn pure_state_and_its_density_agree(seed in any::<u64>(), d in 1usize..5, n in 1usize..4) {
        let mut rng = common::rng(seed);
        let seq = EventSequence::new(events(&mut rng, d, n))?;
        let psi = random::pure_state(&mut rng, d);
        let a = born::consecutive(&seq, &QState::Pure(psi.clone()))?.value;
        let b = born::consecutive(&seq, &QState::Density(density_from_pure(&psi)))?.value;
        prop_assert!((a - b).abs() <= TOL);
    }

    #[test]
    fn prefixes_never_gain_probability(seed in any::<u64>(), d in 1usize..5, n in 1usize..7) {
        let mut rng = common::rng(seed);
        let es = events(&mut rng, d, n);
        let s = QState::Density(random::density(&mut rng, d));
        let mut last = 1.0;
        for k in 1..=n {
            let p = born::consecutive(&EventSequence::new(es[..k].to_vec())?, &s)?.value;
            prop_assert!(p <= last + TOL);
            last = p;
        }
    }

    #[test]
    fn chain_rule_or_flagged_denominator(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = common::rng(seed);
        let es = events(&mut rng, d, 3);
        let s = QState::Pure(random::pure_state(&mut rng, d));
        let given = EventSequence::new(es[..2].to_vec())?;
        let target = EventSequence::new(es[2..].to_vec())?;
        let c = born::conditional(&target, &given, &s)?;
        let joint = born::consecutive(&EventSequence::new(es)?, &s)?.value;
        let prior = born::consecutive(&given, &s)?.value;
        if c.zero_denominator {
            prop_assert_eq!(c.value, 0.0);
            prop_assert!(prior <= 1e-12);
        } else {
            prop_assert!((0.0..=1.0).contains(&c.value));
            prop_assert!((c.value * prior - joint).abs() <= TOL);
        }
    }

    #[test]
    fn no_state_gives_squared_operator_norm(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = common::rng(seed);
        let seq = EventSequence::new(events(&mut rng, d, 2))?;
        let p = born::consecutive(&seq, &QState::NoState)?.value;
        let norm = seq.product(d)?.operator_norm()?;
        prop_assert!((p - norm * norm).abs() <= TOL);
    }

    #[test]
    fn spectral_measure_resolves_identity(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = common::rng(seed);
        let t = random::degenerate_hermitian(&mut rng, d);
        let pvm = hilbert::pvm_of_auto(&t)?;
        let whole = pvm.eval(&BorelSet::real_line());
        prop_assert!(whole.matrix().distance(&CMatrix::identity(d))? <= TOL);
        prop_assert!(pvm.reconstruct().distance(&t)? <= 1e-9 * t.operator_norm()?.max(1.0));
        for a in pvm.atoms() {
            let (idem, herm) = a.projector.projection_defects()?;
            prop_assert!(idem <= TOL && herm <= TOL);
        }
    }

    #[test]
    fn join_of_disjoint_atoms_is_their_sum(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = common::rng(seed);
        let pvm = hilbert::pvm_of_auto(&random::degenerate_hermitian(&mut rng, d))?;
        let atoms = pvm.atoms();
        let (e, f) = (&atoms[0].projector, &atoms[atoms.len() - 1].projector);
        let joined = hilbert::join(e, f)?;
        let sum = if atoms.len() > 1 { e.matrix() + f.matrix() } else { e.matrix().clone() };
        prop_assert!(joined.matrix().distance(&sum)? <= TOL);
        if atoms.len() > 1 {
            prop_assert!(hilbert::meet(e, f)?.is_zero());
        }
    }

    #[test]
    fn evolution_is_unitary_and_composes(seed in any::<u64>(), d in 1usize..5, s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let mut rng = common::rng(seed);
        let h = random::hermitian(&mut rng, d);
        let evo = EvolutionFamily::schrodinger(&h, 0.7)?;
        let u = evo.operator(s, t)?;
        prop_assert!((&u.adjoint() * &u).distance(&CMatrix::identity(d))? <= TOL);
        let want = common::propagator(&common::scale(&common::m(&h), num_complex::Complex64::new(1.0 / 0.7, 0.0)), t - s);
        prop_assert!(common::max_abs(&common::sub(&common::m(&u), &want)) <= 1e-9);
        let back = &evo.operator(t, s)? * &u;
        prop_assert!(back.distance(&CMatrix::identity(d))? <= TOL);
    }

    #[test]
    fn pictures_agree_with_reference(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = common::rng(seed);
        let h = random::hermitian(&mut rng, d);
        let es = events(&mut rng, d, 2);
        let psi = random::pure_state(&mut rng, d);
        let times = vec![0.0, 0.5, 1.7];
        let schr = models::schrodinger_model(&h, 1.0)?;
        let heis = models::heisenberg_model(&h, 1.0)?;
        let inst = Instance::Sequence { events: EventSequence::new(es.clone())?, times: times.clone(), state: QState::Pure(psi.clone()) };
        let report = models::check_invariance(&schr, &heis, &[inst], TOL);
        prop_assert!(report.failures.is_empty() && report.max_deviation <= TOL);
        let p = schr.sequence_prob(&EventSequence::new(es.clone())?, &times, &QState::Pure(psi.clone()))?.value;
        let mats: Vec<_> = es.iter().map(|e| common::m(e.matrix())).collect();
        let want = common::heisenberg_consecutive(&common::m(&h), &mats, &times[1..], &common::v(psi.vector()));
        prop_assert!((p - want).abs() <= 1e-9, "{p} vs {want}");
    }
}
