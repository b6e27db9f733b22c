//! Invariants checked over random parameters. Run alone with
//! `cargo test -p renewal-core --test properties`.

use proptest::prelude::*;
use renewal_core::conditions::{
    check_stochastic_domination, limit_violation, theorem2_bound, BoundMechanism, DominationKind, Theorem2Params,
};
use renewal_core::exact::{iterate_distribution, renewal_measure, RenewalSettings, StateWindow};
use renewal_core::law::NORMALIZATION_TOL;
use renewal_core::monte_carlo::{estimate_renewal, McSettings, Target};
use renewal_core::{LatticePmf, MarkovKernel};

const MASS_TOL: f64 = 1e-9;

fn lattice_chain(which: u8, param: f64) -> MarkovKernel {
    match which % 4 {
        0 => MarkovKernel::random_walk(LatticePmf::up_down(param).unwrap()).unwrap(),
        1 => MarkovKernel::reflected_walk(LatticePmf::up_down(param).unwrap()).unwrap(),
        2 => MarkovKernel::three_branch(param).unwrap(),
        _ => MarkovKernel::counterexample(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mass_is_conserved(which in 0u8..4, param in 0.55f64..0.95, start in 0i64..20, lo in -40i64..-1, hi in 25i64..80) {
        let k = lattice_chain(which, param);
        let lo = if k.domain_lower().is_some() { 0 } else { lo };
        let w = StateWindow::new(lo, hi).unwrap();
        let mut iter = iterate_distribution(&k, &LatticePmf::point(start), w, &RenewalSettings::new(8.0)).unwrap();
        for _ in 0..300 {
            let Some(mu) = iter.next() else { break };
            let total = mu.interior_mass() + iter.window().absorbed();
            prop_assert!((total - 1.0).abs() < MASS_TOL, "step {} total {}", mu.step, total);
            prop_assert!(mu.masses.iter().all(|&m| m >= 0.0));
        }
    }

    #[test]
    fn jump_laws_are_normalized(which in 0u8..4, param in 0.5f64..1.0, state in -1000i64..1_000_000) {
        let k = lattice_chain(which, param.min(0.999));
        let state = if k.domain_lower().is_some() { state.abs() } else { state % 1000 };
        let law = k.lattice_jump(state).unwrap();
        prop_assert!((law.total_mass() - 1.0).abs() <= NORMALIZATION_TOL);
        prop_assert!(law.atoms().iter().all(|&(_, p)| p > 0.0));
    }

    #[test]
    fn normalized_weights_build_valid_pmfs(weights in prop::collection::vec(1e-6f64..1.0, 1..12), shift in -20i64..20) {
        let total: f64 = weights.iter().sum();
        let pmf = LatticePmf::new(weights.iter().enumerate().map(|(i, w)| (i as i64 + shift, w / total))).unwrap();
        prop_assert!((pmf.total_mass() - 1.0).abs() <= NORMALIZATION_TOL);
        prop_assert!((pmf.cdf(f64::INFINITY) - 1.0).abs() <= NORMALIZATION_TOL);
    }

    #[test]
    fn unnormalized_pmfs_are_rejected(scale in 1.001f64..3.0) {
        prop_assert!(LatticePmf::new([(0, 0.5 * scale), (1, 0.5 * scale)]).is_err());
    }

    #[test]
    fn bounds_are_monotone(a in 0.1f64..5.0, eps in 0.01f64..1.0, delta in 0.01f64..1.0, h in 0.1f64..10.0, dh in 0.01f64..5.0) {
        let p = Theorem2Params::new(a, eps, Some(delta));
        let b = |p: &Theorem2Params, h: f64, m| theorem2_bound(p, h, m).unwrap().bound;
        prop_assert!(b(&p, h + dh, BoundMechanism::Theorem2) > b(&p, h, BoundMechanism::Theorem2));
        let wider = Theorem2Params::new(a, eps * 1.5, Some((delta * 1.5).min(1.0)));
        prop_assert!(b(&wider, h, BoundMechanism::Theorem2) < b(&p, h, BoundMechanism::Theorem2));
        let lad = Theorem2Params::new(a, eps, None);
        prop_assert!(b(&lad, h + dh, BoundMechanism::Corollary) > b(&lad, h, BoundMechanism::Corollary));
        prop_assert!(b(&Theorem2Params::new(a, eps * 1.5, None), h, BoundMechanism::Corollary) < b(&lad, h, BoundMechanism::Corollary));
        let g = Theorem2Params::nonnegative(a, delta);
        prop_assert!(b(&g, h + dh, BoundMechanism::NonNegative) > b(&g, h, BoundMechanism::NonNegative));
    }

    #[test]
    fn three_branch_unit_majorant_always_valid(p in 0.0f64..=1.0) {
        let k = MarkovKernel::three_branch(p).unwrap();
        let c = check_stochastic_domination(&k, &LatticePmf::point(1).into(), DominationKind::Majorant, &[]).unwrap();
        prop_assert!(c.valid);
    }

    #[test]
    fn counterexample_has_no_constant_majorant(c in 1i64..100_000) {
        let k = MarkovKernel::counterexample();
        let cert = check_stochastic_domination(&k, &LatticePmf::point(c).into(), DominationKind::Majorant, &[]).unwrap();
        prop_assert!(!cert.valid);
    }

    #[test]
    fn valid_majorants_dominate_the_limit(q in 0.55f64..0.95, extra in 0i64..3) {
        let k = MarkovKernel::random_walk(LatticePmf::up_down(q).unwrap()).unwrap();
        let eta = LatticePmf::point(1 + extra).into();
        let cert = check_stochastic_domination(&k, &eta, DominationKind::Majorant, &[]).unwrap();
        prop_assert!(cert.valid);
        prop_assert!(limit_violation(&k, &eta, DominationKind::Majorant) <= 1e-12);
    }

    #[test]
    fn larger_window_never_lowers_masses(q in 0.6f64..0.9, lo in -30i64..-5, hi in 30i64..60, grow in 1i64..20) {
        let k = MarkovKernel::random_walk(LatticePmf::up_down(q).unwrap()).unwrap();
        let s = RenewalSettings::new(8.0).stop_tol(1e-12);
        let small = renewal_measure(&k, &LatticePmf::point(0), StateWindow::new(lo, hi).unwrap(), &s).unwrap();
        let big = renewal_measure(&k, &LatticePmf::point(0), StateWindow::new(lo - grow, hi + grow).unwrap(), &s).unwrap();
        for x in lo..=hi {
            prop_assert!(small.mass_at(x).unwrap() <= big.mass_at(x).unwrap() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monte_carlo_is_bit_identical(seed in any::<u64>(), threads in 1usize..5) {
        let k = MarkovKernel::three_branch(0.5).unwrap();
        let targets = [Target::new(5.0, 1.0), Target::new(-5.0, 2.0)];
        let s = McSettings::new(60, 400, seed);
        let first = estimate_renewal(&k, &LatticePmf::point(0), &targets, &s).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let second = pool.install(|| estimate_renewal(&k, &LatticePmf::point(0), &targets, &s).unwrap());
        for (a, b) in first.estimates.iter().zip(&second.estimates) {
            prop_assert_eq!(a.estimate.value.to_bits(), b.estimate.value.to_bits());
            prop_assert_eq!(a.estimate.stderr.to_bits(), b.estimate.stderr.to_bits());
        }
        prop_assert_eq!(first.passed_fraction.to_bits(), second.passed_fraction.to_bits());
    }
}
