use renewal_core::exact::{renewal_measure, RenewalSettings, StateWindow};
use renewal_core::monte_carlo::{estimate_p0, estimate_renewal, estimate_stay_above, trajectory_rng, McSettings, Target};
use renewal_core::{Error, LatticePmf, MarkovKernel};
use rand::Rng;

fn walk() -> MarkovKernel {
    MarkovKernel::random_walk(LatticePmf::up_down(0.75).unwrap()).unwrap()
}

#[test]
fn walk_density_near_one_hundred() {
    let run = estimate_renewal(&walk(), &LatticePmf::point(0), &[Target::new(100.0, 1.0)], &McSettings::new(500, 20_000, 42)).unwrap();
    let e = run.estimates[0].estimate;
    assert!((e.value - 2.0).abs() <= 3.0 * e.stderr, "{} +- {}", e.value, e.stderr);
    assert!(run.warning.is_none());
}

#[test]
fn p0_examples() {
    let tb = MarkovKernel::three_branch(0.5).unwrap();
    let p = estimate_p0(&tb, &LatticePmf::point(0), 0.0, 2000, &McSettings::new(2000, 20_000, 8)).unwrap();
    assert!((p.value - 0.5).abs() <= p.ci95_halfwidth, "{p:?}");
    assert!(!p.unstable);
    let p = estimate_p0(&walk(), &LatticePmf::point(0), 0.0, 2000, &McSettings::new(2000, 5000, 8)).unwrap();
    assert!(p.value >= 1.0 - p.ci95_halfwidth.max(1e-3));
}

#[test]
fn stay_above_examples() {
    let s = McSettings::new(2000, 20_000, 99);
    let e = estimate_stay_above(&walk(), 0.0, &s).unwrap();
    assert!((e.value - 0.5).abs() <= 3.0 * e.stderr);
    // From 0: up with probability p, then never back to 0 with probability 2/3.
    let tb = MarkovKernel::three_branch(0.5).unwrap();
    let e = estimate_stay_above(&tb, 0.0, &s).unwrap();
    assert!((e.value - 1.0 / 3.0).abs() <= 3.0 * e.stderr, "{}", e.value);
    let det = MarkovKernel::random_walk(LatticePmf::point(1)).unwrap();
    assert_eq!(estimate_stay_above(&det, 0.0, &s).unwrap().value, 1.0);
}

#[test]
fn agrees_with_exact_for_lattice_builtins() {
    let cases: Vec<(MarkovKernel, LatticePmf, StateWindow, f64, Vec<f64>)> = vec![
        (walk(), LatticePmf::point(0), StateWindow::new(-60, 120).unwrap(), 8.0, vec![-2.0, 5.0, 40.0]),
        (
            MarkovKernel::reflected_walk(LatticePmf::up_down(0.75).unwrap()).unwrap(),
            LatticePmf::point(0),
            StateWindow::new(0, 120).unwrap(),
            8.0,
            vec![-1.0, 0.0, 40.0],
        ),
        (MarkovKernel::three_branch(0.5).unwrap(), LatticePmf::point(0), StateWindow::new(-120, 120).unwrap(), 2.0, vec![-30.0, -1.0, 0.0, 30.0]),
        (MarkovKernel::counterexample(), LatticePmf::point(1), StateWindow::new(0, 200).unwrap(), 8.0, vec![14.0, 15.0, 16.0, 30.0, 31.0]),
    ];
    for (k, mu0, w, q, xs) in cases {
        let probe = (xs[0] as i64 + 1, *xs.last().unwrap() as i64 + 1);
        let exact = renewal_measure(&k, &mu0, w, &RenewalSettings::new(q).probe(probe.0, probe.1)).unwrap();
        let targets: Vec<Target> = xs.iter().map(|&x| Target::new(x, 1.0)).collect();
        let run = estimate_renewal(&k, &mu0, &targets, &McSettings::new(600, 20_000, 2024)).unwrap();
        for t in &run.estimates {
            let u = exact.window_mass(t.x as i64, 1).unwrap();
            let gap = (t.estimate.value - u).abs();
            assert!(gap <= 3.0 * t.estimate.stderr + exact.bracket_width, "{} at {}: mc {} exact {u}", k.name(), t.x, t.estimate.value);
        }
    }
}

#[test]
fn streams_are_independent_of_order() {
    let a: Vec<u64> = (0..4).map(|i| trajectory_rng(7, i).random()).collect();
    let b: Vec<u64> = (0..4).rev().map(|i| trajectory_rng(7, i).random()).collect::<Vec<_>>().into_iter().rev().collect();
    assert_eq!(a, b);
    assert_ne!(a[0], a[1]);
    assert_ne!(trajectory_rng(7, 0).random::<u64>(), trajectory_rng(8, 0).random::<u64>());
}

#[test]
fn strict_mode_escalates() {
    let tb = MarkovKernel::three_branch(0.5).unwrap();
    let strict = McSettings::new(300, 500, 1).strict(true);
    assert!(matches!(
        estimate_renewal(&tb, &LatticePmf::point(0), &[Target::new(10.0, 1.0)], &strict),
        Err(Error::HorizonCheck(_))
    ));
    // Probing before the walk has left the origin region makes p0 drift.
    assert!(matches!(
        estimate_p0(&tb, &LatticePmf::point(0), 0.0, 4, &McSettings::new(4, 20_000, 1).strict(true)),
        Err(Error::Unstable(_))
    ));
}
