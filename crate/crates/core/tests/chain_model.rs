use std::f64::consts::E;

use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renewal_core::chain::{counterexample_block, LIMIT_MEAN_TOL};
use renewal_core::law::NORMALIZATION_TOL;
use renewal_core::{build_chain, ChainName, ChainSpec, ContinuousLaw, Error, JumpLaw, LatticePmf, MarkovKernel};

fn builtins() -> Vec<MarkovKernel> {
    vec![
        MarkovKernel::random_walk(LatticePmf::up_down(0.75).unwrap()).unwrap(),
        MarkovKernel::reflected_walk(LatticePmf::up_down(0.75).unwrap()).unwrap(),
        MarkovKernel::three_branch(0.5).unwrap(),
        MarkovKernel::counterexample(),
        MarkovKernel::perturbed_walk(-1.0, 1.5, 0.5).unwrap(),
    ]
}

#[test]
fn limit_mean_matches_limit_law() {
    for k in builtins() {
        assert!((k.limit_mean() - k.limit_law().mean().unwrap()).abs() <= LIMIT_MEAN_TOL, "{}", k.name());
        assert_eq!(k.limit_statistics().mean, k.limit_mean());
    }
}

#[test]
fn lattice_jump_laws_share_the_lattice() {
    for k in builtins().into_iter().filter(|k| k.is_lattice()) {
        for x in k.representative_states() {
            let law = k.jump_at(x).unwrap();
            let pmf = law.as_lattice().unwrap();
            assert!((pmf.total_mass() - 1.0).abs() <= NORMALIZATION_TOL);
        }
    }
}

#[test]
fn three_branch_drift_is_exact() {
    let k = MarkovKernel::three_branch(0.3).unwrap();
    for x in 1..200 {
        assert_eq!(k.mean_jump(x as f64).unwrap(), 0.5);
        assert_eq!(k.mean_jump(-x as f64).unwrap(), -0.5);
    }
    assert_abs_diff_eq!(k.mean_jump(0.0).unwrap(), -0.4, epsilon = 1e-15);
}

#[test]
fn counterexample_state_six() {
    let k = MarkovKernel::counterexample();
    let law = k.lattice_jump(6).unwrap();
    let p8 = 1.0 / (2.0 * (2.0 + E * E).ln());
    assert_eq!(law.prob(0), 0.5);
    assert_abs_diff_eq!(law.prob(2), p8, epsilon = 1e-15);
    assert_abs_diff_eq!(law.prob(1), 0.5 - p8, epsilon = 1e-15);
    assert_abs_diff_eq!(k.mean_jump(6.0).unwrap(), 0.5 + p8, epsilon = 1e-15);
}

fn block_midpoint(x: i64) -> i64 {
    let n = counterexample_block(x);
    ((1i64 << n) - 1 + (1i64 << (n + 1)) - 2) / 2
}

#[test]
fn homogeneity_gap_shrinks() {
    let ce = MarkovKernel::counterexample();
    let gaps: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&x| ce.homogeneity_gap(block_midpoint(x) as f64).unwrap())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");

    let pw = MarkovKernel::perturbed_walk(-1.0, 1.5, 0.5).unwrap();
    let gaps: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|&x| pw.homogeneity_gap(x).unwrap()).collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
    assert!(gaps[0] < 1e-4);

    for k in [
        MarkovKernel::random_walk(LatticePmf::up_down(0.75).unwrap()).unwrap(),
        MarkovKernel::reflected_walk(LatticePmf::up_down(0.75).unwrap()).unwrap(),
        MarkovKernel::three_branch(0.5).unwrap(),
    ] {
        for x in [10.0, 100.0, 1000.0] {
            assert_eq!(k.homogeneity_gap(x).unwrap(), 0.0);
        }
    }
}

#[test]
fn reflected_walk_stays_nonnegative() {
    let k = MarkovKernel::reflected_walk(LatticePmf::new([(-3, 0.3), (2, 0.7)]).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut x = 0.0;
    for _ in 0..10_000 {
        x = k.sample_step(x, &mut rng);
        assert!(x >= 0.0);
    }
}

#[test]
fn sampler_matches_jump_law() {
    let k = MarkovKernel::counterexample();
    let state = 6.0;
    let law = k.lattice_jump(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200_000;
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..n {
        *counts.entry((k.sample_step(state, &mut rng) - state) as i64).or_insert(0u32) += 1;
    }
    for &(d, p) in law.atoms() {
        let freq = counts.get(&d).copied().unwrap_or(0) as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 5.0 * se, "offset {d}: {freq} vs {p}");
    }
}

#[test]
fn perturbed_jump_is_shifted_uniform() {
    let k = MarkovKernel::perturbed_walk(-1.0, 1.5, 0.5).unwrap();
    let d = 0.5 * (-2.0f64).exp();
    assert_eq!(
        k.jump_at(-2.0).unwrap(),
        JumpLaw::from(ContinuousLaw::uniform(-1.0 + d, 1.5 + d).unwrap())
    );
    assert_abs_diff_eq!(k.mean_jump(0.0).unwrap(), 0.75, epsilon = 1e-12);
    assert_eq!(k.limit_statistics().span, None);
}

#[test]
fn spec_files_round_trip() {
    let specs = [
        ChainSpec::new(ChainName::ThreeBranch).with_param("p", 0.25).with_initial(LatticePmf::new([(0, 0.5), (3, 0.5)]).unwrap()),
        ChainSpec::new(ChainName::RandomWalk).with_step(LatticePmf::new([(-1, 0.2), (2, 0.8)]).unwrap()),
        ChainSpec::new(ChainName::PerturbedWalk).with_param("amplitude", 0.25),
        ChainSpec::new(ChainName::Counterexample).with_initial(LatticePmf::point(1)),
    ];
    for spec in specs {
        let text = spec.to_toml().unwrap();
        let back = ChainSpec::from_toml(&text).unwrap();
        assert_eq!(back, spec);
        build_chain(&back).unwrap();
    }
}

#[test]
fn build_errors() {
    assert!(matches!(
        build_chain(&ChainSpec::new(ChainName::ThreeBranch)),
        Err(Error::MissingParameter(_))
    ));
    assert!(build_chain(&ChainSpec::new(ChainName::ThreeBranch).with_param("p", 1.2)).is_err());
    assert!(matches!(
        build_chain(&ChainSpec::new(ChainName::RandomWalk).with_param("q", 0.4)),
        Err(Error::NonPositiveDrift(_))
    ));
    assert!(build_chain(&ChainSpec::new(ChainName::Counterexample).with_initial(LatticePmf::point(-1))).is_err());
    assert!(ChainSpec::from_toml("name = \"nope\"").is_err());
}
