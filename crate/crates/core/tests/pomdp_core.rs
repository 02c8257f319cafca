mod common;

use obsrobust::io::benchmarks::{builtin, BenchmarkId};
use obsrobust::pomdp::{belief_update, validate_model, ViolationKind};
use obsrobust::validate::monte_carlo;
use obsrobust::{fsc_value, Belief, Error, Fsc, Horizon, Pomdp};
use proptest::prelude::*;

#[test]
fn tiger_listen_update() {
    let (m, _) = builtin(BenchmarkId::Tiger);
    let b = belief_update(&Belief(vec![0.5, 0.5]), 0, 0, &m).unwrap();
    assert!((b.0[0] - 0.85).abs() < 1e-12 && (b.0[1] - 0.15).abs() < 1e-12);
}

#[test]
fn toy_rover_size_update() {
    let (m, _) = builtin(BenchmarkId::ToyRover);
    let b0 = Belief(m.initial.clone());
    let a = m.action_index("measure-size").unwrap();
    let o = m.observation_index("true").unwrap();
    let b = belief_update(&b0, a, o, &m).unwrap();
    let expect = [0.0, 0.495, 0.495, 0.005, 0.005];
    for (x, y) in b.0.iter().zip(expect) {
        assert!((x - y).abs() < 1e-12, "{:?}", b.0);
    }
}

#[test]
fn impossible_observation_rejected() {
    let (m, _) = builtin(BenchmarkId::ToyRover);
    let b = Belief::point(m.n_states(), 1);
    let a = m.action_index("go-through").unwrap();
    let o = m.observation_index("false").unwrap();
    assert!(matches!(belief_update(&b, a, o, &m), Err(Error::ImpossibleObservation { .. })));
}

#[test]
fn cancer_nominal_value() {
    let (m, pi) = builtin(BenchmarkId::Cancer);
    let v = fsc_value(&m, &pi, Horizon::Infinite, 1e-7).unwrap();
    assert!((v.initial - 98.53).abs() < 0.05, "{}", v.initial);
}

fn one_state(discount: f64, reward: f64) -> (Pomdp, Fsc) {
    let mut m = Pomdp::zeros(vec!["s".into()], vec!["a".into()], vec!["o".into()], discount);
    m.set_t(0, 0, 0, 1.0);
    m.set_z(0, 0, 0, 1.0);
    m.set_r(0, 0, reward);
    m.initial = vec![1.0];
    let pi = Fsc { nodes: vec!["n".into()], initial: 0, action: vec![0], next: vec![vec![Some(0)]] };
    (m, pi)
}

#[test]
fn geometric_series_value() {
    let (m, pi) = one_state(0.5, 1.0);
    let v = fsc_value(&m, &pi, Horizon::Infinite, 1e-10).unwrap();
    assert!((v.initial - 2.0).abs() < 1e-9);
    assert!((fsc_value(&m, &pi, Horizon::Finite(3), 1e-10).unwrap().initial - 1.75).abs() < 1e-12);
}

#[test]
fn zero_reward_zero_value() {
    let (m, pi) = one_state(0.9, 0.0);
    assert_eq!(fsc_value(&m, &pi, Horizon::Infinite, 1e-9).unwrap().initial, 0.0);
}

#[test]
fn undiscounted_infinite_horizon_rejected() {
    let (m, pi) = one_state(1.0, 1.0);
    assert!(matches!(fsc_value(&m, &pi, Horizon::Infinite, 1e-9), Err(Error::NonContractive(_))));
}

#[test]
fn undefined_reachable_edge_rejected() {
    let (m, mut pi) = one_state(0.9, 1.0);
    pi.next[0][0] = None;
    assert!(matches!(fsc_value(&m, &pi, Horizon::Infinite, 1e-9), Err(Error::UndefinedEdge { .. })));
}

#[test]
fn violations_are_named() {
    let (m, _) = builtin(BenchmarkId::Tiger);
    assert!(validate_model(&m).is_empty());
    let mut bad = m.clone();
    bad.set_t(0, 0, 0, 0.9);
    let v = validate_model(&bad);
    assert_eq!(v.len(), 1);
    assert!(matches!(v[0].kind, ViolationKind::TransitionRow { .. }));
    assert!(v[0].to_string().contains("s=tiger-left"), "{}", v[0]);
    let mut neg = m.clone();
    neg.initial = vec![1.1, -0.1];
    let v = validate_model(&neg);
    assert!(v.iter().any(|x| matches!(x.kind, ViolationKind::NegativeInitial { .. }) && x.location.contains("tiger-right")), "{v:?}");
}

#[test]
fn horizon_parses() {
    assert_eq!("inf".parse::<Horizon>().unwrap(), Horizon::Infinite);
    assert_eq!("12".parse::<Horizon>().unwrap(), Horizon::Finite(12));
    assert!("-1".parse::<Horizon>().is_err());
    assert!("0".parse::<Horizon>().is_err());
}

#[test]
fn rollouts_agree_with_exact_value() {
    for id in BenchmarkId::ALL {
        let (m, pi) = builtin(id);
        let h = 30;
        let v = fsc_value(&m, &pi, Horizon::Finite(h), 1e-9).unwrap().initial;
        let r = monte_carlo(&m, &pi, 20_000, h, 3, &[]);
        assert!((r.mean - v).abs() <= 4.0 * r.std_err + 1e-9, "{id}: {} vs {v} (se {})", r.mean, r.std_err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn updated_beliefs_are_valid(seed in any::<u64>(), a in 0usize..2, o in 0usize..3) {
        let mut rng = common::rng(seed);
        let m = common::random_pomdp(&mut rng, 4, 2, 3, 0.9, 0.3);
        let b = Belief(common::random_dist(&mut rng, 4, 0.3));
        match belief_update(&b, a, o, &m) {
            Ok(b2) => prop_assert!(b2.is_valid()),
            Err(e) => {
                let ok = matches!(e, Error::ImpossibleObservation { .. });
                prop_assert!(ok);
            }
        }
    }

    #[test]
    fn reward_shift_adds_constant(seed in any::<u64>(), c in 0.0f64..5.0) {
        let mut rng = common::rng(seed);
        let m = common::random_pomdp(&mut rng, 3, 2, 2, 0.8, 0.0);
        let pi = common::random_fsc(&mut rng, &m, 3, false);
        let v = fsc_value(&m, &pi, Horizon::Infinite, 1e-10).unwrap().initial;
        let mut shifted = m.clone();
        shifted.reward.iter_mut().for_each(|r| *r += c);
        let v2 = fsc_value(&shifted, &pi, Horizon::Infinite, 1e-10).unwrap().initial;
        prop_assert!((v2 - v - c / (1.0 - m.discount)).abs() < 1e-8);
    }
}
