mod common;

use obsrobust::chain::{build_tsimc, build_tsmc, IntervalChain, IntervalRow};
use obsrobust::io::benchmarks::{builtin, BenchmarkId};
use obsrobust::robust::vi_point;
use obsrobust::validate::{empirical_eta, monte_carlo, ns_sample, sample_extrema_ns, sample_extrema_sticky, sweep, validate, Event};
use obsrobust::{fsc_value, Error, Fsc, Horizon, Pomdp, RobustnessQuery, Threshold, Variant};

fn two_way_chain() -> IntervalChain {
    IntervalChain {
        rows: vec![
            IntervalRow::point(&[(1, 1.0)]),
            IntervalRow { succ: vec![2, 3], lower: vec![0.4, 0.4], upper: vec![0.6, 0.6], nominal: vec![0.5, 0.5] },
            IntervalRow::point(&[(2, 1.0)]),
            IntervalRow::point(&[(3, 1.0)]),
        ],
        reward: vec![0.0, 0.0, 1.0, 0.0],
        discount: 0.9,
        initial: 0,
        steps_per_decision: 1,
        labels: (0..4).map(|q| format!("q{q}")).collect(),
    }
}

#[test]
fn samples_are_vertices() {
    let c = two_way_chain();
    let mut seen = [false; 2];
    for i in 0..200 {
        let s = ns_sample(&c, 1, i).unwrap();
        let mut row = s.rows[1].clone();
        row.sort_by_key(|e| e.0);
        let p: Vec<f64> = row.iter().map(|e| e.1).collect();
        assert!(p == vec![0.4, 0.6] || p == vec![0.6, 0.4], "{p:?}");
        seen[(p[0] > 0.5) as usize] = true;
    }
    assert_eq!(seen, [true, true]);
}

#[test]
fn zero_radius_samples_are_nominal() {
    let (m, pi) = builtin(BenchmarkId::Tiger);
    let ts = build_tsmc(&m, &pi);
    let c = build_tsimc(&ts, 0.0, 0.0).unwrap();
    let v0 = vi_point(&ts.chain, Horizon::Finite(10), 1e-12).unwrap().values[0];
    for s in sample_extrema_ns(&c, 20, 3) {
        let v = vi_point(&s.unwrap(), Horizon::Finite(10), 1e-12).unwrap().values[0];
        assert!((v - v0).abs() < 1e-9);
    }
    for s in sample_extrema_sticky(&m, 0.0, 0.0, 20, 3) {
        assert_eq!(s.unwrap(), m);
    }
}

#[test]
fn sticky_samples_are_valid_models() {
    let (m, _) = builtin(BenchmarkId::ToyRover);
    for s in sample_extrema_sticky(&m, 0.3, 0.01, 50, 9) {
        let s = s.unwrap();
        assert!(obsrobust::pomdp::validate_model(&s).is_empty());
        for a in 0..m.n_actions() {
            for s2 in 0..m.n_states() {
                for o in 0..m.n_observations() {
                    let (z, w) = (m.z(a, s2, o), s.z(a, s2, o));
                    assert_eq!(z == 0.0, w == 0.0);
                    assert!((z - w).abs() <= 0.3 + 1e-12);
                }
            }
        }
    }
}

#[test]
fn sampling_is_reproducible() {
    let (m, pi) = builtin(BenchmarkId::ToyRover);
    let c = build_tsimc(&build_tsmc(&m, &pi), 0.2, 0.01).unwrap();
    let a: Vec<_> = sample_extrema_ns(&c, 30, 42).map(Result::unwrap).collect();
    let b: Vec<_> = sample_extrema_ns(&c, 30, 42).map(Result::unwrap).collect();
    assert_eq!(a, b);
    let r1 = monte_carlo(&m, &pi, 5000, 10, 42, &[]);
    let r2 = monte_carlo(&m, &pi, 5000, 10, 42, &[]);
    assert_eq!(r1, r2);
}

#[test]
fn eta_arithmetic() {
    assert!((empirical_eta(100.0, 80.0).unwrap() - 0.2).abs() < 1e-15);
    assert!((empirical_eta(-10.0, -12.0).unwrap() - 0.2).abs() < 1e-15);
    assert!(matches!(empirical_eta(0.0, 1.0), Err(Error::DivisionByZero)));
}

fn deterministic() -> (Pomdp, Fsc) {
    let mut m = Pomdp::zeros(vec!["a".into(), "b".into()], vec!["go".into()], vec!["o".into()], 0.9);
    m.set_t(0, 0, 1, 1.0);
    m.set_t(1, 0, 0, 1.0);
    m.set_z(0, 0, 0, 1.0);
    m.set_z(0, 1, 0, 1.0);
    m.set_r(0, 0, 1.0);
    m.set_r(1, 0, 2.0);
    m.initial = vec![1.0, 0.0];
    let pi = Fsc { nodes: vec!["n".into()], initial: 0, action: vec![0], next: vec![vec![Some(0)]] };
    (m, pi)
}

#[test]
fn deterministic_rollouts_have_no_spread() {
    let (m, pi) = deterministic();
    let r = monte_carlo(&m, &pi, 1000, 4, 0, &[Event::nodes("n", &m, &pi, &["n"])]);
    assert_eq!(r.std_err, 0.0);
    let v = fsc_value(&m, &pi, Horizon::Finite(4), 1e-12).unwrap().initial;
    assert!((r.mean - v).abs() < 1e-12);
    assert_eq!(r.frequency("n"), Some(1.0));
}

#[test]
fn rollouts_match_exact_value() {
    for id in [BenchmarkId::Tiger, BenchmarkId::ToyRover, BenchmarkId::PartQcPolicy1] {
        let (m, pi) = builtin(id);
        let v = fsc_value(&m, &pi, Horizon::Finite(8), 1e-12).unwrap().initial;
        let r = monte_carlo(&m, &pi, 20_000, 8, 1, &[]);
        assert!((r.mean - v).abs() <= 4.0 * r.std_err + 1e-12, "{id}: {} vs {v}", r.mean);
    }
}

#[test]
fn sweep_keeps_order_and_grows() {
    let (m, pi) = builtin(BenchmarkId::ToyRover);
    let mut q = RobustnessQuery::new(m.with_discount(1.0), pi, Variant::NonSticky, Threshold::Relative(0.0), Horizon::Finite(5));
    q.eps_mbs = 1e-4;
    q.eps_p = Some(0.01);
    let etas = [0.3, 0.05, 0.1, 0.0];
    let out = sweep(&q, &etas).unwrap();
    for (r, &e) in out.iter().zip(&etas) {
        assert_eq!(r.threshold, Threshold::Relative(e));
    }
    assert!(out[3].delta <= out[1].delta && out[1].delta <= out[2].delta && out[2].delta <= out[0].delta);
    assert!(matches!(sweep(&q, &[]), Err(Error::InvalidQuery(_))));
}

#[test]
fn validation_report_is_consistent() {
    let (m, pi) = builtin(BenchmarkId::ToyRover);
    let mut q = RobustnessQuery::new(m.with_discount(1.0), pi, Variant::NonSticky, Threshold::Relative(0.1), Horizon::Finite(5));
    q.eps_mbs = 1e-5;
    q.eps_p = Some(0.01);
    let (res, rep) = validate(&q, 300, 7).unwrap();
    assert_eq!(rep.delta_used, res.delta);
    assert!(rep.eta_witness <= 0.1 + 1e-9);
    let ns = rep.eta_sampled_ns.unwrap();
    assert!(ns <= rep.eta_witness + 1e-9, "{ns} > {}", rep.eta_witness);
    assert!(rep.eta_sampled_s <= ns + 1e-9);
    let (_, again) = validate(&q, 300, 7).unwrap();
    assert_eq!(again, rep);
}
