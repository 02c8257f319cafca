#![allow(dead_code)]

use obsrobust::chain::{IntervalChain, IntervalRow};
use obsrobust::{Fsc, Pomdp};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random distribution over `n` entries; each entry is zero with probability
/// `zero` but at least one stays positive.
pub fn random_dist(rng: &mut ChaCha8Rng, n: usize, zero: f64) -> Vec<f64> {
    let keep = rng.gen_range(0..n);
    let mut w: Vec<f64> = (0..n)
        .map(|i| if i != keep && rng.gen::<f64>() < zero { 0.0 } else { 0.05 + rng.gen::<f64>() })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Random model. Observation rows have zeros with probability `z_zero`.
pub fn random_pomdp(rng: &mut ChaCha8Rng, ns: usize, na: usize, no: usize, discount: f64, z_zero: f64) -> Pomdp {
    let mut m = Pomdp::zeros(names("s", ns), names("a", na), names("o", no), discount);
    for s in 0..ns {
        for a in 0..na {
            for (s2, p) in random_dist(rng, ns, 0.5).into_iter().enumerate() {
                m.set_t(s, a, s2, p);
            }
            m.set_r(s, a, rng.gen_range(-1.0..1.0));
        }
    }
    for a in 0..na {
        for s2 in 0..ns {
            for (o, p) in random_dist(rng, no, z_zero).into_iter().enumerate() {
                m.set_z(a, s2, o, p);
            }
        }
    }
    m.initial = random_dist(rng, ns, 0.3);
    m.checked().expect("random model is valid")
}

/// Random complete controller. With `injective` every node sends distinct
/// observations to distinct successors (needs `nn >= |O|`).
pub fn random_fsc(rng: &mut ChaCha8Rng, m: &Pomdp, nn: usize, injective: bool) -> Fsc {
    let no = m.n_observations();
    let next = (0..nn)
        .map(|_| {
            if injective {
                let mut ids: Vec<usize> = (0..nn).collect();
                ids.shuffle(rng);
                ids[..no].iter().map(|&n| Some(n)).collect()
            } else {
                (0..no).map(|_| Some(rng.gen_range(0..nn))).collect()
            }
        })
        .collect();
    Fsc {
        nodes: names("n", nn),
        initial: 0,
        action: (0..nn).map(|_| rng.gen_range(0..m.n_actions())).collect(),
        next,
    }
}

/// Random interval chain with at most `max_interval` interval rows.
pub fn random_interval_chain(rng: &mut ChaCha8Rng, n: usize, max_interval: usize) -> IntervalChain {
    let mut rows = Vec::with_capacity(n);
    let entry: Vec<(usize, f64)> = {
        let k = rng.gen_range(1..=2.min(n - 1));
        let mut ids: Vec<usize> = (1..n).collect();
        ids.shuffle(rng);
        let d = random_dist(rng, k, 0.0);
        ids[..k].iter().copied().zip(d).collect()
    };
    rows.push(IntervalRow::point(&entry));
    let mut intervals = 0;
    for _ in 1..n {
        let k = rng.gen_range(1..=3.min(n - 1));
        let mut ids: Vec<usize> = (1..n).collect();
        ids.shuffle(rng);
        let succ: Vec<usize> = ids[..k].to_vec();
        let nominal = random_dist(rng, k, 0.0);
        if k >= 2 && intervals < max_interval && rng.gen::<f64>() < 0.7 {
            intervals += 1;
            let d: f64 = rng.gen_range(0.0..0.5);
            let lower = nominal.iter().map(|p| (p - d).max(0.0)).collect();
            let upper = nominal.iter().map(|p| (p + d).min(1.0)).collect();
            rows.push(IntervalRow { succ, lower, upper, nominal });
        } else {
            let entries: Vec<(usize, f64)> = succ.into_iter().zip(nominal).collect();
            rows.push(IntervalRow::point(&entries));
        }
    }
    IntervalChain {
        rows,
        reward: (0..n).map(|q| if q == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect(),
        discount: rng.gen_range(0.5..1.0),
        initial: 0,
        steps_per_decision: 1,
        labels: (0..n).map(|q| format!("q{q}")).collect(),
    }
}
