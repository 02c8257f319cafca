//! Rollouts on the POMDP and on chains driven by a worst-case witness.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::rng_for;
use crate::chain::IntervalChain;
use crate::fsc::Fsc;
use crate::pomdp::Pomdp;
use crate::robust::WorstCaseWitness;

/// Rollouts per independently seeded block.
const BLOCK: usize = 256;

/// A set of states whose visit frequency is reported. For POMDP rollouts the
/// mask is indexed `s * n_nodes + n`; for chain rollouts by chain state.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub name: String,
    pub mask: Vec<bool>,
}

impl Event {
    /// POMDP event: the controller is in any node named in `nodes`.
    pub fn nodes(name: &str, m: &Pomdp, pi: &Fsc, nodes: &[&str]) -> Self {
        let nn = pi.n_nodes();
        let mut mask = vec![false; m.n_states() * nn];
        for s in 0..m.n_states() {
            for (n, node) in pi.nodes.iter().enumerate() {
                mask[s * nn + n] = nodes.contains(&node.as_str());
            }
        }
        Event { name: name.to_string(), mask }
    }

    /// Chain event: labels accepted by `pred`.
    pub fn labels(name: &str, c: &IntervalChain, pred: impl Fn(&str) -> bool) -> Self {
        Event { name: name.to_string(), mask: c.labels.iter().map(|l| pred(l)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub mean: f64,
    pub std_err: f64,
    pub rollouts: usize,
    pub seed: u64,
    /// Fraction of rollouts that hit each event at least once, in input order.
    pub frequencies: Vec<(String, f64)>,
}

impl McReport {
    pub fn frequency(&self, name: &str) -> Option<f64> {
        self.frequencies.iter().find(|(n, _)| n == name).map(|x| x.1)
    }
}

fn sample<R: Rng>(rng: &mut R, probs: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (i, p) in probs {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(i);
        if u < acc {
            return Some(i);
        }
    }
    // Rounding slack in a full row goes to its last entry.
    if acc > 1.0 - 1e-9 {
        last
    } else {
        None
    }
}

#[derive(Default)]
struct Tally {
    count: f64,
    mean: f64,
    m2: f64,
    hits: Vec<usize>,
}

impl Tally {
    fn push(&mut self, g: f64) {
        self.count += 1.0;
        let d = g - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (g - self.mean);
    }

    fn merge(&mut self, o: Tally) {
        let n = self.count + o.count;
        if n == 0.0 {
            return;
        }
        let d = o.mean - self.mean;
        self.mean += d * o.count / n;
        self.m2 += o.m2 + d * d * self.count * o.count / n;
        self.count = n;
        for (c, h) in self.hits.iter_mut().zip(o.hits) {
            *c += h;
        }
    }
}

fn run_blocks<F>(n: usize, seed: u64, n_events: usize, rollout: F) -> Tally
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut Vec<bool>) -> f64 + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let tallies: Vec<Tally> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(seed, b as u64);
            let mut t = Tally { hits: vec![0; n_events], ..Tally::default() };
            let mut hit = vec![false; n_events];
            for _ in (b * BLOCK)..((b + 1) * BLOCK).min(n) {
                hit.iter_mut().for_each(|h| *h = false);
                let g = rollout(&mut rng, &mut hit);
                t.push(g);
                for (c, &h) in t.hits.iter_mut().zip(&hit) {
                    *c += h as usize;
                }
            }
            t
        })
        .collect();
    let mut total = Tally { hits: vec![0; n_events], ..Tally::default() };
    for t in tallies {
        total.merge(t);
    }
    total
}

fn report(n: usize, seed: u64, events: &[Event], t: Tally) -> McReport {
    let nf = n.max(1) as f64;
    let var = if n > 1 { (t.m2 / (nf - 1.0)).max(0.0) } else { 0.0 };
    McReport {
        mean: t.mean,
        std_err: (var / nf).sqrt(),
        rollouts: n,
        seed,
        frequencies: events.iter().zip(t.hits).map(|(e, h)| (e.name.clone(), h as f64 / nf)).collect(),
    }
}

/// Simulates the controller on the model for `decisions` steps.
/// A missing controller edge ends the rollout.
pub fn monte_carlo(m: &Pomdp, pi: &Fsc, n: usize, decisions: usize, seed: u64, events: &[Event]) -> McReport {
    let nn = pi.n_nodes();
    let totals = run_blocks(n, seed, events.len(), |rng, hit| {
        let Some(mut s) = sample(rng, m.initial.iter().copied().enumerate()) else {
            return 0.0;
        };
        let mut node = pi.initial;
        let mut g = 0.0;
        let mut disc = 1.0;
        for _ in 0..decisions {
            for (h, e) in hit.iter_mut().zip(events) {
                *h |= e.mask[s * nn + node];
            }
            let a = pi.action[node];
            g += disc * m.r(s, a);
            disc *= m.discount;
            let Some(s2) = sample(rng, m.transition_row(s, a).iter().copied().enumerate()) else {
                break;
            };
            let Some(o) = sample(rng, m.observation_row(a, s2).iter().copied().enumerate()) else {
                break;
            };
            match pi.successor(node, o) {
                Some(n2) => {
                    s = s2;
                    node = n2;
                }
                None => break,
            }
        }
        g
    });
    report(n, seed, events, totals)
}

/// Simulates `c` with interval rows resolved by the witness kernels.
pub fn monte_carlo_chain(c: &IntervalChain, w: &WorstCaseWitness, n: usize, decisions: usize, seed: u64, events: &[Event]) -> McReport {
    let steps = decisions * c.steps_per_decision;
    let totals = run_blocks(n, seed, events.len(), |rng, hit| {
        let entry = &c.rows[c.initial];
        let Some(mut q) = sample(rng, entry.succ.iter().copied().zip(entry.nominal.iter().copied())) else {
            return 0.0;
        };
        let mut g = 0.0;
        let mut disc = 1.0;
        for t in 0..steps {
            for (h, e) in hit.iter_mut().zip(events) {
                *h |= e.mask[q];
            }
            g += disc * c.reward[q];
            disc *= c.discount;
            let row = &c.rows[q];
            let probs = match w.kernel_at(t) {
                Some(k) if !row.is_point() => &k[q],
                _ => &row.nominal,
            };
            match sample(rng, row.succ.iter().copied().zip(probs.iter().copied())) {
                Some(q2) => q = q2,
                None => break,
            }
        }
        g
    });
    report(n, seed, events, totals)
}
