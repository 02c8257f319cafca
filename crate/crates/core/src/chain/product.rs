use serde::{Deserialize, Serialize};

use super::{merge_row, MarkovChain};
use crate::fsc::Fsc;
use crate::pomdp::Pomdp;

/// Product chain over (state, node) pairs plus the entry state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductMc {
    pub chain: MarkovChain,
    pub n_states: usize,
    pub n_nodes: usize,
}

impl ProductMc {
    #[inline]
    pub fn index(&self, s: usize, n: usize) -> usize {
        1 + s * self.n_nodes + n
    }
}

pub fn build_product_mc(m: &Pomdp, pi: &Fsc) -> ProductMc {
    let (ns, nn) = (m.n_states(), pi.n_nodes());
    let idx = |s: usize, n: usize| 1 + s * nn + n;
    let mut rows = Vec::with_capacity(ns * nn + 1);
    let mut reward = Vec::with_capacity(ns * nn + 1);
    let mut labels = Vec::with_capacity(ns * nn + 1);
    rows.push(
        m.initial
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (idx(s, pi.initial), p))
            .collect(),
    );
    reward.push(0.0);
    labels.push("init".to_string());
    for s in 0..ns {
        for n in 0..nn {
            let a = pi.action[n];
            let mut row = Vec::new();
            for (s2, &t) in m.transition_row(s, a).iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                for (n2, obs) in pi.edge_sets(n) {
                    let z: f64 = obs.iter().map(|&o| m.z(a, s2, o)).sum();
                    if z > 0.0 {
                        row.push((idx(s2, n2), t * z));
                    }
                }
            }
            rows.push(merge_row(row));
            reward.push(m.r(s, a));
            labels.push(format!("{}|{}", m.states[s], pi.nodes[n]));
        }
    }
    ProductMc {
        chain: MarkovChain { rows, reward, discount: m.discount, initial: 0, steps_per_decision: 1, labels },
        n_states: ns,
        n_nodes: nn,
    }
}
