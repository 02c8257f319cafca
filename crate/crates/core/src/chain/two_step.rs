use serde::{Deserialize, Serialize};

use super::MarkovChain;
use crate::fsc::Fsc;
use crate::pomdp::Pomdp;

/// Two-step chain alternating a state move (phase 0) and an observation/memory
/// move (phase 1). Discount per chain step is the square root of the model's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepMc {
    pub chain: MarkovChain,
    pub n_states: usize,
    pub n_nodes: usize,
}

impl TwoStepMc {
    #[inline]
    pub fn index(&self, s: usize, n: usize, phase: usize) -> usize {
        1 + (s * self.n_nodes + n) * 2 + phase
    }

    /// Inverse of [`TwoStepMc::index`] for non-entry states.
    pub fn decode(&self, q: usize) -> Option<(usize, usize, usize)> {
        if q == 0 || q >= self.chain.n_states() {
            return None;
        }
        let k = q - 1;
        let phase = k % 2;
        let sn = k / 2;
        Some((sn / self.n_nodes, sn % self.n_nodes, phase))
    }

    pub fn is_observation_row(&self, q: usize) -> bool {
        matches!(self.decode(q), Some((_, _, 1)))
    }
}

pub fn build_tsmc(m: &Pomdp, pi: &Fsc) -> TwoStepMc {
    let (ns, nn) = (m.n_states(), pi.n_nodes());
    let idx = |s: usize, n: usize, i: usize| 1 + (s * nn + n) * 2 + i;
    let total = ns * nn * 2 + 1;
    let mut rows = Vec::with_capacity(total);
    let mut reward = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    rows.push(
        m.initial
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (idx(s, pi.initial, 0), p))
            .collect(),
    );
    reward.push(0.0);
    labels.push("init".to_string());
    for s in 0..ns {
        for n in 0..nn {
            let a = pi.action[n];
            let moves: Vec<(usize, f64)> = m
                .transition_row(s, a)
                .iter()
                .enumerate()
                .filter(|(_, &t)| t > 0.0)
                .map(|(s2, &t)| (idx(s2, n, 1), t))
                .collect();
            rows.push(moves);
            reward.push(m.r(s, a));
            labels.push(format!("{}|{}|0", m.states[s], pi.nodes[n]));

            // Phase 1 at (s, n): s is the freshly reached state, a the action just taken.
            let obs: Vec<(usize, f64)> = pi
                .edge_sets(n)
                .into_iter()
                .filter_map(|(n2, set)| {
                    let z: f64 = set.iter().map(|&o| m.z(a, s, o)).sum();
                    (z > 0.0).then_some((idx(s, n2, 0), z))
                })
                .collect();
            rows.push(obs);
            reward.push(0.0);
            labels.push(format!("{}|{}|1", m.states[s], pi.nodes[n]));
        }
    }
    TwoStepMc {
        chain: MarkovChain { rows, reward, discount: m.discount.sqrt(), initial: 0, steps_per_decision: 2, labels },
        n_states: ns,
        n_nodes: nn,
    }
}
