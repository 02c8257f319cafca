//! Finite-state controllers.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::Pomdp;

/// Finite-state controller with a partial memory update `next[n][o]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fsc {
    pub nodes: Vec<String>,
    pub initial: usize,
    pub action: Vec<usize>,
    pub next: Vec<Vec<Option<usize>>>,
}

/// Non-fatal findings about a controller.
#[derive(Debug, Clone, PartialEq)]
pub enum FscWarning {
    UnreachableNode(String),
    OffSupportEdge { node: String, observation: String },
}

impl std::fmt::Display for FscWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FscWarning::UnreachableNode(n) => write!(f, "node `{n}` is unreachable from the initial node"),
            FscWarning::OffSupportEdge { node, observation } => {
                write!(f, "edge `{node}` on `{observation}` can never fire")
            }
        }
    }
}

impl Fsc {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn successor(&self, n: usize, o: usize) -> Option<usize> {
        self.next[n][o]
    }

    /// Groups the observations of node `n` by successor node, ascending in both.
    pub fn edge_sets(&self, n: usize) -> Vec<(usize, Vec<usize>)> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (o, nn) in self.next[n].iter().enumerate() {
            if let Some(nn) = nn {
                map.entry(*nn).or_default().push(o);
            }
        }
        map.into_iter().collect()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|x| x == name)
    }

    /// Checks that the controller indexes into `m`.
    pub fn check_indices(&self, m: &Pomdp) -> Result<()> {
        let nn = self.n_nodes();
        if nn == 0 || self.initial >= nn {
            return Err(Error::IndexMismatch("controller has no valid initial node".into()));
        }
        if self.action.len() != nn || self.next.len() != nn {
            return Err(Error::IndexMismatch("controller tables disagree on node count".into()));
        }
        for (n, &a) in self.action.iter().enumerate() {
            if a >= m.n_actions() {
                return Err(Error::IndexMismatch(format!("node {} uses action {a}", self.nodes[n])));
            }
        }
        for (n, row) in self.next.iter().enumerate() {
            if row.len() != m.n_observations() {
                return Err(Error::IndexMismatch(format!(
                    "node {} has {} observation slots, model has {}",
                    self.nodes[n],
                    row.len(),
                    m.n_observations()
                )));
            }
            if let Some(bad) = row.iter().flatten().find(|&&x| x >= nn) {
                return Err(Error::IndexMismatch(format!("node {} points to node {bad}", self.nodes[n])));
            }
        }
        Ok(())
    }

    /// Nodes reachable from the initial node along memory-update edges.
    pub fn reachable_nodes(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n_nodes()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(n) = queue.pop_front() {
            for nn in self.next[n].iter().flatten() {
                if !seen[*nn] {
                    seen[*nn] = true;
                    queue.push_back(*nn);
                }
            }
        }
        seen
    }

    /// Load-time diagnostics: unreachable nodes and edges on observations
    /// that can never occur after the node's action.
    pub fn warnings(&self, m: &Pomdp) -> Vec<FscWarning> {
        let mut out = Vec::new();
        for (n, reach) in self.reachable_nodes().into_iter().enumerate() {
            if !reach {
                out.push(FscWarning::UnreachableNode(self.nodes[n].clone()));
            }
        }
        for n in 0..self.n_nodes() {
            let a = self.action[n];
            for (o, nn) in self.next[n].iter().enumerate() {
                if nn.is_some() && (0..m.n_states()).all(|s2| m.z(a, s2, o) == 0.0) {
                    out.push(FscWarning::OffSupportEdge {
                        node: self.nodes[n].clone(),
                        observation: m.observations[o].clone(),
                    });
                }
            }
        }
        out
    }
}

/// Reachability over (state, node) pairs from the initial belief, indexed `s * |N| + n`.
/// Fails if a reachable pair needs an undefined memory-update edge.
pub fn reachable_pairs(m: &Pomdp, pi: &Fsc) -> Result<Vec<bool>> {
    pi.check_indices(m)?;
    let (ns, nn) = (m.n_states(), pi.n_nodes());
    let mut seen = vec![false; ns * nn];
    let mut queue = VecDeque::new();
    for (s, &p) in m.initial.iter().enumerate() {
        if p > 0.0 {
            seen[s * nn + pi.initial] = true;
            queue.push_back((s, pi.initial));
        }
    }
    while let Some((s, n)) = queue.pop_front() {
        let a = pi.action[n];
        for (s2, &t) in m.transition_row(s, a).iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            for (o, &z) in m.observation_row(a, s2).iter().enumerate() {
                if z == 0.0 {
                    continue;
                }
                let n2 = pi.successor(n, o).ok_or_else(|| Error::UndefinedEdge {
                    node: pi.nodes[n].clone(),
                    observation: m.observations[o].clone(),
                })?;
                let idx = s2 * nn + n2;
                if !seen[idx] {
                    seen[idx] = true;
                    queue.push_back((s2, n2));
                }
            }
        }
    }
    Ok(seen)
}
