//! Markov-chain representations induced by running a controller on a POMDP.
//!
//! Every chain has a distinguished entry state (index 0) whose row is the
//! initial distribution. Leaving the entry state consumes no decision step,
//! collects no reward and is not discounted, so the entry value is the
//! expectation of the first real state's value under the initial belief.

mod interval;
mod parametric;
mod product;
mod two_step;

pub use interval::{build_tsimc, repair_unreachable, IntervalChain, IntervalRow, TwoStepIntervalMc};
pub use parametric::{build_pmc, instantiate, region_for, ParamBlock, ParamInfo, ParamTable, ParametricMc, Poly, Region, StateBranch};
pub(crate) use parametric::region_for_table;
pub use product::{build_product_mc, ProductMc};
pub use two_step::{build_tsmc, TwoStepMc};

use serde::{Deserialize, Serialize};

use crate::eval::Horizon;

/// Sparse point Markov chain with state rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovChain {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub reward: Vec<f64>,
    pub discount: f64,
    pub initial: usize,
    /// Chain transitions per decision step of the source model.
    pub steps_per_decision: usize,
    pub labels: Vec<String>,
}

impl MarkovChain {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    /// Number of chain sweeps for a horizon measured in decision steps.
    pub fn sweeps(&self, h: Horizon) -> Option<usize> {
        match h {
            Horizon::Finite(d) => Some(d * self.steps_per_decision),
            Horizon::Infinite => None,
        }
    }

    /// States reachable from the entry state.
    pub fn reachable(&self) -> Vec<bool> {
        reachable_from(self.initial, self.n_states(), |q| self.rows[q].iter().filter(|e| e.1 > 0.0).map(|e| e.0).collect())
    }
}

pub(crate) fn reachable_from(start: usize, n: usize, succ: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(q) = stack.pop() {
        for j in succ(q) {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Merges duplicate successor entries, keeping first-occurrence order.
pub(crate) fn merge_row(entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (j, p) in entries {
        match out.iter_mut().find(|e| e.0 == j) {
            Some(e) => e.1 += p,
            None => out.push((j, p)),
        }
    }
    out
}
