use serde::{Deserialize, Serialize};

use super::{reachable_from, MarkovChain, TwoStepMc};
use crate::error::{Error, Result};
use crate::eval::Horizon;
use crate::pomdp::PROB_TOL;

/// One row of an interval chain; vectors are aligned with `succ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub succ: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nominal: Vec<f64>,
}

impl IntervalRow {
    pub fn point(entries: &[(usize, f64)]) -> Self {
        let succ = entries.iter().map(|e| e.0).collect();
        let p: Vec<f64> = entries.iter().map(|e| e.1).collect();
        IntervalRow { succ, lower: p.clone(), upper: p.clone(), nominal: p }
    }

    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }

    pub fn nominal_mass(&self) -> f64 {
        self.nominal.iter().sum()
    }

    pub fn is_feasible(&self) -> bool {
        let lo: f64 = self.lower.iter().sum();
        let hi: f64 = self.upper.iter().sum();
        lo <= 1.0 + PROB_TOL && hi >= 1.0 - PROB_TOL && self.lower.iter().zip(&self.upper).all(|(l, u)| l <= u)
    }
}

/// Interval Markov chain with the same entry-state conventions as [`MarkovChain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalChain {
    pub rows: Vec<IntervalRow>,
    pub reward: Vec<f64>,
    pub discount: f64,
    pub initial: usize,
    pub steps_per_decision: usize,
    pub labels: Vec<String>,
}

impl IntervalChain {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn sweeps(&self, h: Horizon) -> Option<usize> {
        match h {
            Horizon::Finite(d) => Some(d * self.steps_per_decision),
            Horizon::Infinite => None,
        }
    }

    pub fn from_point(c: &MarkovChain) -> Self {
        IntervalChain {
            rows: c.rows.iter().map(|r| IntervalRow::point(r)).collect(),
            reward: c.reward.clone(),
            discount: c.discount,
            initial: c.initial,
            steps_per_decision: c.steps_per_decision,
            labels: c.labels.clone(),
        }
    }

    /// The point chain obtained by fixing each row to `kernel[q]` (aligned with `succ`).
    pub fn with_kernel(&self, kernel: &[Vec<f64>]) -> MarkovChain {
        MarkovChain {
            rows: self
                .rows
                .iter()
                .zip(kernel)
                .map(|(r, k)| r.succ.iter().copied().zip(k.iter().copied()).collect())
                .collect(),
            reward: self.reward.clone(),
            discount: self.discount,
            initial: self.initial,
            steps_per_decision: self.steps_per_decision,
            labels: self.labels.clone(),
        }
    }

    pub fn nominal(&self) -> MarkovChain {
        let k: Vec<Vec<f64>> = self.rows.iter().map(|r| r.nominal.clone()).collect();
        self.with_kernel(&k)
    }

    /// Reachability from the entry state along positive nominal entries.
    pub fn reachable(&self) -> Vec<bool> {
        reachable_from(self.initial, self.n_states(), |q| {
            let r = &self.rows[q];
            r.succ.iter().zip(&r.nominal).filter(|(_, &p)| p > 0.0).map(|(&j, _)| j).collect()
        })
    }

    /// Number of rows with a non-degenerate interval.
    pub fn interval_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_point()).count()
    }
}

/// Two-step chain whose observation rows carry deviation intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepIntervalMc {
    pub chain: IntervalChain,
    pub n_states: usize,
    pub n_nodes: usize,
    pub delta: f64,
    pub eps_p: f64,
}

pub fn build_tsimc(c: &TwoStepMc, delta: f64, eps_p: f64) -> Result<TwoStepIntervalMc> {
    if !(0.0..=1.0).contains(&delta) || !(0.0..1.0).contains(&eps_p) {
        return Err(Error::EmptyInterval(format!("delta {delta} / eps_p {eps_p} out of range")));
    }
    let mut rows = Vec::with_capacity(c.chain.n_states());
    for (q, row) in c.chain.rows.iter().enumerate() {
        let mut ir = IntervalRow::point(row);
        if c.is_observation_row(q) {
            ir.lower = ir.nominal.iter().map(|&z| (z - delta).max(eps_p)).collect();
            ir.upper = ir.nominal.iter().map(|&z| (z + delta).min(1.0)).collect();
            if let Some(i) = ir.lower.iter().zip(&ir.upper).position(|(l, u)| l > u) {
                return Err(Error::EmptyInterval(format!(
                    "row {} entry {}: lower {} exceeds upper {}",
                    c.chain.labels[q], i, ir.lower[i], ir.upper[i]
                )));
            }
            let lo: f64 = ir.lower.iter().sum();
            if lo > 1.0 + PROB_TOL {
                return Err(Error::EmptyInterval(format!("row {}: lower bounds sum to {lo}", c.chain.labels[q])));
            }
        }
        rows.push(ir);
    }
    Ok(TwoStepIntervalMc {
        chain: IntervalChain {
            rows,
            reward: c.chain.reward.clone(),
            discount: c.chain.discount,
            initial: c.chain.initial,
            steps_per_decision: c.chain.steps_per_decision,
            labels: c.chain.labels.clone(),
        },
        n_states: c.n_states,
        n_nodes: c.n_nodes,
        delta,
        eps_p,
    })
}

/// Makes every unreachable row a valid interval distribution: dead ends become
/// self-loops and partial rows are rescaled. Reachable rows are left as is.
pub fn repair_unreachable(mut c: TwoStepIntervalMc) -> TwoStepIntervalMc {
    let reach = c.chain.reachable();
    for (q, row) in c.chain.rows.iter_mut().enumerate() {
        if reach[q] {
            continue;
        }
        let g = row.nominal_mass();
        if g <= 0.0 {
            *row = IntervalRow { succ: vec![q], lower: vec![1.0], upper: vec![1.0], nominal: vec![1.0] };
        } else if (g - 1.0).abs() > PROB_TOL {
            for v in row.nominal.iter_mut().chain(row.lower.iter_mut()) {
                *v /= g;
            }
            for v in row.upper.iter_mut() {
                *v = (*v / g).min(1.0);
            }
        }
    }
    c
}
