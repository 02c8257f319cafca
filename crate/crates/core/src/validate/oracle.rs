//! Exhaustive worst case over interval-chain vertices for tiny instances.

use crate::chain::IntervalChain;
use crate::error::{Error, Result};
use crate::pomdp::PROB_TOL;

/// Largest product of per-row vertex counts that is enumerated.
pub const MAX_ASSIGNMENTS: f64 = 1e6;

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// All vertices of `{l ≤ p ≤ u, Σp = 1}`, each obtained by filling
/// coordinates to their upper bounds in some order.
pub fn vertices(lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let base: f64 = lower.iter().sum();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for order in permutations(lower.len()) {
        let mut p = lower.to_vec();
        let mut left = 1.0 - base;
        for i in order {
            let add = (upper[i] - lower[i]).min(left).max(0.0);
            p[i] += add;
            left -= add;
        }
        if !out.iter().any(|v| v.iter().zip(&p).all(|(a, b)| (a - b).abs() <= 1e-15)) {
            out.push(p);
        }
    }
    out
}

/// Exact finite-horizon minimum over every per-step choice of row vertices.
///
/// Rows are independent, so the joint minimum decomposes into a state-wise
/// minimum over each row's vertex list at every backward step.
pub fn brute_force_min(c: &IntervalChain, decisions: usize) -> Result<f64> {
    let mut per_row: Vec<Vec<Vec<f64>>> = Vec::with_capacity(c.n_states());
    let mut product = 1.0f64;
    for row in &c.rows {
        if row.is_point() {
            per_row.push(vec![row.nominal.clone()]);
            continue;
        }
        if row.succ.len() > 8 {
            return Err(Error::TooLarge(format!("row with {} successors", row.succ.len())));
        }
        let lo: f64 = row.lower.iter().sum();
        let hi: f64 = row.upper.iter().sum();
        if lo > 1.0 + PROB_TOL || hi < 1.0 - PROB_TOL {
            return Err(Error::InfeasibleRow { row: per_row.len(), lower_sum: lo, upper_sum: hi });
        }
        let vs = vertices(&row.lower, &row.upper);
        product *= vs.len() as f64;
        if product > MAX_ASSIGNMENTS {
            return Err(Error::TooLarge(format!("more than {MAX_ASSIGNMENTS} vertex assignments per step")));
        }
        per_row.push(vs);
    }
    let steps = decisions * c.steps_per_decision;
    let n = c.n_states();
    let mut v = vec![0.0; n];
    let row_min = |q: usize, v: &[f64]| -> f64 {
        per_row[q]
            .iter()
            .map(|p| p.iter().zip(&c.rows[q].succ).map(|(x, &s)| x * v[s]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    };
    for _ in 0..steps {
        let next: Vec<f64> = (0..n)
            .map(|q| if q == c.initial { 0.0 } else { c.reward[q] + c.discount * row_min(q, &v) })
            .collect();
        v = next;
    }
    Ok(row_min(c.initial, &v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_successor_vertices() {
        let vs = vertices(&[0.4, 0.4], &[0.6, 0.6]);
        assert_eq!(vs.len(), 2);
        assert!(vs.iter().any(|v| (v[0] - 0.6).abs() < 1e-12 && (v[1] - 0.4).abs() < 1e-12));
        assert!(vs.iter().any(|v| (v[0] - 0.4).abs() < 1e-12 && (v[1] - 0.6).abs() < 1e-12));
    }

    #[test]
    fn simplex_vertices_are_unit_vectors() {
        let vs = vertices(&[0.0; 3], &[1.0; 3]);
        assert_eq!(vs.len(), 3);
    }
}
