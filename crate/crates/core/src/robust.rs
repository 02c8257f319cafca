//! Value iteration on point chains and interval policy evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{IntervalChain, MarkovChain};
use crate::error::{Error, Result};
use crate::eval::{stopping_threshold, Horizon};
use crate::pomdp::PROB_TOL;

/// Chains at least this large are swept in parallel.
const PAR_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HorizonTag {
    Steps(usize),
    Converged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub values: Vec<f64>,
    pub horizon_tag: HorizonTag,
    pub residual: f64,
}

impl ValueTable {
    pub fn at(&self, q: usize) -> f64 {
        self.values[q]
    }
}

/// Minimizing kernels found by interval policy evaluation.
///
/// `kernels[t][q]` is the distribution (aligned with the row's successors)
/// used by state `q` on forward chain step `t`. A stationary witness holds a
/// single kernel used at every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseWitness {
    pub kernels: Vec<Vec<Vec<f64>>>,
    pub stationary: bool,
    pub value_at_initial: f64,
}

impl WorstCaseWitness {
    /// Kernel in force at forward chain step `t`.
    pub fn kernel_at(&self, t: usize) -> Option<&Vec<Vec<f64>>> {
        if self.stationary {
            self.kernels.first()
        } else {
            self.kernels.get(t)
        }
    }
}

/// Shared sweep driver. `sweep(next, prev, j)` fills every non-entry state
/// of `next` from `prev`; `j` counts sweeps from 1.
fn drive<F>(n: usize, initial: usize, sweeps: Option<usize>, discount: f64, eps: f64, mut sweep: F) -> Result<(Vec<f64>, HorizonTag, f64)>
where
    F: FnMut(&mut [f64], &[f64], usize),
{
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    match sweeps {
        Some(d) => {
            let mut residual = 0.0;
            for j in 1..=d {
                sweep(&mut next, &v, j);
                next[initial] = 0.0;
                residual = sup_diff(&next, &v);
                std::mem::swap(&mut v, &mut next);
            }
            Ok((v, HorizonTag::Steps(d), residual))
        }
        None => {
            if discount >= 1.0 {
                return Err(Error::NonContractive(discount));
            }
            let thr = stopping_threshold(eps, discount);
            let mut j = 0;
            loop {
                j += 1;
                sweep(&mut next, &v, j);
                next[initial] = 0.0;
                let residual = sup_diff(&next, &v);
                std::mem::swap(&mut v, &mut next);
                if residual <= thr || !residual.is_finite() {
                    return Ok((v, HorizonTag::Converged, residual));
                }
            }
        }
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn fill<F>(next: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync,
{
    if next.len() >= PAR_THRESHOLD {
        next.par_iter_mut().enumerate().for_each(|(q, x)| *x = f(q));
    } else {
        next.iter_mut().enumerate().for_each(|(q, x)| *x = f(q));
    }
}

/// Backward induction (finite) or eps-accurate fixed point (infinite) on a point chain.
pub fn vi_point(c: &MarkovChain, h: Horizon, eps: f64) -> Result<ValueTable> {
    let gamma = c.discount;
    let (mut v, tag, residual) = drive(c.n_states(), c.initial, c.sweeps(h), gamma, eps, |next, prev, _| {
        fill(next, |q| c.reward[q] + gamma * c.rows[q].iter().map(|&(j, p)| p * prev[j]).sum::<f64>());
    })?;
    v[c.initial] = c.rows[c.initial].iter().map(|&(j, p)| p * v[j]).sum();
    Ok(ValueTable { values: v, horizon_tag: tag, residual })
}

/// Evaluates an interval chain under a fixed (possibly time-varying) kernel schedule.
pub fn vi_schedule(c: &IntervalChain, w: &WorstCaseWitness, h: Horizon, eps: f64) -> Result<f64> {
    if w.stationary {
        let k = w.kernels.first().ok_or_else(|| Error::IndexMismatch("empty witness".into()))?;
        let vt = vi_point(&c.with_kernel(k), h, eps)?;
        return Ok(vt.values[c.initial]);
    }
    let d = c.sweeps(h).ok_or_else(|| Error::IndexMismatch("non-stationary witness needs a finite horizon".into()))?;
    if w.kernels.len() != d {
        return Err(Error::IndexMismatch(format!("witness has {} kernels for {} steps", w.kernels.len(), d)));
    }
    let gamma = c.discount;
    let (v, _, _) = drive(c.n_states(), c.initial, Some(d), gamma, eps, |next, prev, j| {
        let k = &w.kernels[d - j];
        fill(next, |q| {
            let row = &c.rows[q];
            c.reward[q] + gamma * row.succ.iter().zip(&k[q]).map(|(&s, &p)| p * prev[s]).sum::<f64>()
        });
    })?;
    let k0 = &w.kernels[0][c.initial];
    Ok(c.rows[c.initial].succ.iter().zip(k0).map(|(&s, &p)| p * v[s]).sum())
}

/// Distribution within `[lower, upper]` minimizing the expectation of `values`.
pub fn robust_backup_min(lower: &[f64], upper: &[f64], values: &[f64]) -> Result<(Vec<f64>, f64)> {
    let lo: f64 = lower.iter().sum();
    let hi: f64 = upper.iter().sum();
    if lo > 1.0 + PROB_TOL || hi < 1.0 - PROB_TOL || lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Err(Error::InfeasibleRow { row: 0, lower_sum: lo, upper_sum: hi });
    }
    let mut out = vec![0.0; lower.len()];
    let mut order: Vec<usize> = (0..lower.len()).collect();
    let v = backup_into(lower, upper, values, &mut order, &mut out);
    Ok((out, v))
}

/// Greedy order-statistic assignment. `values` are aligned with the bounds.
#[inline]
fn backup_into(lower: &[f64], upper: &[f64], values: &[f64], order: &mut [usize], out: &mut [f64]) -> f64 {
    let k = lower.len();
    if k == 1 {
        out[0] = 1.0f64.clamp(lower[0], upper[0]);
        return out[0] * values[0];
    }
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    out.copy_from_slice(lower);
    let mut rem = 1.0 - lower.iter().sum::<f64>();
    for &i in order.iter() {
        if rem <= 0.0 {
            break;
        }
        let add = (upper[i] - lower[i]).min(rem);
        out[i] += add;
        rem -= add;
    }
    out.iter().zip(values).map(|(p, v)| p * v).sum()
}

/// Worst-case value over an interval chain with per-step (finite) or
/// stationary (infinite) minimizing kernels.
///
/// With `record == false` and a finite horizon only the values are kept.
pub fn ipe_min(c: &IntervalChain, h: Horizon, eps: f64, record: bool) -> Result<(ValueTable, WorstCaseWitness)> {
    for (q, row) in c.rows.iter().enumerate() {
        if !row.is_point() && !row.is_feasible() {
            return Err(Error::InfeasibleRow {
                row: q,
                lower_sum: row.lower.iter().sum(),
                upper_sum: row.upper.iter().sum(),
            });
        }
    }
    let gamma = c.discount;
    let sweeps = c.sweeps(h);
    let n = c.n_states();
    let mut kernel: Vec<Vec<f64>> = c.rows.iter().map(|r| r.nominal.clone()).collect();
    let mut kernels: Vec<Vec<Vec<f64>>> = Vec::new();
    let finite_record = record && sweeps.is_some();
    if let Some(d) = sweeps {
        if finite_record {
            kernels = vec![Vec::new(); d];
        }
    }
    let (mut v, tag, residual) = drive(n, c.initial, sweeps, gamma, eps, |next, prev, j| {
        let results: Vec<(f64, Option<Vec<f64>>)> = if n >= PAR_THRESHOLD {
            (0..n).into_par_iter().map(|q| backup_state(c, q, prev)).collect()
        } else {
            (0..n).map(|q| backup_state(c, q, prev)).collect()
        };
        for (q, (val, probs)) in results.into_iter().enumerate() {
            next[q] = c.reward[q] + gamma * val;
            if let Some(p) = probs {
                kernel[q] = p;
            }
        }
        if finite_record {
            let d = kernels.len();
            kernels[d - j] = kernel.clone();
        }
    })?;
    let entry = &c.rows[c.initial];
    let (p0, v0) = if entry.is_point() {
        (entry.nominal.clone(), entry.nominal.iter().zip(&entry.succ).map(|(p, &s)| p * v[s]).sum())
    } else {
        let vals: Vec<f64> = entry.succ.iter().map(|&s| v[s]).collect();
        robust_backup_min(&entry.lower, &entry.upper, &vals)?
    };
    v[c.initial] = v0;
    if finite_record {
        for k in kernels.iter_mut() {
            k[c.initial] = p0.clone();
        }
    } else if sweeps.is_none() {
        kernel[c.initial] = p0;
        kernels = vec![kernel];
    }
    let witness = WorstCaseWitness { kernels, stationary: sweeps.is_none(), value_at_initial: v0 };
    Ok((ValueTable { values: v, horizon_tag: tag, residual }, witness))
}

fn backup_state(c: &IntervalChain, q: usize, prev: &[f64]) -> (f64, Option<Vec<f64>>) {
    let row = &c.rows[q];
    if row.is_point() {
        return (row.nominal.iter().zip(&row.succ).map(|(p, &s)| p * prev[s]).sum(), None);
    }
    let vals: Vec<f64> = row.succ.iter().map(|&s| prev[s]).collect();
    let mut order = vec![0; vals.len()];
    let mut out = vec![0.0; vals.len()];
    let v = backup_into(&row.lower, &row.upper, &vals, &mut order, &mut out);
    (v, Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_min_picks_cheapest() {
        let (row, v) = robust_backup_min(&[0.0, 0.0], &[1.0, 1.0], &[0.0, 10.0]).unwrap();
        assert_eq!(row, vec![1.0, 0.0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn bounded_min_by_hand() {
        let (row, v) = robust_backup_min(&[0.4, 0.4], &[0.6, 0.6], &[0.0, 10.0]).unwrap();
        assert!((row[0] - 0.6).abs() < 1e-15 && (row[1] - 0.4).abs() < 1e-15);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_bounds_return_the_point() {
        let (row, v) = robust_backup_min(&[0.3, 0.7], &[0.3, 0.7], &[1.0, 2.0]).unwrap();
        assert_eq!(row, vec![0.3, 0.7]);
        assert!((v - 1.7).abs() < 1e-12);
    }

    #[test]
    fn infeasible_row_rejected() {
        assert!(robust_backup_min(&[0.6, 0.6], &[0.7, 0.7], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn absorbing_geometric_series() {
        let c = MarkovChain {
            rows: vec![vec![(1, 1.0)], vec![(1, 1.0)]],
            reward: vec![0.0, 1.0],
            discount: 0.5,
            initial: 0,
            steps_per_decision: 1,
            labels: vec!["init".into(), "a".into()],
        };
        let vt = vi_point(&c, Horizon::Infinite, 1e-12).unwrap();
        assert!((vt.values[1] - 2.0).abs() < 1e-11);
        assert!((vt.values[0] - 2.0).abs() < 1e-11);
    }
}
