//! Nominal policy evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsc::{reachable_pairs, Fsc};
use crate::pomdp::Pomdp;

/// Default precision for every inner fixed-point computation.
pub const DEFAULT_EPS: f64 = 1e-7;

/// Planning horizon, counted in decision steps of the original model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(d) => write!(f, "{d}"),
            Horizon::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Horizon {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinite") {
            return Ok(Horizon::Infinite);
        }
        match s.parse::<usize>() {
            Ok(d) if d > 0 => Ok(Horizon::Finite(d)),
            _ => Err(format!("horizon must be `inf` or a positive integer, got `{s}`")),
        }
    }
}

/// Sup-norm residual below which infinite-horizon iteration stops.
pub fn stopping_threshold(eps: f64, discount: f64) -> f64 {
    if discount <= 0.0 {
        f64::INFINITY
    } else {
        eps * (1.0 - discount) / discount
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FscValue {
    /// Value at the initial belief and initial node.
    pub initial: f64,
    /// `table[s * |N| + n]`.
    pub table: Vec<f64>,
    pub sweeps: usize,
}

/// Exact (finite) or eps-accurate (infinite) value of `pi` on `m`.
pub fn fsc_value(m: &Pomdp, pi: &Fsc, horizon: Horizon, eps: f64) -> Result<FscValue> {
    // Surfaces undefined edges at reachable pairs.
    reachable_pairs(m, pi)?;
    if horizon == Horizon::Infinite && m.discount >= 1.0 {
        return Err(Error::NonContractive(m.discount));
    }
    let (ns, nn) = (m.n_states(), pi.n_nodes());
    // Composite kernel over (s, n), dropping mass on undefined edges at unreachable pairs.
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(ns * nn);
    let mut reward = Vec::with_capacity(ns * nn);
    for s in 0..ns {
        for n in 0..nn {
            let a = pi.action[n];
            reward.push(m.r(s, a));
            let mut row = Vec::new();
            for (s2, &t) in m.transition_row(s, a).iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                for (n2, obs) in pi.edge_sets(n) {
                    let z: f64 = obs.iter().map(|&o| m.z(a, s2, o)).sum();
                    if z > 0.0 {
                        row.push((s2 * nn + n2, t * z));
                    }
                }
            }
            rows.push(row);
        }
    }
    let gamma = m.discount;
    let backup = |v: &[f64]| -> Vec<f64> {
        rows.iter()
            .zip(&reward)
            .map(|(row, r)| r + gamma * row.iter().map(|&(j, p)| p * v[j]).sum::<f64>())
            .collect()
    };
    let mut v = vec![0.0; ns * nn];
    let mut sweeps = 0;
    match horizon {
        Horizon::Finite(d) => {
            for _ in 0..d {
                v = backup(&v);
                sweeps += 1;
            }
        }
        Horizon::Infinite => {
            let thr = stopping_threshold(eps, gamma);
            loop {
                let nv = backup(&v);
                sweeps += 1;
                let res = nv.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                v = nv;
                if res <= thr {
                    break;
                }
            }
        }
    }
    let initial = m.initial.iter().enumerate().map(|(s, &b)| b * v[s * nn + pi.initial]).sum();
    Ok(FscValue { initial, table: v, sweeps })
}
