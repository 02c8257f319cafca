//! Empirical checks of computed worst cases: vertex sampling, exhaustive
//! oracles, rollouts and threshold sweeps.

mod monte_carlo;
mod oracle;
mod sampling;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use monte_carlo::{monte_carlo, monte_carlo_chain, Event, McReport};
pub use oracle::{brute_force_min, vertices, MAX_ASSIGNMENTS};
pub use sampling::{ns_sample, random_vertex, sample_extrema_ns, sample_extrema_sticky, sticky_sample};

use crate::chain::{build_tsimc, build_tsmc, repair_unreachable};
use crate::error::{Error, Result};
use crate::robust::vi_point;
use crate::search::{run_query, RobustnessQuery, RobustnessResult, Variant};

pub const DEFAULT_SAMPLES: usize = 10_000;

/// `(V0 - V) / |V0|`.
pub fn empirical_eta(v0: f64, v: f64) -> Result<f64> {
    if v0 == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok((v0 - v) / v0.abs())
}

/// Runs the query at every threshold value; results follow input order.
pub fn sweep(q: &RobustnessQuery, thresholds: &[f64]) -> Result<Vec<RobustnessResult>> {
    if thresholds.is_empty() {
        return Err(Error::InvalidQuery("empty threshold list".into()));
    }
    thresholds
        .par_iter()
        .map(|&t| {
            let mut qt = q.clone();
            qt.threshold = q.threshold.with_value(t);
            run_query(&qt)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Allowed degradation relative to `|V0|`.
    pub target_eta: f64,
    pub delta_used: f64,
    /// Degradation at the computed worst case.
    pub eta_witness: f64,
    /// Worst degradation over sampled step-wise kernels (non-sticky queries only).
    pub eta_sampled_ns: Option<f64>,
    /// Worst degradation over sampled fixed observation functions.
    pub eta_sampled_s: f64,
    pub samples: usize,
    pub seed: u64,
    /// Set when `V0 = 0`; the eta fields then hold absolute degradations.
    pub absolute: bool,
}

/// Solves the query, then samples vertex perturbations at the returned `δ`
/// and records the worst degradation they reach.
pub fn validate(q: &RobustnessQuery, samples: usize, seed: u64) -> Result<(RobustnessResult, ValidationReport)> {
    let r = run_query(q)?;
    let v0 = r.nominal_value;
    let absolute = v0 == 0.0;
    let eta = |v: f64| if absolute { Ok(v0 - v) } else { empirical_eta(v0, v) };
    let eps_p = q.eps_p();
    let h = q.horizon;
    let eval_eps = 0.1 * q.eps_inner;

    let eta_sampled_ns = if q.variant == Variant::NonSticky {
        let ts = build_tsmc(&q.model, &q.policy);
        let c = repair_unreachable(build_tsimc(&ts, r.delta, eps_p)?).chain;
        let worst = (0..samples as u64)
            .into_par_iter()
            .map(|i| {
                let mc = ns_sample(&c, seed, i)?;
                Ok(vi_point(&mc, h, eval_eps)?.values[mc.initial])
            })
            .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;
        Some(eta(worst)?)
    } else {
        None
    };
    let worst_s = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let m = sticky_sample(&q.model, r.delta, eps_p, seed, i)?;
            let ts = build_tsmc(&m, &q.policy);
            Ok(vi_point(&ts.chain, h, eval_eps)?.values[ts.chain.initial])
        })
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;

    let report = ValidationReport {
        target_eta: if absolute { r.threshold.degradation(v0) } else { r.threshold.degradation(v0) / v0.abs() },
        delta_used: r.delta,
        eta_witness: eta(r.worst_case_value)?,
        eta_sampled_ns,
        eta_sampled_s: if samples == 0 { 0.0 } else { eta(worst_s)? },
        samples,
        seed,
        absolute,
    };
    Ok((r, report))
}
