//! Outer search for the largest admissible observation deviation.

mod mbs;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use mbs::{mbs, mbs_memo, MbsOutcome, Memo, Step};

use crate::chain::{build_pmc, build_tsimc, build_tsmc, region_for_table, repair_unreachable, IntervalChain, TwoStepMc};
use crate::error::{Error, Result};
use crate::eval::{Horizon, DEFAULT_EPS};
use crate::fsc::Fsc;
use crate::lifting::{pla_decide, pla_min_simple, to_simple, Decision, PlaConfig, SimplePmc};
use crate::pomdp::Pomdp;
use crate::robust::{ipe_min, vi_point, WorstCaseWitness};

/// Default floor on perturbed observation probabilities for the sticky variant.
pub const DEFAULT_EPS_P_STICKY: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// One perturbed observation function fixed for the whole run.
    Sticky,
    /// The observation function may change at every step.
    #[serde(rename = "nonsticky")]
    NonSticky,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Sticky => "sticky",
            Variant::NonSticky => "nonsticky",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sticky" | "s" => Ok(Variant::Sticky),
            "nonsticky" | "non-sticky" | "ns" => Ok(Variant::NonSticky),
            _ => Err(format!("unknown variant `{s}` (expected sticky or nonsticky)")),
        }
    }
}

/// Allowed value degradation: an absolute amount or a fraction of `|V0|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    Absolute(f64),
    Relative(f64),
}

impl Threshold {
    pub fn value(self) -> f64 {
        match self {
            Threshold::Absolute(x) | Threshold::Relative(x) => x,
        }
    }

    /// Absolute degradation allowed from nominal value `v0`.
    pub fn degradation(self, v0: f64) -> f64 {
        match self {
            Threshold::Absolute(d) => d,
            Threshold::Relative(eta) => eta * v0.abs(),
        }
    }

    pub fn with_value(self, x: f64) -> Self {
        match self {
            Threshold::Absolute(_) => Threshold::Absolute(x),
            Threshold::Relative(_) => Threshold::Relative(x),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone)]
pub struct RobustnessQuery {
    pub model: Pomdp,
    pub policy: Fsc,
    pub variant: Variant,
    pub threshold: Threshold,
    pub horizon: Horizon,
    pub eps_mbs: f64,
    pub eps_inner: f64,
    /// Floor on perturbed observation probabilities; variant default when unset.
    pub eps_p: Option<f64>,
    /// Region budget for the sticky search.
    pub max_regions: Option<usize>,
}

impl RobustnessQuery {
    pub fn new(model: Pomdp, policy: Fsc, variant: Variant, threshold: Threshold, horizon: Horizon) -> Self {
        RobustnessQuery {
            model,
            policy,
            variant,
            threshold,
            horizon,
            eps_mbs: DEFAULT_EPS,
            eps_inner: DEFAULT_EPS,
            eps_p: None,
            max_regions: None,
        }
    }

    pub fn eps_p(&self) -> f64 {
        self.eps_p.unwrap_or(match self.variant {
            Variant::Sticky => DEFAULT_EPS_P_STICKY,
            Variant::NonSticky => 0.0,
        })
    }

    fn pla_config(&self) -> PlaConfig {
        let mut cfg = PlaConfig { eps: self.eps_inner, ..PlaConfig::default() };
        if let Some(b) = self.max_regions {
            cfg.max_regions = b;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidQuery(m));
        let t = self.threshold.value();
        if !(t >= 0.0) || !t.is_finite() {
            return bad(format!("threshold must be a finite non-negative number (got {t})"));
        }
        if !(self.eps_mbs > 0.0) || !(self.eps_inner > 0.0) {
            return bad("tolerances must be positive".into());
        }
        let ep = self.eps_p();
        if !(ep >= 0.0) {
            return bad(format!("eps_p must be non-negative (got {ep})"));
        }
        let zmin = self.model.min_positive_observation();
        if ep > zmin {
            return bad(format!("eps_p {ep} exceeds the smallest positive observation probability {zmin}"));
        }
        if self.horizon == Horizon::Infinite && self.model.discount >= 1.0 {
            return Err(Error::NonContractive(self.model.discount));
        }
        self.policy.check_indices(&self.model)
    }
}

/// Distribution chosen for one interval row at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowChoice {
    pub state: String,
    pub successors: Vec<String>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamValue {
    pub name: String,
    pub value: f64,
}

/// What realizes the reported worst case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Witness {
    /// Minimizing kernels on reachable interval rows, one list per chain step
    /// (a single list when stationary).
    Kernel { stationary: bool, steps: Vec<Vec<RowChoice>> },
    /// Minimizing observation parameters.
    Parameters(Vec<ParamValue>),
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub delta: f64,
    pub nominal_value: f64,
    pub worst_case_value: f64,
    pub variant: Variant,
    pub iterations: Vec<Step>,
    pub witness: Witness,
    pub saturated: bool,
    pub threshold: Threshold,
}

impl RobustnessResult {
    pub fn degradation(&self) -> f64 {
        self.nominal_value - self.worst_case_value
    }
}

fn inner_eps(h: Horizon, eps: f64) -> f64 {
    match h {
        Horizon::Finite(_) => eps,
        Horizon::Infinite => 0.1 * eps,
    }
}

/// Nominal entry value of the two-step chain.
pub fn nominal_ns(ts: &TwoStepMc, h: Horizon, eps: f64) -> Result<f64> {
    Ok(vi_point(&ts.chain, h, inner_eps(h, eps))?.values[ts.chain.initial])
}

fn interval_chain(ts: &TwoStepMc, delta: f64, eps_p: f64) -> Result<IntervalChain> {
    Ok(repair_unreachable(build_tsimc(ts, delta, eps_p)?).chain)
}

/// `δ ↦ V0 − Δ − (worst-case value at δ)`; non-positive means the
/// degradation stays within `Δ`.
pub fn feasibility_ns(ts: &TwoStepMc, v0: f64, degradation: f64, h: Horizon, eps: f64, eps_p: f64) -> impl FnMut(f64) -> Result<f64> + '_ {
    let e = inner_eps(h, eps);
    move |delta| {
        let c = interval_chain(ts, delta, eps_p)?;
        let (vt, _) = ipe_min(&c, h, e, false)?;
        Ok(v0 - degradation - vt.values[c.initial])
    }
}

/// `δ ↦ -1` when the minimum over the δ-box keeps the value above
/// `V0 − Δ − eps`, `+1` otherwise.
pub fn feasibility_s<'a>(sp: &'a SimplePmc, v0: f64, degradation: f64, h: Horizon, cfg: &'a PlaConfig, eps_p: f64) -> impl FnMut(f64) -> Result<f64> + 'a {
    let theta = v0 - degradation - cfg.eps;
    move |delta| {
        let r = region_for_table(&sp.table, delta, eps_p)?;
        let (d, _) = pla_decide(sp, &r, h, cfg, theta)?;
        Ok(match d {
            Decision::AtLeast => -1.0,
            Decision::Below => 1.0,
        })
    }
}

fn kernel_witness(c: &IntervalChain, w: &WorstCaseWitness) -> Witness {
    let reach = c.reachable();
    let steps = w
        .kernels
        .iter()
        .map(|k| {
            c.rows
                .iter()
                .enumerate()
                .filter(|(q, row)| reach[*q] && !row.is_point() && row.succ.len() >= 2)
                .map(|(q, row)| RowChoice {
                    state: c.labels[q].clone(),
                    successors: row.succ.iter().map(|&s| c.labels[s].clone()).collect(),
                    probs: k[q].clone(),
                })
                .collect()
        })
        .collect();
    Witness::Kernel { stationary: w.stationary, steps }
}

pub fn ris_ns(q: &RobustnessQuery) -> Result<RobustnessResult> {
    if q.variant != Variant::NonSticky {
        return Err(Error::InvalidQuery("non-sticky search given a sticky query".into()));
    }
    q.validate()?;
    crate::fsc::reachable_pairs(&q.model, &q.policy)?;
    let ts = build_tsmc(&q.model, &q.policy);
    let eps_p = q.eps_p();
    let v0 = nominal_ns(&ts, q.horizon, q.eps_inner)?;
    let dd = q.threshold.degradation(v0);
    let mut f = feasibility_ns(&ts, v0, dd, q.horizon, q.eps_inner, eps_p);
    let slack = q.eps_inner;
    let out = mbs(|d| Ok(f(d)? - slack), 0.0, 1.0, q.eps_mbs)?;
    let c = interval_chain(&ts, out.delta, eps_p)?;
    let (vt, w) = ipe_min(&c, q.horizon, inner_eps(q.horizon, q.eps_inner), true)?;
    Ok(RobustnessResult {
        delta: out.delta,
        nominal_value: v0,
        worst_case_value: vt.values[c.initial],
        variant: Variant::NonSticky,
        iterations: out.trace,
        witness: kernel_witness(&c, &w),
        saturated: out.saturated,
        threshold: q.threshold,
    })
}

pub fn ris_s(q: &RobustnessQuery) -> Result<RobustnessResult> {
    if q.variant != Variant::Sticky {
        return Err(Error::InvalidQuery("sticky search given a non-sticky query".into()));
    }
    q.validate()?;
    crate::fsc::reachable_pairs(&q.model, &q.policy)?;
    let pmc = build_pmc(&q.model, &q.policy);
    let sp = to_simple(&pmc)?;
    let cfg = q.pla_config();
    let eps_p = q.eps_p();
    let v0 = sp.value_at(&sp.table.nominal_point(), q.horizon, inner_eps(q.horizon, cfg.eps))?;
    let dd = q.threshold.degradation(v0);
    let f = feasibility_s(&sp, v0, dd, q.horizon, &cfg, eps_p);
    let out = mbs(f, 0.0, 1.0, q.eps_mbs)?;
    let r = region_for_table(&sp.table, out.delta, eps_p)?;
    let best = pla_min_simple(&sp, &r, q.horizon, &cfg)?;
    if best.inconclusive {
        return Err(Error::Inconclusive { budget: cfg.max_regions, lower: best.lower_bound, upper: best.value });
    }
    let witness = if sp.table.is_empty() {
        Witness::None
    } else {
        Witness::Parameters(
            sp.relevant
                .iter()
                .map(|&p| ParamValue { name: sp.table.name(&q.model, p), value: best.argmin[p] })
                .collect(),
        )
    };
    Ok(RobustnessResult {
        delta: out.delta,
        nominal_value: v0,
        worst_case_value: best.value,
        variant: Variant::Sticky,
        iterations: out.trace,
        witness,
        saturated: out.saturated,
        threshold: q.threshold,
    })
}

/// Runs the search matching the query's variant.
pub fn run_query(q: &RobustnessQuery) -> Result<RobustnessResult> {
    match q.variant {
        Variant::NonSticky => ris_ns(q),
        Variant::Sticky => ris_s(q),
    }
}
