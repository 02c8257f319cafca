use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{merge_row, MarkovChain, ProductMc};
use crate::error::{Error, Result};
use crate::fsc::Fsc;
use crate::pomdp::{Pomdp, PROB_TOL};

/// Degree-1 polynomial `constant + Σ coeff · p[id]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly { constant: c, terms: Vec::new() }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, a)| a * point[i]).sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    fn add_scaled(&mut self, other: &Poly, k: f64) {
        self.constant += k * other.constant;
        for &(i, a) in &other.terms {
            match self.terms.iter_mut().find(|t| t.0 == i) {
                Some(t) => t.1 += k * a,
                None => self.terms.push((i, k * a)),
            }
        }
        self.terms.retain(|t| t.1 != 0.0);
    }
}

/// A free observation parameter `Z(o | a, s')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamInfo {
    pub action: usize,
    pub next_state: usize,
    pub observation: usize,
    pub nominal: f64,
    pub block: usize,
}

/// The parameters sharing one observation row `Z(· | a, s')`. The last support
/// observation is dependent: its probability is one minus the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub action: usize,
    pub next_state: usize,
    pub support: Vec<usize>,
    pub params: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamTable {
    pub params: Vec<ParamInfo>,
    pub blocks: Vec<ParamBlock>,
    index: HashMap<(usize, usize), usize>,
}

impl ParamTable {
    pub fn new(m: &Pomdp) -> Self {
        let mut t = ParamTable::default();
        for a in 0..m.n_actions() {
            for s2 in 0..m.n_states() {
                let support = m.support(a, s2);
                if support.len() < 2 {
                    continue;
                }
                let b = t.blocks.len();
                let params: Vec<usize> = support[..support.len() - 1]
                    .iter()
                    .map(|&o| {
                        t.params.push(ParamInfo { action: a, next_state: s2, observation: o, nominal: m.z(a, s2, o), block: b });
                        t.params.len() - 1
                    })
                    .collect();
                t.index.insert((a, s2), b);
                t.blocks.push(ParamBlock { action: a, next_state: s2, support, params });
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn block(&self, a: usize, s2: usize) -> Option<usize> {
        self.index.get(&(a, s2)).copied()
    }

    pub fn nominal_point(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.nominal).collect()
    }

    /// Parametric observation probability `Z_P(o | a, s')`.
    pub fn z_poly(&self, m: &Pomdp, a: usize, s2: usize, o: usize) -> Poly {
        let Some(b) = self.block(a, s2) else {
            return Poly::constant(m.z(a, s2, o));
        };
        let blk = &self.blocks[b];
        match blk.support.iter().position(|&x| x == o) {
            None => Poly::default(),
            Some(i) if i + 1 < blk.support.len() => Poly { constant: 0.0, terms: vec![(blk.params[i], 1.0)] },
            Some(_) => Poly { constant: 1.0, terms: blk.params.iter().map(|&p| (p, -1.0)).collect() },
        }
    }

    /// Human-readable parameter name.
    pub fn name(&self, m: &Pomdp, p: usize) -> String {
        let info = &self.params[p];
        format!("Z({}|{},{})", m.observations[info.observation], m.actions[info.action], m.states[info.next_state])
    }

    /// Probabilities of every support observation of a block at `point`.
    pub fn block_probs(&self, b: usize, point: &[f64]) -> Vec<f64> {
        let blk = &self.blocks[b];
        let mut out: Vec<f64> = blk.params.iter().map(|&p| point[p]).collect();
        out.push(1.0 - out.iter().sum::<f64>());
        out
    }
}

/// State-move branch of a parametric row: move to `next_state` with constant
/// probability `prob`, then branch on the observation (`block` names the
/// parameter block, `None` when the observation row has a single outcome).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateBranch {
    pub next_state: usize,
    pub prob: f64,
    pub block: Option<usize>,
    /// Support observations with their successor node, `None` if the edge is undefined.
    pub outcomes: Vec<(usize, Option<usize>)>,
}

/// Parametric product chain. Rows are degree-1 polynomials over `table.params`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricMc {
    pub rows: Vec<Vec<(usize, Poly)>>,
    /// Structured form of each row (empty for the entry state).
    pub structure: Vec<Vec<StateBranch>>,
    pub reward: Vec<f64>,
    pub discount: f64,
    pub initial: usize,
    pub labels: Vec<String>,
    pub table: ParamTable,
    pub n_states: usize,
    pub n_nodes: usize,
}

impl ParametricMc {
    pub fn n_chain_states(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn index(&self, s: usize, n: usize) -> usize {
        1 + s * self.n_nodes + n
    }
}

pub fn build_pmc(m: &Pomdp, pi: &Fsc) -> ParametricMc {
    let table = ParamTable::new(m);
    let (ns, nn) = (m.n_states(), pi.n_nodes());
    let idx = |s: usize, n: usize| 1 + s * nn + n;
    let mut rows = Vec::with_capacity(ns * nn + 1);
    let mut structure = Vec::with_capacity(ns * nn + 1);
    let mut reward = vec![0.0];
    let mut labels = vec!["init".to_string()];
    rows.push(
        m.initial
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (idx(s, pi.initial), Poly::constant(p)))
            .collect(),
    );
    structure.push(Vec::new());
    for s in 0..ns {
        for n in 0..nn {
            let a = pi.action[n];
            let mut row: Vec<(usize, Poly)> = Vec::new();
            let mut branches = Vec::new();
            for (s2, &t) in m.transition_row(s, a).iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                let support = m.support(a, s2);
                branches.push(StateBranch {
                    next_state: s2,
                    prob: t,
                    block: table.block(a, s2),
                    outcomes: support.iter().map(|&o| (o, pi.successor(n, o))).collect(),
                });
                for (n2, obs) in pi.edge_sets(n) {
                    let mut poly = Poly::default();
                    for &o in &obs {
                        poly.add_scaled(&table.z_poly(m, a, s2, o), t);
                    }
                    if poly.is_zero() {
                        continue;
                    }
                    let j = idx(s2, n2);
                    match row.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1.add_scaled(&poly, 1.0),
                        None => row.push((j, poly)),
                    }
                }
            }
            rows.push(row);
            structure.push(branches);
            reward.push(m.r(s, a));
            labels.push(format!("{}|{}", m.states[s], pi.nodes[n]));
        }
    }
    ParametricMc { rows, structure, reward, discount: m.discount, initial: 0, labels, table, n_states: ns, n_nodes: nn }
}

/// Substitutes a parameter point into every transition polynomial.
pub fn instantiate(c: &ParametricMc, point: &[f64]) -> Result<ProductMc> {
    if point.len() != c.table.len() {
        return Err(Error::IndexMismatch(format!("point has {} coordinates, pMC has {} parameters", point.len(), c.table.len())));
    }
    let mut rows = Vec::with_capacity(c.rows.len());
    for (q, row) in c.rows.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (j, poly) in row {
            let v = poly.eval(point);
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidDistribution { row: q });
            }
            if v > 0.0 {
                out.push((*j, v.min(1.0)));
            }
        }
        let mass: f64 = out.iter().map(|e| e.1).sum();
        if mass > 1.0 + PROB_TOL {
            return Err(Error::InvalidDistribution { row: q });
        }
        rows.push(merge_row(out));
    }
    Ok(ProductMc {
        chain: MarkovChain {
            rows,
            reward: c.reward.clone(),
            discount: c.discount,
            initial: c.initial,
            steps_per_decision: 1,
            labels: c.labels.clone(),
        },
        n_states: c.n_states,
        n_nodes: c.n_nodes,
    })
}

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Per-block bounds on the dependent observation's probability; empty when unchecked.
    #[serde(default)]
    pub dependent: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Region { lower, upper, dependent: Vec::new() }
    }

    /// Whether `point` lies in the box and induces admissible observation rows.
    pub fn admits(&self, t: &ParamTable, point: &[f64]) -> bool {
        if !self.contains(point) {
            return false;
        }
        t.blocks.iter().enumerate().all(|(b, blk)| {
            let last = 1.0 - blk.params.iter().map(|&p| point[p]).sum::<f64>();
            match self.dependent.get(b) {
                Some(&(lo, hi)) => last >= lo - 1e-12 && last <= hi + 1e-12,
                None => last >= -1e-12,
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.iter().enumerate().all(|(i, &p)| p >= self.lower[i] - 1e-12 && p <= self.upper[i] + 1e-12)
    }

    /// Splits along dimension `i` at its midpoint.
    pub fn split(&self, i: usize) -> (Region, Region) {
        let mid = 0.5 * (self.lower[i] + self.upper[i]);
        let mut a = self.clone();
        let mut b = self.clone();
        a.upper[i] = mid;
        b.lower[i] = mid;
        (a, b)
    }
}

/// The box of parameters within `delta` of the nominal observation function,
/// floored at `eps_p` and capped at `1 - eps_p`.
pub fn region_for(m: &Pomdp, delta: f64, eps_p: f64) -> Result<Region> {
    region_for_table(&ParamTable::new(m), delta, eps_p)
}

pub(crate) fn region_for_table(t: &ParamTable, delta: f64, eps_p: f64) -> Result<Region> {
    if !(0.0..=1.0).contains(&delta) || !(0.0..1.0).contains(&eps_p) {
        return Err(Error::EmptyInterval(format!("delta {delta} / eps_p {eps_p} out of range")));
    }
    let mut lower = Vec::with_capacity(t.len());
    let mut upper = Vec::with_capacity(t.len());
    for (i, p) in t.params.iter().enumerate() {
        let lo = (p.nominal - delta).max(eps_p);
        let hi = (p.nominal + delta).min(1.0 - eps_p);
        if lo > hi {
            return Err(Error::EmptyInterval(format!("parameter {i}: [{lo}, {hi}]")));
        }
        lower.push(lo);
        upper.push(hi);
    }
    let dependent = t
        .blocks
        .iter()
        .map(|blk| {
            let z = 1.0 - blk.params.iter().map(|&p| t.params[p].nominal).sum::<f64>();
            ((z - delta).max(eps_p), (z + delta).min(1.0))
        })
        .collect();
    Ok(Region { lower, upper, dependent })
}
