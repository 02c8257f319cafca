//! Binary-branch decomposition of parametric chains and its evaluators.

use std::collections::VecDeque;

use crate::chain::{ParamTable, ParametricMc, Region};
use crate::error::{Error, Result};
use crate::eval::{stopping_threshold, Horizon};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    State(usize),
    Aux(usize),
    /// Mass lost on an undefined controller edge.
    Sink,
}

/// Original chain state with constant branches.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleState {
    /// Index of the state in the parametric chain.
    pub origin: usize,
    pub reward: f64,
    pub branches: Vec<(Target, f64)>,
}

/// Zero-reward, undiscounted binary branch: `taken` with probability `r`,
/// `other` with `1 - r`, where `r` is derived parameter `param`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxNode {
    pub param: usize,
    pub taken: Target,
    pub other: Target,
    pub origin: usize,
}

/// Rescaled parameter `r = p_i / (1 - Σ_{j<i} p_j)` of one observation block.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParam {
    pub block: usize,
    pub position: usize,
}

/// Simple pMC: constant rows plus chains of binary parametric branches.
/// Only states reachable from the entry state are kept.
#[derive(Debug, Clone)]
pub struct SimplePmc {
    pub states: Vec<SimpleState>,
    /// Topologically ordered: children always have smaller indices.
    pub aux: Vec<AuxNode>,
    pub derived: Vec<DerivedParam>,
    pub discount: f64,
    pub table: ParamTable,
    /// `block_derived[b][i]` is the derived parameter of block `b` at position `i`.
    pub block_derived: Vec<Vec<usize>>,
    /// Original parameters that influence the value.
    pub relevant: Vec<usize>,
}

pub fn to_simple(c: &ParametricMc) -> Result<SimplePmc> {
    if c.structure.len() != c.rows.len() {
        return Err(Error::UnsupportedPolynomial("parametric chain lacks its structured row form".into()));
    }
    let table = c.table.clone();
    let mut derived = Vec::new();
    let block_derived: Vec<Vec<usize>> = table
        .blocks
        .iter()
        .enumerate()
        .map(|(b, blk)| {
            (0..blk.params.len())
                .map(|i| {
                    derived.push(DerivedParam { block: b, position: i });
                    derived.len() - 1
                })
                .collect()
        })
        .collect();

    let n = c.rows.len();
    let mut map = vec![usize::MAX; n];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([c.initial]);
    map[c.initial] = 0;
    order.push(c.initial);
    let nn = c.n_nodes;
    let target_of = |s2: usize, n2: Option<usize>| n2.map(|n2| 1 + s2 * nn + n2);
    while let Some(q) = queue.pop_front() {
        let succ: Vec<usize> = if q == c.initial {
            c.rows[q].iter().map(|e| e.0).collect()
        } else {
            c.structure[q]
                .iter()
                .flat_map(|b| b.outcomes.iter().filter_map(move |&(_, n2)| target_of(b.next_state, n2)))
                .collect()
        };
        for j in succ {
            if map[j] == usize::MAX {
                map[j] = order.len();
                order.push(j);
                queue.push_back(j);
            }
        }
    }

    let mut states = Vec::with_capacity(order.len());
    let mut aux: Vec<AuxNode> = Vec::new();
    let mut used = vec![false; table.len()];
    for &q in &order {
        let mut branches = Vec::new();
        if q == c.initial {
            for (j, poly) in &c.rows[q] {
                if !poly.is_constant() {
                    return Err(Error::UnsupportedPolynomial("parametric entry row".into()));
                }
                branches.push((Target::State(map[*j]), poly.constant));
            }
        } else {
            for br in &c.structure[q] {
                let leaf = |n2: Option<usize>| match target_of(br.next_state, n2) {
                    Some(j) => Target::State(map[j]),
                    None => Target::Sink,
                };
                match br.block {
                    None => {
                        let &(_, n2) = br.outcomes.first().ok_or_else(|| {
                            Error::UnsupportedPolynomial(format!("state {} has an empty observation row", c.labels[q]))
                        })?;
                        branches.push((leaf(n2), br.prob));
                    }
                    Some(b) => {
                        let blk = &table.blocks[b];
                        if blk.support.len() != br.outcomes.len() {
                            return Err(Error::UnsupportedPolynomial(format!("support mismatch in state {}", c.labels[q])));
                        }
                        let leaves: Vec<Target> = br.outcomes.iter().map(|&(_, n2)| leaf(n2)).collect();
                        if leaves.iter().all(|t| *t == leaves[0]) {
                            branches.push((leaves[0], br.prob));
                            continue;
                        }
                        let k = leaves.len();
                        blk.params.iter().for_each(|&p| used[p] = true);
                        let mut tail = leaves[k - 1];
                        for i in (0..k - 1).rev() {
                            aux.push(AuxNode { param: block_derived[b][i], taken: leaves[i], other: tail, origin: q });
                            tail = Target::Aux(aux.len() - 1);
                        }
                        branches.push((tail, br.prob));
                    }
                }
            }
        }
        states.push(SimpleState { origin: q, reward: c.reward[q], branches });
    }
    let relevant = (0..table.len()).filter(|&p| used[p]).collect();
    Ok(SimplePmc { states, aux, derived, discount: c.discount, table, block_derived, relevant })
}

/// Endpoint picked by the relaxation for one parameter occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Lower,
    Upper,
    Indifferent,
}

/// Per-derived-parameter summary of the relaxation's choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Unused,
    Lower,
    Upper,
    Mixed,
}

impl Consistency {
    fn add(self, c: Choice) -> Self {
        match (self, c) {
            (s, Choice::Indifferent) => s,
            (Consistency::Unused, Choice::Lower) | (Consistency::Lower, Choice::Lower) => Consistency::Lower,
            (Consistency::Unused, Choice::Upper) | (Consistency::Upper, Choice::Upper) => Consistency::Upper,
            _ => Consistency::Mixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxOutcome {
    /// Lower bound on the minimum value over the region.
    pub bound: f64,
    /// Indexed by derived parameter.
    pub choices: Vec<Consistency>,
}

enum Mode<'a> {
    Point(&'a [f64]),
    Relax(&'a [(f64, f64)]),
}

impl SimplePmc {
    /// Derived parameter values at an original parameter point.
    pub fn derived_point(&self, point: &[f64]) -> Vec<f64> {
        self.derived
            .iter()
            .map(|d| {
                let blk = &self.table.blocks[d.block];
                let prefix: f64 = blk.params[..d.position].iter().map(|&p| point[p]).sum();
                let rest = 1.0 - prefix;
                if rest <= 0.0 {
                    0.0
                } else {
                    (point[blk.params[d.position]] / rest).clamp(0.0, 1.0)
                }
            })
            .collect()
    }

    /// Conservative bounds on each derived parameter over a region.
    pub fn derived_bounds(&self, r: &Region) -> Vec<(f64, f64)> {
        self.derived
            .iter()
            .map(|d| {
                let blk = &self.table.blocks[d.block];
                let p = blk.params[d.position];
                let lo_prefix: f64 = blk.params[..d.position].iter().map(|&j| r.lower[j]).sum();
                let hi_prefix: f64 = blk.params[..d.position].iter().map(|&j| r.upper[j]).sum();
                let lo = r.lower[p] / (1.0 - lo_prefix).max(f64::MIN_POSITIVE);
                let hi = if 1.0 - hi_prefix <= 0.0 { 1.0 } else { r.upper[p] / (1.0 - hi_prefix) };
                (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0).max(lo.clamp(0.0, 1.0)))
            })
            .collect()
    }

    /// Value at the entry state for an original parameter point.
    pub fn value_at(&self, point: &[f64], h: Horizon, eps: f64) -> Result<f64> {
        let r = self.derived_point(point);
        self.run(Mode::Point(&r), h, eps, None)
    }

    fn run(&self, mode: Mode, h: Horizon, eps: f64, mut choices: Option<&mut Vec<Consistency>>) -> Result<f64> {
        let n = self.states.len();
        let gamma = self.discount;
        let mut v = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut aux_v = vec![0.0; self.aux.len()];
        let mut aux_c = vec![Choice::Indifferent; self.aux.len()];
        let sweeps = match h {
            Horizon::Finite(d) => Some(d),
            Horizon::Infinite => {
                if gamma >= 1.0 {
                    return Err(Error::NonContractive(gamma));
                }
                None
            }
        };
        let thr = stopping_threshold(eps, gamma);
        let infinite = sweeps.is_none();
        if let Some(ch) = choices.as_deref_mut() {
            *ch = vec![Consistency::Unused; self.derived.len()];
        }
        let mut j = 0usize;
        loop {
            if let Some(d) = sweeps {
                if j == d {
                    break;
                }
            }
            j += 1;
            let val = |t: Target, v: &[f64], aux_v: &[f64]| match t {
                Target::State(i) => v[i],
                Target::Aux(i) => aux_v[i],
                Target::Sink => 0.0,
            };
            for (i, node) in self.aux.iter().enumerate() {
                let vt = val(node.taken, &v, &aux_v);
                let vo = val(node.other, &v, &aux_v);
                let (r, c) = match mode {
                    Mode::Point(r) => (r[node.param], Choice::Indifferent),
                    Mode::Relax(b) => {
                        let (lo, hi) = b[node.param];
                        if vt < vo {
                            (hi, Choice::Upper)
                        } else if vt > vo {
                            (lo, Choice::Lower)
                        } else {
                            (lo, Choice::Indifferent)
                        }
                    }
                };
                aux_v[i] = r * vt + (1.0 - r) * vo;
                aux_c[i] = c;
            }
            for (q, st) in self.states.iter().enumerate() {
                next[q] = st.reward + gamma * st.branches.iter().map(|&(t, p)| p * val(t, &v, &aux_v)).sum::<f64>();
            }
            next[0] = 0.0;
            let residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            std::mem::swap(&mut v, &mut next);
            if let Some(ch) = choices.as_deref_mut() {
                if infinite {
                    ch.iter_mut().for_each(|c| *c = Consistency::Unused);
                }
                for (node, &c) in self.aux.iter().zip(&aux_c) {
                    ch[node.param] = ch[node.param].add(c);
                }
            }
            if infinite && (residual <= thr || !residual.is_finite()) {
                break;
            }
        }
        let entry = &self.states[0];
        Ok(entry
            .branches
            .iter()
            .map(|&(t, p)| match t {
                Target::State(i) => p * v[i],
                _ => 0.0,
            })
            .sum())
    }
}

/// Lower bound on the minimum entry value over `r`, letting every parameter
/// occurrence pick its own interval endpoint.
pub fn relax_min(c: &SimplePmc, r: &Region, h: Horizon, eps: f64) -> Result<RelaxOutcome> {
    relax_bounds(c, &c.derived_bounds(r), h, eps)
}

/// Relaxation over explicit derived-parameter intervals.
pub(crate) fn relax_bounds(c: &SimplePmc, bounds: &[(f64, f64)], h: Horizon, eps: f64) -> Result<RelaxOutcome> {
    let mut choices = Vec::new();
    let bound = c.run(Mode::Relax(bounds), h, eps, Some(&mut choices))?;
    Ok(RelaxOutcome { bound, choices })
}

impl SimplePmc {
    /// Derived parameters that equal an original parameter and occur at most
    /// once along every path. The relaxed value is concave in each of them,
    /// so its minimum over their interval sits at an endpoint.
    pub(crate) fn single_occurrence(&self) -> Vec<bool> {
        let n = self.states.len();
        let mut leaves: Vec<Vec<usize>> = vec![Vec::new(); self.aux.len()];
        let mut owners: Vec<Vec<usize>> = vec![Vec::new(); self.derived.len()];
        // Aux children always have smaller indices.
        for i in 0..self.aux.len() {
            let node = &self.aux[i];
            let mut out = Vec::new();
            for t in [node.taken, node.other] {
                match t {
                    Target::State(j) => out.push(j),
                    Target::Aux(k) => out.extend_from_slice(&leaves[k]),
                    Target::Sink => {}
                }
            }
            out.sort_unstable();
            out.dedup();
            leaves[i] = out;
        }
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (q, st) in self.states.iter().enumerate() {
            let mut params = Vec::new();
            for &(t, _) in &st.branches {
                match t {
                    Target::State(j) => succ[q].push(j),
                    Target::Aux(k) => {
                        succ[q].extend_from_slice(&leaves[k]);
                        let mut stack = vec![k];
                        while let Some(a) = stack.pop() {
                            params.push(self.aux[a].param);
                            for t in [self.aux[a].taken, self.aux[a].other] {
                                if let Target::Aux(b) = t {
                                    stack.push(b);
                                }
                            }
                        }
                    }
                    Target::Sink => {}
                }
            }
            params.sort_unstable();
            params.dedup();
            for d in params {
                owners[d].push(q);
            }
        }
        owners
            .iter()
            .enumerate()
            .map(|(d, own)| {
                let info = &self.derived[d];
                if self.table.blocks[info.block].params.len() != 1 || own.is_empty() {
                    return false;
                }
                let mut is_owner = vec![false; n];
                own.iter().for_each(|&q| is_owner[q] = true);
                let mut seen = vec![false; n];
                let mut stack: Vec<usize> = own.iter().flat_map(|&q| succ[q].iter().copied()).collect();
                while let Some(q) = stack.pop() {
                    if is_owner[q] {
                        return false;
                    }
                    if !std::mem::replace(&mut seen[q], true) {
                        stack.extend_from_slice(&succ[q]);
                    }
                }
                true
            })
            .collect()
    }
}
