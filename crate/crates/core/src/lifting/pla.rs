//! Branch and bound over parameter boxes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::simple::{relax_bounds, to_simple, Consistency, RelaxOutcome, SimplePmc};
use crate::chain::{ParametricMc, Region};
use crate::error::{Error, Result};
use crate::eval::{Horizon, DEFAULT_EPS};

#[derive(Debug, Clone, PartialEq)]
pub struct PlaConfig {
    /// Target gap between the incumbent and the global lower bound.
    pub eps: f64,
    /// Maximum number of regions analysed before giving up.
    pub max_regions: usize,
    /// Maximum number of box vertices instantiated for the initial incumbent.
    pub max_vertices: usize,
    /// Seed for vertex sampling when the box has too many vertices.
    pub seed: u64,
}

impl Default for PlaConfig {
    fn default() -> Self {
        PlaConfig { eps: DEFAULT_EPS, max_regions: 200_000, max_vertices: 1 << 12, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaOutcome {
    /// Best value found at an admissible parameter point.
    pub value: f64,
    pub argmin: Vec<f64>,
    /// Valid lower bound on the minimum over the region.
    pub lower_bound: f64,
    pub regions: usize,
    /// Set when the region budget ran out before the gap closed.
    pub inconclusive: bool,
}

/// Early-exit answer to "is the minimum at least `threshold`?".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    AtLeast,
    Below,
}

struct Queued {
    bound: f64,
    id: usize,
    region: Region,
    choices: Vec<Consistency>,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // Reversed so the max-heap pops the smallest bound, then the oldest region.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    sp: &'a SimplePmc,
    h: Horizon,
    cfg: &'a PlaConfig,
    /// Inner evaluation tolerance.
    eps_eval: f64,
    best: f64,
    best_point: Vec<f64>,
    base: Vec<f64>,
    /// Derived parameters whose relaxed minimum sits at an interval endpoint.
    single: Vec<bool>,
}

/// Most single-occurrence parameters fixed to endpoints per bound.
const ENDPOINT_LIMIT: usize = 6;

impl<'a> Search<'a> {
    /// Relaxation bound, tightened by enumerating the endpoints of mixed
    /// single-occurrence parameters.
    fn bound(&self, r: &Region) -> Result<RelaxOutcome> {
        let bounds = self.sp.derived_bounds(r);
        let plain = relax_bounds(self.sp, &bounds, self.h, self.eps_eval)?;
        let mut cands: Vec<usize> = (0..bounds.len())
            .filter(|&d| self.single[d] && plain.choices[d] == Consistency::Mixed && bounds[d].1 > bounds[d].0)
            .collect();
        if cands.is_empty() {
            return Ok(plain);
        }
        cands.sort_by(|&a, &b| (bounds[b].1 - bounds[b].0).total_cmp(&(bounds[a].1 - bounds[a].0)).then(a.cmp(&b)));
        cands.truncate(ENDPOINT_LIMIT);
        let mut best: Option<RelaxOutcome> = None;
        let mut fixed = bounds.clone();
        for k in 0..1usize << cands.len() {
            for (bit, &d) in cands.iter().enumerate() {
                let x = if (k >> bit) & 1 == 1 { bounds[d].1 } else { bounds[d].0 };
                fixed[d] = (x, x);
            }
            let mut out = relax_bounds(self.sp, &fixed, self.h, self.eps_eval)?;
            if best.as_ref().is_none_or(|b| out.bound < b.bound) {
                for (bit, &d) in cands.iter().enumerate() {
                    out.choices[d] = if (k >> bit) & 1 == 1 { Consistency::Upper } else { Consistency::Lower };
                }
                best = Some(out);
            }
        }
        Ok(best.unwrap_or(plain))
    }

    fn slack(&self) -> f64 {
        match self.h {
            Horizon::Finite(_) => 0.0,
            Horizon::Infinite => self.eps_eval,
        }
    }

    fn consider(&mut self, r: &Region, point: Vec<f64>) -> Result<()> {
        if !r.admits(&self.sp.table, &point) {
            return Ok(());
        }
        let v = self.sp.value_at(&point, self.h, self.eps_eval)?;
        if v < self.best {
            self.best = v;
            self.best_point = point;
        }
        Ok(())
    }

    fn center(&self, r: &Region) -> Vec<f64> {
        let mut p = self.base.clone();
        let c = r.center();
        for &i in &self.sp.relevant {
            p[i] = c[i];
        }
        p
    }

    /// Point realizing the relaxation's endpoint choices (center where indifferent).
    fn choice_point(&self, r: &Region, choices: &[Consistency]) -> Vec<f64> {
        let mut p = self.center(r);
        let bounds = self.sp.derived_bounds(r);
        for (b, ds) in self.sp.block_derived.iter().enumerate() {
            let blk = &self.sp.table.blocks[b];
            let mut prefix = 0.0;
            for (i, &d) in ds.iter().enumerate() {
                let pi = blk.params[i];
                let rv = match choices[d] {
                    Consistency::Lower => Some(bounds[d].0),
                    Consistency::Upper => Some(bounds[d].1),
                    Consistency::Mixed | Consistency::Unused => None,
                };
                if let Some(rv) = rv {
                    let raw = if i == 0 { rv } else { rv * (1.0 - prefix) };
                    p[pi] = raw.clamp(r.lower[pi], r.upper[pi]);
                }
                prefix += p[pi];
            }
        }
        p
    }

    fn vertices(&mut self, r: &Region) -> Result<()> {
        let dims: Vec<usize> = self.sp.relevant.iter().copied().filter(|&i| r.width(i) > 0.0).collect();
        let full = dims.len() < usize::BITS as usize && (1usize << dims.len()) <= self.cfg.max_vertices;
        let count = if full { 1usize << dims.len() } else { self.cfg.max_vertices };
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        for k in 0..count {
            let mut p = self.center(r);
            for (bit, &i) in dims.iter().enumerate() {
                let up = if full { (k >> bit) & 1 == 1 } else { rng.gen::<bool>() };
                p[i] = if up { r.upper[i] } else { r.lower[i] };
            }
            self.consider(r, p)?;
        }
        Ok(())
    }

    fn split_dim(&self, r: &Region, choices: &[Consistency]) -> Option<usize> {
        let widest = |cands: &mut dyn Iterator<Item = usize>| {
            cands.filter(|&i| r.width(i) > 1e-12).max_by(|&a, &b| r.width(a).total_cmp(&r.width(b)).then(b.cmp(&a)))
        };
        let mixed = self.sp.relevant.iter().copied().filter(|&i| {
            let info = &self.sp.table.params[i];
            let blk = &self.sp.table.blocks[info.block];
            let pos = blk.params.iter().position(|&x| x == i).expect("param in its block");
            // A parameter also shapes the rescaling of later positions in its block.
            self.sp.block_derived[info.block][pos..].iter().any(|&d| choices[d] == Consistency::Mixed)
        });
        widest(&mut mixed.into_iter()).or_else(|| widest(&mut self.sp.relevant.iter().copied()))
    }
}

fn run(sp: &SimplePmc, r0: &Region, h: Horizon, cfg: &PlaConfig, threshold: Option<f64>) -> Result<(PlaOutcome, Option<Decision>)> {
    if r0.lower.iter().zip(&r0.upper).any(|(l, u)| l > u) {
        return Err(Error::EmptyInterval("region has an empty side".into()));
    }
    let base: Vec<f64> = sp
        .table
        .params
        .iter()
        .enumerate()
        .map(|(i, p)| p.nominal.clamp(r0.lower[i], r0.upper[i]))
        .collect();
    let single = sp.single_occurrence();
    let mut s = Search { sp, h, cfg, eps_eval: cfg.eps * 0.1, best: f64::INFINITY, best_point: base.clone(), base, single };
    let slack = s.slack();

    let root = s.bound(r0)?;
    s.vertices(r0)?;
    let c = s.center(r0);
    s.consider(r0, c)?;
    let cp = s.choice_point(r0, &root.choices);
    s.consider(r0, cp)?;

    let mut heap = BinaryHeap::new();
    let mut next_id = 1;
    let mut regions = 1;
    heap.push(Queued { bound: root.bound - slack, id: 0, region: r0.clone(), choices: root.choices });
    let outcome = |s: &Search, lb: f64, regions: usize, inconclusive: bool| PlaOutcome {
        value: s.best,
        argmin: s.best_point.clone(),
        lower_bound: lb.min(s.best),
        regions,
        inconclusive,
    };
    loop {
        let Some(top) = heap.pop() else {
            let lb = s.best;
            let d = threshold.map(|t| if s.best >= t { Decision::AtLeast } else { Decision::Below });
            return Ok((outcome(&s, lb, regions, false), d));
        };
        let global_lb = top.bound;
        if let Some(t) = threshold {
            if s.best < t {
                return Ok((outcome(&s, global_lb, regions, false), Some(Decision::Below)));
            }
            if global_lb >= t {
                return Ok((outcome(&s, global_lb, regions, false), Some(Decision::AtLeast)));
            }
        }
        if s.best - global_lb <= cfg.eps {
            let d = threshold.map(|t| if s.best >= t { Decision::AtLeast } else { Decision::Below });
            return Ok((outcome(&s, global_lb, regions, false), d));
        }
        if regions >= cfg.max_regions {
            return Ok((outcome(&s, global_lb, regions, true), None));
        }
        let Some(dim) = s.split_dim(&top.region, &top.choices) else {
            // Degenerate box: its bound is already attained up to evaluation error.
            continue;
        };
        let (a, b) = top.region.split(dim);
        for child in [a, b] {
            regions += 1;
            let rel = s.bound(&child)?;
            let cp = s.choice_point(&child, &rel.choices);
            s.consider(&child, cp)?;
            let c = s.center(&child);
            s.consider(&child, c)?;
            let bound = rel.bound - slack;
            if bound < s.best - cfg.eps {
                heap.push(Queued { bound, id: next_id, region: child, choices: rel.choices });
                next_id += 1;
            }
        }
    }
}

/// Minimum entry value over `r0` to within `cfg.eps`, with the minimizing point.
pub fn pla_min(c: &ParametricMc, r0: &Region, h: Horizon, cfg: &PlaConfig) -> Result<PlaOutcome> {
    let sp = to_simple(c)?;
    pla_min_simple(&sp, r0, h, cfg)
}

pub fn pla_min_simple(sp: &SimplePmc, r0: &Region, h: Horizon, cfg: &PlaConfig) -> Result<PlaOutcome> {
    Ok(run(sp, r0, h, cfg, None)?.0)
}

/// Decides whether the minimum over `r0` is at least `threshold`, stopping as
/// soon as the bounds settle the question.
pub fn pla_decide(sp: &SimplePmc, r0: &Region, h: Horizon, cfg: &PlaConfig, threshold: f64) -> Result<(Decision, PlaOutcome)> {
    let (out, d) = run(sp, r0, h, cfg, Some(threshold))?;
    match d {
        Some(d) => Ok((d, out)),
        None => Err(Error::Inconclusive { budget: cfg.max_regions, lower: out.lower_bound, upper: out.value }),
    }
}
