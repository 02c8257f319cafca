//! Random vertices of the deviation polytopes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{IntervalChain, MarkovChain, TwoStepIntervalMc};
use crate::error::{Error, Result};
use crate::pomdp::Pomdp;
use crate::robust::robust_backup_min;

/// Generator for sample `i` of a run seeded with `seed`. Independent of how
/// samples are scheduled across threads.
pub(crate) fn rng_for(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Random vertex of `{l ≤ p ≤ u, Σp = 1}`: greedy fill in a random order.
pub fn random_vertex<R: Rng>(lower: &[f64], upper: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let keys: Vec<f64> = (0..lower.len()).map(|_| rng.gen::<f64>()).collect();
    Ok(robust_backup_min(lower, upper, &keys)?.0)
}

/// One stationary kernel with every interval row at a random vertex.
pub fn ns_sample(c: &IntervalChain, seed: u64, i: u64) -> Result<MarkovChain> {
    let mut rng = rng_for(seed, i);
    let mut kernel = Vec::with_capacity(c.n_states());
    for (q, row) in c.rows.iter().enumerate() {
        if row.is_point() {
            kernel.push(row.nominal.clone());
        } else {
            let p = random_vertex(&row.lower, &row.upper, &mut rng).map_err(|_| Error::InfeasibleRow {
                row: q,
                lower_sum: row.lower.iter().sum(),
                upper_sum: row.upper.iter().sum(),
            })?;
            kernel.push(p);
        }
    }
    Ok(c.with_kernel(&kernel))
}

/// `n` point chains drawn from the vertices of a (repaired) interval chain.
pub fn sample_extrema_ns(c: &TwoStepIntervalMc, n: usize, seed: u64) -> impl Iterator<Item = Result<MarkovChain>> + '_ {
    (0..n as u64).map(move |i| ns_sample(&c.chain, seed, i))
}

/// A copy of `m` whose observation rows sit at random vertices of their
/// `delta` balls. Zero entries stay zero; positive ones are floored at `eps_p`.
pub fn sticky_sample(m: &Pomdp, delta: f64, eps_p: f64, seed: u64, i: u64) -> Result<Pomdp> {
    let mut rng = rng_for(seed, i);
    let mut out = m.clone();
    for a in 0..m.n_actions() {
        for s2 in 0..m.n_states() {
            let support = m.support(a, s2);
            if support.len() < 2 {
                continue;
            }
            let z: Vec<f64> = support.iter().map(|&o| m.z(a, s2, o)).collect();
            let lower: Vec<f64> = z.iter().map(|&p| (p - delta).max(eps_p)).collect();
            let upper: Vec<f64> = z.iter().map(|&p| (p + delta).min(1.0)).collect();
            if lower.iter().zip(&upper).any(|(l, u)| l > u) || lower.iter().sum::<f64>() > 1.0 + crate::pomdp::PROB_TOL {
                return Err(Error::EmptyInterval(format!("Z(·|{},{}) at delta {delta}", m.actions[a], m.states[s2])));
            }
            let p = random_vertex(&lower, &upper, &mut rng)?;
            for (&o, &v) in support.iter().zip(&p) {
                out.set_z(a, s2, o, v);
            }
        }
    }
    Ok(out)
}

/// `n` perturbed models with one fixed observation function each.
pub fn sample_extrema_sticky(m: &Pomdp, delta: f64, eps_p: f64, n: usize, seed: u64) -> impl Iterator<Item = Result<Pomdp>> + '_ {
    (0..n as u64).map(move |i| sticky_sample(m, delta, eps_p, seed, i))
}
