//! POMDP model, beliefs and model diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simplex tolerance for all probability rows.
pub const PROB_TOL: f64 = 1e-9;

/// Dense tabular POMDP.
///
/// Tensors are stored flat:
/// `transition[(s * |A| + a) * |S| + s']`, `observation[(a * |S| + s') * |O| + o]`,
/// `reward[s * |A| + a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pomdp {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub transition: Vec<f64>,
    pub observation: Vec<f64>,
    pub reward: Vec<f64>,
    pub discount: f64,
    pub initial: Vec<f64>,
}

impl Pomdp {
    /// All-zero model with the given index sets and a uniform initial belief.
    pub fn zeros(states: Vec<String>, actions: Vec<String>, observations: Vec<String>, discount: f64) -> Self {
        let (ns, na, no) = (states.len(), actions.len(), observations.len());
        let initial = if ns == 0 { vec![] } else { vec![1.0 / ns as f64; ns] };
        Pomdp {
            states,
            actions,
            observations,
            transition: vec![0.0; ns * na * ns],
            observation: vec![0.0; na * ns * no],
            reward: vec![0.0; ns * na],
            discount,
            initial,
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }
    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }
    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    #[inline]
    pub fn t(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transition[(s * self.n_actions() + a) * self.n_states() + s2]
    }
    #[inline]
    pub fn z(&self, a: usize, s2: usize, o: usize) -> f64 {
        self.observation[(a * self.n_states() + s2) * self.n_observations() + o]
    }
    #[inline]
    pub fn r(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions() + a]
    }

    pub fn set_t(&mut self, s: usize, a: usize, s2: usize, p: f64) {
        let (na, ns) = (self.n_actions(), self.n_states());
        self.transition[(s * na + a) * ns + s2] = p;
    }
    pub fn set_z(&mut self, a: usize, s2: usize, o: usize, p: f64) {
        let (ns, no) = (self.n_states(), self.n_observations());
        self.observation[(a * ns + s2) * no + o] = p;
    }
    pub fn set_r(&mut self, s: usize, a: usize, r: f64) {
        let na = self.n_actions();
        self.reward[s * na + a] = r;
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let ns = self.n_states();
        let start = (s * self.n_actions() + a) * ns;
        &self.transition[start..start + ns]
    }

    pub fn observation_row(&self, a: usize, s2: usize) -> &[f64] {
        let no = self.n_observations();
        let start = (a * self.n_states() + s2) * no;
        &self.observation[start..start + no]
    }

    /// Observations with positive nominal probability after `a` into `s2`, ascending.
    pub fn support(&self, a: usize, s2: usize) -> Vec<usize> {
        self.observation_row(a, s2)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(o, _)| o)
            .collect()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|x| x == name)
    }
    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|x| x == name)
    }
    pub fn observation_index(&self, name: &str) -> Option<usize> {
        self.observations.iter().position(|x| x == name)
    }

    /// Smallest positive observation probability in the model.
    pub fn min_positive_observation(&self) -> f64 {
        self.observation.iter().copied().filter(|&p| p > 0.0).fold(1.0, f64::min)
    }

    pub fn with_discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    /// Validates the model and renormalizes rows that deviate from 1 by at most
    /// the simplex tolerance. Rows already summing to 1 are left bit-identical.
    pub fn checked(mut self) -> Result<Self> {
        let violations = validate_model(&self);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidModel(text.join("; ")));
        }
        let (ns, na, no) = (self.n_states(), self.n_actions(), self.n_observations());
        for chunk in self.transition.chunks_mut(ns.max(1)) {
            renormalize(chunk);
        }
        if no > 0 {
            for chunk in self.observation.chunks_mut(no) {
                renormalize(chunk);
            }
        }
        renormalize(&mut self.initial);
        debug_assert_eq!(self.transition.len(), ns * na * ns);
        Ok(self)
    }
}

fn renormalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 && (sum - 1.0).abs() > 1e-15 {
        row.iter_mut().for_each(|p| *p /= sum);
    }
}

/// A distribution over states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief(pub Vec<f64>);

impl Belief {
    pub fn point(n: usize, s: usize) -> Self {
        let mut v = vec![0.0; n];
        v[s] = 1.0;
        Belief(v)
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|&p| p >= 0.0 && p.is_finite())
            && (self.0.iter().sum::<f64>() - 1.0).abs() <= PROB_TOL
    }
}

/// Bayesian belief update after taking `a` and observing `o`.
pub fn belief_update(b: &Belief, a: usize, o: usize, m: &Pomdp) -> Result<Belief> {
    let ns = m.n_states();
    if b.0.len() != ns || a >= m.n_actions() || o >= m.n_observations() {
        return Err(Error::IndexMismatch(format!(
            "belief of length {} with action {a} and observation {o}",
            b.0.len()
        )));
    }
    let mut next = vec![0.0; ns];
    for (s, &bs) in b.0.iter().enumerate() {
        if bs == 0.0 {
            continue;
        }
        for (s2, &p) in m.transition_row(s, a).iter().enumerate() {
            next[s2] += p * bs;
        }
    }
    for (s2, v) in next.iter_mut().enumerate() {
        *v *= m.z(a, s2, o);
    }
    let norm: f64 = next.iter().sum();
    if norm <= 0.0 {
        return Err(Error::ImpossibleObservation { action: a, observation: o });
    }
    next.iter_mut().for_each(|v| *v /= norm);
    Ok(Belief(next))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    Shape(String),
    TransitionRow { sum: f64 },
    ObservationRow { sum: f64 },
    EntryOutOfRange { value: f64 },
    InitialSum { sum: f64 },
    NegativeInitial { value: f64 },
    Discount { value: f64 },
    NonFiniteReward { value: f64 },
}

/// A single invariant violation together with a human-readable location.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::Shape(msg) => write!(f, "{}: {msg}", self.location),
            ViolationKind::TransitionRow { sum } => write!(f, "{}: transition row sums to {sum}", self.location),
            ViolationKind::ObservationRow { sum } => write!(f, "{}: observation row sums to {sum}", self.location),
            ViolationKind::EntryOutOfRange { value } => write!(f, "{}: probability {value} outside [0,1]", self.location),
            ViolationKind::InitialSum { sum } => write!(f, "{}: initial belief sums to {sum}", self.location),
            ViolationKind::NegativeInitial { value } => write!(f, "{}: negative initial probability {value}", self.location),
            ViolationKind::Discount { value } => write!(f, "{}: discount {value} outside [0,1]", self.location),
            ViolationKind::NonFiniteReward { value } => write!(f, "{}: non-finite reward {value}", self.location),
        }
    }
}

/// Lists every simplex and range violation. Never fails.
pub fn validate_model(m: &Pomdp) -> Vec<Violation> {
    let mut out = Vec::new();
    let (ns, na, no) = (m.n_states(), m.n_actions(), m.n_observations());
    let shape_ok = m.transition.len() == ns * na * ns
        && m.observation.len() == na * ns * no
        && m.reward.len() == ns * na
        && m.initial.len() == ns;
    if !shape_ok {
        out.push(Violation {
            kind: ViolationKind::Shape("tensor sizes do not match index sets".into()),
            location: "model".into(),
        });
        return out;
    }
    if !(0.0..=1.0).contains(&m.discount) {
        out.push(Violation { kind: ViolationKind::Discount { value: m.discount }, location: "discount".into() });
    }
    for s in 0..ns {
        for a in 0..na {
            let row = m.transition_row(s, a);
            let loc = format!("T(s={}, a={})", m.states[s], m.actions[a]);
            if let Some(&bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                out.push(Violation { kind: ViolationKind::EntryOutOfRange { value: bad }, location: loc });
                continue;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                out.push(Violation { kind: ViolationKind::TransitionRow { sum }, location: loc });
            }
            let r = m.r(s, a);
            if !r.is_finite() {
                out.push(Violation {
                    kind: ViolationKind::NonFiniteReward { value: r },
                    location: format!("R(s={}, a={})", m.states[s], m.actions[a]),
                });
            }
        }
    }
    for a in 0..na {
        for s2 in 0..ns {
            let row = m.observation_row(a, s2);
            let loc = format!("Z(a={}, s'={})", m.actions[a], m.states[s2]);
            if let Some(&bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                out.push(Violation { kind: ViolationKind::EntryOutOfRange { value: bad }, location: loc });
                continue;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                out.push(Violation { kind: ViolationKind::ObservationRow { sum }, location: loc });
            }
        }
    }
    let mut negative = false;
    for (s, &p) in m.initial.iter().enumerate() {
        if p < 0.0 || !p.is_finite() {
            negative = true;
            out.push(Violation {
                kind: ViolationKind::NegativeInitial { value: p },
                location: format!("b0(s={})", m.states[s]),
            });
        }
    }
    let sum: f64 = m.initial.iter().sum();
    if !negative && (sum - 1.0).abs() > PROB_TOL {
        out.push(Violation { kind: ViolationKind::InitialSum { sum }, location: "b0".into() });
    }
    out
}
