use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluation of the feasibility function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub delta: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbsOutcome {
    pub delta: f64,
    /// `b0` was feasible, so no bisection ran.
    pub saturated: bool,
    pub trace: Vec<Step>,
}

/// Memoizing wrapper so a search never evaluates the same point twice.
pub struct Memo<F> {
    f: F,
    seen: Vec<Step>,
}

impl<F: FnMut(f64) -> Result<f64>> Memo<F> {
    pub fn new(f: F) -> Self {
        Memo { f, seen: Vec::new() }
    }

    pub fn eval(&mut self, delta: f64) -> Result<f64> {
        if let Some(s) = self.seen.iter().find(|s| s.delta.to_bits() == delta.to_bits()) {
            return Ok(s.f);
        }
        let v = (self.f)(delta)?;
        self.seen.push(Step { delta, f: v });
        Ok(v)
    }
}

/// Largest feasible point of a monotone feasibility function, to within `eps`.
///
/// `f(δ) ≤ 0` means feasible. A zero at the midpoint moves the lower end up
/// instead of terminating.
pub fn mbs<F>(f: F, a0: f64, b0: f64, eps: f64) -> Result<MbsOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut m = Memo::new(f);
    let out = mbs_memo(&mut m, a0, b0, eps)?;
    Ok(out)
}

pub fn mbs_memo<F>(m: &mut Memo<F>, a0: f64, b0: f64, eps: f64) -> Result<MbsOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a0 <= b0) || !(eps > 0.0) {
        return Err(Error::InvalidQuery(format!("bisection bounds [{a0}, {b0}] with tolerance {eps}")));
    }
    let mut trace = Vec::new();
    let fa = m.eval(a0)?;
    trace.push(Step { delta: a0, f: fa });
    if fa > 0.0 {
        return Err(Error::PreconditionViolated { a0, value: fa });
    }
    let fb = m.eval(b0)?;
    trace.push(Step { delta: b0, f: fb });
    if fb <= 0.0 {
        return Ok(MbsOutcome { delta: b0, saturated: true, trace });
    }
    let (mut a, mut b) = (a0, b0);
    while b - a > eps {
        let c = 0.5 * (a + b);
        let fc = m.eval(c)?;
        trace.push(Step { delta: c, f: fc });
        if fc <= 0.0 {
            a = c;
        } else {
            b = c;
        }
    }
    Ok(MbsOutcome { delta: a, saturated: false, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_root() {
        let out = mbs(|d| Ok(d - 0.3), 0.0, 1.0, 1e-7).unwrap();
        assert!(out.delta <= 0.3 && out.delta >= 0.3 - 1e-7);
        assert!(!out.saturated);
    }

    #[test]
    fn all_feasible_saturates() {
        let out = mbs(|_| Ok(-1.0), 0.0, 1.0, 1e-7).unwrap();
        assert_eq!(out.delta, 1.0);
        assert!(out.saturated);
        assert_eq!(out.trace.len(), 2);
    }

    #[test]
    fn zero_plateau_moves_lower_end() {
        let out = mbs(|d| Ok(if d <= 0.5 { 0.0 } else { 1.0 }), 0.0, 1.0, 1e-7).unwrap();
        assert!(out.delta <= 0.5 && out.delta >= 0.5 - 1e-7);
    }

    #[test]
    fn infeasible_start_rejected() {
        assert!(matches!(mbs(|_| Ok(1.0), 0.0, 1.0, 1e-7), Err(Error::PreconditionViolated { .. })));
    }

    #[test]
    fn memo_skips_repeats() {
        let mut calls = 0;
        let mut m = Memo::new(|d| {
            calls += 1;
            Ok(d)
        });
        m.eval(0.25).unwrap();
        m.eval(0.25).unwrap();
        drop(m);
        assert_eq!(calls, 1);
    }
}
