//! Minimum value of a parametric chain over a parameter box.

mod pla;
mod simple;

pub use pla::{pla_decide, pla_min, pla_min_simple, Decision, PlaConfig, PlaOutcome};
pub use simple::{relax_min, to_simple, AuxNode, Choice, Consistency, DerivedParam, RelaxOutcome, SimplePmc, SimpleState, Target};
