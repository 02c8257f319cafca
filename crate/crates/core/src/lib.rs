//! Robustness of finite-state-controller policies on POMDPs against
//! inaccurate observation functions.
//!
//! Given a model, a controller and an allowed value degradation, the search
//! finds the largest deviation `δ` of the observation probabilities under
//! which the controller's value stays within the allowance. Two deviation
//! models are supported: a single perturbed observation function fixed for
//! the whole run (sticky, solved by parameter lifting over a parametric
//! chain) and one that may change every step (non-sticky, solved by interval
//! policy evaluation over a two-step interval chain).

pub mod chain;
pub mod error;
pub mod eval;
pub mod fsc;
pub mod io;
pub mod lifting;
pub mod pomdp;
pub mod robust;
pub mod search;
pub mod validate;

pub use error::{Error, ErrorClass, Result};
pub use eval::{fsc_value, Horizon};
pub use fsc::Fsc;
pub use pomdp::{Belief, Pomdp};
pub use search::{run_query, RobustnessQuery, RobustnessResult, Threshold, Variant};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "OBSROBUST_THREADS";

/// Sizes the global rayon pool from `OBSROBUST_THREADS` when set.
/// Returns the configured count, if any. Later calls are no-ops.
pub fn configure_threads() -> Option<usize> {
    let n = std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok()?;
    Some(n)
}
