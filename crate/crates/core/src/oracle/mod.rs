//! Brute-force baselines: grid dynamic programming for the classical
//! problem, exhaustive sectioned minimization over the moment set, scalar
//! argmin scans and the orientor-field convexity probe.

mod argmin;
mod dp;
mod orientor;
mod section;

pub use argmin::{unique_argmin_g, ArgminSet, DualMultiplier};
pub use dp::{dp_value_original, DpConfig, DpResult};
pub use orientor::{orientor_convexity_probe, OrientorReport};
pub use section::{constrained_min_over_lambda, SectionMinimizer, SectionMinimum};
