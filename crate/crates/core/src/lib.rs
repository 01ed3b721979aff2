//! Existence certificates for polynomial-in-control optimal control problems.
//!
//! The problems have the form
//!
//! ```text
//! minimize  ∫₀ᵀ c(x)·φ(u) dt   subject to  x' = Q(x) φ(u) + Q₀(x),  x(0) = x₀,  u(t) ∈ K
//! ```
//!
//! where φ is a fixed polynomial basis of the control. Relaxing controls to
//! probability measures turns the problem into a linear one over the moment
//! set `Λ = co φ(K)`. When every sectioned minimizer of `c·m` over
//! `{m ∈ Λ : Q m = ξ}` lies on the curve `φ(K)`, relaxed optima are classical
//! and the original problem has a solution.
//!
//! * [`moments`]: the moment curve, the moment set and finite-support measures.
//! * [`certificates`]: checkable sufficient conditions for that property.
//! * [`relaxed`]: numerical solution of the relaxed problem and extraction
//!   of classical controls.
//! * [`oracle`]: brute-force baselines used to validate the above.
//! * [`problem`]: the JSON problem-file format.

pub mod certificates;
pub mod error;
pub mod lp;
pub mod moments;
pub mod numeric;
pub mod oracle;
pub mod problem;
pub mod relaxed;

pub use error::{Error, Result};
