//! Numerical solution of the relaxed problem over piecewise-constant
//! measure-valued controls, the sectioned density, and extraction of
//! classical controls when the optimal moments lie on the curve.

mod density;
mod extract;
mod integrate;
mod solve;
mod spec;

pub use density::{attainable_velocities, eval_density, Density, DensityRoute};
pub use extract::{extract_classical, simulate_controls, write_trajectory_csv, Extraction};
pub(crate) use integrate::rk4_step;
pub use integrate::{integrate_state, integrate_state_with, IntegrateOptions, Integration};
pub use solve::{solve_relaxed, SolverOptions, StartRecord, TrajectoryResult};
pub use spec::ProblemSpec;
