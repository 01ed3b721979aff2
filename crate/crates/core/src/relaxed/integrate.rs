use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::moments::{lambda_contains, MomentVector, DEFAULT_MEMBERSHIP_TOL};
use crate::relaxed::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    /// RK4 steps per piecewise-constant interval.
    pub substeps: usize,
    /// Sup-norm bound on the state beyond which integration reports divergence.
    pub bound: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            substeps: 1,
            bound: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Integration {
    /// `x(t_0), …, x(t_M)`.
    pub states: Vec<Vec<f64>>,
    /// Cost accumulated on each interval.
    pub step_costs: Vec<f64>,
    pub cost: f64,
}

/// Integrates `x' = Q(x) m_k + Q₀(x)` with `m` constant on each of the
/// `M = path.len()` equal intervals of `[0, T]`, and the cost `c(x)·m_k`
/// with the same RK4 stages.
pub fn integrate_state(spec: &ProblemSpec, path: &[MomentVector]) -> Result<Integration> {
    integrate_state_with(spec, path, &IntegrateOptions::default())
}

pub fn integrate_state_with(
    spec: &ProblemSpec,
    path: &[MomentVector],
    opts: &IntegrateOptions,
) -> Result<Integration> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("moment path is empty".into()));
    }
    for (step, m) in path.iter().enumerate() {
        check_dim(spec.basis.moment_dim(), m.dim(), "moment vector")?;
        if !lambda_contains(&spec.basis, &spec.k, m, DEFAULT_MEMBERSHIP_TOL)? {
            return Err(Error::OutsideMomentSet { step });
        }
    }
    let raw: Vec<&[f64]> = path.iter().map(|m| m.as_slice()).collect();
    let dt = spec.horizon / path.len() as f64;
    let (states, step_costs) = integrate_from(spec, &spec.x0, 0, &raw, dt, opts)?;
    Ok(Integration {
        cost: step_costs.iter().sum(),
        states,
        step_costs,
    })
}

/// One RK4 step of the augmented system `(x, J)`.
pub(crate) fn rk4_step(spec: &ProblemSpec, x: &[f64], m: &[f64], h: f64) -> (Vec<f64>, f64) {
    let eval = |y: &[f64]| (spec.velocity(y, m), spec.running_cost(y, m));
    let shifted =
        |k: &[f64], a: f64| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect() };
    let (k1, j1) = eval(x);
    let (k2, j2) = eval(&shifted(&k1, 0.5 * h));
    let (k3, j3) = eval(&shifted(&k2, 0.5 * h));
    let (k4, j4) = eval(&shifted(&k3, h));
    let next = (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    (next, h / 6.0 * (j1 + 2.0 * j2 + 2.0 * j3 + j4))
}

/// Integrates from state `x` at interval index `first` through `path`.
/// Returns `path.len() + 1` states and the per-interval costs.
pub(crate) fn integrate_from(
    spec: &ProblemSpec,
    x: &[f64],
    first: usize,
    path: &[&[f64]],
    dt: f64,
    opts: &IntegrateOptions,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let sub = opts.substeps.max(1);
    let h = dt / sub as f64;
    let mut states = Vec::with_capacity(path.len() + 1);
    let mut costs = Vec::with_capacity(path.len());
    let mut cur = x.to_vec();
    states.push(cur.clone());
    for (k, m) in path.iter().enumerate() {
        let mut acc = 0.0;
        for j in 0..sub {
            let (next, dj) = rk4_step(spec, &cur, m, h);
            let norm = next.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if !(norm <= opts.bound) || !dj.is_finite() {
                return Err(Error::Divergence {
                    time: (first + k) as f64 * dt + (j + 1) as f64 * h,
                    norm,
                });
            }
            acc += dj;
            cur = next;
        }
        states.push(cur.clone());
        costs.push(acc);
    }
    Ok((states, costs))
}
