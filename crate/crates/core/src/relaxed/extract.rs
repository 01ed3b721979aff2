use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::relaxed::integrate::{integrate_from, IntegrateOptions, Integration};
use crate::relaxed::{ProblemSpec, TrajectoryResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Extraction {
    Success {
        controls: Vec<Vec<f64>>,
        classical_cost: f64,
        states: Vec<Vec<f64>>,
    },
    Failure {
        /// `(step, distance to the curve)` for every step above tolerance.
        offending: Vec<(usize, f64)>,
    },
}

impl Extraction {
    pub fn is_success(&self) -> bool {
        matches!(self, Extraction::Success { .. })
    }

    pub fn controls(&self) -> Option<&[Vec<f64>]> {
        match self {
            Extraction::Success { controls, .. } => Some(controls),
            Extraction::Failure { .. } => None,
        }
    }
}

/// Reads a classical control off a relaxed trajectory whose per-step
/// moments lie within `tol` of the curve, and re-simulates it.
pub fn extract_classical(
    spec: &ProblemSpec,
    traj: &TrajectoryResult,
    tol: f64,
) -> Result<Extraction> {
    let offending: Vec<(usize, f64)> = traj
        .distances
        .iter()
        .enumerate()
        .filter(|(_, d)| !(**d <= tol))
        .map(|(k, d)| (k, *d))
        .collect();
    if !offending.is_empty() {
        return Ok(Extraction::Failure { offending });
    }
    let sim = simulate_controls(spec, &traj.nearest)?;
    Ok(Extraction::Success {
        controls: traj.nearest.clone(),
        classical_cost: sim.cost,
        states: sim.states,
    })
}

/// Integrates a piecewise-constant classical control `u_k ∈ K`.
pub fn simulate_controls(spec: &ProblemSpec, controls: &[Vec<f64>]) -> Result<Integration> {
    if controls.is_empty() {
        return Err(Error::InvalidArgument("control path is empty".into()));
    }
    let mut moments = Vec::with_capacity(controls.len());
    for (k, u) in controls.iter().enumerate() {
        if !spec.k.contains(u, 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "control at step {k} is outside K"
            )));
        }
        moments.push(spec.basis.phi(u)?.0);
    }
    let raw: Vec<&[f64]> = moments.iter().map(|m| m.as_slice()).collect();
    let dt = spec.horizon / controls.len() as f64;
    let (states, step_costs) =
        integrate_from(spec, &spec.x0, 0, &raw, dt, &IntegrateOptions::default())?;
    Ok(Integration {
        cost: step_costs.iter().sum(),
        states,
        step_costs,
    })
}

/// Writes the trajectory as CSV: `t, x1..xN, m1..ms, dist_to_L, u` (or
/// `u1..un`). One row per step holding the state at the start of the step,
/// then a final row with the terminal state and empty moment columns. The
/// control columns are empty when extraction failed.
pub fn write_trajectory_csv<W: Write>(
    traj: &TrajectoryResult,
    extraction: Option<&Extraction>,
    out: W,
) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let n_state = traj.states[0].len();
    let s = traj.moments.first().map_or(0, |m| m.dim());
    let n_ctrl = traj.nearest.first().map_or(1, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n_state).map(|i| format!("x{i}")));
    header.extend((1..=s).map(|i| format!("m{i}")));
    header.push("dist_to_L".into());
    if n_ctrl == 1 {
        header.push("u".into());
    } else {
        header.extend((1..=n_ctrl).map(|i| format!("u{i}")));
    }
    w.write_record(&header).map_err(io)?;
    let controls = extraction.and_then(Extraction::controls);
    let fmt = |v: f64| format!("{v:.12e}");
    for k in 0..=traj.steps() {
        let mut row = vec![fmt(traj.times[k])];
        row.extend(traj.states[k].iter().map(|&v| fmt(v)));
        if k < traj.steps() {
            row.extend(traj.moments[k].as_slice().iter().map(|&v| fmt(v)));
            row.push(fmt(traj.distances[k]));
            match controls {
                Some(c) => row.extend(c[k].iter().map(|&v| fmt(v))),
                None => row.extend(std::iter::repeat_n(String::new(), n_ctrl)),
            }
        } else {
            row.extend(std::iter::repeat_n(String::new(), s + 1 + n_ctrl));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}
