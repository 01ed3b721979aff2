use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::linspace;
use crate::relaxed::{rk4_step, simulate_controls, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpConfig {
    /// State grid range; `None` takes the reachable range from the pre-scan,
    /// widened by 5%.
    pub state_range: Option<(f64, f64)>,
    pub state_points: usize,
    /// Points per control axis.
    pub control_points: usize,
    pub steps: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            state_range: None,
            state_points: 401,
            control_points: 41,
            steps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpResult {
    /// Interpolated value function at `x0`.
    pub value: f64,
    /// Cost of the greedy forward path, simulated exactly.
    pub path_cost: f64,
    pub controls: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    pub state_range: (f64, f64),
    /// Reachable range found by the pre-scan.
    pub reachable: (f64, f64),
}

struct Grid {
    lo: f64,
    step: f64,
    n: usize,
}

impl Grid {
    fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.lo + self.step * (self.n - 1) as f64
        } else {
            self.lo + self.step * i as f64
        }
    }

    /// Linear interpolation, constant beyond the ends.
    fn interp(&self, values: &[f64], x: f64) -> f64 {
        let pos = ((x - self.lo) / self.step).clamp(0.0, (self.n - 1) as f64);
        let i = (pos.floor() as usize).min(self.n - 2);
        let f = pos - i as f64;
        values[i] * (1.0 - f) + values[i + 1] * f
    }
}

/// Backward value iteration for the classical problem with a scalar state,
/// piecewise-constant controls on a grid over `K`, and one RK4 step per
/// interval. The dynamics are autonomous, so one transition table serves
/// every step.
pub fn dp_value_original(spec: &ProblemSpec, cfg: &DpConfig) -> Result<DpResult> {
    if spec.state_dim() != 1 {
        return Err(Error::Unsupported(format!(
            "grid dynamic programming needs a scalar state, got N = {}",
            spec.state_dim()
        )));
    }
    if cfg.steps == 0 || cfg.state_points < 2 || cfg.control_points < 2 {
        return Err(Error::InvalidArgument(
            "steps >= 1, state_points >= 2 and control_points >= 2 are required".into(),
        ));
    }
    let dt = spec.horizon / cfg.steps as f64;
    let controls = spec.k.grid(cfg.control_points);
    let moments: Vec<Vec<f64>> = controls.iter().map(|u| spec.basis.phi_raw(u)).collect();
    let step = |x: f64, m: &[f64]| rk4_step(spec, &[x], m, dt);

    // Reachability pre-scan over interval hulls.
    let x0 = spec.x0[0];
    let (mut rlo, mut rhi) = (x0, x0);
    for _ in 0..cfg.steps {
        let samples: Vec<f64> = if rhi > rlo {
            linspace(rlo, rhi, 51)
        } else {
            vec![rlo]
        };
        let (mut nlo, mut nhi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in &samples {
            for m in &moments {
                let (y, _) = step(x, m);
                if !y[0].is_finite() {
                    return Err(Error::Divergence {
                        time: spec.horizon,
                        norm: f64::INFINITY,
                    });
                }
                nlo = nlo.min(y[0]);
                nhi = nhi.max(y[0]);
            }
        }
        rlo = rlo.min(nlo);
        rhi = rhi.max(nhi);
    }
    let pad = 0.05 * (rhi - rlo).max(1e-6);
    let (glo, ghi) = match cfg.state_range {
        Some((lo, hi)) => {
            if rlo < lo || rhi > hi {
                return Err(Error::GridEscape {
                    suggested_lo: lo.min(rlo - pad),
                    suggested_hi: hi.max(rhi + pad),
                });
            }
            (lo, hi)
        }
        None => (rlo - pad, rhi + pad),
    };
    let grid = Grid {
        lo: glo,
        step: (ghi - glo) / (cfg.state_points - 1) as f64,
        n: cfg.state_points,
    };

    let table: Vec<Vec<(f64, f64)>> = (0..grid.n)
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            moments
                .iter()
                .map(|m| {
                    let (y, c) = step(x, m);
                    (y[0], c)
                })
                .collect()
        })
        .collect();

    let mut values_by_step = vec![vec![0.0; grid.n]; cfg.steps + 1];
    for k in (0..cfg.steps).rev() {
        let next = &values_by_step[k + 1];
        let cur: Vec<f64> = table
            .par_iter()
            .map(|row| {
                row.iter()
                    .map(|&(y, c)| c + grid.interp(next, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        values_by_step[k] = cur;
    }
    let v0 = grid.interp(&values_by_step[0], x0);

    // Greedy forward pass against the stored value functions.
    let mut x = x0;
    let mut path = Vec::with_capacity(cfg.steps);
    for k in 0..cfg.steps {
        let next = &values_by_step[k + 1];
        let mut best = (f64::INFINITY, 0);
        for (j, m) in moments.iter().enumerate() {
            let (y, c) = step(x, m);
            let v = c + grid.interp(next, y[0]);
            if v < best.0 {
                best = (v, j);
            }
        }
        path.push(controls[best.1].clone());
        x = step(x, &moments[best.1]).0[0];
    }
    let sim = simulate_controls(spec, &path)?;
    Ok(DpResult {
        value: v0,
        path_cost: sim.cost,
        controls: path,
        states: sim.states,
        state_range: (glo, ghi),
        reachable: (rlo, rhi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{ControlBasis, ControlSet};

    fn scalar(basis: usize, c: Vec<f64>, q: Vec<f64>, k: (f64, f64)) -> ProblemSpec {
        ProblemSpec::constant_scalar(
            ControlBasis::power(basis).unwrap(),
            ControlSet::interval(k.0, k.1).unwrap(),
            c,
            q,
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn state_independent_costs() {
        let ex1 = scalar(2, vec![1.0, 1.0], vec![2.0, 1.0], (-1.0, 1.0));
        let r = dp_value_original(&ex1, &DpConfig::default()).unwrap();
        assert!((r.value + 0.25).abs() < 1e-2, "{}", r.value);
        assert!(r.controls.iter().all(|u| (u[0] + 0.5).abs() < 1e-12));
        let ex2 = scalar(3, vec![0.0, 1.0, 1.0], vec![0.0, 2.0, 1.0], (0.5, 1.5));
        let r = dp_value_original(&ex2, &DpConfig::default()).unwrap();
        assert!((r.value - 0.375).abs() < 1e-9, "{}", r.value);
        let zero = scalar(2, vec![0.0, 0.0], vec![2.0, 1.0], (-1.0, 1.0));
        assert_eq!(
            dp_value_original(&zero, &DpConfig::default())
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn narrow_grid_escapes() {
        let ex1 = scalar(2, vec![1.0, 1.0], vec![2.0, 1.0], (-1.0, 1.0));
        let cfg = DpConfig {
            state_range: Some((-0.1, 0.1)),
            ..DpConfig::default()
        };
        match dp_value_original(&ex1, &cfg) {
            Err(Error::GridEscape {
                suggested_lo,
                suggested_hi,
            }) => {
                assert!(suggested_lo <= -1.0 && suggested_hi >= 3.0)
            }
            other => panic!("{other:?}"),
        }
    }
}
