use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::moments::{ControlBasis, ControlSet};
use crate::numeric::{golden_min, linspace};

/// Multiplier attached to the velocity constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualMultiplier {
    pub eta: Vec<f64>,
}

impl DualMultiplier {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("multiplier must be finite".into()));
        }
        Ok(DualMultiplier { eta })
    }

    pub fn scalar(eta: f64) -> Result<Self> {
        Self::new(vec![eta])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgminSet {
    /// Minimizing points, ascending.
    pub points: Vec<f64>,
    pub min_value: f64,
    /// Spread of `points` in grid cells.
    pub diameter_cells: f64,
    /// Groups of points separated by more than two cells.
    pub clusters: usize,
}

/// Minimizers of `g(t) = (c + ηq)·φ(t)` over `K`: grid points within
/// `1e-12` of the minimum together with the golden-section refinements of the
/// discrete local minima.
pub fn unique_argmin_g(
    c: &[f64],
    q: &[f64],
    basis: &ControlBasis,
    k: &ControlSet,
    eta: &DualMultiplier,
    grid_n: usize,
) -> Result<ArgminSet> {
    let (a, b) = k
        .interval_bounds()
        .ok_or_else(|| Error::Unsupported("the argmin scan needs a scalar control".into()))?;
    let s = basis.moment_dim();
    check_dim(s, c.len(), "cost vector")?;
    check_dim(s, q.len(), "dynamics row")?;
    check_dim(1, eta.eta.len(), "multiplier")?;
    if grid_n < 3 {
        return Err(Error::InvalidArgument("grid_n must be at least 3".into()));
    }
    let e = eta.eta[0];
    let dir: Vec<f64> = c.iter().zip(q).map(|(ci, qi)| ci + e * qi).collect();
    let g = |t: f64| -> f64 {
        basis
            .phi_raw(&[t])
            .iter()
            .zip(&dir)
            .map(|(p, d)| p * d)
            .sum()
    };
    let grid = linspace(a, b, grid_n);
    let h = (b - a) / (grid_n - 1) as f64;
    let values: Vec<f64> = grid.iter().map(|&t| g(t)).collect();

    let mut refined: Vec<(f64, f64)> = Vec::new();
    for i in 0..grid_n {
        let left = if i > 0 { values[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < grid_n {
            values[i + 1]
        } else {
            f64::INFINITY
        };
        if values[i] <= left && values[i] <= right {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(grid_n - 1)];
            refined.push(golden_min(g, lo, hi, 1e-13 * (1.0 + a.abs().max(b.abs()))));
        }
    }
    let min_value = refined
        .iter()
        .map(|r| r.1)
        .chain(values.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-12;
    let mut points: Vec<f64> = refined
        .iter()
        .filter(|r| r.1 <= min_value + tol)
        .map(|r| r.0)
        .chain(
            grid.iter()
                .zip(&values)
                .filter(|(_, v)| **v <= min_value + tol)
                .map(|(t, _)| *t),
        )
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
    let diameter_cells = (points[points.len() - 1] - points[0]) / h;
    let clusters = 1 + points.windows(2).filter(|w| w[1] - w[0] > 2.0 * h).count();
    Ok(ArgminSet {
        points,
        min_value,
        diameter_cells,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(c: [f64; 2], q: [f64; 2], eta: f64) -> ArgminSet {
        unique_argmin_g(
            &c,
            &q,
            &ControlBasis::power(2).unwrap(),
            &ControlSet::interval(-1.0, 1.0).unwrap(),
            &DualMultiplier::scalar(eta).unwrap(),
            2001,
        )
        .unwrap()
    }

    #[test]
    fn vertex_examples() {
        let r = run([-2.0, 1.0], [1.0, 2.0], 0.0);
        assert_eq!(r.points, vec![1.0]);
        let r = run([-2.0, 1.0], [1.0, 2.0], 1.0);
        assert!(r.points.iter().all(|t| (t - 1.0 / 6.0).abs() < 1e-6));
        assert!(r.diameter_cells <= 2.0 && r.clusters == 1);
        let r = run([1.0, 0.0], [0.0, 1.0], 0.0);
        assert_eq!(r.points, vec![-1.0]);
    }

    #[test]
    fn symmetric_pair_has_two_clusters() {
        // g(t) = -t² on [-1, 1]
        let r = run([0.0, -1.0], [1.0, 0.0], 0.0);
        assert_eq!(r.clusters, 2);
        assert!(r.diameter_cells > 1000.0);
    }
}
