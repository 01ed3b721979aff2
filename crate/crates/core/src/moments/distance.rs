use crate::error::{check_dim, Result};
use crate::moments::{ControlBasis, ControlSet, MomentVector};
use crate::numeric::{golden_min, linspace};

/// Scan resolution for nearest-point searches on the moment curve.
pub const NEAREST_GRID: usize = 2001;

/// Nearest point of the curve `L = φ(K)` to `m`: returns the parameter `u`
/// and the Euclidean distance `‖m − φ(u)‖`.
///
/// A 2001-point scan is refined by golden section around the best cell; ties
/// go to the smaller parameter. For the quadratic-diagonal basis the squared
/// distance separates by coordinate, so each axis is searched on its own.
pub fn nearest_on_curve(
    basis: &ControlBasis,
    k: &ControlSet,
    m: &MomentVector,
) -> Result<(Vec<f64>, f64)> {
    check_dim(basis.moment_dim(), m.dim(), "moment vector")?;
    k.check_basis(basis)?;
    let m = m.as_slice();
    match *basis {
        ControlBasis::Power { .. } => {
            let (lo, hi) = (k.lower()[0], k.upper()[0]);
            let sq = |t: f64| {
                let mut p = t;
                let mut acc = 0.0;
                for &mi in m {
                    acc += (mi - p) * (mi - p);
                    p *= t;
                }
                acc
            };
            let (u, d2) = scan_refine(sq, lo, hi);
            Ok((vec![u], d2.max(0.0).sqrt()))
        }
        ControlBasis::QuadraticDiag { n } => {
            let mut u = Vec::with_capacity(n);
            let mut total = 0.0;
            for i in 0..n {
                let (a, b) = (m[i], m[n + i]);
                let sq = |t: f64| (a - t) * (a - t) + (b - t * t) * (b - t * t);
                let (ui, d2) = scan_refine(sq, k.lower()[i], k.upper()[i]);
                u.push(ui);
                total += d2.max(0.0);
            }
            Ok((u, total.sqrt()))
        }
    }
}

/// Euclidean distance from `m` to the moment curve `L`.
pub fn distance_to_curve(basis: &ControlBasis, k: &ControlSet, m: &MomentVector) -> Result<f64> {
    nearest_on_curve(basis, k, m).map(|(_, d)| d)
}

fn scan_refine<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let grid = linspace(lo, hi, NEAREST_GRID);
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for (i, &t) in grid.iter().enumerate() {
        let v = f(t);
        // strict comparison keeps the smallest parameter on ties
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let (t, v) = golden_min(&f, a, b, 1e-13 * (1.0 + hi.abs().max(lo.abs())));
    if v < best_v {
        (t, v)
    } else {
        (grid[best], best_v)
    }
}
