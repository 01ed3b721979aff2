use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::moments::{distance_to_curve, ControlBasis, ControlSet, MomentVector};

/// Constraint residual and value gap within which candidates are kept.
const KEEP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionMinimizer {
    pub m: MomentVector,
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub distance_to_curve: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionMinimum {
    pub value: f64,
    /// Distinct minimizing moment vectors.
    pub minimizers: Vec<SectionMinimizer>,
    /// Largest distance from a chord between neighbouring grid atoms to the
    /// curve: the distance a grid-restricted minimizer may show even when the
    /// exact minimizer lies on the curve.
    pub chord_resolution: f64,
    pub candidates: usize,
}

/// Brute force over measures with at most `N + 1` atoms on a grid of `K`
/// (`atom_grid_n` points per axis): for every atom subset, the weights are
/// fixed by `Σ w = 1`, `Q Σ w φ(u) = ξ`. Keeps every feasible candidate
/// within tolerance of the minimal value.
pub fn constrained_min_over_lambda(
    c: &[f64],
    q: &DMatrix<f64>,
    xi: &[f64],
    basis: &ControlBasis,
    k: &ControlSet,
    atom_grid_n: usize,
) -> Result<SectionMinimum> {
    let s = basis.moment_dim();
    check_dim(s, c.len(), "cost vector")?;
    check_dim(s, q.ncols(), "columns of Q")?;
    check_dim(q.nrows(), xi.len(), "velocity")?;
    k.check_basis(basis)?;
    let big_n = q.nrows();
    let grid = k.grid(atom_grid_n);
    let phis: Vec<Vec<f64>> = grid.iter().map(|u| basis.phi_raw(u)).collect();
    let images: Vec<Vec<f64>> = phis
        .iter()
        .map(|p| {
            (0..big_n)
                .map(|r| (0..s).map(|j| q[(r, j)] * p[j]).sum())
                .collect()
        })
        .collect();
    let costs: Vec<f64> = phis
        .iter()
        .map(|p| p.iter().zip(c).map(|(a, b)| a * b).sum())
        .collect();

    // Candidates: (value, atom indices, weights).
    let mut cands: Vec<(f64, Vec<usize>, Vec<f64>)> = Vec::new();
    for size in 1..=big_n + 1 {
        let found: Vec<(f64, Vec<usize>, Vec<f64>)> = (0..grid.len())
            .into_par_iter()
            .flat_map_iter(|first| {
                let mut out = Vec::new();
                let mut idx = vec![first];
                subsets_from(&mut idx, size, grid.len(), &mut |set| {
                    if let Some(w) = solve_weights(set, &images, xi) {
                        let v = set.iter().zip(&w).map(|(&i, wi)| wi * costs[i]).sum();
                        out.push((v, set.to_vec(), w));
                    }
                });
                out.into_iter()
            })
            .collect();
        cands.extend(found);
    }
    if cands.is_empty() {
        let attainable = (0..big_n)
            .map(|r| {
                images
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), im| {
                        (lo.min(im[r]), hi.max(im[r]))
                    })
            })
            .collect();
        return Err(Error::Infeasible { attainable });
    }
    let best = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let mut minimizers: Vec<SectionMinimizer> = Vec::new();
    let mut keep: Vec<&(f64, Vec<usize>, Vec<f64>)> =
        cands.iter().filter(|c| c.0 <= best + KEEP_TOL).collect();
    keep.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    for (_, set, w) in keep {
        let mut m = vec![0.0; s];
        for (&i, wi) in set.iter().zip(w) {
            for j in 0..s {
                m[j] += wi * phis[i][j];
            }
        }
        let m = MomentVector(m);
        if minimizers.iter().any(|e| e.m.distance(&m) <= KEEP_TOL) {
            continue;
        }
        let distance_to_curve = distance_to_curve(basis, k, &m)?;
        minimizers.push(SectionMinimizer {
            m,
            atoms: set.iter().map(|&i| grid[i].clone()).collect(),
            weights: w.clone(),
            distance_to_curve,
        });
    }
    Ok(SectionMinimum {
        value: best,
        minimizers,
        chord_resolution: chord_resolution(basis, k, atom_grid_n)?,
        candidates: cands.len(),
    })
}

/// Calls `f` on every increasing index set extending `idx` to `size`.
fn subsets_from(idx: &mut Vec<usize>, size: usize, n: usize, f: &mut impl FnMut(&[usize])) {
    if idx.len() == size {
        f(idx);
        return;
    }
    let start = idx.last().map_or(0, |l| l + 1);
    for i in start..n {
        idx.push(i);
        subsets_from(idx, size, n, f);
        idx.pop();
    }
}

/// Weights on `set` with `Σ w = 1` and `Σ w images = ξ`, if they exist,
/// are nonnegative and satisfy the constraint within tolerance.
fn solve_weights(set: &[usize], images: &[Vec<f64>], xi: &[f64]) -> Option<Vec<f64>> {
    let rows = xi.len() + 1;
    let cols = set.len();
    let a = DMatrix::from_fn(
        rows,
        cols,
        |r, c| if r == 0 { 1.0 } else { images[set[c]][r - 1] },
    );
    let mut b = vec![1.0];
    b.extend_from_slice(xi);
    let b = DVector::from_vec(b);
    let w = if rows == cols {
        a.clone().lu().solve(&b)?
    } else {
        // Overdetermined: least squares, then verify.
        let svd = a.clone().svd(true, true);
        svd.solve(&b, 1e-13).ok()?
    };
    if w.iter().any(|v| !v.is_finite() || *v < -1e-12) {
        return None;
    }
    let residual = (&a * &w - &b).amax();
    if residual > KEEP_TOL {
        return None;
    }
    Some(w.iter().map(|v| v.max(0.0)).collect())
}

fn chord_resolution(basis: &ControlBasis, k: &ControlSet, atom_grid_n: usize) -> Result<f64> {
    let lo = k.lower().to_vec();
    let mut worst = 0.0_f64;
    for axis in 0..k.dim() {
        let h = (k.upper()[axis] - lo[axis]) / (atom_grid_n.max(2) - 1) as f64;
        for i in 0..atom_grid_n.max(2) - 1 {
            let mut a = lo.clone();
            a[axis] += h * i as f64;
            let mut b = a.clone();
            b[axis] += h;
            let (pa, pb) = (basis.phi_raw(&a), basis.phi_raw(&b));
            let mid = MomentVector(pa.iter().zip(&pb).map(|(x, y)| 0.5 * (x + y)).collect());
            worst = worst.max(distance_to_curve(basis, k, &mid)?);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> (ControlBasis, ControlSet) {
        (
            ControlBasis::power(2).unwrap(),
            ControlSet::interval(-1.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn unique_curve_minimizer() {
        let (b, k) = p2();
        let q = DMatrix::from_row_slice(1, 2, &[2.0, 1.0]);
        let r = constrained_min_over_lambda(&[1.0, 1.0], &q, &[1.25], &b, &k, 201).unwrap();
        assert!((r.value - 0.75).abs() < 1e-9);
        assert_eq!(r.minimizers.len(), 1);
        assert!(r.minimizers[0].m.distance(&MomentVector(vec![0.5, 0.25])) < 1e-9);
        assert!(r.minimizers[0].distance_to_curve < 1e-9);
    }

    #[test]
    fn extreme_velocity_is_a_singleton() {
        let (b, k) = p2();
        let q = DMatrix::from_row_slice(1, 2, &[2.0, 1.0]);
        let r = constrained_min_over_lambda(&[0.3, -0.7], &q, &[3.0], &b, &k, 101).unwrap();
        assert_eq!(r.minimizers.len(), 1);
        assert!(r.minimizers[0].m.distance(&MomentVector(vec![1.0, 1.0])) < 1e-9);
    }

    #[test]
    fn failing_pair_has_chord_minimizer() {
        let (b, k) = p2();
        let q = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let r = constrained_min_over_lambda(&[0.0, -1.0], &q, &[0.2], &b, &k, 101).unwrap();
        assert!((r.value + 1.0).abs() < 1e-9);
        assert!(r.minimizers.iter().any(|m| m.distance_to_curve > 0.1));
    }

    #[test]
    fn infeasible_velocity() {
        let (b, k) = p2();
        let q = DMatrix::from_row_slice(1, 2, &[2.0, 1.0]);
        assert!(matches!(
            constrained_min_over_lambda(&[1.0, 1.0], &q, &[10.0], &b, &k, 51),
            Err(Error::Infeasible { .. })
        ));
    }
}
