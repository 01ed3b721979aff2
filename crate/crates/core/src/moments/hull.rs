use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::hull_residual;
use crate::moments::{ControlBasis, ControlSet, MomentVector};

/// L1 residual above which a point counts as outside the hull of the others.
const VERTEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct HullVertices {
    pub vertices: Vec<MomentVector>,
    /// Curve parameter of each vertex.
    pub parameters: Vec<Vec<f64>>,
    pub samples: usize,
    /// Affine dimension of the sample cloud; `degenerate` when below `s`.
    pub affine_dim: usize,
    pub degenerate: bool,
}

/// Vertices of the convex hull of φ sampled on a uniform grid over `K`.
pub fn hull_extreme_points(
    basis: &ControlBasis,
    k: &ControlSet,
    sample_count: usize,
) -> Result<HullVertices> {
    k.check_basis(basis)?;
    let s = basis.moment_dim();
    if sample_count < s + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples, got {sample_count}",
            s + 2
        )));
    }
    let params = k.grid_with_total(sample_count);
    let points: Vec<Vec<f64>> = params.iter().map(|u| basis.phi_raw(u)).collect();
    let affine_dim = affine_dimension(&points);
    let idx = convex_hull_vertices(&points);
    Ok(HullVertices {
        vertices: idx
            .iter()
            .map(|&i| MomentVector(points[i].clone()))
            .collect(),
        parameters: idx.iter().map(|&i| params[i].clone()).collect(),
        samples: points.len(),
        affine_dim,
        degenerate: affine_dim < s,
    })
}

/// Indices of the points that are not convex combinations of the others.
pub fn convex_hull_vertices(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .into_par_iter()
        .filter(|&i| {
            let others: Vec<Vec<f64>> = points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p.clone())
                .collect();
            hull_residual(&others, &points[i]).0 > VERTEX_TOL
        })
        .collect()
}

fn affine_dimension(points: &[Vec<f64>]) -> usize {
    let d = points.first().map_or(0, Vec::len);
    if points.len() < 2 || d == 0 {
        return 0;
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    let centered = DMatrix::from_fn(d, points.len(), |r, c| points[c][r] - mean[r]);
    let sv = (&centered * centered.transpose()).symmetric_eigenvalues();
    let top = sv.iter().fold(0.0_f64, |m, v| m.max(*v));
    if top <= 0.0 {
        return 0;
    }
    sv.iter().filter(|v| **v > 1e-20 * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_endpoints_are_vertices() {
        let p2 = ControlBasis::power(2).unwrap();
        let k = ControlSet::interval(-1.0, 1.0).unwrap();
        let h = hull_extreme_points(&p2, &k, 200).unwrap();
        assert!(!h.degenerate);
        let has = |u: f64| h.parameters.iter().any(|p| p[0] == u);
        assert!(has(-1.0) && has(1.0));
        // every sample of a strictly convex curve is extreme
        assert_eq!(h.vertices.len(), 200);
    }

    #[test]
    fn chord_points_are_never_vertices() {
        let p2 = ControlBasis::power(2).unwrap();
        let mut pts: Vec<Vec<f64>> = crate::numeric::linspace(-1.0, 1.0, 50)
            .iter()
            .map(|&u| p2.phi_raw(&[u]))
            .collect();
        let curve = pts.len();
        pts.push(vec![0.0, 1.0]);
        pts.push(vec![0.1, 0.5]);
        let v = convex_hull_vertices(&pts);
        assert!(v.iter().all(|&i| i < curve));
    }

    #[test]
    fn collinear_samples_are_reported_degenerate() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(affine_dimension(&pts), 1);
        assert_eq!(convex_hull_vertices(&pts), vec![0, 2]);
    }

    #[test]
    fn too_few_samples() {
        let p3 = ControlBasis::power(3).unwrap();
        let k = ControlSet::interval(0.5, 2.0).unwrap();
        assert!(hull_extreme_points(&p3, &k, 4).is_err());
    }
}
