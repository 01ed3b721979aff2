use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::lp::hull_residual;
use crate::moments::{
    lambda_contains, moments_of, ControlBasis, ControlSet, DiscreteMeasure, MomentVector,
};

const TINY: f64 = 1e-14;

/// A measure on `K` with at most `s + 1` atoms whose moments reproduce `m`.
///
/// Degree 2 uses the chord through `φ(a₁)`; degree 3 uses the representation
/// supported on `{a₁, t, a₂}` obtained from the localizing functional
/// `(x − a₁)(a₂ − x)`; the quadratic-diagonal basis couples the per-axis
/// two-atom marginals comonotonically (at most `n + 1` atoms).
pub fn caratheodory_decompose(
    basis: &ControlBasis,
    k: &ControlSet,
    m: &MomentVector,
    tol: f64,
) -> Result<DiscreteMeasure> {
    check_dim(basis.moment_dim(), m.dim(), "moment vector")?;
    k.check_basis(basis)?;
    if !lambda_contains(basis, k, m, tol)? {
        let points: Vec<Vec<f64>> = k
            .grid_with_total(500)
            .iter()
            .map(|u| basis.phi_raw(u))
            .collect();
        return Err(Error::NotRepresentable {
            residual: hull_residual(&points, m.as_slice()).0,
        });
    }
    let v = m.as_slice();
    let mu = match *basis {
        ControlBasis::Power { degree: 2 } => {
            let (atoms, weights) = quadratic_marginal(k.lower()[0], k.upper()[0], v[0], v[1]);
            DiscreteMeasure::from_unnormalized(
                atoms.into_iter().map(|a| vec![a]).collect(),
                weights,
                TINY,
            )?
        }
        ControlBasis::Power { .. } => cubic_representation(k.lower()[0], k.upper()[0], v)?,
        ControlBasis::QuadraticDiag { n } => {
            let marginals: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
                .map(|i| quadratic_marginal(k.lower()[i], k.upper()[i], v[i], v[n + i]))
                .collect();
            comonotone_coupling(&marginals)?
        }
    };
    let mu = reduce_support(basis, &mu)?;
    let got = moments_of(basis, &mu)?;
    let residual = got
        .as_slice()
        .iter()
        .zip(v)
        .fold(0.0_f64, |r, (a, b)| r.max((a - b).abs()));
    // Points accepted only through the tolerance band are represented by a
    // nearby point of Λ.
    if residual > 4.0 * tol + 1e-12 {
        return Err(Error::NotRepresentable { residual });
    }
    Ok(mu)
}

/// Atoms and weights (ascending atoms) of a measure on `[a, b]` with
/// moments `(m1, m2)`.
fn quadratic_marginal(a: f64, b: f64, m1: f64, m2: f64) -> (Vec<f64>, Vec<f64>) {
    let m1 = m1.clamp(a, b);
    let scale = 1.0 + a.abs().max(b.abs());
    if m2 - m1 * m1 <= TINY * scale * scale || m1 - a <= TINY * scale {
        return (vec![m1], vec![1.0]);
    }
    // The line from φ(a) through m meets the parabola again at v.
    let v = ((m2 - a * m1) / (m1 - a)).clamp(m1, b);
    let wa = ((v - m1) / (v - a)).clamp(0.0, 1.0);
    (vec![a, v], vec![wa, 1.0 - wa])
}

fn cubic_representation(a: f64, b: f64, m: &[f64]) -> Result<DiscreteMeasure> {
    let (m1, m2, m3) = (m[0], m[1], m[2]);
    let scale = 1.0 + a.abs().max(b.abs());
    let loc0 = -m2 + (a + b) * m1 - a * b;
    let loc1 = -m3 + (a + b) * m2 - a * b * m1;
    let two_point = |w_b: f64| {
        let w_b = w_b.clamp(0.0, 1.0);
        DiscreteMeasure::from_unnormalized(vec![vec![a], vec![b]], vec![1.0 - w_b, w_b], TINY)
    };
    if loc0 <= TINY * scale * scale {
        return two_point((m1 - a) / (b - a));
    }
    let t = (loc1 / loc0).clamp(a, b);
    let denom = (t - a) * (b - t);
    if denom <= TINY * scale * scale {
        return two_point((m1 - a) / (b - a));
    }
    let wt = (loc0 / denom).clamp(0.0, 1.0);
    let r0 = 1.0 - wt;
    let r1 = m1 - wt * t;
    let wb = ((r1 - a * r0) / (b - a)).max(0.0);
    let wa = (r0 - wb).max(0.0);
    DiscreteMeasure::from_unnormalized(vec![vec![a], vec![t], vec![b]], vec![wa, wt, wb], TINY)
}

/// Couples one-dimensional marginals through their quantile functions.
fn comonotone_coupling(marginals: &[(Vec<f64>, Vec<f64>)]) -> Result<DiscreteMeasure> {
    let mut levels: Vec<f64> = vec![0.0, 1.0];
    for (_, w) in marginals {
        let mut acc = 0.0;
        for wi in w {
            acc += wi;
            levels.push(acc.min(1.0));
        }
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
    let quantile = |(atoms, weights): &(Vec<f64>, Vec<f64>), level: f64| {
        let mut acc = 0.0;
        for (a, w) in atoms.iter().zip(weights) {
            acc += w;
            if level < acc {
                return *a;
            }
        }
        *atoms.last().expect("marginal has atoms")
    };
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for pair in levels.windows(2) {
        let w = pair[1] - pair[0];
        if w <= 0.0 {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        atoms.push(marginals.iter().map(|mg| quantile(mg, mid)).collect());
        weights.push(w);
    }
    DiscreteMeasure::from_unnormalized(atoms, weights, TINY)
}

/// Carathéodory reduction: merges coincident atoms and removes atoms along
/// null directions of `[1; φ(u_j)]` until at most `s + 1` remain. Moments are
/// preserved.
pub fn reduce_support(basis: &ControlBasis, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let s = basis.moment_dim();
    let mut atoms: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (a, &w) in mu.atoms().iter().zip(mu.weights()) {
        if w <= 0.0 {
            continue;
        }
        match atoms
            .iter()
            .position(|b| b.iter().zip(a).all(|(x, y)| (x - y).abs() <= 1e-13))
        {
            Some(i) => weights[i] += w,
            None => {
                atoms.push(a.clone());
                weights.push(w);
            }
        }
    }
    while atoms.len() > s + 1 {
        let k = atoms.len();
        let mat = DMatrix::from_fn(s + 1, k, |r, c| {
            if r == 0 {
                1.0
            } else {
                basis.phi_raw(&atoms[c])[r - 1]
            }
        });
        let z = null_vector(&mat);
        let mut theta = f64::INFINITY;
        let mut drop = 0;
        for j in 0..k {
            if z[j] > 1e-14 {
                let t = weights[j] / z[j];
                if t < theta {
                    theta = t;
                    drop = j;
                }
            }
        }
        for j in 0..k {
            weights[j] -= theta * z[j];
        }
        atoms.remove(drop);
        weights.remove(drop);
    }
    DiscreteMeasure::from_unnormalized(atoms, weights, 0.0)
}

/// A nonzero vector in the null space of a wide matrix, by row reduction.
fn null_vector(mat: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = mat.shape();
    let mut a = mat.clone();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, a[(i, c)].abs()))
            .fold((r, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= 1e-12 {
            continue;
        }
        a.swap_rows(r, best);
        let p = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        a[(i, j)] -= f * a[(r, j)];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..cols)
        .find(|c| !pivots.contains(c))
        .expect("wide matrix has a free column");
    let mut z = vec![0.0; cols];
    z[free] = 1.0;
    for (row, &pc) in pivots.iter().enumerate() {
        z[pc] = -a[(row, free)];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(basis: &ControlBasis, k: &ControlSet, m: &MomentVector) -> DiscreteMeasure {
        let mu = caratheodory_decompose(basis, k, m, 1e-9).unwrap();
        assert!(mu.len() <= basis.moment_dim() + 1);
        assert!(mu.supported_in(k, 1e-12));
        let back = moments_of(basis, &mu).unwrap();
        assert!(back.distance(m) <= 1e-9, "{back:?} vs {m:?}");
        mu
    }

    #[test]
    fn chord_midpoint_splits_into_endpoints() {
        let p2 = ControlBasis::power(2).unwrap();
        let k = ControlSet::interval(-1.0, 1.0).unwrap();
        let mu = roundtrip(&p2, &k, &MomentVector(vec![0.0, 1.0]));
        assert_eq!(mu.atoms(), &[vec![-1.0], vec![1.0]]);
        assert_eq!(mu.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn curve_point_is_a_dirac() {
        let p2 = ControlBasis::power(2).unwrap();
        let k = ControlSet::interval(-1.0, 1.0).unwrap();
        let mu = roundtrip(&p2, &k, &MomentVector(vec![0.5, 0.25]));
        assert_eq!(mu.atoms(), &[vec![0.5]]);
    }

    #[test]
    fn cubic_two_atom_measure_is_recovered() {
        let p3 = ControlBasis::power(3).unwrap();
        let k = ControlSet::interval(0.5, 2.0).unwrap();
        let mu = roundtrip(&p3, &k, &MomentVector(vec![1.0, 1.25, 1.75]));
        assert_eq!(mu.len(), 2);
        let atoms: Vec<f64> = mu.atoms().iter().map(|a| a[0]).collect();
        assert!((atoms[0] - 0.5).abs() < 1e-9 && (atoms[1] - 1.5).abs() < 1e-9);
        assert!((mu.weights()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn outside_is_not_representable() {
        let p2 = ControlBasis::power(2).unwrap();
        let k = ControlSet::interval(-1.0, 1.0).unwrap();
        let err = caratheodory_decompose(&p2, &k, &MomentVector(vec![0.0, 1.5]), 1e-9);
        assert!(matches!(err, Err(Error::NotRepresentable { .. })));
    }

    #[test]
    fn quadratic_diag_coupling() {
        let q3 = ControlBasis::quadratic_diag(3).unwrap();
        let k = ControlSet::boxed(&[(0.0, 1.0), (-1.0, 1.0), (0.0, 2.0)]).unwrap();
        let m = MomentVector(vec![0.5, 0.0, 1.0, 0.4, 0.6, 1.5]);
        let mu = roundtrip(&q3, &k, &m);
        assert!(mu.len() <= 4);
    }

    #[test]
    fn reduction_preserves_moments() {
        let p2 = ControlBasis::power(2).unwrap();
        let atoms: Vec<Vec<f64>> = crate::numeric::linspace(-1.0, 1.0, 9)
            .into_iter()
            .map(|u| vec![u])
            .collect();
        let mu = DiscreteMeasure::new(atoms, vec![1.0 / 9.0; 9]).unwrap();
        let before = moments_of(&p2, &mu).unwrap();
        let reduced = reduce_support(&p2, &mu).unwrap();
        assert!(reduced.len() <= 3);
        assert!(moments_of(&p2, &reduced).unwrap().distance(&before) < 1e-12);
    }
}
