use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::lp::{minimize, LpStatus};
use crate::moments::{moments_of, ControlBasis, DiscreteMeasure, MomentVector};
use crate::numeric::Cubic;
use crate::relaxed::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityRoute {
    /// Scalar state and control: one-dimensional dual over the multiplier.
    Dual,
    /// Linear program over measures supported on a grid of `K`.
    GridLp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Density {
    pub value: f64,
    pub argmin: MomentVector,
    /// A measure realizing `argmin`.
    pub measure: DiscreteMeasure,
    pub route: DensityRoute,
}

/// `min { c(x)·m : m ∈ Λ, Q(x) m = ξ }`, with `ξ` the controlled part of the
/// velocity (drift excluded). `grid_n` is the total grid size of the
/// linear-programming route.
pub fn eval_density(spec: &ProblemSpec, x: &[f64], xi: &[f64], grid_n: usize) -> Result<Density> {
    check_dim(spec.state_dim(), x.len(), "state")?;
    check_dim(spec.state_dim(), xi.len(), "velocity")?;
    let c = (spec.cost)(x);
    let q = (spec.dynamics)(x);
    match (spec.basis, spec.k.interval_bounds()) {
        (ControlBasis::Power { .. }, Some((a, b))) if q.nrows() == 1 => {
            let row: Vec<f64> = q.row(0).iter().copied().collect();
            let cc = spec.basis.dot_polynomial(&c).expect("power basis");
            let qc = spec.basis.dot_polynomial(&row).expect("power basis");
            let (atoms, weights) = dual_section_min(cc, qc, a, b, xi[0])?;
            let measure = DiscreteMeasure::from_unnormalized(atoms, weights, 0.0)?;
            let argmin = moments_of(&spec.basis, &measure)?;
            Ok(Density {
                value: argmin.dot(&c),
                argmin,
                measure,
                route: DensityRoute::Dual,
            })
        }
        _ => grid_section_min(spec, x, &c, &q, xi, grid_n),
    }
}

/// Range of `Q(x) m` over `Λ`, one interval per state component.
pub fn attainable_velocities(spec: &ProblemSpec, x: &[f64], grid_n: usize) -> Vec<(f64, f64)> {
    let q = (spec.dynamics)(x);
    if let (ControlBasis::Power { .. }, Some((a, b))) = (spec.basis, spec.k.interval_bounds()) {
        return (0..q.nrows())
            .map(|r| {
                let row: Vec<f64> = q.row(r).iter().copied().collect();
                let p = spec.basis.dot_polynomial(&row).expect("power basis");
                (p.min_on(a, b, 0.0).0, p.max_on(a, b))
            })
            .collect();
    }
    let points: Vec<Vec<f64>> = spec
        .k
        .grid_with_total(grid_n)
        .iter()
        .map(|u| spec.basis.phi_raw(u))
        .collect();
    (0..q.nrows())
        .map(|r| {
            points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let v: f64 = (0..p.len()).map(|j| q[(r, j)] * p[j]).sum();
                    (lo.min(v), hi.max(v))
                })
        })
        .collect()
}

/// Minimizes `∫C dμ` over probability measures on `[a, b]` with `∫Q dμ = ξ`
/// by bisection on the multiplier `η` of the concave dual
/// `η ↦ min_t (C + ηQ)(t) − ηξ`. Returns at most two atoms.
fn dual_section_min(
    c: Cubic,
    q: Cubic,
    a: f64,
    b: f64,
    xi: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let qmin = q.min_on(a, b, 0.0).0;
    let qmax = q.max_on(a, b);
    let scale = 1.0 + qmin.abs() + qmax.abs();
    let tol = 1e-9 * scale;
    if xi < qmin - tol || xi > qmax + tol {
        return Err(Error::Infeasible {
            attainable: vec![(qmin, qmax)],
        });
    }
    let dirac = |t: f64| Ok((vec![vec![t]], vec![1.0]));
    let cmin_over = |ts: &[f64]| {
        ts.iter()
            .copied()
            .min_by(|s, t| c.eval(*s).total_cmp(&c.eval(*t)).then(s.total_cmp(t)))
            .expect("candidates")
    };
    if qmax - qmin <= 1e-15 * scale {
        let (_, arg) = c.min_on(a, b, 0.0);
        return dirac(arg[0]);
    }
    let tie = 1e-12 * scale;
    if xi <= qmin + tie {
        return dirac(cmin_over(&q.min_on(a, b, tie).1));
    }
    if xi >= qmax - tie {
        let neg = Cubic(q.0.map(|v| -v));
        return dirac(cmin_over(&neg.min_on(a, b, tie).1));
    }

    // Argmins of C + ηQ with the smallest and largest Q.
    let extremes = |eta: f64| {
        let g = Cubic([0, 1, 2, 3].map(|i| c.0[i] + eta * q.0[i]));
        let gscale = 1.0 + g.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let (_, arg) = g.min_on(a, b, 1e-13 * gscale);
        let lo = arg
            .iter()
            .copied()
            .min_by(|s, t| q.eval(*s).total_cmp(&q.eval(*t)))
            .unwrap();
        let hi = arg
            .iter()
            .copied()
            .max_by(|s, t| q.eval(*s).total_cmp(&q.eval(*t)))
            .unwrap();
        (lo, hi)
    };
    let mut lo = -1.0;
    let mut hi = 1.0;
    for _ in 0..400 {
        if q.eval(extremes(lo).0) >= xi {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..400 {
        if q.eval(extremes(hi).1) <= xi {
            break;
        }
        hi *= 2.0;
    }
    // Invariant: at `lo` some argmin has Q >= ξ; at `hi` some has Q <= ξ.
    let mut above = extremes(lo).1;
    let mut below = extremes(hi).0;
    for _ in 0..300 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (tl, th) = extremes(mid);
        let (ql, qh) = (q.eval(tl), q.eval(th));
        if ql > xi {
            lo = mid;
            above = th;
        } else if qh < xi {
            hi = mid;
            below = tl;
        } else {
            above = th;
            below = tl;
            break;
        }
    }
    let (qa, qb) = (q.eval(above), q.eval(below));
    if qa - qb <= 1e-15 * scale {
        return dirac(if (qa - xi).abs() <= (qb - xi).abs() {
            above
        } else {
            below
        });
    }
    let w = ((xi - qb) / (qa - qb)).clamp(0.0, 1.0);
    Ok((vec![vec![above], vec![below]], vec![w, 1.0 - w]))
}

fn grid_section_min(
    spec: &ProblemSpec,
    x: &[f64],
    c: &[f64],
    q: &nalgebra::DMatrix<f64>,
    xi: &[f64],
    grid_n: usize,
) -> Result<Density> {
    let grid = spec.k.grid_with_total(grid_n);
    let n_rows = q.nrows();
    let mut columns = Vec::with_capacity(grid.len());
    let mut cost = Vec::with_capacity(grid.len());
    for u in &grid {
        let p = spec.basis.phi_raw(u);
        let mut col: Vec<f64> = (0..n_rows)
            .map(|r| (0..p.len()).map(|j| q[(r, j)] * p[j]).sum())
            .collect();
        col.push(1.0);
        columns.push(col);
        cost.push(c.iter().zip(&p).map(|(a, b)| a * b).sum());
    }
    let mut rhs = xi.to_vec();
    rhs.push(1.0);
    let sol = minimize(&columns, &rhs, &cost);
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible {
            attainable: attainable_velocities(spec, x, grid_n),
        });
    }
    let (atoms, weights): (Vec<Vec<f64>>, Vec<f64>) = grid
        .into_iter()
        .zip(sol.x)
        .filter(|(_, w)| *w > 1e-14)
        .unzip();
    let measure = DiscreteMeasure::from_unnormalized(atoms, weights, 0.0)?;
    let argmin = moments_of(&spec.basis, &measure)?;
    Ok(Density {
        value: argmin.dot(c),
        argmin,
        measure,
        route: DensityRoute::GridLp,
    })
}
