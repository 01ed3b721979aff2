use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::ControlBasis;
use crate::numeric::linspace;
use crate::relaxed::ProblemSpec;

/// Second differences below this count as a convexity violation.
const CONVEXITY_TOL: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientorReport {
    pub convex: bool,
    /// Consecutive `ξ` values where the second difference is most negative,
    /// when not convex.
    pub witness: Option<[f64; 3]>,
    pub min_second_difference: f64,
    pub xi_range: (f64, f64),
    pub xi_points: usize,
}

/// Lower boundary `ξ ↦ min { c(x)·φ(u) : q(x)·φ(u) = ξ, u ∈ K }` of the
/// orientor field at state `x`, sampled on a uniform `ξ` grid over the
/// attainable range, and tested for discrete convexity.
pub fn orientor_convexity_probe(
    spec: &ProblemSpec,
    x: &[f64],
    xi_grid_n: usize,
) -> Result<OrientorReport> {
    let (a, b) = match (spec.basis, spec.k.interval_bounds()) {
        (ControlBasis::Power { .. }, Some(ab)) => ab,
        _ => {
            return Err(Error::Unsupported(
                "the orientor probe needs a scalar power basis".into(),
            ))
        }
    };
    let q = (spec.dynamics)(x);
    if q.nrows() != 1 {
        return Err(Error::Unsupported(
            "the orientor probe needs a scalar state".into(),
        ));
    }
    if xi_grid_n < 3 {
        return Err(Error::InvalidArgument(
            "xi_grid_n must be at least 3".into(),
        ));
    }
    let row: Vec<f64> = q.row(0).iter().copied().collect();
    let cp = spec
        .basis
        .dot_polynomial(&(spec.cost)(x))
        .expect("power basis");
    let qp = spec.basis.dot_polynomial(&row).expect("power basis");
    let lo = qp.min_on(a, b, 0.0).0;
    let hi = qp.max_on(a, b);
    if hi - lo <= 1e-14 * (1.0 + lo.abs() + hi.abs()) {
        // Degenerate velocity set: a single ξ, trivially convex.
        return Ok(OrientorReport {
            convex: true,
            witness: None,
            min_second_difference: 0.0,
            xi_range: (lo, hi),
            xi_points: 1,
        });
    }
    let xis = linspace(lo, hi, xi_grid_n);
    let scale = 1.0 + lo.abs().max(hi.abs());
    let boundary: Vec<f64> = xis
        .iter()
        .map(|&xi| {
            let roots = qp.roots_in(xi, a, b, 1e-12 * scale);
            roots
                .iter()
                .map(|&u| cp.eval(u))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut worst = (f64::INFINITY, 0);
    for i in 1..xi_grid_n - 1 {
        let d2 = boundary[i - 1] - 2.0 * boundary[i] + boundary[i + 1];
        if d2 < worst.0 {
            worst = (d2, i);
        }
    }
    if !worst.0.is_finite() {
        return Err(Error::Structural(
            "no admissible root for some attainable velocity".into(),
        ));
    }
    let convex = worst.0 >= CONVEXITY_TOL;
    Ok(OrientorReport {
        convex,
        witness: (!convex).then(|| [xis[worst.1 - 1], xis[worst.1], xis[worst.1 + 1]]),
        min_second_difference: worst.0,
        xi_range: (lo, hi),
        xi_points: xi_grid_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::ControlSet;

    fn spec(p: usize, c: Vec<f64>, q: Vec<f64>, k: (f64, f64)) -> ProblemSpec {
        ProblemSpec::constant_scalar(
            ControlBasis::power(p).unwrap(),
            ControlSet::interval(k.0, k.1).unwrap(),
            c,
            q,
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn quadratic_example_is_convex() {
        let r = orientor_convexity_probe(
            &spec(2, vec![1.0, 1.0], vec![2.0, 1.0], (-1.0, 1.0)),
            &[0.0],
            401,
        )
        .unwrap();
        assert!(r.convex, "{r:?}");
        assert_eq!(r.xi_range, (-1.0, 3.0));
    }

    #[test]
    fn proportional_pair_is_linear() {
        let r = orientor_convexity_probe(
            &spec(2, vec![2.0, 1.0], vec![2.0, 1.0], (-1.0, 1.0)),
            &[0.0],
            401,
        )
        .unwrap();
        assert!(r.convex);
        assert!(r.min_second_difference.abs() < 1e-12);
    }

    #[test]
    fn cubic_with_large_cost_coefficient_is_not_convex() {
        let r = orientor_convexity_probe(
            &spec(3, vec![0.0, 3.0, 1.0], vec![0.0, 1.0, 1.0], (0.5, 1.5)),
            &[0.0],
            401,
        )
        .unwrap();
        assert!(!r.convex);
        assert!(r.witness.is_some());
    }
}
