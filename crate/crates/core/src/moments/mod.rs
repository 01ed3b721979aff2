//! The moment curve `L = φ(K)`, the moment set `Λ = co(L)`, the constraint
//! map Ψ and finite-support measures on `K`.

mod basis;
mod decompose;
mod distance;
mod hull;
mod membership;
mod types;

pub use basis::ControlBasis;
pub use decompose::{caratheodory_decompose, reduce_support};
pub use distance::{distance_to_curve, nearest_on_curve, NEAREST_GRID};
pub use hull::{convex_hull_vertices, hull_extreme_points, HullVertices};
pub use membership::{
    lambda_contains, lambda_contains_with, MembershipMode, DEFAULT_HULL_SAMPLES,
    DEFAULT_MEMBERSHIP_TOL,
};
pub use types::{moments_of, ControlSet, DiscreteMeasure, MomentVector};

use nalgebra::DMatrix;

use crate::error::Result;

/// `φ(u)`; `u` need not lie in `K`.
pub fn phi_eval(basis: &ControlBasis, u: &[f64]) -> Result<MomentVector> {
    basis.phi(u)
}

/// `Ψ(m)`, with `s − n` components.
pub fn psi_eval(basis: &ControlBasis, m: &MomentVector) -> Result<Vec<f64>> {
    basis.psi(m)
}

/// Jacobian of `Ψ` at `m`, `(s − n) × s`.
pub fn psi_grad(basis: &ControlBasis, m: &MomentVector) -> Result<DMatrix<f64>> {
    basis.psi_grad(m)
}

/// Euclidean distance from `m` to the curve `L = φ(K)`.
#[allow(non_snake_case)]
pub fn distance_to_L(basis: &ControlBasis, k: &ControlSet, m: &MomentVector) -> Result<f64> {
    distance_to_curve(basis, k, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_functions_match_methods() {
        let b = ControlBasis::quadratic_diag(2).unwrap();
        let m = phi_eval(&b, &[0.3, 0.7]).unwrap();
        assert_eq!(psi_eval(&b, &m).unwrap(), b.psi(&m).unwrap());
        assert_eq!(psi_grad(&b, &m).unwrap().shape(), (2, 4));
        let k = ControlSet::boxed(&[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        assert!(distance_to_L(&b, &k, &m).unwrap() < 1e-9);
        let p2 = ControlBasis::power(2).unwrap();
        let k = ControlSet::interval(-1.0, 1.0).unwrap();
        assert!(distance_to_L(&p2, &k, &MomentVector(vec![0.0, 1.0])).unwrap() > 0.6);
    }
}
