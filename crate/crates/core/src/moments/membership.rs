use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::lp::hull_residual;
use crate::moments::{ControlBasis, ControlSet, MomentVector};

/// Default absolute tolerance for moment-set membership.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;
/// Default number of curve samples for the hull fallback.
pub const DEFAULT_HULL_SAMPLES: usize = 2000;

/// How membership in the moment set Λ = co(L) is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MembershipMode {
    /// Closed form (degree 2), localized 2×2 moment matrices (degree 3), or
    /// coordinate-pair decomposition (quadratic diagonal).
    Analytic,
    /// Linear feasibility against the convex hull of φ sampled on a grid over
    /// K. This is an inner approximation of Λ.
    Hull { samples: usize },
}

/// Whether `m` lies within `tol` of Λ, decided analytically.
pub fn lambda_contains(
    basis: &ControlBasis,
    k: &ControlSet,
    m: &MomentVector,
    tol: f64,
) -> Result<bool> {
    lambda_contains_with(basis, k, m, tol, MembershipMode::Analytic)
}

pub fn lambda_contains_with(
    basis: &ControlBasis,
    k: &ControlSet,
    m: &MomentVector,
    tol: f64,
    mode: MembershipMode,
) -> Result<bool> {
    check_dim(basis.moment_dim(), m.dim(), "moment vector")?;
    k.check_basis(basis)?;
    let tol = tol.max(0.0);
    if !m.is_finite() {
        return Ok(false);
    }
    let v = m.as_slice();
    Ok(match (mode, *basis) {
        (MembershipMode::Analytic, ControlBasis::Power { degree: 2 }) => {
            quadratic_pair_contains(k.lower()[0], k.upper()[0], v[0], v[1], tol)
        }
        (MembershipMode::Analytic, ControlBasis::Power { .. }) => {
            cubic_contains(k.lower()[0], k.upper()[0], v, tol)
        }
        (MembershipMode::Analytic, ControlBasis::QuadraticDiag { n }) => {
            (0..n).all(|i| quadratic_pair_contains(k.lower()[i], k.upper()[i], v[i], v[n + i], tol))
        }
        (MembershipMode::Hull { samples }, _) => {
            let points: Vec<Vec<f64>> = k
                .grid_with_total(samples)
                .iter()
                .map(|u| basis.phi_raw(u))
                .collect();
            hull_residual(&points, v).0 <= tol
        }
    })
}

/// `(m₁, m₂)` moments of a probability measure on `[a, b]`:
/// `a ≤ m₁ ≤ b` and `m₁² ≤ m₂ ≤ (a+b)m₁ − ab`.
pub(crate) fn quadratic_pair_contains(a: f64, b: f64, m1: f64, m2: f64, tol: f64) -> bool {
    m1 >= a - tol && m1 <= b + tol && m2 - m1 * m1 >= -tol && (a + b) * m1 - a * b - m2 >= -tol
}

/// Truncated Hausdorff moment conditions for `(1, m₁, m₂, m₃)` on `[a, b]`:
/// both localized matrices
/// `[[m₁−a, m₂−a m₁], [m₂−a m₁, m₃−a m₂]]` and
/// `[[b−m₁, b m₁−m₂], [b m₁−m₂, b m₂−m₃]]` are positive semidefinite.
pub(crate) fn cubic_contains(a: f64, b: f64, m: &[f64], tol: f64) -> bool {
    let (m1, m2, m3) = (m[0], m[1], m[2]);
    let lower = [m1 - a, m2 - a * m1, m3 - a * m2];
    let upper = [b - m1, b * m1 - m2, b * m2 - m3];
    min_eigenvalue_2x2(lower) >= -tol && min_eigenvalue_2x2(upper) >= -tol
}

/// Smallest eigenvalue of `[[p, q], [q, r]]` given as `[p, q, r]`.
pub(crate) fn min_eigenvalue_2x2([p, q, r]: [f64; 3]) -> f64 {
    let mean = 0.5 * (p + r);
    let half = 0.5 * (p - r);
    mean - (half * half + q * q).sqrt()
}
