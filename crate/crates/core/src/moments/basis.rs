use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::moments::{ControlSet, MomentVector};
use crate::numeric::Cubic;

/// The control-to-moment map φ together with its constraint map Ψ.
///
/// * `Power { degree: 2 }`: φ(u) = (u, u²), Ψ(m) = m₁² − m₂.
/// * `Power { degree: 3 }`: φ(u) = (u, u², u³), Ψ(m) = (m₁² − m₂, m₁³ − m₃).
/// * `QuadraticDiag { n }`: φ(u) = (u₁, …, uₙ, u₁², …, uₙ²), Ψᵢ(m) = mᵢ² − m_{n+i}.
///
/// In every case Ψ(φ(u)) = 0 and Ψ has `s − n` components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlBasis {
    Power { degree: usize },
    QuadraticDiag { n: usize },
}

impl ControlBasis {
    pub fn power(degree: usize) -> Result<Self> {
        match degree {
            2 | 3 => Ok(ControlBasis::Power { degree }),
            _ => Err(Error::InvalidBasis(format!(
                "power basis degree must be 2 or 3, got {degree}"
            ))),
        }
    }

    pub fn quadratic_diag(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidBasis("quadratic_diag needs n >= 1".into()));
        }
        Ok(ControlBasis::QuadraticDiag { n })
    }

    /// Control dimension `n`.
    pub fn control_dim(&self) -> usize {
        match *self {
            ControlBasis::Power { .. } => 1,
            ControlBasis::QuadraticDiag { n } => n,
        }
    }

    /// Moment dimension `s`.
    pub fn moment_dim(&self) -> usize {
        match *self {
            ControlBasis::Power { degree } => degree,
            ControlBasis::QuadraticDiag { n } => 2 * n,
        }
    }

    /// Number of Ψ components, `s − n`.
    pub fn constraint_dim(&self) -> usize {
        self.moment_dim() - self.control_dim()
    }

    pub fn label(&self) -> String {
        match *self {
            ControlBasis::Power { degree } => format!("power1d({degree})"),
            ControlBasis::QuadraticDiag { n } => format!("quadratic_diag({n})"),
        }
    }

    pub fn phi(&self, u: &[f64]) -> Result<MomentVector> {
        check_dim(self.control_dim(), u.len(), "control point")?;
        Ok(MomentVector(self.phi_raw(u)))
    }

    pub(crate) fn phi_raw(&self, u: &[f64]) -> Vec<f64> {
        match *self {
            ControlBasis::Power { degree } => {
                let t = u[0];
                let mut out = Vec::with_capacity(degree);
                let mut p = t;
                for _ in 0..degree {
                    out.push(p);
                    p *= t;
                }
                out
            }
            ControlBasis::QuadraticDiag { n } => {
                let mut out = Vec::with_capacity(2 * n);
                out.extend_from_slice(u);
                out.extend(u.iter().map(|v| v * v));
                out
            }
        }
    }

    /// Accumulates `weight * φ(u)` into `acc` without allocating.
    pub(crate) fn phi_accumulate(&self, u: &[f64], weight: f64, acc: &mut [f64]) {
        match *self {
            ControlBasis::Power { degree } => {
                let t = u[0];
                let mut p = t;
                for a in acc.iter_mut().take(degree) {
                    *a += weight * p;
                    p *= t;
                }
            }
            ControlBasis::QuadraticDiag { n } => {
                for i in 0..n {
                    acc[i] += weight * u[i];
                    acc[n + i] += weight * u[i] * u[i];
                }
            }
        }
    }

    /// Jacobian of φ at `u`, `s × n`.
    pub fn phi_jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.control_dim(), u.len(), "control point")?;
        Ok(match *self {
            ControlBasis::Power { degree } => {
                let t = u[0];
                DMatrix::from_fn(degree, 1, |k, _| (k + 1) as f64 * t.powi(k as i32))
            }
            ControlBasis::QuadraticDiag { n } => DMatrix::from_fn(2 * n, n, |r, c| {
                if r == c {
                    1.0
                } else if r == n + c {
                    2.0 * u[c]
                } else {
                    0.0
                }
            }),
        })
    }

    pub fn psi(&self, m: &MomentVector) -> Result<Vec<f64>> {
        check_dim(self.moment_dim(), m.dim(), "moment vector")?;
        let m = m.as_slice();
        Ok(match *self {
            ControlBasis::Power { degree } => {
                let mut out = vec![m[0] * m[0] - m[1]];
                if degree == 3 {
                    out.push(m[0] * m[0] * m[0] - m[2]);
                }
                out
            }
            ControlBasis::QuadraticDiag { n } => (0..n).map(|i| m[i] * m[i] - m[n + i]).collect(),
        })
    }

    /// Exact Jacobian of Ψ, `(s − n) × s`.
    pub fn psi_grad(&self, m: &MomentVector) -> Result<DMatrix<f64>> {
        check_dim(self.moment_dim(), m.dim(), "moment vector")?;
        let m = m.as_slice();
        Ok(match *self {
            ControlBasis::Power { degree } => {
                let mut g = DMatrix::zeros(degree - 1, degree);
                g[(0, 0)] = 2.0 * m[0];
                g[(0, 1)] = -1.0;
                if degree == 3 {
                    g[(1, 0)] = 3.0 * m[0] * m[0];
                    g[(1, 2)] = -1.0;
                }
                g
            }
            ControlBasis::QuadraticDiag { n } => {
                let mut g = DMatrix::zeros(n, 2 * n);
                for i in 0..n {
                    g[(i, i)] = 2.0 * m[i];
                    g[(i, n + i)] = -1.0;
                }
                g
            }
        })
    }

    /// Whether every Ψ component is convex on the moment region reachable
    /// from `k`. Only `m₁³ − m₃` needs care: it is convex for `m₁ >= 0`, so the
    /// degree-3 basis requires `K ⊂ (0, ∞)`.
    pub fn psi_convex_on(&self, k: &ControlSet) -> bool {
        match *self {
            ControlBasis::Power { degree: 3 } => k.lower()[0] > 0.0,
            _ => true,
        }
    }

    /// For one-dimensional bases, the polynomial `t ↦ v·φ(t)`.
    pub fn dot_polynomial(&self, v: &[f64]) -> Option<Cubic> {
        match *self {
            ControlBasis::Power { degree } if v.len() == degree => {
                let mut c = [0.0; 4];
                c[1..=degree].copy_from_slice(v);
                Some(Cubic(c))
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(v: &[f64]) -> MomentVector {
        MomentVector(v.to_vec())
    }

    #[test]
    fn phi_examples() {
        let p2 = ControlBasis::power(2).unwrap();
        assert_eq!(p2.phi(&[0.5]).unwrap().0, vec![0.5, 0.25]);
        let p3 = ControlBasis::power(3).unwrap();
        assert_eq!(p3.phi(&[2.0]).unwrap().0, vec![2.0, 4.0, 8.0]);
        let q2 = ControlBasis::quadratic_diag(2).unwrap();
        assert_eq!(q2.phi(&[1.0, 0.5]).unwrap().0, vec![1.0, 0.5, 1.0, 0.25]);
        assert!(matches!(
            q2.phi(&[1.0]),
            Err(Error::Dimension {
                expected: 2,
                got: 1,
                ..
            })
        ));
        assert!(ControlBasis::power(4).is_err());
    }

    #[test]
    fn psi_examples() {
        let q2 = ControlBasis::quadratic_diag(2).unwrap();
        assert_eq!(q2.psi(&mv(&[1.0, 0.5, 1.0, 0.25])).unwrap(), vec![0.0, 0.0]);
        assert_eq!(
            q2.psi(&mv(&[0.0, 0.0, 1.0, 1.0])).unwrap(),
            vec![-1.0, -1.0]
        );
        let p3 = ControlBasis::power(3).unwrap();
        assert_eq!(p3.psi(&mv(&[2.0, 4.0, 8.0])).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn psi_grad_examples() {
        let q1 = ControlBasis::quadratic_diag(1).unwrap();
        let g = q1.psi_grad(&mv(&[0.5, 0.25])).unwrap();
        assert_eq!(
            g.row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, -1.0]
        );

        let q2 = ControlBasis::quadratic_diag(2).unwrap();
        let g = q2.psi_grad(&mv(&[1.0, 2.0, 7.0, 9.0])).unwrap();
        assert_eq!(
            g,
            DMatrix::from_row_slice(2, 4, &[2.0, 0.0, -1.0, 0.0, 0.0, 4.0, 0.0, -1.0])
        );

        let p3 = ControlBasis::power(3).unwrap();
        let g = p3.psi_grad(&mv(&[1.0, 5.0, 5.0])).unwrap();
        assert_eq!(
            g,
            DMatrix::from_row_slice(2, 3, &[2.0, -1.0, 0.0, 3.0, 0.0, -1.0])
        );
    }

    #[test]
    fn psi_grad_matches_finite_differences() {
        let p3 = ControlBasis::power(3).unwrap();
        let m = mv(&[0.7, 0.2, -0.4]);
        let g = p3.psi_grad(&m).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let mut plus = m.clone();
            let mut minus = m.clone();
            plus.0[j] += h;
            minus.0[j] -= h;
            let (fp, fm) = (p3.psi(&plus).unwrap(), p3.psi(&minus).unwrap());
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - g[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn psi_vanishes_on_curve_and_is_convex_on_grids() {
        let k = ControlSet::interval(0.5, 2.0).unwrap();
        for basis in [
            ControlBasis::power(2).unwrap(),
            ControlBasis::power(3).unwrap(),
        ] {
            for u in crate::numeric::linspace(0.5, 2.0, 101) {
                let m = basis.phi(&[u]).unwrap();
                for v in basis.psi(&m).unwrap() {
                    assert!(v.abs() <= 1e-12);
                }
            }
            assert!(basis.psi_convex_on(&k));
            // Second differences of Ψ along a grid in m₁ (other coordinates fixed).
            let h = 0.01;
            for t in crate::numeric::linspace(0.5, 2.0, 151) {
                let at = |x: f64| {
                    let mut m = basis.phi(&[t]).unwrap();
                    m.0[0] = x;
                    basis.psi(&m).unwrap()
                };
                let (a, b, c) = (at(t - h), at(t), at(t + h));
                for i in 0..a.len() {
                    assert!(a[i] - 2.0 * b[i] + c[i] >= 0.0);
                }
            }
        }
        let straddle = ControlSet::interval(-1.0, 1.0).unwrap();
        assert!(!ControlBasis::power(3).unwrap().psi_convex_on(&straddle));
    }
}
