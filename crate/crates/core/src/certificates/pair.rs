use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::moments::ControlBasis;

/// Cost vector `c ∈ ℝˢ` and dynamics matrix `Q ∈ ℝ^{N×s}` at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCQ {
    pub c: Vec<f64>,
    pub q: DMatrix<f64>,
}

impl PairCQ {
    pub fn new(basis: &ControlBasis, c: Vec<f64>, q: DMatrix<f64>) -> Result<Self> {
        let s = basis.moment_dim();
        check_dim(s, c.len(), "cost vector")?;
        check_dim(s, q.ncols(), "dynamics columns")?;
        if q.nrows() == 0 {
            return Err(Error::Dimension {
                expected: 1,
                got: 0,
                context: "dynamics rows",
            });
        }
        Ok(PairCQ { c, q })
    }

    /// The `N = 1` case, `Q = qᵀ`.
    pub fn scalar(basis: &ControlBasis, c: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let qm = DMatrix::from_row_slice(1, q.len(), &q);
        Self::new(basis, c, qm)
    }

    /// Whether `v` lies in the cone `{Qv = 0, c·v ≤ 0}`, up to `tol`.
    pub fn in_null_cone(&self, v: &[f64], tol: f64) -> bool {
        let qv_zero = (0..self.q.nrows()).all(|r| {
            let s: f64 = (0..self.q.ncols()).map(|j| self.q[(r, j)] * v[j]).sum();
            s.abs() <= tol
        });
        let cv: f64 = self.c.iter().zip(v).map(|(a, b)| a * b).sum();
        qv_zero && cv <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_membership() {
        let b = ControlBasis::power(2).unwrap();
        let p = PairCQ::scalar(&b, vec![1.0, 1.0], vec![2.0, 1.0]).unwrap();
        // Qv = 0 along (1, −2); c·v = −1.
        assert!(p.in_null_cone(&[1.0, -2.0], 1e-12));
        assert!(!p.in_null_cone(&[-1.0, 2.0], 1e-12));
        assert!(!p.in_null_cone(&[1.0, 0.0], 1e-12));
        assert!(PairCQ::scalar(&b, vec![1.0], vec![2.0, 1.0]).is_err());
    }
}
