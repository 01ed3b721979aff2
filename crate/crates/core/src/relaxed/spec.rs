use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::certificates::{MatrixFn, VectorFn};
use crate::error::{check_dim, Error, Result};
use crate::moments::{ControlBasis, ControlSet};
use crate::numeric::linspace;

/// A full instance: minimize `∫ c(x)·m dt` subject to
/// `x' = Q(x) m + Q₀(x)`, `x(0) = x₀`, with `m(t) ∈ Λ` (relaxed) or
/// `m(t) = φ(u(t))`, `u(t) ∈ K` (classical).
#[derive(Clone)]
pub struct ProblemSpec {
    pub basis: ControlBasis,
    pub k: ControlSet,
    /// `c(x) ∈ ℝˢ`.
    pub cost: VectorFn,
    /// `Q(x)`, an `N × s` matrix.
    pub dynamics: MatrixFn,
    pub drift: Option<VectorFn>,
    pub x0: Vec<f64>,
    pub horizon: f64,
    /// Box of states used for sampling state-dependent checks.
    pub state_range: Vec<(f64, f64)>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("basis", &self.basis)
            .field("k", &self.k)
            .field("x0", &self.x0)
            .field("horizon", &self.horizon)
            .field("state_range", &self.state_range)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Validates dimensions at `x0` and `T > 0`. The state range defaults to
    /// `x0 ± 1` per coordinate.
    pub fn new(
        basis: ControlBasis,
        k: ControlSet,
        cost: VectorFn,
        dynamics: MatrixFn,
        x0: Vec<f64>,
        horizon: f64,
    ) -> Result<Self> {
        k.check_basis(&basis)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if x0.is_empty() || x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "x0 must be a finite nonempty vector".into(),
            ));
        }
        let s = basis.moment_dim();
        check_dim(s, cost(&x0).len(), "cost vector c(x0)")?;
        let q = dynamics(&x0);
        if q.shape() != (x0.len(), s) {
            return Err(Error::Dimension {
                expected: x0.len() * s,
                got: q.nrows() * q.ncols(),
                context: "dynamics matrix Q(x0) must be N x s",
            });
        }
        let state_range = x0.iter().map(|v| (v - 1.0, v + 1.0)).collect();
        Ok(ProblemSpec {
            basis,
            k,
            cost,
            dynamics,
            drift: None,
            x0,
            horizon,
            state_range,
        })
    }

    /// Scalar-state instance with constant coefficients: `c·m` and
    /// `x' = q·m`.
    pub fn constant_scalar(
        basis: ControlBasis,
        k: ControlSet,
        c: Vec<f64>,
        q: Vec<f64>,
        x0: f64,
        horizon: f64,
    ) -> Result<Self> {
        check_dim(basis.moment_dim(), q.len(), "dynamics row q")?;
        let s = q.len();
        let qm = DMatrix::from_row_slice(1, s, &q);
        Self::new(
            basis,
            k,
            Arc::new(move |_| c.clone()),
            Arc::new(move |_| qm.clone()),
            vec![x0],
            horizon,
        )
    }

    pub fn with_drift(mut self, drift: VectorFn) -> Result<Self> {
        check_dim(self.state_dim(), drift(&self.x0).len(), "drift Q0(x0)")?;
        self.drift = Some(drift);
        Ok(self)
    }

    pub fn with_state_range(mut self, range: Vec<(f64, f64)>) -> Result<Self> {
        check_dim(self.state_dim(), range.len(), "state range")?;
        if range
            .iter()
            .any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::InvalidArgument(
                "state range bounds must be finite and ordered".into(),
            ));
        }
        self.state_range = range;
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.x0.len()
    }

    /// `x' = Q(x) m + Q₀(x)`.
    pub fn velocity(&self, x: &[f64], m: &[f64]) -> Vec<f64> {
        let q = (self.dynamics)(x);
        let mut v: Vec<f64> = (0..q.nrows())
            .map(|r| (0..q.ncols()).map(|c| q[(r, c)] * m[c]).sum())
            .collect();
        if let Some(d) = &self.drift {
            for (vi, di) in v.iter_mut().zip(d(x)) {
                *vi += di;
            }
        }
        v
    }

    /// `c(x)·m`.
    pub fn running_cost(&self, x: &[f64], m: &[f64]) -> f64 {
        (self.cost)(x).iter().zip(m).map(|(a, b)| a * b).sum()
    }

    /// States sampled uniformly over the state range, `per_axis` points per
    /// coordinate.
    pub fn state_samples(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for &(lo, hi) in &self.state_range {
            let axis = if lo == hi {
                vec![lo]
            } else {
                linspace(lo, hi, per_axis)
            };
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Largest finite-difference slope of `c`, `Q` and `Q₀` between
    /// neighbouring sample states. Errors when a coefficient is not finite.
    pub fn lipschitz_probe(&self, per_axis: usize) -> Result<f64> {
        let samples = self.state_samples(per_axis.max(2));
        let flat = |x: &[f64]| -> Vec<f64> {
            let mut v = (self.cost)(x);
            v.extend((self.dynamics)(x).iter());
            if let Some(d) = &self.drift {
                v.extend(d(x));
            }
            v
        };
        let values: Vec<Vec<f64>> = samples.iter().map(|x| flat(x)).collect();
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "coefficients are not finite on the state range".into(),
            ));
        }
        let mut best = 0.0_f64;
        for i in 1..samples.len() {
            let dx = samples[i]
                .iter()
                .zip(&samples[i - 1])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dx == 0.0 {
                continue;
            }
            let df = values[i]
                .iter()
                .zip(&values[i - 1])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            best = best.max(df / dx);
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> ProblemSpec {
        ProblemSpec::constant_scalar(
            ControlBasis::power(2).unwrap(),
            ControlSet::interval(-1.0, 1.0).unwrap(),
            vec![1.0, 1.0],
            vec![2.0, 1.0],
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let p2 = ControlBasis::power(2).unwrap();
        let k = ControlSet::interval(-1.0, 1.0).unwrap();
        assert!(ProblemSpec::constant_scalar(
            p2,
            k.clone(),
            vec![1.0, 1.0],
            vec![2.0, 1.0],
            0.0,
            0.0
        )
        .is_err());
        assert!(
            ProblemSpec::constant_scalar(p2, k.clone(), vec![1.0], vec![2.0, 1.0], 0.0, 1.0)
                .is_err()
        );
        assert!(ProblemSpec::constant_scalar(p2, k, vec![1.0, 1.0], vec![2.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn velocity_and_cost() {
        let spec = ex1().with_drift(Arc::new(|x| vec![-x[0]])).unwrap();
        assert_eq!(spec.velocity(&[1.0], &[0.5, 0.25]), vec![0.25]);
        assert_eq!(spec.running_cost(&[1.0], &[-0.5, 0.25]), -0.25);
    }

    #[test]
    fn lipschitz_probe_sees_state_dependence() {
        assert_eq!(ex1().lipschitz_probe(11).unwrap(), 0.0);
        let k = ControlSet::interval(-1.0, 1.0).unwrap();
        let spec = ProblemSpec::new(
            ControlBasis::power(2).unwrap(),
            k,
            Arc::new(|x| vec![3.0 * x[0], 1.0]),
            Arc::new(|_| DMatrix::from_row_slice(1, 2, &[2.0, 1.0])),
            vec![0.0],
            1.0,
        )
        .unwrap();
        assert!((spec.lipschitz_probe(11).unwrap() - 3.0).abs() < 1e-12);
    }
}
