use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::moments::ControlBasis;
use crate::numeric::{box_grid, linspace};

/// Compact control set `K`: an interval for scalar controls, a box otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ControlSet {
    pub fn interval(a1: f64, a2: f64) -> Result<Self> {
        Self::boxed(&[(a1, a2)])
    }

    pub fn boxed(bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidControlSet("no bounds given".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidControlSet(format!(
                    "axis {i}: bounds must be finite"
                )));
            }
            if lo >= hi {
                return Err(Error::InvalidControlSet(format!(
                    "axis {i}: lower bound {lo} must be below upper bound {hi}"
                )));
            }
        }
        Ok(ControlSet {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// `(a1, a2)` for a scalar control set.
    pub fn interval_bounds(&self) -> Option<(f64, f64)> {
        (self.dim() == 1).then(|| (self.lower[0], self.upper[0]))
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
    }

    pub fn clamp(&self, u: &mut [f64]) {
        for (v, (lo, hi)) in u.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Uniform grid with `per_axis` points along every axis.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        if self.dim() == 1 {
            return linspace(self.lower[0], self.upper[0], per_axis)
                .into_iter()
                .map(|v| vec![v])
                .collect();
        }
        box_grid(&self.lower, &self.upper, per_axis)
    }

    /// Grid with roughly `total` points overall.
    pub fn grid_with_total(&self, total: usize) -> Vec<Vec<f64>> {
        let per_axis = (total as f64)
            .powf(1.0 / self.dim() as f64)
            .round()
            .max(2.0) as usize;
        self.grid(per_axis)
    }

    pub(crate) fn check_basis(&self, basis: &ControlBasis) -> Result<()> {
        check_dim(basis.control_dim(), self.dim(), "control set dimension")
    }
}

/// A point of ℝˢ, the image of some measure under the moment map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MomentVector(pub Vec<f64>);

impl MomentVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &MomentVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for MomentVector {
    fn from(v: Vec<f64>) -> Self {
        MomentVector(v)
    }
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Finite-support probability measure on `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("measure has no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let dim = atoms[0].len();
        if atoms
            .iter()
            .any(|a| a.len() != dim || a.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidMeasure(
                "atoms must share one dimension and be finite".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    pub fn dirac(u: Vec<f64>) -> Self {
        DiscreteMeasure {
            atoms: vec![u],
            weights: vec![1.0],
        }
    }

    /// Builds a measure from raw weights: negatives below `drop_tol` are
    /// removed, the rest renormalized.
    pub fn from_unnormalized(
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
        drop_tol: f64,
    ) -> Result<Self> {
        let (atoms, weights): (Vec<_>, Vec<_>) = atoms
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > drop_tol)
            .unzip();
        let total: f64 = weights.iter().sum();
        if atoms.is_empty() || total <= 0.0 {
            return Err(Error::InvalidMeasure("all weights vanished".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::new(atoms, weights)
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn supported_in(&self, k: &ControlSet, tol: f64) -> bool {
        self.atoms.iter().all(|a| k.contains(a, tol))
    }
}

/// Σⱼ wⱼ φ(uⱼ).
pub fn moments_of(basis: &ControlBasis, mu: &DiscreteMeasure) -> Result<MomentVector> {
    let total: f64 = mu.weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL || mu.weights.iter().any(|w| *w < 0.0) {
        return Err(Error::InvalidMeasure(format!(
            "weights sum to {total}, not 1"
        )));
    }
    for a in &mu.atoms {
        check_dim(basis.control_dim(), a.len(), "measure atom")?;
    }
    if mu.atoms.len() == 1 {
        return basis.phi(&mu.atoms[0]);
    }
    let mut acc = vec![0.0; basis.moment_dim()];
    for (a, w) in mu.atoms.iter().zip(&mu.weights) {
        basis.phi_accumulate(a, *w, &mut acc);
    }
    Ok(MomentVector(acc))
}
