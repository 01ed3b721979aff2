//! Problem files: a closed JSON format for instances whose coefficients are
//! polynomials in the state (degree at most 3 per variable).
//!
//! ```json
//! {
//!   "schema": 1,
//!   "basis": {"kind": "power1d", "p": 2},
//!   "K": {"bounds": [[-1, 1]]},
//!   "coefficients": {"c": [1, 1], "Q": [[2, 1]]},
//!   "dynamics": {"Q0": [0]},
//!   "horizon": {"x0": [0], "T": 1},
//!   "run": {"certificates": ["p2", "ex1"], "seed": 0}
//! }
//! ```

mod poly;
mod shape;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::moments::{ControlBasis, ControlSet};
use crate::relaxed::ProblemSpec;

pub use poly::{Poly, Term, MAX_DEGREE};
pub use shape::{applicable_certificates, Shape};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default = "schema_version")]
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub basis: BasisSection,
    #[serde(rename = "K")]
    pub k: ControlSection,
    pub coefficients: Coefficients,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    pub horizon: Horizon,
    #[serde(default)]
    pub run: RunSection,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisSection {
    Power1d { p: usize },
    QuadraticDiag { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    /// `c(x)`, one entry per moment.
    pub c: Vec<Poly>,
    /// `Q(x)`, one row per state.
    #[serde(rename = "Q")]
    pub q: Vec<Vec<Poly>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(rename = "Q0", default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<Poly>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub x0: Vec<f64>,
    #[serde(rename = "T")]
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Certificates to run; all applicable ones when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<Vec<String>>,
    pub solver: SolverSection,
    pub oracle: OracleSection,
    /// Sampling box for state-dependent checks; `x0 ± 1` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_range: Option<Vec<[f64; 2]>>,
    /// Total number of sampled states.
    pub x_samples: usize,
    pub seed: u64,
    /// Extraction tolerance on the distance to the moment curve.
    pub tol: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            certificates: None,
            solver: SolverSection::default(),
            oracle: OracleSection::default(),
            state_range: None,
            x_samples: 101,
            seed: 0,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub steps: usize,
    pub starts: usize,
    pub max_iterations: usize,
    pub rel_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_atoms: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            steps: 20,
            starts: 20,
            max_iterations: 500,
            rel_tol: 1e-10,
            max_atoms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// DP state grid points.
    pub state_points: usize,
    /// DP control grid points.
    pub control_points: usize,
    /// Per-axis atom grid of the sectioned minimization.
    pub atom_grid: usize,
    /// `ξ` grid of the orientor probe.
    pub xi_grid: usize,
    /// Per-axis control grid of the structured certificates.
    pub u_grid: usize,
    /// Sampled null directions.
    pub v_samples: usize,
    /// Random classical controls tried against the relaxed optimum.
    pub random_controls: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dp_state_range: Option<[f64; 2]>,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            state_points: 401,
            control_points: 41,
            atom_grid: 201,
            xi_grid: 401,
            u_grid: 101,
            v_samples: 10_000,
            random_controls: 100,
            dp_state_range: None,
        }
    }
}

/// A malformed or inconsistent problem file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemError {
    /// Dotted field path, `.` for the document root.
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ProblemError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        ProblemError {
            path: path.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " (line {l}, column {c})")?;
        }
        Ok(())
    }
}

impl std::error::Error for ProblemError {}

/// A validated problem file with its instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub file: ProblemFile,
    pub spec: ProblemSpec,
    pub shape: Shape,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile, ProblemError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ProblemFile = serde_path_to_error::deserialize(&mut *de).map_err(|e| {
            let inner = e.inner();
            ProblemError {
                path: e.path().to_string(),
                line: Some(inner.line()),
                column: Some(inner.column()),
                message: inner.to_string(),
            }
        })?;
        de.end().map_err(|e| ProblemError {
            path: ".".into(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        })?;
        Ok(file)
    }

    pub fn basis(&self) -> Result<ControlBasis, ProblemError> {
        let b = match self.basis {
            BasisSection::Power1d { p } => ControlBasis::power(p),
            BasisSection::QuadraticDiag { n } => ControlBasis::quadratic_diag(n),
        };
        b.map_err(|e| ProblemError::field("basis", e.to_string()))
    }

    /// Checks every dimension and value constraint and builds the instance.
    pub fn validate(self) -> Result<Problem, ProblemError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ProblemError::field(
                "schema",
                format!(
                    "unsupported schema version {}, expected {SCHEMA_VERSION}",
                    self.schema
                ),
            ));
        }
        let basis = self.basis()?;
        let (s, n) = (basis.moment_dim(), basis.control_dim());
        let bounds: Vec<(f64, f64)> = self.k.bounds.iter().map(|b| (b[0], b[1])).collect();
        if bounds.len() != n {
            return Err(ProblemError::field(
                "K.bounds",
                format!(
                    "{} intervals given, the basis has {n} controls",
                    bounds.len()
                ),
            ));
        }
        let k = ControlSet::boxed(&bounds)
            .map_err(|e| ProblemError::field("K.bounds", e.to_string()))?;
        let x0 = &self.horizon.x0;
        let dim = x0.len();
        if dim == 0 || x0.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::field(
                "horizon.x0",
                "x0 must be a finite nonempty vector",
            ));
        }
        if !(self.horizon.t > 0.0 && self.horizon.t.is_finite()) {
            return Err(ProblemError::field(
                "horizon.T",
                format!(
                    "horizon must be positive and finite, got {}",
                    self.horizon.t
                ),
            ));
        }
        let coef = &self.coefficients;
        if coef.c.len() != s {
            return Err(ProblemError::field(
                "coefficients.c",
                format!("{} entries given, the basis has {s} moments", coef.c.len()),
            ));
        }
        if coef.q.len() != dim {
            return Err(ProblemError::field(
                "coefficients.Q",
                format!(
                    "{} rows given, the state has {dim} coordinates",
                    coef.q.len()
                ),
            ));
        }
        for (i, p) in coef.c.iter().enumerate() {
            p.validate(dim)
                .map_err(|m| ProblemError::field(format!("coefficients.c[{i}]"), m))?;
        }
        for (r, row) in coef.q.iter().enumerate() {
            if row.len() != s {
                return Err(ProblemError::field(
                    format!("coefficients.Q[{r}]"),
                    format!("{} entries given, the basis has {s} moments", row.len()),
                ));
            }
            for (j, p) in row.iter().enumerate() {
                p.validate(dim)
                    .map_err(|m| ProblemError::field(format!("coefficients.Q[{r}][{j}]"), m))?;
            }
        }
        if let Some(q0) = &self.dynamics.q0 {
            if q0.len() != dim {
                return Err(ProblemError::field(
                    "dynamics.Q0",
                    format!(
                        "{} entries given, the state has {dim} coordinates",
                        q0.len()
                    ),
                ));
            }
            for (i, p) in q0.iter().enumerate() {
                p.validate(dim)
                    .map_err(|m| ProblemError::field(format!("dynamics.Q0[{i}]"), m))?;
            }
        }
        let run = &self.run;
        if let Some(names) = &run.certificates {
            for (i, name) in names.iter().enumerate() {
                if crate::certificates::Statement::parse(name).is_none() {
                    return Err(ProblemError::field(
                        format!("run.certificates[{i}]"),
                        format!("unknown certificate {name:?}"),
                    ));
                }
            }
        }
        let positive = [
            ("run.solver.steps", run.solver.steps),
            ("run.solver.starts", run.solver.starts),
            ("run.x_samples", run.x_samples),
            ("run.oracle.state_points", run.oracle.state_points),
            ("run.oracle.control_points", run.oracle.control_points),
            ("run.oracle.atom_grid", run.oracle.atom_grid),
            ("run.oracle.u_grid", run.oracle.u_grid),
        ];
        for (path, v) in positive {
            if v == 0 {
                return Err(ProblemError::field(path, "must be at least 1"));
            }
        }
        if run.oracle.xi_grid < 3 {
            return Err(ProblemError::field(
                "run.oracle.xi_grid",
                "must be at least 3",
            ));
        }
        if !(run.tol > 0.0 && run.tol.is_finite()) {
            return Err(ProblemError::field(
                "run.tol",
                "must be positive and finite",
            ));
        }
        if !(run.solver.rel_tol >= 0.0 && run.solver.rel_tol.is_finite()) {
            return Err(ProblemError::field(
                "run.solver.rel_tol",
                "must be nonnegative and finite",
            ));
        }

        let c_polys = coef.c.clone();
        let cost =
            Arc::new(move |x: &[f64]| c_polys.iter().map(|p| p.eval(x)).collect::<Vec<f64>>());
        let q_polys = coef.q.clone();
        let dynamics =
            Arc::new(move |x: &[f64]| DMatrix::from_fn(dim, s, |r, j| q_polys[r][j].eval(x)));
        let mut spec = ProblemSpec::new(basis, k, cost, dynamics, x0.clone(), self.horizon.t)
            .map_err(|e| ProblemError::field(".", e.to_string()))?;
        if let Some(q0) = self.dynamics.q0.clone() {
            spec = spec
                .with_drift(Arc::new(move |x: &[f64]| {
                    q0.iter().map(|p| p.eval(x)).collect()
                }))
                .map_err(|e| ProblemError::field("dynamics.Q0", e.to_string()))?;
        }
        if let Some(range) = &run.state_range {
            spec = spec
                .with_state_range(range.iter().map(|r| (r[0], r[1])).collect())
                .map_err(|e| ProblemError::field("run.state_range", e.to_string()))?;
        }
        if let Some([lo, hi]) = run.oracle.dp_state_range {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(ProblemError::field(
                    "run.oracle.dp_state_range",
                    "bounds must be finite and ordered",
                ));
            }
        }
        let shape = Shape::detect(&self, &spec);
        Ok(Problem {
            file: self,
            spec,
            shape,
        })
    }
}

impl Problem {
    pub fn parse(text: &str) -> Result<Problem, ProblemError> {
        ProblemFile::parse(text)?.validate()
    }

    pub fn load(path: &std::path::Path) -> Result<Problem, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ProblemError::field(".", format!("cannot read {}: {e}", path.display()))
        })?;
        Problem::parse(&text)
    }

    /// States used by sampled certificates: `run.x_samples` points in total,
    /// spread over the state range.
    pub fn x_samples(&self) -> Vec<Vec<f64>> {
        let dim = self.spec.state_dim();
        let total = self.file.run.x_samples.max(1);
        let per_axis = ((total as f64).powf(1.0 / dim as f64).round() as usize).max(1);
        if self.shape.state_independent() {
            vec![self.spec.x0.clone()]
        } else {
            self.spec.state_samples(per_axis)
        }
    }
}
