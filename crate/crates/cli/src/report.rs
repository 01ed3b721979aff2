use std::collections::BTreeMap;

use momentrelax::certificates::{Certificate, Equality, Witness};
use momentrelax::oracle::OrientorReport;
use momentrelax::problem::ProblemError;
use momentrelax::relaxed::{Extraction, StartRecord};
use serde::Serialize;

pub const REPORT_SCHEMA: u32 = 1;

/// Machine-readable outcome of one command. Everything except `timing` is a
/// deterministic function of the problem file and the effective options.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub report_schema: u32,
    pub command: String,
    pub file: String,
    /// One of `pass`, `fail`, `boundary`, `error`.
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_error: Option<ProblemError>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<CertificateEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<Extraction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub reproducibility: BTreeMap<String, u64>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub basis: String,
    pub state_dim: usize,
    pub control_dim: usize,
    pub moment_dim: usize,
    pub horizon: f64,
    pub constant_coefficients: bool,
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateEntry {
    pub statement: String,
    /// One of `pass`, `fail`, `boundary`, `error`.
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equality: Option<Equality>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, Vec<f64>>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub samples: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CertificateEntry {
    pub fn from_certificate(c: Certificate) -> Self {
        CertificateEntry {
            statement: c.statement.name().to_string(),
            verdict: c.verdict.as_str().to_string(),
            witness: c.witness,
            equality: c.equality,
            values: c.values,
            samples: c.samples,
            notes: c.notes,
            error: None,
        }
    }

    pub fn error(statement: &str, message: String) -> Self {
        CertificateEntry {
            statement: statement.to_string(),
            verdict: "error".into(),
            witness: None,
            equality: None,
            values: BTreeMap::new(),
            samples: BTreeMap::new(),
            notes: Vec::new(),
            error: Some(message),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub steps: usize,
    pub cost: f64,
    pub best_start: usize,
    pub max_distance_to_curve: f64,
    pub distances: Vec<f64>,
    pub moments: Vec<Vec<f64>>,
    pub final_state: Vec<f64>,
    pub starts: Vec<StartRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DpArm {
    pub value: f64,
    pub path_cost: f64,
    pub state_range: (f64, f64),
    pub gap: f64,
    pub gap_tolerance: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationArm {
    pub samples: usize,
    pub best_classical_cost: f64,
    /// Smallest `classical − relaxed` over the sampled controls.
    pub min_margin: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub relaxed_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dp: Option<DpArm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<OrientorReport>,
    pub relaxation: RelaxationArm,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub phases: BTreeMap<String, f64>,
    pub threads: usize,
}
