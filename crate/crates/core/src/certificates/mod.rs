//! Sufficient conditions under which relaxed optima are classical, each as a
//! pure predicate returning a [`Certificate`] with witness data.
//!
//! Every strict inequality is decided with margin [`STRICT_MARGIN`]:
//! quantities within the margin of zero give [`Verdict::Boundary`], never a
//! pass.

mod examples;
mod geometric;
mod pair;
mod scalar;
mod structured;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;

pub use examples::{example_wrapper_check, ExampleVariant, ScalarFn};
pub use geometric::{cubic_curve_normal, geom_m1_check, sign_field, GEOM_GRID, ROOT_SCAN};
pub use pair::PairCQ;
pub use scalar::{p2_check, p3_monotone_check, p3_zero_linear_check, MONOTONE_VACUITY_NOTE};
pub use structured::{
    ncq_direction_complies, ncq_structured_check, ncq_subset_check, theorem_sec_check, MatrixFn,
    NcqOptions, StructuredProblem, VectorFn,
};

pub const STRICT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    P2,
    P3Monotone,
    P3ZeroLinear,
    GeomM1,
    TheoremSec,
    NcqSubset,
    Ex1,
    Ex2,
    Ex3,
    Corollary3,
}

impl Statement {
    pub fn name(self) -> &'static str {
        match self {
            Statement::P2 => "p2",
            Statement::P3Monotone => "p3_monotone",
            Statement::P3ZeroLinear => "p3_zero_linear",
            Statement::GeomM1 => "geom_m1",
            Statement::TheoremSec => "theorem_sec",
            Statement::NcqSubset => "ncq_subset",
            Statement::Ex1 => "ex1",
            Statement::Ex2 => "ex2",
            Statement::Ex3 => "ex3",
            Statement::Corollary3 => "corollary3",
        }
    }

    pub fn parse(name: &str) -> Option<Statement> {
        ALL_STATEMENTS.iter().copied().find(|s| s.name() == name)
    }
}

pub const ALL_STATEMENTS: [Statement; 10] = [
    Statement::P2,
    Statement::P3Monotone,
    Statement::P3ZeroLinear,
    Statement::GeomM1,
    Statement::TheoremSec,
    Statement::NcqSubset,
    Statement::Ex1,
    Statement::Ex2,
    Statement::Ex3,
    Statement::Corollary3,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Boundary,
}

impl Verdict {
    /// Verdict for a quantity required to be strictly negative.
    pub fn negative(value: f64) -> Verdict {
        if value < -STRICT_MARGIN {
            Verdict::Pass
        } else if value > STRICT_MARGIN || value.is_nan() {
            Verdict::Fail
        } else {
            Verdict::Boundary
        }
    }

    /// Verdict for a quantity required to be strictly positive.
    pub fn positive(value: f64) -> Verdict {
        Verdict::negative(-value)
    }

    /// Conjunction: any fail fails, then any boundary.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Boundary, _) | (_, Verdict::Boundary) => Verdict::Boundary,
            _ => Verdict::Pass,
        }
    }

    /// Disjunction: any pass passes, then any boundary.
    pub fn or(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Pass, _) | (_, Verdict::Pass) => Verdict::Pass,
            (Verdict::Boundary, _) | (_, Verdict::Boundary) => Verdict::Boundary,
            _ => Verdict::Fail,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub reason: String,
    pub values: BTreeMap<String, Vec<f64>>,
}

impl Witness {
    pub fn new(reason: impl Into<String>) -> Self {
        Witness {
            reason: reason.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, values: &[f64]) -> Self {
        self.values.insert(key.to_string(), values.to_vec());
        self
    }
}

/// A quantity found within [`STRICT_MARGIN`] of zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equality {
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub statement: Statement,
    pub verdict: Verdict,
    /// Present whenever the verdict is not a pass.
    pub witness: Option<Witness>,
    /// Present whenever the verdict is boundary.
    pub equality: Option<Equality>,
    /// Informational values computed on the way (roots, worst margins).
    pub values: BTreeMap<String, Vec<f64>>,
    /// Sample counts behind the verdict.
    pub samples: BTreeMap<String, usize>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn pass(statement: Statement) -> Self {
        Certificate {
            statement,
            verdict: Verdict::Pass,
            witness: None,
            equality: None,
            values: BTreeMap::new(),
            samples: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn fail(statement: Statement, witness: Witness) -> Self {
        Certificate {
            verdict: Verdict::Fail,
            witness: Some(witness),
            ..Certificate::pass(statement)
        }
    }

    pub fn boundary(statement: Statement, witness: Witness, equality: Equality) -> Self {
        Certificate {
            verdict: Verdict::Boundary,
            witness: Some(witness),
            equality: Some(equality),
            ..Certificate::pass(statement)
        }
    }

    pub fn is_pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn with_value(mut self, key: &str, values: &[f64]) -> Self {
        self.values.insert(key.to_string(), values.to_vec());
        self
    }

    pub fn with_samples(mut self, key: &str, count: usize) -> Self {
        self.samples.insert(key.to_string(), count);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Builds a certificate from named quantities that must all be strictly
/// negative.
pub(crate) fn all_negative(statement: Statement, quantities: &[(&str, f64)]) -> Certificate {
    let mut verdict = Verdict::Pass;
    let mut first_fail = None;
    let mut first_boundary = None;
    for &(name, value) in quantities {
        let v = Verdict::negative(value);
        verdict = verdict.and(v);
        match v {
            Verdict::Fail if first_fail.is_none() => first_fail = Some((name, value)),
            Verdict::Boundary if first_boundary.is_none() => first_boundary = Some((name, value)),
            _ => {}
        }
    }
    let mut values = BTreeMap::new();
    for &(name, value) in quantities {
        values.insert(name.to_string(), vec![value]);
    }
    let mut cert = match verdict {
        Verdict::Pass => Certificate::pass(statement),
        Verdict::Fail => {
            let (name, value) = first_fail.expect("failing quantity");
            Certificate::fail(
                statement,
                Witness::new(format!("{name} must be negative")).with(name, &[value]),
            )
        }
        Verdict::Boundary => {
            let (name, value) = first_boundary.expect("boundary quantity");
            Certificate::boundary(
                statement,
                Witness::new(format!("{name} vanishes within the strict margin"))
                    .with(name, &[value]),
                Equality {
                    quantity: name.to_string(),
                    value,
                },
            )
        }
    };
    cert.values = values;
    cert
}

/// Runs a per-state check at every sampled state and merges the results:
/// the merged verdict is the conjunction, and the witness comes from the
/// first state with the worst verdict.
pub fn over_states<F>(statement: Statement, states: &[Vec<f64>], check: F) -> Result<Certificate>
where
    F: Fn(&[f64]) -> Result<Certificate>,
{
    let mut merged: Option<Certificate> = None;
    let mut sample_totals: BTreeMap<String, usize> = BTreeMap::new();
    for x in states {
        let cert = check(x)?;
        for (k, v) in &cert.samples {
            *sample_totals.entry(k.clone()).or_insert(0) += v;
        }
        let worse = match &merged {
            None => true,
            Some(m) => rank(cert.verdict) > rank(m.verdict),
        };
        if worse {
            let mut cert = cert;
            if let Some(w) = cert.witness.as_mut() {
                w.values.insert("x".to_string(), x.clone());
            }
            merged = Some(cert);
        }
    }
    let mut out = merged.unwrap_or_else(|| Certificate::pass(statement));
    out.statement = statement;
    out.samples = sample_totals;
    out.samples.insert("x_samples".to_string(), states.len());
    Ok(out)
}

fn rank(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => 0,
        Verdict::Boundary => 1,
        Verdict::Fail => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_algebra() {
        assert_eq!(Verdict::negative(-1.0), Verdict::Pass);
        assert_eq!(Verdict::negative(1e-13), Verdict::Boundary);
        assert_eq!(Verdict::negative(f64::NAN), Verdict::Fail);
        assert_eq!(Verdict::Pass.and(Verdict::Boundary), Verdict::Boundary);
        assert_eq!(Verdict::Fail.or(Verdict::Boundary), Verdict::Boundary);
        assert_eq!(Verdict::Fail.or(Verdict::Pass), Verdict::Pass);
    }

    #[test]
    fn statement_names_round_trip() {
        for s in ALL_STATEMENTS {
            assert_eq!(Statement::parse(s.name()), Some(s));
        }
    }

    #[test]
    fn over_states_keeps_worst_witness() {
        let xs = vec![vec![0.0], vec![1.0], vec![2.0]];
        let cert = over_states(Statement::Ex1, &xs, |x| {
            Ok(all_negative(Statement::Ex1, &[("v", x[0] - 1.5)]))
        })
        .unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert_eq!(cert.witness.unwrap().values["x"], vec![2.0]);
        assert_eq!(cert.samples["x_samples"], 3);
    }
}
