use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::certificates::{ExampleVariant, ScalarFn, Statement, StructuredProblem};
use crate::moments::ControlBasis;
use crate::problem::{Poly, Problem, ProblemFile};
use crate::relaxed::ProblemSpec;

/// Structural facts about a problem that decide which certificates apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shape {
    pub state_dim: usize,
    /// No coefficient depends on `x`.
    pub constant_coefficients: bool,
    /// Degree-3 scalar case with vanishing linear components of `c` and `q`.
    pub zero_linear: bool,
    /// Quadratic-diagonal basis with as many states as controls.
    pub structured: bool,
    /// Worked examples whose coefficient pattern matches exactly.
    pub examples: Vec<Statement>,
}

fn same(a: f64, b: f64) -> bool {
    a == b
}

impl Shape {
    pub(crate) fn detect(file: &ProblemFile, spec: &ProblemSpec) -> Shape {
        let c = &file.coefficients.c;
        let q = &file.coefficients.q;
        let dim = spec.state_dim();
        let constant_coefficients = c
            .iter()
            .chain(q.iter().flatten())
            .chain(file.dynamics.q0.iter().flatten())
            .all(|p| p.as_constant().is_some());
        let bounds: Vec<(f64, f64)> = spec
            .k
            .lower()
            .iter()
            .copied()
            .zip(spec.k.upper().iter().copied())
            .collect();
        let mut examples = Vec::new();
        let mut zero_linear = false;
        let no_drift = file
            .dynamics
            .q0
            .iter()
            .flatten()
            .all(|p| p.is_constant(0.0));
        match spec.basis {
            ControlBasis::Power { degree: 2 } if dim == 1 => {
                if bounds == [(-1.0, 1.0)]
                    && c[1].is_constant(1.0)
                    && q[0][1].is_constant(1.0)
                    && no_drift
                {
                    examples.push(Statement::Ex1);
                }
            }
            ControlBasis::Power { degree: 3 } if dim == 1 => {
                zero_linear = c[0].is_constant(0.0) && q[0][0].is_constant(0.0);
                let a1 = bounds[0].0;
                if zero_linear
                    && a1 > 0.0
                    && c[2].is_constant(1.0)
                    && q[0][2].is_constant(1.0)
                    && no_drift
                {
                    examples.push(Statement::Ex2);
                    if same(a1, 1.0) && same(bounds[0].1, 2.0) {
                        examples.push(Statement::Ex3);
                    }
                }
            }
            ControlBasis::QuadraticDiag { n: 2 } if dim == 2 => {
                let fixed = [
                    (&q[0][0], 1.0),
                    (&q[0][1], -1.0),
                    (&q[0][3], 1.0),
                    (&q[1][1], 1.0),
                    (&q[1][2], 1.0),
                    (&q[1][3], 1.0),
                    (&c[0], 0.0),
                    (&c[1], 0.0),
                ];
                if bounds == [(0.0, 1.0), (0.0, 1.0)]
                    && no_drift
                    && fixed.iter().all(|(p, v)| p.is_constant(*v))
                {
                    examples.push(Statement::Corollary3);
                }
            }
            _ => {}
        }
        let structured = matches!(spec.basis, ControlBasis::QuadraticDiag { n } if n == dim);
        Shape {
            state_dim: dim,
            constant_coefficients,
            zero_linear,
            structured,
            examples,
        }
    }

    pub fn state_independent(&self) -> bool {
        self.constant_coefficients
    }
}

/// Certificates whose hypotheses on basis, control set and coefficient
/// pattern hold. The degree-3 monotone test is left out: it is only run on
/// request.
pub fn applicable_certificates(problem: &Problem) -> Vec<Statement> {
    let shape = &problem.shape;
    let spec = &problem.spec;
    let mut out = Vec::new();
    match spec.basis {
        ControlBasis::Power { degree: 2 } if shape.state_dim == 1 => {
            out.extend([Statement::P2, Statement::NcqSubset]);
        }
        ControlBasis::Power { degree: 3 } if shape.state_dim == 1 => {
            let a1 = spec.k.lower()[0];
            let a2 = spec.k.upper()[0];
            if shape.zero_linear && (a1 > 0.0 || a2 < 0.0) {
                out.push(Statement::P3ZeroLinear);
            }
            if a1 > 0.0 {
                out.extend([Statement::GeomM1, Statement::NcqSubset]);
            }
        }
        ControlBasis::QuadraticDiag { .. } => {
            if shape.structured {
                out.push(Statement::TheoremSec);
            }
            out.push(Statement::NcqSubset);
        }
        _ => {
            if spec.basis.psi_convex_on(&spec.k) {
                out.push(Statement::NcqSubset);
            }
        }
    }
    out.extend(shape.examples.iter().copied());
    out
}

fn scalar(p: &Poly) -> ScalarFn {
    let p = p.clone();
    Arc::new(move |x: &[f64]| p.eval(x))
}

impl Problem {
    /// The worked-example variant matching `statement`, when the coefficient
    /// pattern fits.
    pub fn example_variant(&self, statement: Statement) -> Option<ExampleVariant> {
        if !self.shape.examples.contains(&statement) {
            return None;
        }
        let c = &self.file.coefficients.c;
        let q = &self.file.coefficients.q;
        Some(match statement {
            Statement::Ex1 => ExampleVariant::Ex1 {
                c: scalar(&c[0]),
                q: scalar(&q[0][0]),
            },
            Statement::Ex2 => ExampleVariant::Ex2 {
                c: scalar(&c[1]),
                q: scalar(&q[0][1]),
            },
            Statement::Ex3 => ExampleVariant::Ex3 {
                c: scalar(&c[1]),
                beta: scalar(&c[1].sub(&q[0][1])),
            },
            Statement::Corollary3 => ExampleVariant::Corollary3 {
                q1: scalar(&q[0][2]),
                q2: scalar(&q[1][0]),
                c1: scalar(&c[2]),
                c2: scalar(&c[3]),
            },
            _ => return None,
        })
    }

    /// Splits `Q = [Q₁ | Q₂]` and `c = (c₁, c₂)` for the quadratic-diagonal
    /// basis with `N = n`.
    pub fn structured_problem(&self) -> Option<StructuredProblem> {
        if !self.shape.structured {
            return None;
        }
        let n = self.shape.state_dim;
        let dynamics = self.spec.dynamics.clone();
        let cost = self.spec.cost.clone();
        let block = move |offset: usize| {
            let dynamics = dynamics.clone();
            Arc::new(move |x: &[f64]| {
                let q = dynamics(x);
                DMatrix::from_fn(n, n, |r, j| q[(r, offset + j)])
            })
        };
        let half = move |offset: usize| {
            let cost = cost.clone();
            Arc::new(move |x: &[f64]| cost(x)[offset..offset + n].to_vec())
        };
        Some(StructuredProblem {
            n,
            q1: block(0),
            q2: block(n),
            q0: self.spec.drift.clone(),
            c1: half(0),
            c2: half(n),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(basis: &str, k: &str, c: &str, q: &str, x0: &str) -> Problem {
        Problem::parse(&format!(
            r#"{{"basis": {basis}, "K": {{"bounds": {k}}}, "coefficients": {{"c": {c}, "Q": {q}}},
                "horizon": {{"x0": {x0}, "T": 1}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn scalar_examples_are_detected() {
        let p = problem(
            r#"{"kind": "power1d", "p": 2}"#,
            "[[-1, 1]]",
            "[1, 1]",
            "[[2, 1]]",
            "[0]",
        );
        assert_eq!(p.shape.examples, vec![Statement::Ex1]);
        assert_eq!(
            applicable_certificates(&p),
            vec![Statement::P2, Statement::NcqSubset, Statement::Ex1]
        );
        let p = problem(
            r#"{"kind": "power1d", "p": 3}"#,
            "[[1, 2]]",
            "[0, 1, 1]",
            "[[0, 2, 1]]",
            "[0]",
        );
        assert_eq!(p.shape.examples, vec![Statement::Ex2, Statement::Ex3]);
        assert!(p.shape.zero_linear);
        let p = problem(
            r#"{"kind": "power1d", "p": 3}"#,
            "[[-1, 2]]",
            "[0, 1, 1]",
            "[[0, 2, 1]]",
            "[0]",
        );
        assert!(applicable_certificates(&p).is_empty());
    }

    #[test]
    fn corollary_pattern_and_blocks() {
        let p = problem(
            r#"{"kind": "quadratic_diag", "n": 2}"#,
            "[[0, 1], [0, 1]]",
            "[0, 0, 0.85, 1]",
            "[[1, -1, 0.5, 1], [0, 1, 1, 1]]",
            "[0, 0]",
        );
        assert_eq!(p.shape.examples, vec![Statement::Corollary3]);
        let sp = p.structured_problem().unwrap();
        let x = [0.0, 0.0];
        assert_eq!(
            (sp.q1)(&x),
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0])
        );
        assert_eq!(
            (sp.q2)(&x),
            DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 1.0])
        );
        assert_eq!((sp.c2)(&x), vec![0.85, 1.0]);
        assert!(p.example_variant(Statement::Corollary3).is_some());
        assert!(p.example_variant(Statement::Ex1).is_none());
    }
}
