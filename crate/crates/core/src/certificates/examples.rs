use std::fmt;
use std::sync::Arc;

use crate::certificates::{all_negative, over_states, Certificate, Statement};
use crate::error::Result;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Closed-form existence conditions of the worked scalar and two-dimensional
/// examples, in terms of their coefficient functions.
#[derive(Clone)]
pub enum ExampleVariant {
    /// Cost `c u + u²`, dynamics `q u + u²` on `[-1, 1]`: `q (q − c) > 0`.
    Ex1 { c: ScalarFn, q: ScalarFn },
    /// Cost `c u² + u³`, dynamics `q u² + u³` on a positive interval:
    /// `c < q` and `q > 0`.
    Ex2 { c: ScalarFn, q: ScalarFn },
    /// Cost `c u² + u³`, dynamics `(c − β) u² + u³` on `[1, 2]`:
    /// `β < min(0, c)`.
    Ex3 { c: ScalarFn, beta: ScalarFn },
    /// The two-dimensional quadratic instance on `[0, 1]²`.
    Corollary3 {
        q1: ScalarFn,
        q2: ScalarFn,
        c1: ScalarFn,
        c2: ScalarFn,
    },
}

impl fmt::Debug for ExampleVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.statement().name())
    }
}

pub fn constant(v: f64) -> ScalarFn {
    Arc::new(move |_| v)
}

impl ExampleVariant {
    pub fn ex1(c: f64, q: f64) -> Self {
        ExampleVariant::Ex1 {
            c: constant(c),
            q: constant(q),
        }
    }

    pub fn ex2(c: f64, q: f64) -> Self {
        ExampleVariant::Ex2 {
            c: constant(c),
            q: constant(q),
        }
    }

    pub fn ex3(c: f64, beta: f64) -> Self {
        ExampleVariant::Ex3 {
            c: constant(c),
            beta: constant(beta),
        }
    }

    pub fn corollary3(q1: f64, q2: f64, c1: f64, c2: f64) -> Self {
        ExampleVariant::Corollary3 {
            q1: constant(q1),
            q2: constant(q2),
            c1: constant(c1),
            c2: constant(c2),
        }
    }

    pub fn statement(&self) -> Statement {
        match self {
            ExampleVariant::Ex1 { .. } => Statement::Ex1,
            ExampleVariant::Ex2 { .. } => Statement::Ex2,
            ExampleVariant::Ex3 { .. } => Statement::Ex3,
            ExampleVariant::Corollary3 { .. } => Statement::Corollary3,
        }
    }

    fn at(&self, x: &[f64]) -> Certificate {
        let s = self.statement();
        match self {
            ExampleVariant::Ex1 { c, q } => {
                let (c, q) = (c(x), q(x));
                all_negative(s, &[("-q(q - c)", -q * (q - c))])
            }
            ExampleVariant::Ex2 { c, q } => {
                let (c, q) = (c(x), q(x));
                all_negative(s, &[("c - q", c - q), ("-q", -q)])
            }
            ExampleVariant::Ex3 { c, beta } => {
                let (c, b) = (c(x), beta(x));
                all_negative(s, &[("beta - min(0, c)", b - c.min(0.0))])
            }
            ExampleVariant::Corollary3 { q1, q2, c1, c2 } => {
                let (q1, q2, c1, c2) = (q1(x), q2(x), c1(x), c2(x));
                let lower = 0.5 * (q1 + 1.0) * c2;
                let upper = (2.0 * q1 * q1 + q1 * (q2 + 1.0) - q2 - 3.0) / (4.0 * (q1 - 1.0)) * c2;
                all_negative(
                    s,
                    &[
                        ("1/3 - q1", 1.0 / 3.0 - q1),
                        ("q1 - 1", q1 - 1.0),
                        ("-1 - q2", -1.0 - q2),
                        ("q2 - 1", q2 - 1.0),
                        ("-c1", -c1),
                        ("-c2", -c2),
                        ("lower - c1", lower - c1),
                        ("c1 - upper", c1 - upper),
                    ],
                )
                .with_value("c1_bounds", &[lower, upper])
            }
        }
    }
}

/// Checks the variant's strict inequalities at every sampled state.
pub fn example_wrapper_check(
    variant: &ExampleVariant,
    x_samples: &[Vec<f64>],
) -> Result<Certificate> {
    over_states(variant.statement(), x_samples, |x| Ok(variant.at(x)))
}
