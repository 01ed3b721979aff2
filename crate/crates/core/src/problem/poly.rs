use serde::{Deserialize, Serialize};

/// Highest power of any single state variable in a coefficient table.
pub const MAX_DEGREE: u32 = 3;

/// A polynomial in the state `x`: either a constant or a table of monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Poly {
    Constant(f64),
    Table { terms: Vec<Term> },
}

/// `coef · Π xᵢ^expᵢ`. An empty `exp` is a constant term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    #[serde(default)]
    pub exp: Vec<u32>,
}

impl Poly {
    pub fn constant(v: f64) -> Self {
        Poly::Constant(v)
    }

    /// Checks finiteness, exponent length `n_state` and the per-variable
    /// degree cap. Returns a message on failure.
    pub fn validate(&self, n_state: usize) -> Result<(), String> {
        match self {
            Poly::Constant(v) if !v.is_finite() => Err(format!("constant {v} is not finite")),
            Poly::Constant(_) => Ok(()),
            Poly::Table { terms } => {
                for (i, t) in terms.iter().enumerate() {
                    if !t.coef.is_finite() {
                        return Err(format!("terms[{i}].coef is not finite"));
                    }
                    if !t.exp.is_empty() && t.exp.len() != n_state {
                        return Err(format!(
                            "terms[{i}].exp has {} entries, the state has {n_state}",
                            t.exp.len()
                        ));
                    }
                    if let Some(e) = t.exp.iter().find(|e| **e > MAX_DEGREE) {
                        return Err(format!("terms[{i}].exp has degree {e} > {MAX_DEGREE}"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Poly::Constant(v) => *v,
            Poly::Table { terms } => terms
                .iter()
                .map(|t| {
                    t.exp
                        .iter()
                        .zip(x)
                        .fold(t.coef, |acc, (e, xi)| acc * xi.powi(*e as i32))
                })
                .sum(),
        }
    }

    /// The value when no term depends on `x`.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Poly::Constant(v) => Some(*v),
            Poly::Table { terms } => terms
                .iter()
                .all(|t| t.coef == 0.0 || t.exp.iter().all(|e| *e == 0))
                .then(|| terms.iter().map(|t| t.coef).sum()),
        }
    }

    pub fn is_constant(&self, v: f64) -> bool {
        self.as_constant() == Some(v)
    }

    /// `self − other` as a table.
    pub fn sub(&self, other: &Poly) -> Poly {
        let mut terms = self.terms();
        terms.extend(
            other
                .terms()
                .into_iter()
                .map(|t| Term { coef: -t.coef, ..t }),
        );
        Poly::Table { terms }
    }

    fn terms(&self) -> Vec<Term> {
        match self {
            Poly::Constant(v) => vec![Term {
                coef: *v,
                exp: Vec::new(),
            }],
            Poly::Table { terms } => terms.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Poly {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn forms() {
        assert_eq!(parse("2.5"), Poly::Constant(2.5));
        let p = parse(r#"{"terms": [{"coef": 1.0}, {"coef": -2.0, "exp": [2, 1]}]}"#);
        assert_eq!(p.eval(&[3.0, 0.5]), 1.0 - 2.0 * 9.0 * 0.5);
        assert!(p.validate(2).is_ok());
        assert!(p.validate(1).is_err());
        assert_eq!(p.as_constant(), None);
        let c = parse(r#"{"terms": [{"coef": 1.5, "exp": [0]}, {"coef": 0.5}]}"#);
        assert_eq!(c.as_constant(), Some(2.0));
        assert!(parse(r#"{"terms": [{"coef": 1.0, "exp": [4]}]}"#)
            .validate(1)
            .is_err());
        assert!(serde_json::from_str::<Poly>(r#"{"terms": [{"coef": 1.0, "pow": [1]}]}"#).is_err());
    }

    #[test]
    fn difference() {
        let a = parse(r#"{"terms": [{"coef": 1.0, "exp": [1]}]}"#);
        let d = a.sub(&Poly::Constant(2.0));
        assert_eq!(d.eval(&[5.0]), 3.0);
        assert_eq!(
            Poly::Constant(3.0).sub(&Poly::Constant(1.0)).as_constant(),
            Some(2.0)
        );
    }
}
