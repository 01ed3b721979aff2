use crate::certificates::{
    all_negative, Certificate, Equality, Statement, Verdict, Witness, STRICT_MARGIN,
};
use crate::error::{Error, Result};
use crate::moments::ControlSet;

/// Attached to every monotone-cubic report: the two strict inequalities ask
/// the whole line `{c + ηq}` to stay inside the open cone `u₂² < 3u₁u₃`, which
/// contains no line when `q ≠ 0`.
pub const MONOTONE_VACUITY_NOTE: &str =
    "vacuous-strict: no pair with q != 0 satisfies both strict inequalities; c proportional to q gives equality";

fn interval(k: &ControlSet) -> Result<(f64, f64)> {
    k.interval_bounds()
        .ok_or_else(|| Error::InvalidControlSet("an interval is required".into()))
}

/// Degree-2 duality conditions on `K = [a1, a2]`.
pub fn p2_check(c: [f64; 2], q: [f64; 2], k: &ControlSet) -> Result<Certificate> {
    let (a1, a2) = interval(k)?;
    let lead = q[0] + q[1] * (a1 + a2);
    let det = c[0] * q[1] - c[1] * q[0];
    let product = lead * det;

    let first = if lead.abs() <= STRICT_MARGIN {
        Verdict::positive(det.abs())
    } else {
        Verdict::Fail
    };
    let second = Verdict::negative(product);
    let verdict = first.or(second);

    let mut cert = match verdict {
        Verdict::Pass => Certificate::pass(Statement::P2),
        Verdict::Fail => Certificate::fail(
            Statement::P2,
            Witness::new("(q1 + q2 (a1 + a2)) det[c; q] is positive")
                .with("lead", &[lead])
                .with("det", &[det])
                .with("product", &[product]),
        ),
        Verdict::Boundary => {
            let (quantity, value) = if lead.abs() <= STRICT_MARGIN {
                ("det", det)
            } else {
                ("product", product)
            };
            Certificate::boundary(
                Statement::P2,
                Witness::new("decisive quantity vanishes within the strict margin")
                    .with("lead", &[lead])
                    .with("det", &[det]),
                Equality {
                    quantity: quantity.into(),
                    value,
                },
            )
        }
    };
    if first == Verdict::Pass {
        cert = cert.with_note("passes through the vanishing-lead condition");
    }
    Ok(cert
        .with_value("lead", &[lead])
        .with_value("det", &[det])
        .with_value("product", &[product]))
}

/// Monotone-cubic conditions for degree 3: `q₂² − 3q₁q₃ < 0` and the
/// discriminant of `η ↦ (c₂+ηq₂)² − 3(c₁+ηq₁)(c₃+ηq₃)` negative.
pub fn p3_monotone_check(c: [f64; 3], q: [f64; 3]) -> Certificate {
    let first = q[1] * q[1] - 3.0 * q[0] * q[2];
    let b = 2.0 * c[1] * q[1] - 3.0 * c[0] * q[2] - 3.0 * q[0] * c[2];
    let second = b * b - 4.0 * (c[1] * c[1] - 3.0 * c[0] * c[2]) * first;
    all_negative(
        Statement::P3Monotone,
        &[("q_discriminant", first), ("pencil_discriminant", second)],
    )
    .with_note(MONOTONE_VACUITY_NOTE)
}

/// Conditions for degree 3 with vanishing linear coefficients, on an
/// interval that excludes zero.
pub fn p3_zero_linear_check(c: [f64; 3], q: [f64; 3], k: &ControlSet) -> Result<Certificate> {
    let (a1, a2) = interval(k)?;
    if c[0] != 0.0 || q[0] != 0.0 {
        return Err(Error::Structural(
            "linear components of c and q must vanish".into(),
        ));
    }
    if q[2] == 0.0 {
        return Err(Error::Structural("q3 must be nonzero".into()));
    }
    if a1 <= 0.0 && a2 >= 0.0 {
        return Err(Error::InvalidControlSet(format!("[{a1}, {a2}] contains 0")));
    }
    let slope = -q[1] / q[2];
    let tangent = c[1] + c[2] * slope;
    // Positive intervals need a negative slope, negative intervals a positive one.
    let slope_signed = if a1 > 0.0 { slope } else { -slope };
    Ok(all_negative(
        Statement::P3ZeroLinear,
        &[("slope", slope_signed), ("c2 - c3 q2/q3", tangent)],
    )
    .with_value("m", &[slope]))
}
