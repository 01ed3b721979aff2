use crate::certificates::{Certificate, Equality, Statement, Verdict, Witness, STRICT_MARGIN};
use crate::error::{Error, Result};
use crate::moments::ControlSet;
use crate::numeric::{bisect, linspace};

pub const GEOM_GRID: usize = 200;
pub const ROOT_SCAN: usize = 1000;

fn phi(t: f64) -> [f64; 3] {
    [t, t * t, t * t * t]
}

fn dphi(t: f64) -> [f64; 3] {
    [1.0, 2.0 * t, 3.0 * t * t]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Principal normal direction of `t ↦ (t, t², t³)`, as `(φ' × φ'') × φ'`.
pub fn cubic_curve_normal(t: f64) -> [f64; 3] {
    let ddphi = [0.0, 2.0, 6.0 * t];
    cross(cross(dphi(t), ddphi), dphi(t))
}

/// `(φ'(t) × (c × q)) · (φ(s) − φ(t))`.
pub fn sign_field(c: [f64; 3], q: [f64; 3], t: f64, s: f64) -> f64 {
    let n = cross(dphi(t), cross(c, q));
    let (ps, pt) = (phi(s), phi(t));
    dot(n, [ps[0] - pt[0], ps[1] - pt[1], ps[2] - pt[2]])
}

/// Geometric certificate for degree 3 on a positive interval: the sign field
/// keeps one strict sign over all grid pairs `s ≠ t`, and at a unique root
/// `a` of `(φ(a1) + φ(a2) − 2φ(a))·q` the same combination with `c` is
/// positive. Several roots give a fail.
pub fn geom_m1_check(
    c: [f64; 3],
    q: [f64; 3],
    k: &ControlSet,
    grid_n: usize,
) -> Result<Certificate> {
    let (a1, a2) = k
        .interval_bounds()
        .ok_or_else(|| Error::InvalidControlSet("an interval is required".into()))?;
    if a1 <= 0.0 {
        return Err(Error::InvalidControlSet(format!(
            "the geometric certificate needs a1 > 0, got {a1}"
        )));
    }
    if grid_n < 2 {
        return Err(Error::InvalidArgument("grid_n must be at least 2".into()));
    }
    let st = Statement::GeomM1;
    let cq = cross(c, q);
    let norm = |v: [f64; 3]| dot(v, v).sqrt();
    if norm(cq) <= STRICT_MARGIN * (1.0 + norm(c) * norm(q)) {
        return Ok(Certificate::fail(
            st,
            Witness::new("zero field: c and q are parallel").with("c x q", &cq),
        )
        .with_samples("grid_pairs", 0));
    }

    let grid = linspace(a1, a2, grid_n);
    let mut min = (f64::INFINITY, 0.0, 0.0);
    let mut max = (f64::NEG_INFINITY, 0.0, 0.0);
    for &t in &grid {
        for &s in &grid {
            if s == t {
                continue;
            }
            let v = sign_field(c, q, t, s);
            if v < min.0 {
                min = (v, t, s);
            }
            if v > max.0 {
                max = (v, t, s);
            }
        }
    }
    let pairs = grid_n * (grid_n - 1);
    let sign_verdict = if min.0 > STRICT_MARGIN || max.0 < -STRICT_MARGIN {
        Verdict::Pass
    } else if min.0 < -STRICT_MARGIN && max.0 > STRICT_MARGIN {
        Verdict::Fail
    } else {
        Verdict::Boundary
    };
    let field_range = [min.0, max.0];
    if sign_verdict == Verdict::Fail {
        return Ok(Certificate::fail(
            st,
            Witness::new("sign field changes sign")
                .with("negative (t, s, value)", &[min.1, min.2, min.0])
                .with("positive (t, s, value)", &[max.1, max.2, max.0]),
        )
        .with_value("field_range", &field_range)
        .with_samples("grid_pairs", pairs));
    }

    let chord = |a: f64, w: [f64; 3]| {
        let (p1, p2, pa) = (phi(a1), phi(a2), phi(a));
        dot(
            [
                p1[0] + p2[0] - 2.0 * pa[0],
                p1[1] + p2[1] - 2.0 * pa[1],
                p1[2] + p2[2] - 2.0 * pa[2],
            ],
            w,
        )
    };
    let roots = scan_roots(|a| chord(a, q), a1, a2, ROOT_SCAN);
    let mut cert = match roots.len() {
        0 => Certificate::pass(st)
            .with_note("no root of the chord condition; second requirement is vacuous"),
        1 => {
            let value = chord(roots[0], c);
            match Verdict::positive(value) {
                Verdict::Pass => Certificate::pass(st),
                Verdict::Fail => Certificate::fail(
                    st,
                    Witness::new("chord combination with c is not positive at the root")
                        .with("a", &roots)
                        .with("value", &[value]),
                ),
                Verdict::Boundary => Certificate::boundary(
                    st,
                    Witness::new("chord combination with c vanishes at the root").with("a", &roots),
                    Equality {
                        quantity: "(phi(a1) + phi(a2) - 2 phi(a)) . c".into(),
                        value,
                    },
                ),
            }
            .with_value("chord_c", &[value])
        }
        _ => {
            let endpoints = roots.len() == 2 && roots[0] == a1 && roots[1] == a2;
            let mut w = Witness::new("chord condition has several roots").with("roots", &roots);
            if endpoints {
                w.reason.push_str(" (the endpoint pair a1, a2)");
            }
            Certificate::fail(st, w)
        }
    };
    cert = cert
        .with_value("roots", &roots)
        .with_value("field_range", &field_range)
        .with_samples("grid_pairs", pairs)
        .with_samples("root_scan", ROOT_SCAN);
    if sign_verdict == Verdict::Boundary && cert.verdict != Verdict::Fail {
        let value = if min.0.abs() < max.0.abs() {
            min.0
        } else {
            max.0
        };
        cert.verdict = Verdict::Boundary;
        cert.witness.get_or_insert_with(|| {
            Witness::new("sign field touches zero").with("field_range", &field_range)
        });
        cert.equality.get_or_insert(Equality {
            quantity: "sign field".into(),
            value,
        });
    }
    Ok(cert)
}

/// Roots of `f` on `[lo, hi]` from a uniform scan: grid points where `f`
/// vanishes (up to rounding) and bisected sign changes.
fn scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let grid = linspace(lo, hi, n);
    let values: Vec<f64> = grid.iter().map(|&a| f(a)).collect();
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let zero = |v: f64| v.abs() <= 1e-14 * scale;
    let mut roots = Vec::new();
    for i in 0..n {
        if zero(values[i]) {
            roots.push(grid[i]);
        } else if i + 1 < n && !zero(values[i + 1]) && (values[i] < 0.0) != (values[i + 1] < 0.0) {
            roots.push(bisect(&f, grid[i], grid[i + 1], 1e-12));
        }
    }
    roots
}
