//! Small scalar numerics shared by the moment, certificate and oracle code:
//! uniform grids, golden-section refinement, bisection and real cubics.

/// `n` equally spaced points from `lo` to `hi` inclusive. The last point is
/// exactly `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Cartesian product of per-axis uniform grids.
pub fn box_grid(lower: &[f64], upper: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = lower
        .iter()
        .zip(upper)
        .map(|(&lo, &hi)| linspace(lo, hi, per_axis))
        .collect();
    let mut points = vec![Vec::with_capacity(axes.len())];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for p in &points {
            for &v in axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `f` on `[lo, hi]`. Returns `(argmin, min)`;
/// the endpoints are compared against the interior result so a monotone
/// function returns its boundary minimizer.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a).abs() > tol && iterations < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for x in [lo, hi] {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Bisection for a sign change of `f` on `[lo, hi]`. Assumes
/// `f(lo)` and `f(hi)` have opposite signs (or one is zero).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real polynomial `c0 + c1 t + c2 t^2 + c3 t^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic(pub [f64; 4]);

impl Cubic {
    pub fn eval(&self, t: f64) -> f64 {
        let [c0, c1, c2, c3] = self.0;
        ((c3 * t + c2) * t + c1) * t + c0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let [_, c1, c2, c3] = self.0;
        (3.0 * c3 * t + 2.0 * c2) * t + c1
    }

    fn scale(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Critical points strictly inside `(lo, hi)`, ascending.
    pub fn critical_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let [_, c1, c2, c3] = self.0;
        let (a, b, c) = (3.0 * c3, 2.0 * c2, c1);
        let scale = self.scale().max(f64::MIN_POSITIVE);
        let mut roots = Vec::new();
        if a.abs() <= 1e-14 * scale {
            if b.abs() > 1e-14 * scale {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                // Numerically stable pair.
                let qq = -0.5 * (b + b.signum() * sq);
                if qq != 0.0 {
                    roots.push(qq / a);
                    roots.push(c / qq);
                } else {
                    roots.push(0.0);
                }
            }
        }
        let mut inside: Vec<f64> = roots
            .into_iter()
            .filter(|t| t.is_finite() && *t > lo && *t < hi)
            .collect();
        inside.sort_by(f64::total_cmp);
        inside.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
        inside
    }

    /// Breakpoints splitting `[lo, hi]` into pieces on which the cubic is monotone.
    pub fn monotone_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut breaks = vec![lo];
        breaks.extend(self.critical_points(lo, hi));
        breaks.push(hi);
        breaks
    }

    /// Exact minimum over `[lo, hi]`: returns the minimal value and every
    /// candidate (endpoint or critical point) attaining it within `tie_tol`.
    pub fn min_on(&self, lo: f64, hi: f64, tie_tol: f64) -> (f64, Vec<f64>) {
        let candidates = self.monotone_breaks(lo, hi);
        let values: Vec<f64> = candidates.iter().map(|&t| self.eval(t)).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let arg = candidates
            .iter()
            .zip(&values)
            .filter(|(_, v)| **v <= min + tie_tol)
            .map(|(t, _)| *t)
            .collect();
        (min, arg)
    }

    /// Exact maximum over `[lo, hi]`.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        self.monotone_breaks(lo, hi)
            .iter()
            .map(|&t| self.eval(t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// All real roots of `self(t) = level` in `[lo, hi]`, ascending. Roots
    /// touching the level at a critical point are found when the residual at
    /// the break is within `tol`.
    pub fn roots_in(&self, level: f64, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        let h = |t: f64| self.eval(t) - level;
        let breaks = self.monotone_breaks(lo, hi);
        let mut roots: Vec<f64> = Vec::new();
        for &b in &breaks {
            if h(b).abs() <= tol {
                roots.push(b);
            }
        }
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ha, hb) = (h(a), h(b));
            if ha.abs() <= tol || hb.abs() <= tol {
                continue;
            }
            if (ha < 0.0) != (hb < 0.0) {
                roots.push(bisect(h, a, b, 1e-15 * (1.0 + a.abs().max(b.abs()))));
            }
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * (1.0 + y.abs()));
        roots
    }
}
