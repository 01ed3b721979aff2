//! Dense two-phase simplex for the small linear programs used by hull
//! membership, hull vertex detection and sectioned minimization over sampled
//! moment curves. Problems have a handful of rows and a few thousand columns.
//!
//! Solves `minimize cost·x  subject to  A x = rhs, x >= 0`, with `A` given
//! column by column.

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-12;
/// Degenerate pivots tolerated under Dantzig's rule before switching to Bland's.
const DEGENERATE_LIMIT: usize = 50;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Phase-one infeasibility (sum of artificials) at termination.
    pub infeasibility: f64,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, row: usize, col: usize, reduced: &mut [f64], objective: &mut f64) {
        let w = self.width;
        let p = self.at(row, col);
        for j in 0..w {
            self.data[row * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.data[row * w..(row + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = self.data[i * w + col];
            if f != 0.0 {
                let r = &mut self.data[i * w..(i + 1) * w];
                for (x, pr) in r.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
            }
        }
        let f = reduced[col];
        if f != 0.0 {
            for j in 0..w - 1 {
                reduced[j] -= f * pivot_row[j];
            }
            *objective += f * pivot_row[w - 1];
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations over the columns `allowed(j)`. Returns false on
    /// unboundedness.
    fn optimize(
        &mut self,
        reduced: &mut [f64],
        objective: &mut f64,
        allowed: impl Fn(usize) -> bool,
    ) -> bool {
        let ncols = self.width - 1;
        let mut degenerate = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate > DEGENERATE_LIMIT;
            let mut entering = None;
            let mut best = -COST_EPS;
            for (j, &r) in reduced.iter().enumerate().take(ncols) {
                if !allowed(j) || r >= -COST_EPS {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if r < best {
                    best = r;
                    entering = Some(j);
                }
            }
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-15
                                || (ratio <= lr + 1e-15 && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, ratio)) = leave else {
                return false;
            };
            if ratio.abs() <= 1e-15 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(row, col, reduced, objective);
        }
        true
    }
}

/// Minimizes `cost·x` subject to `sum_j x_j columns[j] = rhs`, `x >= 0`.
pub fn minimize(columns: &[Vec<f64>], rhs: &[f64], cost: &[f64]) -> LpSolution {
    let m = rhs.len();
    let n = columns.len();
    assert_eq!(cost.len(), n, "cost length must match column count");
    let width = n + m + 1;
    let mut data = vec![0.0; m * width];
    for i in 0..m {
        let sign = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, col) in columns.iter().enumerate() {
            data[i * width + j] = sign * col[i];
        }
        data[i * width + n + i] = 1.0;
        data[i * width + width - 1] = sign * rhs[i];
    }
    let mut tab = Tableau {
        rows: m,
        width,
        data,
        basis: (n..n + m).collect(),
    };

    // Phase one: minimize the sum of artificials.
    let mut reduced = vec![0.0; width - 1];
    let mut objective = 0.0;
    for i in 0..m {
        for (j, r) in reduced.iter_mut().enumerate().take(n) {
            *r -= tab.at(i, j);
        }
        objective -= tab.rhs(i);
    }
    // `objective` tracks the negated phase-one value.
    tab.optimize(&mut reduced, &mut objective, |j| j < n);
    let infeasibility = (0..m)
        .filter(|&i| tab.basis[i] >= n)
        .map(|i| tab.rhs(i).max(0.0))
        .sum::<f64>();
    let scale = 1.0 + rhs.iter().map(|v| v.abs()).sum::<f64>();
    if infeasibility > 1e-9 * scale {
        return LpSolution {
            status: LpStatus::Infeasible,
            x: extract(&tab, n),
            objective: f64::NAN,
            infeasibility,
        };
    }

    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.at(i, j).abs() > 1e-9) {
                let mut dummy = vec![0.0; width - 1];
                let mut dummy_obj = 0.0;
                tab.pivot(i, j, &mut dummy, &mut dummy_obj);
            }
        }
    }

    // Phase two.
    let mut reduced = vec![0.0; width - 1];
    reduced[..n].copy_from_slice(cost);
    let mut objective = 0.0;
    for i in 0..m {
        let b = tab.basis[i];
        let cb = if b < n { cost[b] } else { 0.0 };
        if cb != 0.0 {
            for (j, r) in reduced.iter_mut().enumerate() {
                *r -= cb * tab.at(i, j);
            }
            objective -= cb * tab.rhs(i);
        }
    }
    let bounded = tab.optimize(&mut reduced, &mut objective, |j| j < n);
    let x = extract(&tab, n);
    let value = x.iter().zip(cost).map(|(a, b)| a * b).sum();
    LpSolution {
        status: if bounded {
            LpStatus::Optimal
        } else {
            LpStatus::Unbounded
        },
        x,
        objective: value,
        infeasibility,
    }
}

fn extract(tab: &Tableau, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..tab.rows {
        let b = tab.basis[i];
        if b < n {
            x[b] = tab.rhs(i).max(0.0);
        }
    }
    x
}

/// L1 distance from `target` to the convex hull of `points`, with the
/// convex weights realizing it.
pub fn hull_residual(points: &[Vec<f64>], target: &[f64]) -> (f64, Vec<f64>) {
    let d = target.len();
    let np = points.len();
    let mut columns = Vec::with_capacity(np + 2 * d);
    for p in points {
        let mut col = p.clone();
        col.push(1.0);
        columns.push(col);
    }
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut col = vec![0.0; d + 1];
            col[i] = sign;
            columns.push(col);
        }
    }
    let mut rhs = target.to_vec();
    rhs.push(1.0);
    let mut cost = vec![0.0; np];
    cost.extend(std::iter::repeat_n(1.0, 2 * d));
    let sol = minimize(&columns, &rhs, &cost);
    let weights = sol.x[..np].to_vec();
    let residual = sol.x[np..].iter().sum();
    (residual, weights)
}
