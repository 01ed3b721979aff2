use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::certificates::{
    over_states, Certificate, Equality, Statement, Verdict, Witness, STRICT_MARGIN,
};
use crate::error::{check_dim, Error, Result};
use crate::moments::{ControlBasis, ControlSet};

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Scaled determinant below which a matrix is treated as singular.
const SINGULAR_TOL: f64 = 1e-10;
/// `∇Ψ v` is treated as zero below this sup norm.
const ZERO_TOL: f64 = 1e-10;

/// Quadratic problem with `N = n`: dynamics `Q₀ + Q₁ u + Q₂ u²` and cost
/// `c₁·u + c₂·u²`, squares taken componentwise.
#[derive(Clone)]
pub struct StructuredProblem {
    pub n: usize,
    pub q1: MatrixFn,
    pub q2: MatrixFn,
    pub q0: Option<VectorFn>,
    pub c1: VectorFn,
    pub c2: VectorFn,
}

impl std::fmt::Debug for StructuredProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StructuredProblem")
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

impl StructuredProblem {
    pub fn constant(
        q1: DMatrix<f64>,
        q2: DMatrix<f64>,
        c1: Vec<f64>,
        c2: Vec<f64>,
    ) -> Result<Self> {
        let n = c1.len();
        check_dim(n, c2.len(), "c2")?;
        for (m, name) in [(&q1, "Q1"), (&q2, "Q2")] {
            if m.shape() != (n, n) {
                return Err(Error::Structural(format!("{name} must be {n}x{n}")));
            }
        }
        Ok(StructuredProblem {
            n,
            q1: Arc::new(move |_| q1.clone()),
            q2: Arc::new(move |_| q2.clone()),
            q0: None,
            c1: Arc::new(move |_| c1.clone()),
            c2: Arc::new(move |_| c2.clone()),
        })
    }

    /// `D(x) = −Q₁⁻¹ Q₂`; errors when `Q₁(x)` is singular.
    pub fn d_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let q1 = (self.q1)(x);
        if scaled_det(&q1).abs() <= SINGULAR_TOL {
            return Err(Error::Structural(format!("Q1 is singular at x = {x:?}")));
        }
        let q2 = (self.q2)(x);
        let sol = q1
            .lu()
            .solve(&q2)
            .ok_or_else(|| Error::Structural(format!("Q1 is singular at x = {x:?}")))?;
        Ok(-sol)
    }

    /// `E(x) = c₁ D + c₂` as a column vector.
    pub fn e_vector(&self, x: &[f64], d: &DMatrix<f64>) -> DVector<f64> {
        let c1 = DVector::from_vec((self.c1)(x));
        let c2 = DVector::from_vec((self.c2)(x));
        d.transpose() * c1 + c2
    }

    /// `Q = [Q₁ Q₂]`, `n × 2n`.
    pub fn full_q(&self, x: &[f64]) -> DMatrix<f64> {
        let (q1, q2) = ((self.q1)(x), (self.q2)(x));
        let n = self.n;
        DMatrix::from_fn(
            n,
            2 * n,
            |r, c| if c < n { q1[(r, c)] } else { q2[(r, c - n)] },
        )
    }

    /// `c = (c₁, c₂)`.
    pub fn full_c(&self, x: &[f64]) -> Vec<f64> {
        let mut c = (self.c1)(x);
        c.extend((self.c2)(x));
        c
    }
}

/// Determinant after scaling every row to unit Euclidean norm.
fn scaled_det(m: &DMatrix<f64>) -> f64 {
    let mut s = m.clone();
    for mut row in s.row_iter_mut() {
        let n = row.norm();
        if n == 0.0 {
            return 0.0;
        }
        row /= n;
    }
    s.determinant()
}

enum UOutcome {
    Singular { det: f64 },
    Margin { y: DVector<f64> },
}

/// `U(φ(u), x)` nonsingular and `U⁻ᵀ E < 0` at every sampled state and at
/// every point of a `u_grid_n`-per-axis grid over `K`.
pub fn theorem_sec_check(
    sp: &StructuredProblem,
    k: &ControlSet,
    x_samples: &[Vec<f64>],
    u_grid_n: usize,
) -> Result<Certificate> {
    check_dim(sp.n, k.dim(), "control set")?;
    let grid = k.grid(u_grid_n);
    let st = Statement::TheoremSec;
    over_states(st, x_samples, |x| {
        let d = sp.d_matrix(x)?;
        let e = sp.e_vector(x, &d);
        let n = sp.n;
        let outcomes: Vec<UOutcome> = grid
            .par_iter()
            .map(|u| {
                let mut um = -DMatrix::<f64>::identity(n, n);
                for i in 0..n {
                    for j in 0..n {
                        um[(i, j)] += 2.0 * u[i] * d[(i, j)];
                    }
                }
                let det = scaled_det(&um);
                if det.abs() <= SINGULAR_TOL {
                    return UOutcome::Singular { det };
                }
                match um.transpose().lu().solve(&e) {
                    Some(y) => UOutcome::Margin { y },
                    None => UOutcome::Singular { det },
                }
            })
            .collect();
        let mut worst: Option<(usize, usize, f64)> = None;
        for (iu, out) in outcomes.iter().enumerate() {
            match out {
                UOutcome::Singular { det } => {
                    return Ok(Certificate::fail(
                        st,
                        Witness::new("U is singular")
                            .with("u", &grid[iu])
                            .with("scaled_det", &[*det]),
                    )
                    .with_samples("u_grid", grid.len()));
                }
                UOutcome::Margin { y } => {
                    for (comp, &val) in y.iter().enumerate() {
                        if worst.is_none_or(|w| val > w.2) {
                            worst = Some((iu, comp, val));
                        }
                    }
                }
            }
        }
        let (iu, comp, val) = worst.expect("nonempty grid");
        let cert = match Verdict::negative(val) {
            Verdict::Pass => Certificate::pass(st),
            Verdict::Fail => Certificate::fail(
                st,
                Witness::new("a component of U^-T E is not negative")
                    .with("u", &grid[iu])
                    .with("component", &[comp as f64])
                    .with("value", &[val]),
            ),
            Verdict::Boundary => Certificate::boundary(
                st,
                Witness::new("a component of U^-T E vanishes within the strict margin")
                    .with("u", &grid[iu])
                    .with("component", &[comp as f64]),
                Equality {
                    quantity: "U^-T E".into(),
                    value: val,
                },
            ),
        };
        Ok(cert
            .with_value("max_component", &[val])
            .with_samples("u_grid", grid.len()))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcqOptions {
    /// Random directions drawn from the null space of `Q`; each is tested with
    /// both signs.
    pub v_samples: usize,
    pub u_grid_n: usize,
    pub seed: u64,
}

impl Default for NcqOptions {
    fn default() -> Self {
        NcqOptions {
            v_samples: 10_000,
            u_grid_n: 101,
            seed: 0,
        }
    }
}

/// Classification of `w = ∇Ψ(φ(u)) v` at one control point.
fn classify(w: &[f64]) -> Verdict {
    let sup = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if sup <= ZERO_TOL || top > STRICT_MARGIN {
        Verdict::Pass
    } else if top >= -STRICT_MARGIN {
        Verdict::Boundary
    } else {
        Verdict::Fail
    }
}

struct GradTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GradTable {
    fn new(basis: &ControlBasis, grid: &[Vec<f64>]) -> Result<Self> {
        let (rows, cols) = (basis.constraint_dim(), basis.moment_dim());
        let mut data = Vec::with_capacity(grid.len() * rows * cols);
        for u in grid {
            let g = basis.psi_grad(&basis.phi(u)?)?;
            for r in 0..rows {
                for c in 0..cols {
                    data.push(g[(r, c)]);
                }
            }
        }
        Ok(GradTable { rows, cols, data })
    }

    /// First grid index where `v` does not comply, with its verdict and `w`.
    fn check(&self, v: &[f64]) -> Option<(usize, Verdict, Vec<f64>)> {
        let block = self.rows * self.cols;
        let mut first_boundary = None;
        let mut w = vec![0.0; self.rows];
        for (iu, g) in self.data.chunks_exact(block).enumerate() {
            for (r, wr) in w.iter_mut().enumerate() {
                *wr = g[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum();
            }
            match classify(&w) {
                Verdict::Pass => {}
                Verdict::Fail => return Some((iu, Verdict::Fail, w)),
                Verdict::Boundary => {
                    if first_boundary.is_none() {
                        first_boundary = Some((iu, Verdict::Boundary, w.clone()));
                    }
                }
            }
        }
        first_boundary
    }
}

/// Whether `v` belongs to the cone of directions that, at every grid point,
/// are annihilated by `∇Ψ(φ(u))` or strictly increase some Ψ component.
/// Returns the offending control point and `∇Ψ v` otherwise.
pub fn ncq_direction_complies(
    basis: &ControlBasis,
    u_grid: &[Vec<f64>],
    v: &[f64],
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    check_dim(basis.moment_dim(), v.len(), "direction")?;
    let table = GradTable::new(basis, u_grid)?;
    Ok(table.check(v).map(|(iu, _, w)| (u_grid[iu].clone(), w)))
}

/// Sampled inclusion of `{v : Qv = 0, c·v ≤ 0}` in the cone described in
/// [`ncq_direction_complies`], at a single state.
pub fn ncq_subset_check(
    c: &[f64],
    q: &DMatrix<f64>,
    basis: &ControlBasis,
    k: &ControlSet,
    opts: &NcqOptions,
) -> Result<Certificate> {
    let s = basis.moment_dim();
    check_dim(s, c.len(), "cost vector")?;
    check_dim(s, q.ncols(), "columns of Q")?;
    k.check_basis(basis)?;
    if !basis.psi_convex_on(k) {
        return Err(Error::Unsupported(format!(
            "the constraint map of {} is not convex on this control set",
            basis.label()
        )));
    }
    let st = Statement::NcqSubset;
    let null = null_space(q);
    if null.ncols() == 0 {
        return Ok(Certificate::pass(st)
            .with_note("vacuous: Q has full column rank")
            .with_samples("directions", 0));
    }

    let grid = k.grid(opts.u_grid_n);
    let table = GradTable::new(basis, &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut directions = Vec::with_capacity(2 * opts.v_samples);
    for _ in 0..opts.v_samples {
        let g: Vec<f64> = (0..null.ncols())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let v = &null * DVector::from_vec(g);
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let v: Vec<f64> = (v / norm).iter().copied().collect();
        directions.push(v.iter().map(|x| -x).collect::<Vec<f64>>());
        directions.push(v);
    }
    let cone: Vec<&Vec<f64>> = directions
        .iter()
        .filter(|v| v.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() <= 0.0)
        .collect();
    let results: Vec<Option<(usize, Verdict, Vec<f64>)>> =
        cone.par_iter().map(|v| table.check(v)).collect();

    let mut boundary = None;
    for (v, res) in cone.iter().zip(results) {
        match res {
            Some((iu, Verdict::Fail, w)) => {
                return Ok(Certificate::fail(
                    st,
                    Witness::new("sampled direction leaves the admissible cone")
                        .with("v", v)
                        .with("u", &grid[iu])
                        .with("grad_psi_v", &w),
                )
                .with_samples("directions", cone.len())
                .with_samples("u_grid", grid.len()));
            }
            Some((iu, _, w)) if boundary.is_none() => boundary = Some((v, iu, w)),
            _ => {}
        }
    }
    let cert = match boundary {
        None => Certificate::pass(st),
        Some((v, iu, w)) => {
            let value = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Certificate::boundary(
                st,
                Witness::new("sampled direction is only weakly ascending")
                    .with("v", v)
                    .with("u", &grid[iu])
                    .with("grad_psi_v", &w),
                Equality {
                    quantity: "max component of grad Psi v".into(),
                    value,
                },
            )
        }
    };
    Ok(cert
        .with_value("null_dim", &[null.ncols() as f64])
        .with_samples("directions", cone.len())
        .with_samples("u_grid", grid.len()))
}

/// Orthonormal basis (as columns) of the null space of `q`.
fn null_space(q: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = q.transpose() * q;
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let cols: Vec<DVector<f64>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l.abs() <= 1e-12 * top)
        .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(q.ncols(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// [`ncq_subset_check`] for a structured problem at state `x`.
pub fn ncq_structured_check(
    sp: &StructuredProblem,
    k: &ControlSet,
    x: &[f64],
    opts: &NcqOptions,
) -> Result<Certificate> {
    let basis = ControlBasis::quadratic_diag(sp.n)?;
    ncq_subset_check(&sp.full_c(x), &sp.full_q(x), &basis, k, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_instance(c2: [f64; 2]) -> StructuredProblem {
        StructuredProblem::constant(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            vec![0.0, 0.0],
            c2.to_vec(),
        )
        .unwrap()
    }

    fn corollary_instance() -> StructuredProblem {
        StructuredProblem::constant(
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 1.0]),
            vec![0.0, 0.0],
            vec![0.85, 1.0],
        )
        .unwrap()
    }

    fn unit_square() -> ControlSet {
        ControlSet::boxed(&[(0.0, 1.0), (0.0, 1.0)]).unwrap()
    }

    #[test]
    fn diagonal_instances() {
        let k = unit_square();
        let xs = vec![vec![0.0, 0.0]];
        let pass = theorem_sec_check(&diag_instance([1.0, 1.0]), &k, &xs, 11).unwrap();
        assert_eq!(pass.verdict, Verdict::Pass);
        assert_eq!(pass.values["max_component"], vec![-1.0]);
        let fail = theorem_sec_check(&diag_instance([-1.0, 1.0]), &k, &xs, 11).unwrap();
        assert_eq!(fail.verdict, Verdict::Fail);
        assert_eq!(fail.witness.unwrap().values["value"], vec![1.0]);
    }

    #[test]
    fn corollary_matrices() {
        let sp = corollary_instance();
        let d = sp.d_matrix(&[0.0, 0.0]).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[-1.5, -2.0, -1.0, -1.0]);
        assert!((d - want).norm() < 1e-14);
        let e = sp.e_vector(&[0.0, 0.0], &sp.d_matrix(&[0.0, 0.0]).unwrap());
        assert_eq!(e.as_slice(), &[0.85, 1.0]);
        let cert = theorem_sec_check(&sp, &unit_square(), &[vec![0.0, 0.0]], 101).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
    }

    #[test]
    fn singular_q1_is_structural() {
        let sp = StructuredProblem::constant(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            vec![0.0; 2],
            vec![1.0; 2],
        )
        .unwrap();
        let err = theorem_sec_check(&sp, &unit_square(), &[vec![0.0, 0.0]], 5);
        assert!(matches!(err, Err(Error::Structural(_))));
    }

    #[test]
    fn ncq_cases() {
        let k = unit_square();
        let basis = ControlBasis::quadratic_diag(2).unwrap();
        let opts = NcqOptions {
            v_samples: 500,
            u_grid_n: 21,
            seed: 7,
        };
        let sp = diag_instance([1.0, 1.0]);
        let x = [0.0, 0.0];
        assert_eq!(
            ncq_structured_check(&sp, &k, &x, &opts).unwrap().verdict,
            Verdict::Pass
        );
        let q = sp.full_q(&x);
        let fail = ncq_subset_check(&[0.0, 0.0, -1.0, -1.0], &q, &basis, &k, &opts).unwrap();
        assert_eq!(fail.verdict, Verdict::Fail);
        assert!(fail.witness.unwrap().values.contains_key("v"));
        let grid = k.grid(5);
        assert!(ncq_direction_complies(&basis, &grid, &[0.0; 4])
            .unwrap()
            .is_none());
    }

    #[test]
    fn full_rank_q_is_vacuous() {
        let basis = ControlBasis::power(2).unwrap();
        let k = ControlSet::interval(-1.0, 1.0).unwrap();
        let q = DMatrix::identity(2, 2);
        let cert = ncq_subset_check(&[1.0, 1.0], &q, &basis, &k, &NcqOptions::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert!(cert.notes[0].starts_with("vacuous"));
    }
}
