use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{moments_of, nearest_on_curve, reduce_support, DiscreteMeasure, MomentVector};
use crate::relaxed::integrate::{integrate_from, IntegrateOptions};
use crate::relaxed::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub starts: usize,
    /// Atoms per step; `None` means `s + 1`.
    pub max_atoms: Option<usize>,
    pub max_iterations: usize,
    /// Stop once the relative improvement stays below this for two
    /// consecutive iterations.
    pub rel_tol: f64,
    pub seed: u64,
    /// Central-difference step in moment space.
    pub fd_step: f64,
    pub integrate: IntegrateOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            starts: 20,
            max_atoms: None,
            max_iterations: 500,
            rel_tol: 1e-10,
            seed: 0,
            fd_step: 1e-6,
            integrate: IntegrateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartRecord {
    pub index: usize,
    /// `None` when the start diverged.
    pub cost: Option<f64>,
    pub iterations: usize,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryResult {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub measures: Vec<DiscreteMeasure>,
    pub moments: Vec<MomentVector>,
    pub step_costs: Vec<f64>,
    pub cost: f64,
    /// Distance from each step's moments to the curve `φ(K)`.
    pub distances: Vec<f64>,
    /// Nearest curve parameter for each step.
    pub nearest: Vec<Vec<f64>>,
    pub best_start: usize,
    pub starts: Vec<StartRecord>,
}

impl TrajectoryResult {
    pub fn steps(&self) -> usize {
        self.moments.len()
    }

    /// Assembles a trajectory from per-step measures, integrating the states
    /// and computing curve distances.
    pub fn from_measures(spec: &ProblemSpec, measures: Vec<DiscreteMeasure>) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one step is required".into(),
            ));
        }
        let moments = measures
            .iter()
            .map(|mu| moments_of(&spec.basis, mu))
            .collect::<Result<Vec<_>>>()?;
        let m = measures.len();
        let dt = spec.horizon / m as f64;
        let raw: Vec<&[f64]> = moments.iter().map(|v| v.as_slice()).collect();
        let (states, step_costs) =
            integrate_from(spec, &spec.x0, 0, &raw, dt, &IntegrateOptions::default())?;
        let mut distances = Vec::with_capacity(m);
        let mut nearest = Vec::with_capacity(m);
        for mv in &moments {
            let (u, d) = nearest_on_curve(&spec.basis, &spec.k, mv)?;
            distances.push(d);
            nearest.push(u);
        }
        Ok(TrajectoryResult {
            times: (0..=m).map(|k| k as f64 * dt).collect(),
            states,
            measures,
            moments,
            cost: step_costs.iter().sum(),
            step_costs,
            distances,
            nearest,
            best_start: 0,
            starts: Vec::new(),
        })
    }
}

#[derive(Debug, Clone)]
struct Params {
    /// `[step][atom][control coordinate]`.
    atoms: Vec<Vec<Vec<f64>>>,
    /// `[step][atom]`.
    weights: Vec<Vec<f64>>,
}

impl Params {
    fn moments(&self, spec: &ProblemSpec) -> Vec<Vec<f64>> {
        let s = spec.basis.moment_dim();
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(atoms, w)| {
                let mut m = vec![0.0; s];
                for (a, &wi) in atoms.iter().zip(w) {
                    spec.basis.phi_accumulate(a, wi, &mut m);
                }
                m
            })
            .collect()
    }

    fn project(&mut self, spec: &ProblemSpec) {
        for (atoms, w) in self.atoms.iter_mut().zip(self.weights.iter_mut()) {
            for a in atoms.iter_mut() {
                spec.k.clamp(a);
            }
            for wi in w.iter_mut() {
                *wi = wi.max(0.0);
            }
            let total: f64 = w.iter().sum();
            if total > 0.0 {
                for wi in w.iter_mut() {
                    *wi /= total;
                }
            } else {
                let uniform = 1.0 / w.len() as f64;
                w.iter_mut().for_each(|wi| *wi = uniform);
            }
        }
    }
}

struct Evaluator<'a> {
    spec: &'a ProblemSpec,
    dt: f64,
    opts: &'a SolverOptions,
}

impl Evaluator<'_> {
    fn run(&self, moments: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>, Vec<f64>)> {
        let raw: Vec<&[f64]> = moments.iter().map(|v| v.as_slice()).collect();
        let (states, costs) = integrate_from(
            self.spec,
            &self.spec.x0,
            0,
            &raw,
            self.dt,
            &self.opts.integrate,
        )?;
        Ok((costs.iter().sum(), states, costs))
    }

    /// Central differences of the total cost with respect to every moment,
    /// integrating only the suffix that a perturbation of step `k` affects.
    fn moment_gradient(&self, moments: &[Vec<f64>], states: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let h = self.opts.fd_step;
        let mut grad = vec![vec![0.0; moments[0].len()]; moments.len()];
        let mut work: Vec<Vec<f64>> = moments.to_vec();
        for k in 0..moments.len() {
            for i in 0..moments[k].len() {
                let base = moments[k][i];
                let mut side = [0.0; 2];
                for (slot, sign) in side.iter_mut().zip([1.0, -1.0]) {
                    work[k][i] = base + sign * h;
                    let raw: Vec<&[f64]> = work[k..].iter().map(|v| v.as_slice()).collect();
                    let (_, costs) = integrate_from(
                        self.spec,
                        &states[k],
                        k,
                        &raw,
                        self.dt,
                        &self.opts.integrate,
                    )?;
                    *slot = costs.iter().sum();
                }
                work[k][i] = base;
                grad[k][i] = (side[0] - side[1]) / (2.0 * h);
            }
        }
        Ok(grad)
    }
}

struct StartOutcome {
    params: Params,
    cost: f64,
    iterations: usize,
}

/// Projects a weight gradient onto the tangent space of the simplex face
/// holding `w`: weights at zero that would turn negative are frozen and the
/// rest are centered.
fn tangent_weight_gradient(w: &[f64], g: &mut [f64]) {
    let mut active: Vec<bool> = vec![true; w.len()];
    for _ in 0..2 {
        let count = active.iter().filter(|a| **a).count();
        if count == 0 {
            break;
        }
        let mean = g
            .iter()
            .zip(&active)
            .filter(|(_, a)| **a)
            .map(|(v, _)| v)
            .sum::<f64>()
            / count as f64;
        for (i, a) in active.iter_mut().enumerate() {
            if w[i] <= 0.0 && g[i] - mean > 0.0 {
                *a = false;
            }
        }
    }
    let count = active.iter().filter(|a| **a).count().max(1);
    let mean = g
        .iter()
        .zip(&active)
        .filter(|(_, a)| **a)
        .map(|(v, _)| v)
        .sum::<f64>()
        / count as f64;
    for (gi, a) in g.iter_mut().zip(&active) {
        *gi = if *a { *gi - mean } else { 0.0 };
    }
}

fn run_start(
    spec: &ProblemSpec,
    steps: usize,
    opts: &SolverOptions,
    index: usize,
) -> Result<StartOutcome> {
    let n = spec.basis.control_dim();
    let atoms_per_step = opts.max_atoms.unwrap_or(spec.basis.moment_dim() + 1).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(index as u64));
    let (lo, hi) = (spec.k.lower(), spec.k.upper());
    let atoms0: Vec<Vec<f64>> = (0..atoms_per_step)
        .map(|_| (0..n).map(|i| rng.random_range(lo[i]..=hi[i])).collect())
        .collect();
    let w0: Vec<f64> = (0..atoms_per_step)
        .map(|_| rng.random_range(0.05..1.0))
        .collect();
    let mut params = Params {
        atoms: vec![atoms0; steps],
        weights: vec![w0; steps],
    };
    params.project(spec);

    let eval = Evaluator {
        spec,
        dt: spec.horizon / steps as f64,
        opts,
    };
    let diam = spec.k.diameter();
    let mut moments = params.moments(spec);
    let (mut cost, mut states, _) = eval.run(&moments)?;
    let mut alpha_prev = 0.1 * diam;
    let mut small = 0;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let g = eval.moment_gradient(&moments, &states)?;
        // Chain rule through m_k = Σ_j w_kj φ(a_kj).
        let mut ga = params.atoms.clone();
        let mut gw = params.weights.clone();
        for k in 0..steps {
            for j in 0..atoms_per_step {
                let a = &params.atoms[k][j];
                let jac = spec.basis.phi_jacobian(a)?;
                let phi = spec.basis.phi_raw(a);
                gw[k][j] = phi.iter().zip(&g[k]).map(|(p, gi)| p * gi).sum();
                for c in 0..n {
                    let d = params.weights[k][j]
                        * (0..jac.nrows()).map(|r| jac[(r, c)] * g[k][r]).sum::<f64>();
                    let blocked = (a[c] <= lo[c] && d > 0.0) || (a[c] >= hi[c] && d < 0.0);
                    ga[k][j][c] = if blocked { 0.0 } else { d };
                }
            }
            tangent_weight_gradient(&params.weights[k], &mut gw[k]);
        }
        let gmax = ga
            .iter()
            .flatten()
            .flatten()
            .chain(gw.iter().flatten())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if gmax == 0.0 || !gmax.is_finite() {
            break;
        }
        let mut alpha = (2.0 * alpha_prev).min(0.1 * diam);
        let mut accepted = None;
        while alpha > 1e-16 * diam.max(1.0) {
            let mut trial = params.clone();
            for k in 0..steps {
                for j in 0..atoms_per_step {
                    for (a, g) in trial.atoms[k][j].iter_mut().zip(&ga[k][j]) {
                        *a -= alpha * g / gmax;
                    }
                    trial.weights[k][j] -= alpha * gw[k][j] / gmax;
                }
            }
            trial.project(spec);
            let tm = trial.moments(spec);
            if let Ok((tc, ts, _)) = eval.run(&tm) {
                if tc < cost {
                    accepted = Some((trial, tm, tc, ts));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, tm, tc, ts)) = accepted else {
            break;
        };
        let improvement = (cost - tc) / cost.abs().max(1.0);
        params = trial;
        moments = tm;
        cost = tc;
        states = ts;
        alpha_prev = alpha;
        if improvement < opts.rel_tol {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
    }
    Ok(StartOutcome {
        params,
        cost,
        iterations,
    })
}

/// Minimizes the integrated cost over per-step measures with at most
/// `max_atoms` atoms, by multi-start projected descent. Starts run in
/// parallel; the best cost wins, ties going to the lower start index.
pub fn solve_relaxed(
    spec: &ProblemSpec,
    steps: usize,
    opts: &SolverOptions,
) -> Result<TrajectoryResult> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    if opts.starts == 0 {
        return Err(Error::InvalidArgument(
            "at least one start is required".into(),
        ));
    }
    let outcomes: Vec<Result<StartOutcome>> = (0..opts.starts)
        .into_par_iter()
        .map(|i| run_start(spec, steps, opts, i))
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    let mut best: Option<(usize, &StartOutcome)> = None;
    let mut first_error = None;
    for (i, out) in outcomes.iter().enumerate() {
        match out {
            Ok(o) => {
                records.push(StartRecord {
                    index: i,
                    cost: Some(o.cost),
                    iterations: o.iterations,
                    status: "converged".into(),
                });
                if best.is_none_or(|(_, b)| o.cost < b.cost) {
                    best = Some((i, o));
                }
            }
            Err(e) => {
                records.push(StartRecord {
                    index: i,
                    cost: None,
                    iterations: 0,
                    status: e.to_string(),
                });
                first_error.get_or_insert_with(|| e.clone());
            }
        }
    }
    let Some((index, outcome)) = best else {
        return Err(first_error.expect("every start failed"));
    };
    let measures = outcome
        .params
        .atoms
        .iter()
        .zip(&outcome.params.weights)
        .map(|(a, w)| {
            let mu = DiscreteMeasure::from_unnormalized(a.clone(), w.clone(), 1e-12)?;
            reduce_support(&spec.basis, &mu)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut traj = TrajectoryResult::from_measures(spec, measures)?;
    traj.best_start = index;
    traj.starts = records;
    Ok(traj)
}
