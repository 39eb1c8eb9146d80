use std::cell::{Cell, RefCell};

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OptimizationResult, OptimizerConfig, SimplexSettings};
use crate::error::{Error, Result};

/// Counts evaluations and remembers the first non-finite value.
pub(crate) struct Guard<'a> {
    f: &'a (dyn Fn(&[f64]) -> f64 + 'a),
    evals: Cell<u64>,
    bad: RefCell<Option<(f64, Vec<f64>)>>,
}

impl<'a> Guard<'a> {
    pub(crate) fn new(f: &'a (dyn Fn(&[f64]) -> f64 + 'a)) -> Self {
        Self {
            f,
            evals: Cell::new(0),
            bad: RefCell::new(None),
        }
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        self.evals.set(self.evals.get() + 1);
        let v = (self.f)(x);
        if v.is_finite() {
            return v;
        }
        self.bad.borrow_mut().get_or_insert_with(|| (v, x.to_vec()));
        f64::INFINITY
    }

    pub(crate) fn check(&self) -> Result<()> {
        match self.bad.borrow().as_ref() {
            Some((value, params)) => Err(Error::NonFiniteObjective {
                value: *value,
                params: params.clone(),
            }),
            None => Ok(()),
        }
    }

    pub(crate) fn evaluations(&self) -> u64 {
        self.evals.get()
    }
}

struct Problem<'g> {
    f: &'g dyn Fn(&[f64]) -> f64,
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok((self.f)(p))
    }
}

fn simplex_run(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    s: &SimplexSettings,
) -> Result<(Vec<f64>, f64)> {
    let mut vertices = vec![x.to_vec()];
    for i in 0..x.len() {
        let mut v = x.to_vec();
        v[i] += s.initial_step;
        vertices.push(v);
    }
    let solver = NelderMead::new(vertices)
        .with_alpha(s.reflection)
        .and_then(|nm| nm.with_gamma(s.expansion))
        .and_then(|nm| nm.with_rho(s.contraction))
        .and_then(|nm| nm.with_sigma(s.shrink))
        .and_then(|nm| nm.with_sd_tolerance(s.tolerance))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let res = Executor::new(Problem { f }, solver)
        .configure(|st| st.max_iters(s.max_iterations))
        .timer(false)
        .run()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let st = res.state();
    let best = st.get_best_param().cloned().unwrap_or_else(|| x.to_vec());
    Ok((best, st.get_best_cost()))
}

/// Nelder–Mead from `x0` with restarts around the running best point.
/// Returns the best point, its value and the number of evaluations.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    settings: &SimplexSettings,
) -> Result<(Vec<f64>, f64, u64)> {
    let guard = Guard::new(f);
    let (x, v) = simplex_with_restarts(&guard, x0, guard.eval(x0), settings)?;
    Ok((x, v, guard.evaluations()))
}

fn simplex_with_restarts(
    g: &Guard,
    x0: &[f64],
    f0: f64,
    s: &SimplexSettings,
) -> Result<(Vec<f64>, f64)> {
    let f = |x: &[f64]| g.eval(x);
    let (mut x, mut fx) = (x0.to_vec(), f0);
    for _ in 0..=s.restarts {
        let (y, fy) = simplex_run(&f, &x, s)?;
        g.check()?;
        if !(fy < fx) {
            break;
        }
        let gain = fx - fy;
        x = y;
        fx = fy;
        if gain < s.tolerance {
            break;
        }
    }
    Ok((x, fx))
}

/// Haar-like random orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// The starting point used by [`subspace_rotation_minimize`] for `config.seed`.
pub fn initial_point(dim: usize, config: &OptimizerConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    draw_initial(dim, config.init_range, &mut rng)
}

fn draw_initial(dim: usize, range: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-range..range)).collect()
}

/// Minimizes `objective` over `R^dim` from a random start.
///
/// Each round draws an orthogonal `R`, rotates to `K' = Rᵀ K` and runs a
/// simplex search over every three-component subset of `K'`, keeping a result
/// only if it lowers the best value. Rounds stop once they gain less than
/// `stop_tolerance`. For `dim = 3` the single subset is the whole space and no
/// rotation is applied.
pub fn subspace_rotation_minimize<F>(
    objective: &F,
    dim: usize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    check_dim(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x0 = draw_initial(dim, config.init_range, &mut rng);
    rotate_and_search(objective, x0, config, &mut rng)
}

/// Same as [`subspace_rotation_minimize`] with a given starting point.
pub fn subspace_rotation_minimize_from<F>(
    objective: &F,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    check_dim(x0.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rotate_and_search(objective, x0.to_vec(), config, &mut rng)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 parameters, got {dim}"
        )));
    }
    Ok(())
}

fn rotate_and_search<F>(
    objective: &F,
    x0: Vec<f64>,
    config: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let guard = Guard::new(objective);
    let mut best_x = x0;
    let mut best = guard.eval(&best_x);
    guard.check()?;
    let mut history = vec![best];
    let mut converged = false;

    for _ in 0..config.max_rounds {
        let before = best;
        let r = if dim == 3 {
            DMatrix::identity(3, 3)
        } else {
            random_orthogonal(dim, rng)
        };
        let mut kp = r.tr_mul(&DVector::from_column_slice(&best_x));
        for i in 0..dim {
            for j in i + 1..dim {
                for k in j + 1..dim {
                    let idx = [i, j, k];
                    let full = |y: &[f64]| {
                        let mut q = kp.clone();
                        for (&c, &v) in idx.iter().zip(y) {
                            q[c] = v;
                        }
                        &r * q
                    };
                    let sub = |y: &[f64]| guard.eval(full(y).as_slice());
                    let start: Vec<f64> = idx.iter().map(|&c| kp[c]).collect();
                    let f_start = sub(&start);
                    guard.check()?;
                    let sub_guard = Guard::new(&sub);
                    let local =
                        simplex_with_restarts(&sub_guard, &start, f_start, &config.local_search);
                    guard.check()?;
                    let (y, fy) = local?;
                    if fy < best {
                        best = fy;
                        best_x = full(&y).as_slice().to_vec();
                        for (&c, &v) in idx.iter().zip(&y) {
                            kp[c] = v;
                        }
                    }
                }
            }
        }
        history.push(best);
        if before - best < config.stop_tolerance {
            converged = true;
            break;
        }
    }

    Ok(OptimizationResult {
        best_params: best_x,
        best_energy_density: best,
        rounds_used: history.len() - 1,
        evaluations_used: guard.evaluations(),
        converged,
        history,
    })
}

/// One trajectory of a multi-start run; `seed` is `None` for the warm start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: Option<u64>,
    pub result: OptimizationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStart {
    pub best: OptimizationResult,
    pub runs: Vec<SeedRun>,
}

impl MultiStart {
    /// Picks the lowest value; earlier runs win ties.
    pub(crate) fn from_runs(runs: Vec<SeedRun>) -> Self {
        let best = runs
            .iter()
            .min_by(|a, b| {
                a.result
                    .best_energy_density
                    .total_cmp(&b.result.best_energy_density)
            })
            .map(|r| r.result.clone())
            .expect("at least one run");
        Self { best, runs }
    }
}

/// Runs `run` for seeds `config.seed .. config.seed + config.starts` in
/// parallel, plus one extra trajectory started at `warm_start` if given.
pub(crate) fn multi_start_with<R>(
    config: &OptimizerConfig,
    warm_start: Option<&[f64]>,
    run: R,
) -> Result<MultiStart>
where
    R: Fn(&OptimizerConfig, Option<&[f64]>) -> Result<OptimizationResult> + Sync,
{
    config.validate()?;
    if config.starts == 0 && warm_start.is_none() {
        return Err(Error::InvalidArgument(
            "need at least one start or a warm start".into(),
        ));
    }
    let mut jobs: Vec<Option<u64>> = Vec::with_capacity(config.starts + 1);
    if warm_start.is_some() {
        jobs.push(None);
    }
    jobs.extend((0..config.starts as u64).map(|k| Some(config.seed.wrapping_add(k))));
    let runs = jobs
        .into_par_iter()
        .map(|seed| {
            let mut c = *config;
            c.seed = seed.unwrap_or(config.seed);
            let start = if seed.is_none() { warm_start } else { None };
            run(&c, start).map(|result| SeedRun { seed, result })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiStart::from_runs(runs))
}

/// [`subspace_rotation_minimize`] from several seeds, keeping every run.
pub fn multi_start<F>(
    objective: &F,
    dim: usize,
    config: &OptimizerConfig,
    warm_start: Option<&[f64]>,
) -> Result<MultiStart>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if let Some(w) = warm_start {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: w.len(),
            });
        }
    }
    multi_start_with(config, warm_start, |c, start| match start {
        Some(x0) => subspace_rotation_minimize_from(objective, x0, c),
        None => subspace_rotation_minimize(objective, dim, c),
    })
}
