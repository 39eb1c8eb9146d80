use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lbfgs::lbfgs_minimize;
use super::subspace::{
    initial_point, multi_start_with, subspace_rotation_minimize, subspace_rotation_minimize_from,
    MultiStart, SeedRun,
};
use super::{GradientSettings, OptimizationResult, OptimizerConfig, UrbmMethod};
use crate::ansatz::UrbmParameters1D;
use crate::comps::{energy_density_gradient, UniformRingMps, UrbmRingEvaluator};
use crate::error::{Error, Result};
use crate::lattice::{exact_ising_ground_energy, relative_error, IsingChainSpec};

/// Largest bond dimension accepted by [`optimize_uniform_mps`].
pub const MPS_OPTIMIZE_MAX_CHI: usize = 16;

/// Step of the central differences used by the gradient uRBM methods.
pub const FD_STEP: f64 = 1e-6;

/// L-BFGS settings of the gradient uRBM methods. Central differences are
/// accurate to about `1e-10`, so the gradient tolerance sits above that.
pub const FD_LBFGS_SETTINGS: GradientSettings = GradientSettings {
    max_iterations: 3000,
    memory: 10,
    gradient_tolerance: 1e-9,
    cost_tolerance: 1e-16,
};

/// Best of several seeded runs compared against the exact ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalRun {
    pub best: OptimizationResult,
    pub runs: Vec<SeedRun>,
    pub exact_energy_density: f64,
    /// `|(ε - ε_exact) / ε_exact|` of the best run.
    pub delta_e: f64,
}

impl VariationalRun {
    fn new(m: MultiStart, spec: &IsingChainSpec) -> Self {
        let exact = exact_ising_ground_energy(spec).energy_density;
        Self {
            delta_e: relative_error(m.best.best_energy_density, exact),
            exact_energy_density: exact,
            best: m.best,
            runs: m.runs,
        }
    }
}

fn check_layers(layers: usize) -> Result<()> {
    if !(1..=3).contains(&layers) {
        return Err(Error::InvalidArgument(format!(
            "layers must be 1, 2 or 3, got {layers}"
        )));
    }
    Ok(())
}

/// Minimizes the uRBM energy density over `[K⁰, K¹..K^ℓ, J¹..J^ℓ]`.
pub fn optimize_urbm(
    layers: usize,
    lambda: f64,
    n: usize,
    config: &OptimizerConfig,
) -> Result<VariationalRun> {
    optimize_urbm_from(layers, lambda, n, config, None)
}

/// [`optimize_urbm`] with one extra trajectory started at `warm_start`.
///
/// Parameters where the ring norm degenerates score `2(1 + λ)`, above any
/// attainable energy density. [`OptimizerConfig::urbm_method`] picks the
/// search run from each start.
pub fn optimize_urbm_from(
    layers: usize,
    lambda: f64,
    n: usize,
    config: &OptimizerConfig,
    warm_start: Option<&[f64]>,
) -> Result<VariationalRun> {
    check_layers(layers)?;
    let spec = IsingChainSpec::new(n, lambda)?;
    let dim = 2 * layers + 1;
    if let Some(w) = warm_start {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: w.len(),
            });
        }
    }
    let evaluator = UrbmRingEvaluator::new(layers)?;
    let penalty = 2.0 * (1.0 + lambda);
    let objective = |v: &[f64]| {
        UrbmParameters1D::from_vector(layers, v)
            .and_then(|p| evaluator.energy_density(&p, n, lambda))
            .unwrap_or(penalty)
    };
    let m = multi_start_with(config, warm_start, |c, start| {
        if c.urbm_method == UrbmMethod::SubspaceRotation {
            return match start {
                Some(x0) => subspace_rotation_minimize_from(&objective, x0, c),
                None => subspace_rotation_minimize(&objective, dim, c),
            };
        }
        let x0 = start.map_or_else(|| initial_point(dim, c), <[f64]>::to_vec);
        let descent = match fd_lbfgs(&objective, &x0) {
            Some(d) => d,
            None => stationary(&objective, x0),
        };
        if c.urbm_method == UrbmMethod::Gradient {
            return Ok(descent);
        }
        let mut r = subspace_rotation_minimize_from(&objective, &descent.best_params, c)?;
        r.evaluations_used += descent.evaluations_used;
        let mut history = descent.history;
        history.extend_from_slice(&r.history[1..]);
        r.history = history;
        Ok(r)
    })?;
    Ok(VariationalRun::new(m, &spec))
}

/// L-BFGS on central differences of `objective`, or `None` when the line
/// search breaks down. Evaluation counts include every difference quotient.
fn fd_lbfgs(objective: &dyn Fn(&[f64]) -> f64, x0: &[f64]) -> Option<OptimizationResult> {
    let dim = x0.len();
    let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut p = x.to_vec();
        let g = (0..dim)
            .map(|i| {
                p[i] = x[i] + FD_STEP;
                let up = objective(&p);
                p[i] = x[i] - FD_STEP;
                let down = objective(&p);
                p[i] = x[i];
                (up - down) / (2.0 * FD_STEP)
            })
            .collect();
        Ok((objective(x), g))
    };
    let mut r = lbfgs_minimize(&f, x0, &FD_LBFGS_SETTINGS).ok()?;
    r.evaluations_used *= 2 * dim as u64 + 1;
    Some(r)
}

fn stationary(objective: &dyn Fn(&[f64]) -> f64, x0: Vec<f64>) -> OptimizationResult {
    let v = objective(&x0);
    OptimizationResult {
        best_params: x0,
        best_energy_density: v,
        rounds_used: 0,
        evaluations_used: 1,
        converged: false,
        history: vec![v],
    }
}

/// Minimizes the energy density over all `2χ²` entries of a uniform ring MPS
/// with L-BFGS on the exact transfer-matrix gradient.
pub fn optimize_uniform_mps(
    chi: usize,
    lambda: f64,
    n: usize,
    config: &OptimizerConfig,
) -> Result<VariationalRun> {
    optimize_uniform_mps_from(chi, lambda, n, config, None)
}

/// [`optimize_uniform_mps`] with one extra trajectory started at `warm_start`
/// (entries in [`SiteTensor::to_entries`](crate::ansatz::SiteTensor::to_entries) order).
pub fn optimize_uniform_mps_from(
    chi: usize,
    lambda: f64,
    n: usize,
    config: &OptimizerConfig,
    warm_start: Option<&[f64]>,
) -> Result<VariationalRun> {
    if !(1..=MPS_OPTIMIZE_MAX_CHI).contains(&chi) {
        return Err(Error::SizeLimit {
            what: "bond dimension",
            size: chi,
            limit: MPS_OPTIMIZE_MAX_CHI,
        });
    }
    let spec = IsingChainSpec::new(n, lambda)?;
    let dim = 2 * chi * chi;
    if let Some(w) = warm_start {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: w.len(),
            });
        }
    }
    let f = |x: &[f64]| energy_density_gradient(&UniformRingMps::from_entries(chi, x, n)?, lambda);
    let m = multi_start_with(config, warm_start, |c, start| {
        let x0 = match start {
            Some(x) => x.to_vec(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
                (0..dim)
                    .map(|_| rng.random_range(-c.init_range..c.init_range))
                    .collect()
            }
        };
        lbfgs_minimize(&f, &x0, &c.gradient)
    })?;
    Ok(VariationalRun::new(m, &spec))
}

/// Pads a `χ`-tensor into a larger bond dimension, adding uniform noise of
/// half-width `noise` to every entry.
pub fn embed_entries(
    entries: &[f64],
    chi_from: usize,
    chi_to: usize,
    noise: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if entries.len() != 2 * chi_from * chi_from {
        return Err(Error::DimensionMismatch {
            expected: 2 * chi_from * chi_from,
            found: entries.len(),
        });
    }
    if chi_to < chi_from {
        return Err(Error::InvalidArgument(format!(
            "cannot embed bond dimension {chi_from} into {chi_to}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; 2 * chi_to * chi_to];
    for s in 0..2 {
        for a in 0..chi_from {
            for b in 0..chi_from {
                out[(s * chi_to + a) * chi_to + b] = entries[(s * chi_from + a) * chi_from + b];
            }
        }
    }
    if noise > 0.0 {
        for v in &mut out {
            *v += rng.random_range(-noise..noise);
        }
    }
    Ok(out)
}

/// One point of a field scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub energy_density: f64,
    pub exact_energy_density: f64,
    pub delta_e: f64,
    pub params: Vec<f64>,
}

/// Optimizes the uRBM at each field in turn, warm-starting every point from
/// the optimum at the previous one.
pub fn scan_lambda_urbm(
    layers: usize,
    n: usize,
    lambdas: &[f64],
    config: &OptimizerConfig,
) -> Result<Vec<LambdaPoint>> {
    let mut out: Vec<LambdaPoint> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let warm = out.last().map(|p| p.params.clone());
        let run = optimize_urbm_from(layers, lambda, n, config, warm.as_deref())?;
        out.push(LambdaPoint {
            lambda,
            energy_density: run.best.best_energy_density,
            exact_energy_density: run.exact_energy_density,
            delta_e: run.delta_e,
            params: run.best.best_params,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(starts: usize) -> OptimizerConfig {
        OptimizerConfig {
            starts,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn classical_point_is_reached() {
        let run = optimize_urbm(1, 0.0, 20, &quick(2)).unwrap();
        assert!(run.delta_e <= 1e-6, "{}", run.delta_e);
    }

    #[test]
    fn gradient_methods_are_monotone_and_deterministic() {
        for method in [UrbmMethod::Gradient, UrbmMethod::Hybrid] {
            let config = OptimizerConfig {
                urbm_method: method,
                ..quick(2)
            };
            let run = optimize_urbm(2, 1.0, 12, &config).unwrap();
            for r in &run.runs {
                assert!(r.result.history.windows(2).all(|w| w[1] <= w[0]));
            }
            assert!(run.best.best_energy_density >= run.exact_energy_density - 1e-12);
            assert!(run.delta_e < 1e-3, "{method:?} {}", run.delta_e);
            let again = optimize_urbm(2, 1.0, 12, &config).unwrap();
            assert_eq!(run.best, again.best);
        }
    }

    #[test]
    fn product_state_mps_is_exact() {
        let run = optimize_uniform_mps(1, 0.0, 12, &quick(2)).unwrap();
        assert!(run.delta_e <= 1e-10, "{}", run.delta_e);
    }

    #[test]
    fn variational_bound_holds() {
        for lambda in [0.5, 1.0, 1.5] {
            let run = optimize_urbm(1, lambda, 10, &quick(2)).unwrap();
            assert!(run.best.best_energy_density >= run.exact_energy_density - 1e-12);
            let run = optimize_uniform_mps(2, lambda, 10, &quick(2)).unwrap();
            assert!(run.best.best_energy_density >= run.exact_energy_density - 1e-12);
        }
    }

    #[test]
    fn embedding_keeps_the_state() {
        let e: Vec<f64> = (0..8).map(|i| i as f64 * 0.1 - 0.3).collect();
        let big = embed_entries(&e, 2, 3, 0.0, 0).unwrap();
        let a = crate::comps::energy_density(&UniformRingMps::from_entries(2, &e, 9).unwrap(), 1.0)
            .unwrap();
        let b =
            crate::comps::energy_density(&UniformRingMps::from_entries(3, &big, 9).unwrap(), 1.0)
                .unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(optimize_urbm(4, 1.0, 10, &quick(1)).is_err());
        assert!(optimize_uniform_mps(17, 1.0, 10, &quick(1)).is_err());
        assert!(optimize_urbm_from(1, 1.0, 10, &quick(1), Some(&[0.0; 2])).is_err());
    }
}
