//! Global minimization by random rotations and three-variable simplex searches,
//! plus drivers for the uRBM and uniform-MPS Ising energies.

mod drivers;
mod lbfgs;
mod subspace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use drivers::{
    embed_entries, optimize_uniform_mps, optimize_uniform_mps_from, optimize_urbm,
    optimize_urbm_from, scan_lambda_urbm, LambdaPoint, VariationalRun, FD_LBFGS_SETTINGS, FD_STEP,
    MPS_OPTIMIZE_MAX_CHI,
};
pub use lbfgs::lbfgs_minimize;
pub use subspace::{
    initial_point, multi_start, nelder_mead, random_orthogonal, subspace_rotation_minimize,
    subspace_rotation_minimize_from, MultiStart, SeedRun,
};

/// Nelder–Mead settings for the local searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexSettings {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iterations: u64,
    /// Stop once the standard deviation of the simplex values drops below this.
    pub tolerance: f64,
    /// Fresh simplices built around the current best point after the first search.
    pub restarts: usize,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_iterations: 400,
            tolerance: 1e-14,
            restarts: 2,
        }
    }
}

/// L-BFGS settings used for the dense MPS baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSettings {
    pub max_iterations: u64,
    pub memory: usize,
    pub gradient_tolerance: f64,
    pub cost_tolerance: f64,
}

impl Default for GradientSettings {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            memory: 10,
            gradient_tolerance: 1e-11,
            cost_tolerance: 1e-16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub seed: u64,
    /// Always 3.
    pub subset_size: usize,
    /// Round-to-round improvement below which the rotation loop stops.
    pub stop_tolerance: f64,
    pub max_rounds: usize,
    pub local_search: SimplexSettings,
    /// Initial parameters are drawn from `uniform(-init_range, init_range)`.
    pub init_range: f64,
    /// Independent seeds per optimization, `seed, seed + 1, ...`. May be 0
    /// only when a warm start is supplied.
    pub starts: usize,
    pub gradient: GradientSettings,
    /// Search run from each uRBM start.
    pub urbm_method: UrbmMethod,
}

/// How a single uRBM start is optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UrbmMethod {
    /// Simplex searches in rotated three-parameter subspaces.
    #[default]
    SubspaceRotation,
    /// L-BFGS on central differences.
    Gradient,
    /// `Gradient`, then `SubspaceRotation` from its end point.
    Hybrid,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            subset_size: 3,
            stop_tolerance: 1e-9,
            max_rounds: 200,
            local_search: SimplexSettings::default(),
            init_range: 0.5,
            starts: 8,
            gradient: GradientSettings::default(),
            urbm_method: UrbmMethod::SubspaceRotation,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        let s = &self.local_search;
        if self.subset_size != 3 {
            return bad("subset_size must be 3");
        }
        if !(self.stop_tolerance > 0.0 && self.stop_tolerance.is_finite()) {
            return bad("stop_tolerance must be positive");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be positive");
        }
        if !(self.init_range > 0.0 && self.init_range.is_finite()) {
            return bad("init_range must be positive");
        }
        if !(s.initial_step > 0.0 && s.reflection > 0.0 && s.expansion > 1.0)
            || !(s.contraction > 0.0 && s.contraction < 1.0 && s.shrink > 0.0 && s.shrink < 1.0)
            || !(s.tolerance > 0.0)
            || s.max_iterations == 0
        {
            return bad("invalid simplex settings");
        }
        let g = &self.gradient;
        if g.memory == 0
            || g.max_iterations == 0
            || !(g.gradient_tolerance >= 0.0)
            || !(g.cost_tolerance >= 0.0)
        {
            return bad("invalid gradient settings");
        }
        Ok(())
    }
}

/// Outcome of one optimization trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_params: Vec<f64>,
    pub best_energy_density: f64,
    pub rounds_used: usize,
    pub evaluations_used: u64,
    /// `false` when the round budget ran out first.
    pub converged: bool,
    /// Best value at the start and after every round; non-increasing.
    pub history: Vec<f64>,
}
