//! Exhaustive comparisons between each tensor network and the amplitude it
//! encodes, over every spin configuration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_copeps_block, build_rbm_sigma, build_urbm_site_tensor, copeps_log_amplitude_torus,
    rbm_log_amplitude, urbm2d_log_amplitude_direct, urbm_log_amplitude_direct, RbmParameters,
    SpinGrid, Urbm2dParameters, UrbmParameters1D,
};
use crate::comps::{comps_log_amplitude, comps_log_amplitude_sites, UniformRingMps};
use crate::error::{Error, Result};
use crate::lattice::SpinConfiguration;

/// Largest chain checked over all `2^N` configurations.
pub const MAPPING_CHECK_MAX_SITES: usize = 16;

/// Parameters are drawn uniformly from `[-PARAMETER_SCALE, PARAMETER_SCALE)`.
pub const PARAMETER_SCALE: f64 = 1.0;

/// Which ansatz a mapping check covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingAnsatz {
    Rbm,
    Urbm,
    Urbm2d,
}

/// Outcome of a batch of random draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub ansatz: MappingAnsatz,
    /// Chain length, or the side of the square torus for `Urbm2d`.
    pub size: usize,
    /// Hidden layers, or hidden units for `Rbm`.
    pub hidden: usize,
    pub seed: u64,
    pub draws: usize,
    /// Largest deviation for each draw.
    pub per_draw: Vec<f64>,
    pub max_rel_dev: f64,
}

fn check_sites(n: usize) -> Result<()> {
    if n > MAPPING_CHECK_MAX_SITES {
        return Err(Error::SizeLimit {
            what: "sites for an exhaustive mapping check",
            size: n,
            limit: MAPPING_CHECK_MAX_SITES,
        });
    }
    Ok(())
}

/// Largest relative deviation between the ring trace and the hidden-unit sum.
pub fn urbm_mapping_deviation(params: &UrbmParameters1D, n: usize) -> Result<f64> {
    check_sites(n)?;
    let mps = UniformRingMps::new(build_urbm_site_tensor(params)?, n)?;
    let mut worst: f64 = 0.0;
    for config in SpinConfiguration::all(n) {
        let traced = comps_log_amplitude(&mps, &config)?;
        let direct = urbm_log_amplitude_direct(params, &config)?;
        worst = worst.max(traced.relative_deviation(&direct));
    }
    Ok(worst)
}

/// Largest relative deviation between the diagonal network and the closed form.
pub fn rbm_mapping_deviation(params: &RbmParameters) -> Result<f64> {
    let n = params.n_visible();
    check_sites(n)?;
    let sites = (0..n)
        .map(|j| build_rbm_sigma(params, j))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for config in SpinConfiguration::all(n) {
        let traced = comps_log_amplitude_sites(&sites, &config)?;
        let closed = rbm_log_amplitude(params, &config)?;
        worst = worst.max(traced.relative_deviation(&closed));
    }
    Ok(worst)
}

/// Largest relative deviation between the torus contraction and the
/// hidden-unit sum on an `L × L` torus.
pub fn copeps_mapping_deviation(params: &Urbm2dParameters, side: usize) -> Result<f64> {
    check_sites(side * side)?;
    let block = build_copeps_block(params);
    let mut worst: f64 = 0.0;
    for bits in 0..1u64 << (side * side) {
        let grid = SpinGrid::from_bits(side, bits);
        let traced = copeps_log_amplitude_torus(&block, &grid)?;
        let direct = urbm2d_log_amplitude_direct(params, &grid)?;
        worst = worst.max(traced.relative_deviation(&direct));
    }
    Ok(worst)
}

/// Runs `draws` independent parameter draws; draw `i` uses seed `seed + i`.
/// RBMs are fully connected with site-dependent biases.
pub fn mapping_suite(
    ansatz: MappingAnsatz,
    size: usize,
    hidden: usize,
    seed: u64,
    draws: usize,
) -> Result<MappingReport> {
    if draws == 0 || hidden == 0 {
        return Err(Error::InvalidArgument(
            "draws and hidden size must be positive".into(),
        ));
    }
    let per_draw = (0..draws as u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            match ansatz {
                MappingAnsatz::Rbm => rbm_mapping_deviation(&RbmParameters::random(
                    size,
                    hidden,
                    PARAMETER_SCALE,
                    &mut rng,
                )),
                MappingAnsatz::Urbm => urbm_mapping_deviation(
                    &UrbmParameters1D::random(hidden, PARAMETER_SCALE, &mut rng),
                    size,
                ),
                MappingAnsatz::Urbm2d => copeps_mapping_deviation(
                    &Urbm2dParameters::random(hidden, PARAMETER_SCALE, &mut rng),
                    size,
                ),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MappingReport {
        ansatz,
        size,
        hidden,
        seed,
        draws,
        max_rel_dev: per_draw.iter().copied().fold(0.0, f64::max),
        per_draw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_agree() {
        let r = mapping_suite(MappingAnsatz::Urbm, 6, 1, 7, 3).unwrap();
        assert!(r.max_rel_dev < 1e-10, "{}", r.max_rel_dev);
        let r = mapping_suite(MappingAnsatz::Rbm, 5, 3, 7, 3).unwrap();
        assert!(r.max_rel_dev < 1e-12, "{}", r.max_rel_dev);
        let r = mapping_suite(MappingAnsatz::Urbm2d, 2, 1, 7, 2).unwrap();
        assert!(r.max_rel_dev < 1e-10, "{}", r.max_rel_dev);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = mapping_suite(MappingAnsatz::Urbm, 5, 2, 11, 2).unwrap();
        let b = mapping_suite(MappingAnsatz::Urbm, 5, 2, 11, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_oversized_requests() {
        assert!(mapping_suite(MappingAnsatz::Urbm, 17, 1, 0, 1).is_err());
        assert!(mapping_suite(MappingAnsatz::Urbm, 6, 1, 0, 0).is_err());
    }
}
