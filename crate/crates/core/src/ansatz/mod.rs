//! Boltzmann-machine wave functions and their constrained tensor networks.
//!
//! Every ansatz here comes in two forms: a brute-force amplitude that sums
//! over the hidden units explicitly, and a tensor-network builder whose ring
//! trace must reproduce it. The brute-force forms exist to check the builders.

mod amplitude;
mod check;
mod copeps;
mod rbm;
mod tensor;
mod urbm;

pub use amplitude::LogAmplitude;
pub use check::{
    copeps_mapping_deviation, mapping_suite, rbm_mapping_deviation, urbm_mapping_deviation,
    MappingAnsatz, MappingReport, MAPPING_CHECK_MAX_SITES, PARAMETER_SCALE,
};
pub use copeps::{
    build_copeps_block, copeps_amplitude_torus, copeps_log_amplitude_torus,
    urbm2d_log_amplitude_direct, CopepsBlock, SpinGrid, Urbm2dParameters, COPEPS_MAX_ROW_DIM,
    URBM2D_DIRECT_MAX_HIDDEN,
};
pub use rbm::{
    build_rbm_sigma, rbm_amplitude, rbm_amplitude_hidden_sum, rbm_log_amplitude, Couplings,
    RbmParameters, RBM_HIDDEN_SUM_MAX, RBM_SIGMA_MAX_HIDDEN,
};
pub use tensor::{spin_index, SiteTensor};
pub use urbm::{
    build_urbm_ab, build_urbm_site_tensor, build_urbm_site_tensor_at, rung_matrix,
    urbm_amplitude_direct, urbm_log_amplitude_direct, UrbmCouplings, UrbmParameters1D,
    URBM_DIRECT_MAX_HIDDEN,
};
