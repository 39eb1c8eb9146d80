use nalgebra::DMatrix;

use super::UniformRingMps;
use crate::ansatz::{spin_index, LogAmplitude, SiteTensor};
use crate::error::{Error, Result};
use crate::lattice::SpinConfiguration;

/// `Tr Π_j M_j^{σ_j}` for site-dependent tensors, in log form.
pub fn comps_log_amplitude_sites(
    tensors: &[SiteTensor],
    config: &SpinConfiguration,
) -> Result<LogAmplitude> {
    if tensors.len() != config.len() {
        return Err(Error::DimensionMismatch {
            expected: tensors.len(),
            found: config.len(),
        });
    }
    let chi = tensors
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty chain".into()))?
        .chi();
    if let Some(t) = tensors.iter().find(|t| t.chi() != chi) {
        return Err(Error::DimensionMismatch {
            expected: chi,
            found: t.chi(),
        });
    }
    let mut acc = DMatrix::<f64>::identity(chi, chi);
    let mut ln_scale = 0.0;
    for (t, &s) in tensors.iter().zip(config.values()) {
        match t.diagonal_slice(spin_index(s)) {
            Some(d) => {
                for (mut col, &v) in acc.column_iter_mut().zip(d.iter()) {
                    col *= v;
                }
            }
            None => acc = &acc * &*t.dense_slice(spin_index(s)),
        }
        let m = acc.amax();
        if m == 0.0 {
            return Ok(LogAmplitude::from_value(0.0));
        }
        acc /= m;
        ln_scale += m.ln();
    }
    let tr = LogAmplitude::from_value(acc.trace());
    Ok(LogAmplitude {
        ln_abs: tr.ln_abs + ln_scale,
        sign: tr.sign,
    })
}

/// Ring trace `Tr Π_j M^{σ_j}` of a uniform MPS, in log form.
pub fn comps_log_amplitude(
    mps: &UniformRingMps,
    config: &SpinConfiguration,
) -> Result<LogAmplitude> {
    if config.len() != mps.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: mps.n_sites(),
            found: config.len(),
        });
    }
    let tensors = vec![mps.tensor().clone(); mps.n_sites()];
    comps_log_amplitude_sites(&tensors, config)
}

/// Ring trace `Tr Π_j M^{σ_j}` of a uniform MPS.
pub fn comps_amplitude(mps: &UniformRingMps, config: &SpinConfiguration) -> Result<f64> {
    Ok(comps_log_amplitude(mps, config)?.value())
}
