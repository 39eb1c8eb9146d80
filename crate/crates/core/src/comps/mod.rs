//! Exact expectation values of translation-invariant ring MPS.
//!
//! For a uniform tensor `M^σ` on a periodic chain of `N` sites, local
//! observables reduce to traces of powers of the transfer operators
//!
//! ```text
//! T_O = Σ_{σ'σ} ⟨σ'|O|σ⟩ M^{σ'} ⊗ M^σ
//! ```
//!
//! so that, for instance, the Ising energy per site is
//! `ε = -(Tr[T_z T_z T^{N-2}] + λ Tr[T_x T^{N-1}]) / Tr[T^N]` with `T = T_I`.
//! Powers are taken by repeated squaring with a running logarithmic scale, so
//! chains of several hundred sites neither overflow nor underflow.

mod amplitude;
pub(crate) mod blocks;
mod gradient;
mod observables;
mod reduced;

use nalgebra::DMatrix;

use crate::ansatz::SiteTensor;
use crate::error::{Error, Result};

pub use amplitude::{comps_amplitude, comps_log_amplitude, comps_log_amplitude_sites};
pub use gradient::energy_density_gradient;
pub use observables::{
    connected_zz_correlator, connected_zz_correlators, energy_density, energy_expectation,
    magnetization, RingExpectation, TracePath,
};
pub use reduced::UrbmRingEvaluator;

/// Largest bond dimension for which transfer operators are formed.
pub const TRANSFER_MAX_CHI: usize = 64;

/// Normalization traces below this value are treated as a vanishing state.
pub const DEGENERATE_NORM: f64 = 1e-300;

/// A translation-invariant periodic MPS.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformRingMps {
    tensor: SiteTensor,
    n_sites: usize,
}

impl UniformRingMps {
    pub fn new(tensor: SiteTensor, n_sites: usize) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::ChainTooShort(n_sites));
        }
        Ok(Self { tensor, n_sites })
    }

    /// Dense tensor from `2χ²` entries in `[σ][α][β]` order.
    pub fn from_entries(chi: usize, entries: &[f64], n_sites: usize) -> Result<Self> {
        Self::new(SiteTensor::from_entries(chi, entries)?, n_sites)
    }

    pub fn tensor(&self) -> &SiteTensor {
        &self.tensor
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn chi(&self) -> usize {
        self.tensor.chi()
    }

    /// The same tensor on a chain of a different length.
    pub fn with_sites(&self, n_sites: usize) -> Result<Self> {
        Self::new(self.tensor.clone(), n_sites)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorLabel {
    Identity,
    SigmaX,
    SigmaZ,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Z,
}

/// A real `2×2` single-site operator in the `[σ = +1, σ = -1]` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOperator {
    pub matrix: [[f64; 2]; 2],
    pub label: OperatorLabel,
}

impl LocalOperator {
    pub fn identity() -> Self {
        Self {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
            label: OperatorLabel::Identity,
        }
    }

    pub fn sigma_x() -> Self {
        Self {
            matrix: [[0.0, 1.0], [1.0, 0.0]],
            label: OperatorLabel::SigmaX,
        }
    }

    pub fn sigma_z() -> Self {
        Self {
            matrix: [[1.0, 0.0], [0.0, -1.0]],
            label: OperatorLabel::SigmaZ,
        }
    }

    pub fn custom(matrix: [[f64; 2]; 2]) -> Self {
        Self {
            matrix,
            label: OperatorLabel::Custom,
        }
    }

    pub fn along(axis: Axis) -> Self {
        match axis {
            Axis::X => Self::sigma_x(),
            Axis::Z => Self::sigma_z(),
        }
    }
}

/// The `χ² × χ²` matrix `T_O`, with row index `a·χ + b` for bra bond `a`
/// and ket bond `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    pub matrix: DMatrix<f64>,
    pub label: OperatorLabel,
}

fn check_chi(chi: usize) -> Result<()> {
    if chi > TRANSFER_MAX_CHI {
        return Err(Error::SizeLimit {
            what: "bond dimension for transfer operators",
            size: chi,
            limit: TRANSFER_MAX_CHI,
        });
    }
    Ok(())
}

pub(crate) fn dense_transfer(tensor: &SiteTensor, op: &LocalOperator) -> DMatrix<f64> {
    let chi = tensor.chi();
    let slices = [tensor.dense_slice(0), tensor.dense_slice(1)];
    let mut t = DMatrix::zeros(chi * chi, chi * chi);
    for (sp, bra) in slices.iter().enumerate() {
        for (s, ket) in slices.iter().enumerate() {
            let w = op.matrix[sp][s];
            if w != 0.0 {
                t += bra.kronecker(ket) * w;
            }
        }
    }
    t
}

/// Builds `T_O = Σ ⟨σ'|O|σ⟩ M^{σ'} ⊗ M^σ`.
pub fn transfer_operator(mps: &UniformRingMps, op: &LocalOperator) -> Result<TransferOperator> {
    check_chi(mps.chi())?;
    Ok(TransferOperator {
        matrix: dense_transfer(&mps.tensor, op),
        label: op.label,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;

    use super::*;
    use crate::ansatz::{build_urbm_site_tensor, UrbmParameters1D};

    #[test]
    fn scalar_transfers() {
        let up = SiteTensor::from_entries(1, &[1.0, 0.0]).unwrap();
        let mps = UniformRingMps::new(up, 5).unwrap();
        let t = transfer_operator(&mps, &LocalOperator::identity()).unwrap();
        assert_eq!(t.matrix, DMatrix::from_element(1, 1, 1.0));
        let ones = UniformRingMps::from_entries(1, &[1.0, 1.0], 5).unwrap();
        let t = transfer_operator(&ones, &LocalOperator::sigma_x()).unwrap();
        assert_eq!(t.matrix, DMatrix::from_element(1, 1, 2.0));
    }

    #[test]
    fn identity_transfer_matches_index_loop() {
        let p = UrbmParameters1D::from_vector(1, &[0.3, -0.8, 0.45]).unwrap();
        let m = build_urbm_site_tensor(&p).unwrap();
        let mps = UniformRingMps::new(m.clone(), 6).unwrap();
        let t = transfer_operator(&mps, &LocalOperator::identity())
            .unwrap()
            .matrix;
        let chi = 4;
        for a in 0..chi {
            for b in 0..chi {
                for c in 0..chi {
                    for d in 0..chi {
                        let mut v = 0.0;
                        for s in [1i8, -1] {
                            v += m.slice(s)[(a, c)] * m.slice(s)[(b, d)];
                        }
                        assert!((t[(a * chi + b, c * chi + d)] - v).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_huge_bond_dimension() {
        let big = SiteTensor::diagonal(
            DVector::from_element(65, 1.0),
            DVector::from_element(65, 1.0),
        )
        .unwrap();
        let mps = UniformRingMps::new(big, 3).unwrap();
        assert!(matches!(
            transfer_operator(&mps, &LocalOperator::identity()),
            Err(Error::SizeLimit { .. })
        ));
        assert_eq!(
            UniformRingMps::from_entries(1, &[1.0, 1.0], 2),
            Err(Error::ChainTooShort(2))
        );
    }
}
