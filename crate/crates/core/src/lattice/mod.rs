//! The periodic transverse-field Ising chain
//!
//! ```text
//! H = - Σ_j σᶻ_j σᶻ_{j+1} - λ Σ_j σˣ_j,      σ_{N+1} ≡ σ_1
//! ```
//!
//! together with the two exact references every variational number in this
//! crate is measured against: the free-fermion ground energy (any `N`) and a
//! matrix-free exact diagonalization restricted to the even spin-flip sector
//! (`N ≤ 14`). A free-fermion connected correlator is also provided for the
//! large chains where exact diagonalization is out of reach.

mod ed;
mod free_fermion;

pub use ed::{ed_ground_state, EdGroundState, ED_MAX_SITES};
pub use free_fermion::{exact_ising_ground_energy, exact_zz_correlator};

use crate::error::{Error, Result};

/// A periodic Ising chain with `n_sites` spins in transverse field `field`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingChainSpec {
    n_sites: usize,
    field: f64,
}

impl IsingChainSpec {
    pub fn new(n_sites: usize, field: f64) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::ChainTooShort(n_sites));
        }
        if !field.is_finite() || field < 0.0 {
            return Err(Error::InvalidField(field));
        }
        Ok(Self { n_sites, field })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// The transverse field λ.
    pub fn field(&self) -> f64 {
        self.field
    }
}

/// Exact ground-state energy of a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    /// Total energy in units of the Ising coupling.
    pub ground_energy: f64,
    /// `ground_energy / N`.
    pub energy_density: f64,
}

/// A classical configuration of `N` Ising spins, each exactly `+1` or `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    values: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin(bad as i64));
        }
        Ok(Self { values })
    }

    /// Configuration whose spin `j` is `-1` exactly when bit `j` of `bits` is set.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        let values = (0..n)
            .map(|j| if (bits >> j) & 1 == 1 { -1 } else { 1 })
            .collect();
        Self { values }
    }

    /// Every configuration of `n` spins, in `from_bits` order.
    pub fn all(n: usize) -> impl Iterator<Item = SpinConfiguration> {
        assert!(n < 64);
        (0..1u64 << n).map(move |bits| Self::from_bits(n, bits))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, j: usize) -> i8 {
        self.values[j]
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        Self {
            values: self.values.iter().map(|s| -s).collect(),
        }
    }

    /// Cyclic shift: spin `j` of the result is spin `j + k` of `self`.
    pub fn shifted(&self, k: usize) -> Self {
        let mut values = self.values.clone();
        if !values.is_empty() {
            let k = k % values.len();
            values.rotate_left(k);
        }
        Self { values }
    }

    /// Copy with spin `j` flipped.
    pub fn with_flip(&self, j: usize) -> Self {
        let mut values = self.values.clone();
        values[j] = -values[j];
        Self { values }
    }

    /// Classical part of the Ising energy, `-Σ σ_j σ_{j+1}` on the ring.
    pub fn bond_energy(&self) -> f64 {
        let n = self.values.len();
        -(0..n)
            .map(|j| (self.values[j] * self.values[(j + 1) % n]) as f64)
            .sum::<f64>()
    }
}

/// Relative deviation `|(e - exact) / exact|`.
pub fn relative_error(value: f64, exact: f64) -> f64 {
    ((value - exact) / exact).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert_eq!(IsingChainSpec::new(2, 1.0), Err(Error::ChainTooShort(2)));
        assert!(matches!(
            IsingChainSpec::new(8, -0.1),
            Err(Error::InvalidField(_))
        ));
        assert!(IsingChainSpec::new(8, f64::NAN).is_err());
        let s = IsingChainSpec::new(3, 0.0).unwrap();
        assert_eq!((s.n_sites(), s.field()), (3, 0.0));
    }

    #[test]
    fn spin_configuration_rules() {
        assert_eq!(
            SpinConfiguration::new(vec![1, 0, -1]),
            Err(Error::InvalidSpin(0))
        );
        let c = SpinConfiguration::from_bits(4, 0b0101);
        assert_eq!(c.values(), &[-1, 1, -1, 1]);
        assert_eq!(c.shifted(1).values(), &[1, -1, 1, -1]);
        assert_eq!(c.flipped().values(), &[1, -1, 1, -1]);
        assert_eq!(c.bond_energy(), 4.0);
        assert_eq!(SpinConfiguration::all(5).count(), 32);
    }
}
