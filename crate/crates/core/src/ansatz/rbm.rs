//! Restricted Boltzmann machine wave functions and their diagonal coMPS.
//!
//! The functional is `ψ(σ, h) = Σ_j a_j σ_j + Σ_i b_i h_i + Σ_ij Γ_ij h_i σ_j`
//! and the amplitude `Ψ(σ) = Σ_h exp[-ψ(σ, h)]`. Without intra-layer couplings
//! the hidden sum factorizes into `e^{-Σ a_j σ_j} Π_i 2 cosh(b_i + Σ_j Γ_ij σ_j)`,
//! which is also the ring trace of the `2^M × 2^M` diagonal matrices
//!
//! ```text
//! Σ^σ_j = e^{-a_j σ} ⊗_i diag(e^{-b_i/N - Γ_ij σ}, e^{b_i/N + Γ_ij σ})
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::amplitude::{ln_two_cosh, log_sum_exp, LogAmplitude};
use super::tensor::SiteTensor;
use crate::error::{Error, Result};
use crate::lattice::SpinConfiguration;

/// Largest hidden layer for which [`build_rbm_sigma`] materializes `Σ`.
pub const RBM_SIGMA_MAX_HIDDEN: usize = 12;

/// Largest hidden layer for the exhaustive hidden-sum oracle.
pub const RBM_HIDDEN_SUM_MAX: usize = 20;

/// Visible-hidden couplings `Γ_ij`.
#[derive(Debug, Clone, PartialEq)]
pub enum Couplings {
    /// Full `M × N` table, hidden index first.
    Full(DMatrix<f64>),
    /// `Γ_ij = γ_i` for every visible site `j`.
    TranslationInvariant(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParameters {
    n_visible: usize,
    visible_bias: Vec<f64>,
    hidden_bias: Vec<f64>,
    couplings: Couplings,
}

impl RbmParameters {
    /// `visible_bias` has length `N`, or 1 for a uniform bias.
    pub fn new(
        n_visible: usize,
        visible_bias: Vec<f64>,
        hidden_bias: Vec<f64>,
        couplings: Couplings,
    ) -> Result<Self> {
        if n_visible == 0 || hidden_bias.is_empty() {
            return Err(Error::InvalidArgument(
                "an RBM needs at least one visible and one hidden unit".into(),
            ));
        }
        if visible_bias.len() != 1 && visible_bias.len() != n_visible {
            return Err(Error::DimensionMismatch {
                expected: n_visible,
                found: visible_bias.len(),
            });
        }
        let m = hidden_bias.len();
        match &couplings {
            Couplings::Full(g) if g.nrows() != m || g.ncols() != n_visible => {
                return Err(Error::DimensionMismatch {
                    expected: m * n_visible,
                    found: g.nrows() * g.ncols(),
                })
            }
            Couplings::TranslationInvariant(g) if g.len() != m => {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: g.len(),
                })
            }
            _ => {}
        }
        let coupling_values: &[f64] = match &couplings {
            Couplings::Full(g) => g.as_slice(),
            Couplings::TranslationInvariant(g) => g,
        };
        if visible_bias
            .iter()
            .chain(&hidden_bias)
            .chain(coupling_values)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("RBM parameters"));
        }
        Ok(Self {
            n_visible,
            visible_bias,
            hidden_bias,
            couplings,
        })
    }

    /// Translation-invariant machine with `2M + 1` free parameters.
    pub fn translation_invariant(
        n_visible: usize,
        visible_bias: f64,
        hidden_bias: Vec<f64>,
        gamma: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            n_visible,
            vec![visible_bias],
            hidden_bias,
            Couplings::TranslationInvariant(gamma),
        )
    }

    /// Fully connected machine with parameters uniform in `[-scale, scale)`.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, scale: f64, rng: &mut R) -> Self {
        let mut draw = || rng.random_range(-scale..scale);
        let visible_bias = (0..n).map(|_| draw()).collect();
        let hidden_bias = (0..m).map(|_| draw()).collect();
        let g = DMatrix::from_fn(m, n, |_, _| draw());
        Self::new(n, visible_bias, hidden_bias, Couplings::Full(g)).expect("valid shapes")
    }

    pub fn random_translation_invariant<R: Rng + ?Sized>(
        n: usize,
        m: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut draw = || rng.random_range(-scale..scale);
        let a = draw();
        let hidden_bias = (0..m).map(|_| draw()).collect();
        let gamma = (0..m).map(|_| draw()).collect();
        Self::translation_invariant(n, a, hidden_bias, gamma).expect("valid shapes")
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden_bias.len()
    }

    /// Hidden-unit density `M / N`.
    pub fn alpha(&self) -> f64 {
        self.n_hidden() as f64 / self.n_visible as f64
    }

    pub fn is_translation_invariant(&self) -> bool {
        self.visible_bias.len() == 1 && matches!(self.couplings, Couplings::TranslationInvariant(_))
    }

    pub fn free_parameter_count(&self) -> usize {
        let g = match &self.couplings {
            Couplings::Full(g) => g.len(),
            Couplings::TranslationInvariant(g) => g.len(),
        };
        self.visible_bias.len() + self.hidden_bias.len() + g
    }

    pub fn visible_bias(&self, j: usize) -> f64 {
        if self.visible_bias.len() == 1 {
            self.visible_bias[0]
        } else {
            self.visible_bias[j]
        }
    }

    pub fn hidden_bias(&self, i: usize) -> f64 {
        self.hidden_bias[i]
    }

    /// `Γ_ij` for hidden unit `i` and visible site `j`.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        match &self.couplings {
            Couplings::Full(g) => g[(i, j)],
            Couplings::TranslationInvariant(g) => g[i],
        }
    }

    fn check_config(&self, config: &SpinConfiguration) -> Result<()> {
        if config.len() != self.n_visible {
            return Err(Error::DimensionMismatch {
                expected: self.n_visible,
                found: config.len(),
            });
        }
        Ok(())
    }

    /// Effective field `b_i + Σ_j Γ_ij σ_j` on hidden unit `i`.
    fn hidden_field(&self, i: usize, config: &SpinConfiguration) -> f64 {
        self.hidden_bias[i]
            + config
                .values()
                .iter()
                .enumerate()
                .map(|(j, &s)| self.coupling(i, j) * s as f64)
                .sum::<f64>()
    }

    fn visible_term(&self, config: &SpinConfiguration) -> f64 {
        config
            .values()
            .iter()
            .enumerate()
            .map(|(j, &s)| self.visible_bias(j) * s as f64)
            .sum()
    }
}

/// Closed-form amplitude `e^{-Σ a_j σ_j} Π_i 2 cosh(b_i + Σ_j Γ_ij σ_j)`.
pub fn rbm_amplitude(params: &RbmParameters, config: &SpinConfiguration) -> Result<f64> {
    Ok(rbm_log_amplitude(params, config)?.value())
}

pub fn rbm_log_amplitude(
    params: &RbmParameters,
    config: &SpinConfiguration,
) -> Result<LogAmplitude> {
    params.check_config(config)?;
    let ln = -params.visible_term(config)
        + (0..params.n_hidden())
            .map(|i| ln_two_cosh(params.hidden_field(i, config)))
            .sum::<f64>();
    Ok(LogAmplitude {
        ln_abs: ln,
        sign: 1.0,
    })
}

/// Exhaustive `Σ_h exp[-ψ(σ, h)]` over all `2^M` hidden configurations.
pub fn rbm_amplitude_hidden_sum(
    params: &RbmParameters,
    config: &SpinConfiguration,
) -> Result<LogAmplitude> {
    params.check_config(config)?;
    let m = params.n_hidden();
    if m > RBM_HIDDEN_SUM_MAX {
        return Err(Error::SizeLimit {
            what: "hidden layer for exhaustive summation",
            size: m,
            limit: RBM_HIDDEN_SUM_MAX,
        });
    }
    let visible = params.visible_term(config);
    let fields: Vec<f64> = (0..m).map(|i| params.hidden_field(i, config)).collect();
    let exponents: Vec<f64> = (0..1usize << m)
        .map(|bits| {
            let hidden: f64 = fields
                .iter()
                .enumerate()
                .map(|(i, f)| if (bits >> i) & 1 == 0 { *f } else { -*f })
                .sum();
            -(visible + hidden)
        })
        .collect();
    Ok(LogAmplitude {
        ln_abs: log_sum_exp(&exponents),
        sign: 1.0,
    })
}

/// The diagonal `2^M × 2^M` coMPS tensor `Σ^σ_j` of visible site `j`.
///
/// Hidden unit 1 is the most significant bit of the bond index; bit value 0
/// selects the `e^{-b_i/N - Γ_ij σ}` entry.
pub fn build_rbm_sigma(params: &RbmParameters, site: usize) -> Result<SiteTensor> {
    let m = params.n_hidden();
    if m > RBM_SIGMA_MAX_HIDDEN {
        return Err(Error::SizeLimit {
            what: "hidden layer for explicit Σ construction",
            size: m,
            limit: RBM_SIGMA_MAX_HIDDEN,
        });
    }
    if site >= params.n_visible() {
        return Err(Error::InvalidArgument(format!(
            "site {site} outside a chain of {}",
            params.n_visible()
        )));
    }
    let n = params.n_visible() as f64;
    let diag = |sigma: f64| {
        DVector::from_fn(1 << m, |idx, _| {
            let mut e = -params.visible_bias(site) * sigma;
            for i in 0..m {
                let x = params.hidden_bias(i) / n + params.coupling(i, site) * sigma;
                let bit = (idx >> (m - 1 - i)) & 1;
                e += if bit == 0 { -x } else { x };
            }
            e.exp()
        })
    };
    SiteTensor::diagonal(diag(1.0), diag(-1.0))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn zero_parameters_count_hidden_states() {
        let p = RbmParameters::translation_invariant(5, 0.0, vec![0.0; 4], vec![0.0; 4]).unwrap();
        for c in SpinConfiguration::all(5) {
            assert!((rbm_amplitude(&p, &c).unwrap() - 16.0).abs() < 1e-12);
        }
        assert_eq!(p.free_parameter_count(), 9);
    }

    #[test]
    fn closed_form_matches_hidden_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = RbmParameters::random(6, 6, 0.7, &mut rng);
        for c in SpinConfiguration::all(6) {
            let closed = rbm_log_amplitude(&p, &c).unwrap();
            let brute = rbm_amplitude_hidden_sum(&p, &c).unwrap();
            assert!(closed.relative_deviation(&brute) < 1e-12);
        }
    }

    #[test]
    fn spin_flip_symmetric_without_biases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p = RbmParameters::random(5, 3, 1.0, &mut rng);
        p.visible_bias = vec![0.0];
        p.hidden_bias = vec![0.0; 3];
        for c in SpinConfiguration::all(5) {
            let a = rbm_amplitude(&p, &c).unwrap();
            let b = rbm_amplitude(&p, &c.flipped()).unwrap();
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn trivial_sigma() {
        let p = RbmParameters::translation_invariant(3, 0.0, vec![0.0], vec![0.0]).unwrap();
        let s = build_rbm_sigma(&p, 0).unwrap();
        assert_eq!(s.chi(), 2);
        for sigma in [1, -1] {
            assert_eq!(*s.slice(sigma), DMatrix::identity(2, 2));
        }
    }

    #[test]
    fn translation_invariant_sigma_is_site_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = RbmParameters::random_translation_invariant(6, 3, 1.0, &mut rng);
        let s0 = build_rbm_sigma(&p, 0).unwrap();
        for j in 1..6 {
            assert_eq!(build_rbm_sigma(&p, j).unwrap(), s0);
        }
    }

    #[test]
    fn guards() {
        let p = RbmParameters::translation_invariant(3, 0.0, vec![0.0; 13], vec![0.0; 13]).unwrap();
        assert!(matches!(
            build_rbm_sigma(&p, 0),
            Err(Error::SizeLimit { .. })
        ));
        let c = SpinConfiguration::from_bits(4, 0);
        assert!(matches!(
            rbm_amplitude(&p, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
