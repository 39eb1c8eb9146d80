//! One-dimensional unrestricted Boltzmann machines and their coMPS tensors.
//!
//! The functional on a ring of `N` visible spins with `ℓ` hidden layers is
//!
//! ```text
//! φ_ℓ(σ, h) = Σ_j [ K⁰_j σ_j σ_{j+1} + Σ_γ K^γ_j h^γ_j h^γ_{j+1}
//!                  + J¹_j σ_j h¹_j + Σ_{γ≥2} J^γ_j h^{γ-1}_j h^γ_j ]
//! ```
//!
//! and the amplitude is `Φ_ℓ(σ) = Σ_h exp[-φ_ℓ(σ, h)]`. Tracing out the
//! hidden variables rung by rung gives a coMPS with bond dimension `2^(ℓ+1)`.

use nalgebra::DMatrix;
use rand::Rng;

use super::amplitude::LogAmplitude;
use super::tensor::SiteTensor;
use crate::error::{Error, Result};
use crate::lattice::SpinConfiguration;

/// Largest `N·ℓ` accepted by the exhaustive hidden-sum oracle.
pub const URBM_DIRECT_MAX_HIDDEN: usize = 20;

/// Couplings of a single site.
#[derive(Debug, Clone, PartialEq)]
pub struct UrbmCouplings {
    pub k0: f64,
    /// `K¹..K^ℓ`.
    pub k: Vec<f64>,
    /// `J¹..J^ℓ`.
    pub j: Vec<f64>,
}

impl UrbmCouplings {
    pub fn layers(&self) -> usize {
        self.k.len()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.k.is_empty() {
            return Err(Error::InvalidArgument(
                "a uRBM needs at least one hidden layer".into(),
            ));
        }
        if self.j.len() != self.k.len() {
            return Err(Error::DimensionMismatch {
                expected: self.k.len(),
                found: self.j.len(),
            });
        }
        if !self.k0.is_finite() || self.k.iter().chain(&self.j).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("uRBM couplings"));
        }
        Ok(())
    }
}

/// uRBM parameters, either translation invariant or site dependent.
#[derive(Debug, Clone, PartialEq)]
pub struct UrbmParameters1D {
    layers: usize,
    /// One entry when translation invariant, otherwise one per site.
    sites: Vec<UrbmCouplings>,
}

impl UrbmParameters1D {
    pub fn uniform(k0: f64, k: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        let c = UrbmCouplings { k0, k, j };
        c.validate()?;
        Ok(Self {
            layers: c.layers(),
            sites: vec![c],
        })
    }

    pub fn per_site(sites: Vec<UrbmCouplings>) -> Result<Self> {
        let first = sites
            .first()
            .ok_or_else(|| Error::InvalidArgument("no sites given".into()))?;
        let layers = first.layers();
        for c in &sites {
            c.validate()?;
            if c.layers() != layers {
                return Err(Error::DimensionMismatch {
                    expected: layers,
                    found: c.layers(),
                });
            }
        }
        Ok(Self { layers, sites })
    }

    /// Translation-invariant parameters from `[K⁰, K¹..K^ℓ, J¹..J^ℓ]`.
    pub fn from_vector(layers: usize, v: &[f64]) -> Result<Self> {
        if layers == 0 {
            return Err(Error::InvalidArgument(
                "a uRBM needs at least one hidden layer".into(),
            ));
        }
        if v.len() != 2 * layers + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * layers + 1,
                found: v.len(),
            });
        }
        Self::uniform(v[0], v[1..=layers].to_vec(), v[layers + 1..].to_vec())
    }

    /// Inverse of [`UrbmParameters1D::from_vector`]; per-site parameters are
    /// concatenated site by site.
    pub fn to_vector(&self) -> Vec<f64> {
        self.sites
            .iter()
            .flat_map(|c| {
                std::iter::once(c.k0)
                    .chain(c.k.iter().copied())
                    .chain(c.j.iter().copied())
            })
            .collect()
    }

    /// Translation-invariant draw, uniform in `[-scale, scale)`.
    pub fn random<R: Rng + ?Sized>(layers: usize, scale: f64, rng: &mut R) -> Self {
        let v: Vec<f64> = (0..2 * layers + 1)
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        Self::from_vector(layers, &v).expect("valid layer count")
    }

    pub fn random_per_site<R: Rng + ?Sized>(
        layers: usize,
        n: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let sites = (0..n)
            .map(|_| UrbmCouplings {
                k0: rng.random_range(-scale..scale),
                k: (0..layers)
                    .map(|_| rng.random_range(-scale..scale))
                    .collect(),
                j: (0..layers)
                    .map(|_| rng.random_range(-scale..scale))
                    .collect(),
            })
            .collect();
        Self::per_site(sites).expect("valid layer count")
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn is_per_site(&self) -> bool {
        self.sites.len() > 1
    }

    pub fn free_parameter_count(&self) -> usize {
        self.sites.len() * (2 * self.layers + 1)
    }

    /// Bond dimension `2^(ℓ+1)` of the coMPS tensor.
    pub fn bond_dimension(&self) -> usize {
        2 << self.layers
    }

    /// Couplings of site `j` (wrapping for per-site parameters).
    pub fn couplings_at(&self, site: usize) -> &UrbmCouplings {
        &self.sites[site % self.sites.len()]
    }

    /// The same machine with `J^γ → -J^γ` on every site.
    pub fn with_flipped_layer(&self, gamma: usize) -> Self {
        let mut out = self.clone();
        for c in &mut out.sites {
            c.j[gamma] = -c.j[gamma];
        }
        out
    }

    fn check_chain(&self, n: usize) -> Result<()> {
        if self.is_per_site() && self.sites.len() != n {
            return Err(Error::DimensionMismatch {
                expected: self.sites.len(),
                found: n,
            });
        }
        Ok(())
    }
}

fn spin_value(sigma: i8) -> Result<f64> {
    match sigma {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        s => Err(Error::InvalidSpin(s as i64)),
    }
}

/// Hidden value `h^γ` (γ = 1..ℓ) encoded in a rung index; layer 1 is the most
/// significant bit and bit value 0 means `h = +1`.
#[inline]
pub(crate) fn rung_spin(idx: usize, gamma: usize, layers: usize) -> f64 {
    if (idx >> (layers - gamma)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The `2×2` matrices `A^σ` and `B^σ` of the single-layer coMPS.
pub fn build_urbm_ab(k0: f64, k1: f64, j1: f64, sigma: i8) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(k0.is_finite() && k1.is_finite() && j1.is_finite()) {
        return Err(Error::NonFinite("uRBM couplings"));
    }
    let s = spin_value(sigma)?;
    let (c, sh) = (k0.cosh(), k0.sinh());
    let a = DMatrix::from_row_slice(2, 2, &[c, -s * sh, s * c, -sh]);
    let b = DMatrix::from_row_slice(
        2,
        2,
        &[
            (-k1 - j1 * s).exp(),
            (k1 - j1 * s).exp(),
            (k1 + j1 * s).exp(),
            (-k1 + j1 * s).exp(),
        ],
    );
    Ok((a, b))
}

/// Hidden-rung transfer block
/// `T_{h,h'} = exp[-Σ_γ K^γ h^γ h'^γ - w(J¹σh¹ + Σ_{γ≥2} J^γ h^{γ-1} h^γ)]`.
///
/// All on-site couplings sit on the left rung `h`. The weight `w` is 1 on a
/// chain; on the square lattice each site carries two rung blocks and `w = ½`.
pub fn rung_matrix(c: &UrbmCouplings, sigma: f64, onsite_weight: f64) -> DMatrix<f64> {
    let l = c.layers();
    let dim = 1usize << l;
    let onsite: Vec<f64> = (0..dim)
        .map(|h| {
            let mut e = c.j[0] * sigma * rung_spin(h, 1, l);
            for g in 2..=l {
                e += c.j[g - 1] * rung_spin(h, g - 1, l) * rung_spin(h, g, l);
            }
            onsite_weight * e
        })
        .collect();
    DMatrix::from_fn(dim, dim, |h, hp| {
        let bond: f64 = (1..=l)
            .map(|g| c.k[g - 1] * rung_spin(h, g, l) * rung_spin(hp, g, l))
            .sum();
        (-bond - onsite[h]).exp()
    })
}

fn a_matrix(k0: f64, sigma: f64) -> DMatrix<f64> {
    let (c, sh) = (k0.cosh(), k0.sinh());
    DMatrix::from_row_slice(2, 2, &[c, -sigma * sh, sigma * c, -sh])
}

/// `M^σ = A^σ ⊗ T^σ` for site `j`; for `ℓ = 1` this is `A^σ ⊗ B^σ`.
pub fn build_urbm_site_tensor_at(params: &UrbmParameters1D, site: usize) -> Result<SiteTensor> {
    let c = params.couplings_at(site);
    let slice = |s: f64| a_matrix(c.k0, s).kronecker(&rung_matrix(c, s, 1.0));
    SiteTensor::new(slice(1.0), slice(-1.0))
}

/// Uniform coMPS tensor of a translation-invariant uRBM.
pub fn build_urbm_site_tensor(params: &UrbmParameters1D) -> Result<SiteTensor> {
    if params.is_per_site() {
        return Err(Error::InvalidArgument(
            "site-dependent parameters have no single site tensor".into(),
        ));
    }
    build_urbm_site_tensor_at(params, 0)
}

/// Exhaustive `Σ_h exp[-φ_ℓ(σ, h)]` in log form.
pub fn urbm_log_amplitude_direct(
    params: &UrbmParameters1D,
    config: &SpinConfiguration,
) -> Result<LogAmplitude> {
    let n = config.len();
    let l = params.layers();
    params.check_chain(n)?;
    if n * l > URBM_DIRECT_MAX_HIDDEN {
        return Err(Error::SizeLimit {
            what: "hidden units for exhaustive summation",
            size: n * l,
            limit: URBM_DIRECT_MAX_HIDDEN,
        });
    }
    let sigma: Vec<f64> = config.values().iter().map(|&s| s as f64).collect();
    let visible: f64 = (0..n)
        .map(|j| params.couplings_at(j).k0 * sigma[j] * sigma[(j + 1) % n])
        .sum();
    // Bit `j·ℓ + (γ-1)` holds h^γ_j.
    let h = |bits: usize, j: usize, g: usize| {
        if (bits >> (j * l + g - 1)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for bits in 0..1usize << (n * l) {
        let mut phi = visible;
        for j in 0..n {
            let c = params.couplings_at(j);
            let jn = (j + 1) % n;
            for g in 1..=l {
                phi += c.k[g - 1] * h(bits, j, g) * h(bits, jn, g);
            }
            phi += c.j[0] * sigma[j] * h(bits, j, 1);
            for g in 2..=l {
                phi += c.j[g - 1] * h(bits, j, g - 1) * h(bits, j, g);
            }
        }
        let x = -phi;
        if x > max {
            sum = sum * (max - x).exp() + 1.0;
            max = x;
        } else {
            sum += (x - max).exp();
        }
    }
    Ok(LogAmplitude {
        ln_abs: max + sum.ln(),
        sign: 1.0,
    })
}

/// Exhaustive hidden-sum amplitude `Φ_ℓ(σ)`, for `N·ℓ ≤ 20`.
pub fn urbm_amplitude_direct(params: &UrbmParameters1D, config: &SpinConfiguration) -> Result<f64> {
    Ok(urbm_log_amplitude_direct(params, config)?.value())
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn z() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }

    fn x() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    #[test]
    fn trivial_ab() {
        for s in [1i8, -1] {
            let (a, b) = build_urbm_ab(0.0, 0.0, 0.0, s).unwrap();
            assert_eq!(a, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, s as f64, 0.0]));
            assert_eq!(b, DMatrix::from_element(2, 2, 1.0));
        }
    }

    #[test]
    fn spin_flip_relations() {
        let (k0, k1, j1) = (0.37, -1.2, 0.81);
        let (ap, bp) = build_urbm_ab(k0, k1, j1, 1).unwrap();
        let (am, bm) = build_urbm_ab(k0, k1, j1, -1).unwrap();
        assert_eq!(am, z() * ap * z());
        assert_eq!(bm, x() * bp * x());
    }

    #[test]
    fn single_layer_rung_is_b() {
        let c = UrbmCouplings {
            k0: 0.2,
            k: vec![-0.7],
            j: vec![0.4],
        };
        for s in [1i8, -1] {
            let (_, b) = build_urbm_ab(c.k0, c.k[0], c.j[0], s).unwrap();
            assert_eq!(rung_matrix(&c, s as f64, 1.0), b);
        }
    }

    #[test]
    fn single_layer_tensor_is_kronecker() {
        let p = UrbmParameters1D::from_vector(1, &[0.3, -0.5, 0.9]).unwrap();
        let t = build_urbm_site_tensor(&p).unwrap();
        assert_eq!(t.chi(), 4);
        for s in [1i8, -1] {
            let (a, b) = build_urbm_ab(0.3, -0.5, 0.9, s).unwrap();
            assert_eq!(*t.slice(s), a.kronecker(&b));
        }
    }

    #[test]
    fn zero_parameters_count_hidden_states() {
        let p = UrbmParameters1D::from_vector(1, &[0.0; 3]).unwrap();
        for c in SpinConfiguration::all(4) {
            assert!((urbm_amplitude_direct(&p, &c).unwrap() - 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = UrbmParameters1D::random(2, 1.0, &mut rng);
        for c in SpinConfiguration::all(5) {
            let a = urbm_log_amplitude_direct(&p, &c).unwrap();
            let flipped = urbm_log_amplitude_direct(&p, &c.flipped()).unwrap();
            assert!(a.relative_deviation(&flipped) < 1e-12);
            for g in 0..2 {
                let b = urbm_log_amplitude_direct(&p.with_flipped_layer(g), &c).unwrap();
                assert!(a.relative_deviation(&b) < 1e-12);
            }
        }
    }

    #[test]
    fn vector_round_trip_and_guards() {
        let v = [0.1, 0.2, 0.3, 0.4, 0.5];
        let p = UrbmParameters1D::from_vector(2, &v).unwrap();
        assert_eq!(p.to_vector(), v);
        assert_eq!(p.free_parameter_count(), 5);
        assert_eq!(p.bond_dimension(), 8);
        assert!(UrbmParameters1D::from_vector(2, &v[..4]).is_err());
        assert!(UrbmParameters1D::from_vector(1, &[f64::NAN, 0.0, 0.0]).is_err());
        let c = SpinConfiguration::from_bits(11, 0);
        assert!(matches!(
            urbm_amplitude_direct(&p, &c),
            Err(Error::SizeLimit { .. })
        ));
    }
}
