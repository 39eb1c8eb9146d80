//! Two-dimensional uRBM on an `L × L` torus and its coPEPS building block.
//!
//! Each site carries the fused tensor
//! `ℂ^σ_{(α,α')(β,β')(γ,γ')(δ,δ')} = A^σ_{αβ} A^σ_{γδ} δ_{α'γ'} T_{α'β'} T_{γ'δ'}`
//! with index roles left, right, up, down. `T` is the hidden-rung block with
//! half the on-site couplings, which for one layer is `B^{σ/2}`.

use nalgebra::DMatrix;
use rand::Rng;

use super::amplitude::LogAmplitude;
use super::urbm::{rung_matrix, UrbmCouplings, UrbmParameters1D};
use crate::error::{Error, Result};

/// Largest `L²·ℓ` accepted by the exhaustive 2D oracle.
pub const URBM2D_DIRECT_MAX_HIDDEN: usize = 20;

/// Largest vertical space `χ^L` for the row-transfer contraction.
pub const COPEPS_MAX_ROW_DIM: usize = 4096;

/// Translation-invariant 2D uRBM parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Urbm2dParameters {
    couplings: UrbmCouplings,
}

impl Urbm2dParameters {
    pub fn new(k0: f64, k: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        let couplings = UrbmCouplings { k0, k, j };
        couplings.validate()?;
        Ok(Self { couplings })
    }

    /// From `[K⁰, K¹..K^ℓ, J¹..J^ℓ]`.
    pub fn from_vector(layers: usize, v: &[f64]) -> Result<Self> {
        let p = UrbmParameters1D::from_vector(layers, v)?;
        Ok(Self {
            couplings: p.couplings_at(0).clone(),
        })
    }

    pub fn random<R: Rng + ?Sized>(layers: usize, scale: f64, rng: &mut R) -> Self {
        let v: Vec<f64> = (0..2 * layers + 1)
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        Self::from_vector(layers, &v).expect("valid layer count")
    }

    pub fn layers(&self) -> usize {
        self.couplings.layers()
    }

    pub fn couplings(&self) -> &UrbmCouplings {
        &self.couplings
    }

    pub fn free_parameter_count(&self) -> usize {
        2 * self.layers() + 1
    }
}

/// Spins on an `L × L` torus, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinGrid {
    l: usize,
    values: Vec<i8>,
}

impl SpinGrid {
    pub fn new(l: usize, values: Vec<i8>) -> Result<Self> {
        if values.len() != l * l {
            return Err(Error::DimensionMismatch {
                expected: l * l,
                found: values.len(),
            });
        }
        if let Some(&s) = values.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin(s as i64));
        }
        Ok(Self { l, values })
    }

    /// Bit `i·L + j` set means `σ_{ij} = -1`.
    pub fn from_bits(l: usize, bits: u64) -> Self {
        let values = (0..l * l)
            .map(|k| if (bits >> k) & 1 == 1 { -1 } else { 1 })
            .collect();
        Self { l, values }
    }

    pub fn side(&self) -> usize {
        self.l
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.values[(i % self.l) * self.l + j % self.l]
    }

    pub fn flipped(&self) -> Self {
        Self {
            l: self.l,
            values: self.values.iter().map(|s| -s).collect(),
        }
    }

    /// Grid translated by `k` columns.
    pub fn shifted_columns(&self, k: usize) -> Self {
        let values = (0..self.l * self.l)
            .map(|idx| self.get(idx / self.l, idx % self.l + k))
            .collect();
        Self { l: self.l, values }
    }
}

/// The fused coPEPS tensor `ℂ^σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CopepsBlock {
    chi: usize,
    /// Layout `[σ][α][β][γ][δ]`, row-major.
    entries: Vec<f64>,
}

impl CopepsBlock {
    pub fn chi(&self) -> usize {
        self.chi
    }

    /// `ℂ^σ_{αβγδ}` on fused indices; `sigma` is `±1`.
    pub fn entry(&self, sigma: i8, alpha: usize, beta: usize, gamma: usize, delta: usize) -> f64 {
        let s = usize::from(sigma < 0);
        let c = self.chi;
        self.entries[(((s * c + alpha) * c + beta) * c + gamma) * c + delta]
    }

    fn slice(&self, s: usize) -> &[f64] {
        let n = self.chi.pow(4);
        &self.entries[s * n..(s + 1) * n]
    }
}

fn a_matrix(k0: f64, sigma: f64) -> [[f64; 2]; 2] {
    let (c, sh) = (k0.cosh(), k0.sinh());
    [[c, -sigma * sh], [sigma * c, -sh]]
}

/// Builds `ℂ^σ` with fused index `(a, a') ↦ a·2^ℓ + a'`.
pub fn build_copeps_block(params: &Urbm2dParameters) -> CopepsBlock {
    let c = &params.couplings;
    let hd = 1usize << c.layers();
    let chi = 2 * hd;
    let mut entries = Vec::with_capacity(2 * chi.pow(4));
    for sigma in [1.0, -1.0] {
        let a = a_matrix(c.k0, sigma);
        let t: DMatrix<f64> = rung_matrix(c, sigma, 0.5);
        for alpha in 0..chi {
            for beta in 0..chi {
                for gamma in 0..chi {
                    for delta in 0..chi {
                        let (al, alp) = (alpha / hd, alpha % hd);
                        let (be, bep) = (beta / hd, beta % hd);
                        let (ga, gap) = (gamma / hd, gamma % hd);
                        let (de, dep) = (delta / hd, delta % hd);
                        let v = if alp == gap {
                            a[al][be] * a[ga][de] * t[(alp, bep)] * t[(gap, dep)]
                        } else {
                            0.0
                        };
                        entries.push(v);
                    }
                }
            }
        }
    }
    CopepsBlock { chi, entries }
}

/// Ring-traced row transfer matrix from the up indices of row `i` to its
/// down indices; the vertical index of site `j` is digit `j` (most
/// significant first) in base `χ`.
fn row_transfer(block: &CopepsBlock, grid: &SpinGrid, row: usize) -> DMatrix<f64> {
    let chi = block.chi;
    let l = grid.side();
    let full = chi.pow(l as u32);
    let mut r = DMatrix::zeros(full, full);
    for l0 in 0..chi {
        // cur[(u_prefix·width + d_prefix)·χ + left]
        let mut width = 1usize;
        let mut cur = vec![0.0; chi];
        cur[l0] = 1.0;
        for j in 0..l {
            let c = block.slice(usize::from(grid.get(row, j) < 0));
            let nw = width * chi;
            let mut next = vec![0.0; nw * nw * chi];
            for up in 0..width {
                for dp in 0..width {
                    for left in 0..chi {
                        let v = cur[(up * width + dp) * chi + left];
                        if v == 0.0 {
                            continue;
                        }
                        for right in 0..chi {
                            for u in 0..chi {
                                for d in 0..chi {
                                    let w = c[((left * chi + right) * chi + u) * chi + d];
                                    if w != 0.0 {
                                        next[((up * chi + u) * nw + dp * chi + d) * chi + right] +=
                                            v * w;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            cur = next;
            width = nw;
        }
        for u in 0..full {
            for d in 0..full {
                r[(u, d)] += cur[(u * full + d) * chi + l0];
            }
        }
    }
    r
}

/// Log amplitude of the coPEPS on the `L × L` torus, `L ∈ {2, 3}`.
pub fn copeps_log_amplitude_torus(block: &CopepsBlock, grid: &SpinGrid) -> Result<LogAmplitude> {
    let l = grid.side();
    if !(2..=3).contains(&l) {
        return Err(Error::InvalidArgument(format!(
            "torus contraction supports L = 2 or 3, got {l}"
        )));
    }
    let full = block.chi.pow(l as u32);
    if full > COPEPS_MAX_ROW_DIM {
        return Err(Error::SizeLimit {
            what: "coPEPS row space",
            size: full,
            limit: COPEPS_MAX_ROW_DIM,
        });
    }
    let mut ln_scale = 0.0;
    let mut acc = DMatrix::<f64>::identity(full, full);
    for row in 0..l {
        acc *= row_transfer(block, grid, row);
        let m = acc.amax();
        if m > 0.0 {
            acc /= m;
            ln_scale += m.ln();
        }
    }
    let tr = LogAmplitude::from_value(acc.trace());
    Ok(LogAmplitude {
        ln_abs: tr.ln_abs + ln_scale,
        sign: tr.sign,
    })
}

/// Amplitude of the coPEPS on the `L × L` torus, `L ∈ {2, 3}`.
pub fn copeps_amplitude_torus(block: &CopepsBlock, grid: &SpinGrid) -> Result<f64> {
    Ok(copeps_log_amplitude_torus(block, grid)?.value())
}

/// Exhaustive hidden sum of the 2D functional. Each site couples to its right
/// and lower neighbours, so on `L = 2` every pair is counted twice.
pub fn urbm2d_log_amplitude_direct(
    params: &Urbm2dParameters,
    grid: &SpinGrid,
) -> Result<LogAmplitude> {
    let l = grid.side();
    let layers = params.layers();
    let sites = l * l;
    if sites * layers > URBM2D_DIRECT_MAX_HIDDEN {
        return Err(Error::SizeLimit {
            what: "hidden units for exhaustive summation",
            size: sites * layers,
            limit: URBM2D_DIRECT_MAX_HIDDEN,
        });
    }
    let c = &params.couplings;
    let s = |i: usize, j: usize| grid.get(i, j) as f64;
    let site = |i: usize, j: usize| (i % l) * l + j % l;
    let mut visible = 0.0;
    for i in 0..l {
        for j in 0..l {
            visible += c.k0 * s(i, j) * (s(i, j + 1) + s(i + 1, j));
        }
    }
    let h = |bits: usize, k: usize, g: usize| {
        if (bits >> (k * layers + g - 1)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for bits in 0..1usize << (sites * layers) {
        let mut phi = visible;
        for i in 0..l {
            for j in 0..l {
                let k = site(i, j);
                let (kr, kd) = (site(i, j + 1), site(i + 1, j));
                for g in 1..=layers {
                    phi += c.k[g - 1] * h(bits, k, g) * (h(bits, kr, g) + h(bits, kd, g));
                }
                phi += c.j[0] * s(i, j) * h(bits, k, 1);
                for g in 2..=layers {
                    phi += c.j[g - 1] * h(bits, k, g - 1) * h(bits, k, g);
                }
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

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn trivial_block() {
        let p = Urbm2dParameters::from_vector(1, &[0.0; 3]).unwrap();
        let b = build_copeps_block(&p);
        assert_eq!(b.chi(), 4);
        // A^σ = [[1,0],[σ,0]] and T is all ones.
        assert_eq!(b.entry(-1, 2, 0, 2, 1), 1.0);
        assert_eq!(b.entry(-1, 2, 1, 0, 0), -1.0);
        assert_eq!(b.entry(1, 1, 0, 0, 0), 0.0);
        assert_eq!(b.entry(1, 0, 2, 0, 0), 0.0);
    }

    #[test]
    fn zero_parameters_count_hidden_states() {
        let p = Urbm2dParameters::from_vector(1, &[0.0; 3]).unwrap();
        let b = build_copeps_block(&p);
        let g = SpinGrid::from_bits(3, 0b101_100_011);
        assert!((copeps_amplitude_torus(&b, &g).unwrap() - 512.0).abs() < 1e-9);
        assert!((urbm2d_log_amplitude_direct(&p, &g).unwrap().value() - 512.0).abs() < 1e-9);
    }

    #[test]
    fn contraction_matches_hidden_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for l in [2, 3] {
            let p = Urbm2dParameters::random(1, 0.8, &mut rng);
            let b = build_copeps_block(&p);
            for bits in [0u64, 1, 0b0110, 0b1_0110_1001, 0b0_1011_0100] {
                let g = SpinGrid::from_bits(l, bits & ((1 << (l * l)) - 1));
                let net = copeps_log_amplitude_torus(&b, &g).unwrap();
                let brute = urbm2d_log_amplitude_direct(&p, &g).unwrap();
                assert!(net.relative_deviation(&brute) < 1e-8, "L={l} {bits:b}");
            }
        }
    }

    #[test]
    fn two_layer_contraction_matches_hidden_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = Urbm2dParameters::random(2, 0.6, &mut rng);
        let b = build_copeps_block(&p);
        for bits in [0u64, 0b1001, 0b0111] {
            let g = SpinGrid::from_bits(2, bits);
            let net = copeps_log_amplitude_torus(&b, &g).unwrap();
            let brute = urbm2d_log_amplitude_direct(&p, &g).unwrap();
            assert!(net.relative_deviation(&brute) < 1e-8, "{bits:b}");
        }
    }

    #[test]
    fn translation_and_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = Urbm2dParameters::random(1, 1.0, &mut rng);
        let b = build_copeps_block(&p);
        let g = SpinGrid::from_bits(3, 0b110_010_001);
        let a = copeps_log_amplitude_torus(&b, &g).unwrap();
        let shifted = copeps_log_amplitude_torus(&b, &g.shifted_columns(1)).unwrap();
        let flipped = copeps_log_amplitude_torus(&b, &g.flipped()).unwrap();
        assert!(a.relative_deviation(&shifted) < 1e-10);
        assert!(a.relative_deviation(&flipped) < 1e-10);
    }

    #[test]
    fn rejects_unsupported_sizes() {
        let p = Urbm2dParameters::from_vector(1, &[0.0; 3]).unwrap();
        let b = build_copeps_block(&p);
        assert!(copeps_amplitude_torus(&b, &SpinGrid::from_bits(4, 0)).is_err());
    }
}
