//! Energy of a translation-invariant uRBM without forming its coMPS.
//!
//! `A^σ = (1, σ)ᵀ (cosh K⁰, -σ sinh K⁰)` has rank one, so along the visible
//! leg the doubled chain only needs to remember the spin of the previous site.
//! The transfer state is `(σ, x, y)` with `x`, `y` the ket and bra hidden rungs:
//!
//! ```text
//! R[(σ,x,y),(σ',x',y')] = e^{-2K⁰σσ'} T^σ_{xx'} T^σ_{yy'}
//! ```
//!
//! which has dimension `2·4^ℓ` instead of `4^(ℓ+1)`. A flipped spin at site `j`
//! cancels both adjacent `K⁰` factors, so `⟨σˣ⟩` is `Tr[R_a R_b R^{N-2}]` with
//! `R_a = T^σ ⊗ T^σ` and `R_b = T^σ ⊗ T^{-σ}`, neither carrying the link.
//!
//! Besides the ket/bra exchange `x ↔ y`, every matrix entering the energy
//! commutes with the global flip `(σ, x, y) ↦ (-σ, x̄, ȳ)`, which splits the
//! transfer space into four blocks.

use nalgebra::DMatrix;

use super::blocks::{swap_permutation, BlockMatrix, Scaled, SymmetryBasis};
use super::observables::{ln_norm, power, ratio, TracePath};
use crate::ansatz::{rung_matrix, UrbmParameters1D};
use crate::error::{Error, Result};

/// Reusable evaluator for `ε[K]` of uRBMs with a fixed number of layers.
#[derive(Debug, Clone)]
pub struct UrbmRingEvaluator {
    layers: usize,
    basis: SymmetryBasis,
}

impl UrbmRingEvaluator {
    pub fn new(layers: usize) -> Result<Self> {
        if !(1..=4).contains(&layers) {
            return Err(Error::InvalidArgument(format!(
                "reduced evaluator supports 1 to 4 layers, got {layers}"
            )));
        }
        let h = 1usize << layers;
        let full = 2 * h * h;
        let flip = (0..full)
            .map(|i| {
                let (s, x, y) = (i / (h * h), (i / h) % h, i % h);
                ((1 - s) * h + (h - 1 - x)) * h + (h - 1 - y)
            })
            .collect();
        Ok(Self {
            layers,
            basis: SymmetryBasis::new(full, &[swap_permutation(2, h), flip]),
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    fn blocks(&self, params: &UrbmParameters1D) -> Result<(Scaled, Scaled, Scaled)> {
        if params.layers() != self.layers || params.is_per_site() {
            return Err(Error::InvalidArgument(
                "evaluator needs translation-invariant parameters with matching layers".into(),
            ));
        }
        let c = params.couplings_at(0);
        let h = 1usize << self.layers;
        let rung = [rung_matrix(c, 1.0, 1.0), rung_matrix(c, -1.0, 1.0)];
        let spin = |s: usize| if s == 0 { 1.0 } else { -1.0 };
        let dim = 2 * h * h;
        let split = |i: usize| (i / (h * h), (i / h) % h, i % h);

        let link = [
            [(-2.0 * c.k0).exp(), (2.0 * c.k0).exp()],
            [(2.0 * c.k0).exp(), (-2.0 * c.k0).exp()],
        ];
        let r = DMatrix::from_fn(dim, dim, |i, j| {
            let (s, x, y) = split(i);
            let (sp, xp, yp) = split(j);
            link[s][sp] * rung[s][(x, xp)] * rung[s][(y, yp)]
        });
        // R_Z = Z R is odd under the flip, but Z R Z is even and R_Z² = (Z R Z) R.
        let zrz = DMatrix::from_fn(dim, dim, |i, j| {
            spin(i / (h * h)) * spin(j / (h * h)) * r[(i, j)]
        });
        // R_a R_b summed over the intermediate spin.
        let q = |s: usize, sp: usize| &rung[s] * &rung[sp];
        let qs = [[q(0, 0), q(0, 1)], [q(1, 0), q(1, 1)]];
        let w = DMatrix::from_fn(dim, dim, |i, j| {
            let (s, x, y) = split(i);
            let (_, xpp, ypp) = split(j);
            (0..2)
                .map(|sp| qs[s][sp][(x, xpp)] * qs[s][1 - sp][(y, ypp)])
                .sum()
        });

        let rb = self.basis.project(&r);
        let zz = self.basis.project(&zrz).mul(&rb);
        let unit = rb.max_abs();
        if !(unit > 0.0 && unit.is_finite()) {
            return Err(Error::DegenerateNorm(unit));
        }
        let wrap = |m: BlockMatrix, k: f64| Scaled {
            m: m.scale(k),
            ln: 0.0,
        };
        Ok((
            wrap(rb, 1.0 / unit),
            wrap(zz, 1.0 / (unit * unit)),
            wrap(self.basis.project(&w), 1.0 / (unit * unit)),
        ))
    }

    /// Ising energy per site on a ring of `n` sites.
    pub fn energy_density(&self, params: &UrbmParameters1D, n: usize, lambda: f64) -> Result<f64> {
        if n < 3 {
            return Err(Error::ChainTooShort(n));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidField(lambda));
        }
        let (r, rz2, w) = self.blocks(params)?;
        let p = power(&r, n - 2, TracePath::Squaring);
        let ln_d = ln_norm(&r.mul(&r), &p)?;
        let zz = rz2.ln_trace_product(&p);
        let x = w.ln_trace_product(&p);
        Ok(-(ratio(zz, ln_d) + lambda * ratio(x, ln_d)))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::ansatz::build_urbm_site_tensor;
    use crate::comps::{energy_density, UniformRingMps};

    #[test]
    fn agrees_with_full_transfer() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for layers in 1..=3 {
            let ev = UrbmRingEvaluator::new(layers).unwrap();
            for _ in 0..3 {
                let p = UrbmParameters1D::random(layers, 1.2, &mut rng);
                for n in [5, 80, 401] {
                    let mps = UniformRingMps::new(build_urbm_site_tensor(&p).unwrap(), n).unwrap();
                    let full = energy_density(&mps, 0.9).unwrap();
                    let reduced = ev.energy_density(&p, n, 0.9).unwrap();
                    assert!(
                        (full - reduced).abs() < 1e-10 * full.abs(),
                        "{layers} {n}: {full} {reduced}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_mismatched_layers() {
        let ev = UrbmRingEvaluator::new(1).unwrap();
        let p = UrbmParameters1D::from_vector(2, &[0.0; 5]).unwrap();
        assert!(ev.energy_density(&p, 10, 1.0).is_err());
    }
}
