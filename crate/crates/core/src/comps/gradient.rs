//! Gradient of the Ising energy density with respect to the tensor entries.
//!
//! With `P = T^{N-2}` and `H₂ = T_z T_z + (λ/2)(T_x T + T T_x)` the energy is
//! `ε = -Tr[H₂ P] / Tr[T² P]`. Writing `dε = Σ_O Tr[C_O dT_O]`,
//!
//! ```text
//! C_T = -(S_{N-2}(H₂) + (λ/2)(P T_x + T_x P) + εN T^{N-1}) / D
//! C_x = -λ T^{N-1} / D
//! C_z = -(T_z P + P T_z) / D
//! ```
//!
//! where `S_m(Y) = Σ_k T^{m-1-k} Y T^k` and `D = Tr[T^N]`. The chain rule
//! through `T_O = Σ O_{σ'σ} M^{σ'} ⊗ M^σ` then gives
//! `∂ε/∂M^τ_{ac} = 2 Σ_σ O_{τσ} Σ_{bd} C_O[(c,d),(a,b)] M^σ_{bd}`.

use nalgebra::DMatrix;

use super::blocks::{power_and_ladder, BlockMatrix, Scaled};
use super::observables::{ln_norm, ratio, RingBlocks};
use super::UniformRingMps;
use crate::error::{Error, Result};

fn plain(s: &Scaled, ln_den: f64) -> BlockMatrix {
    s.m.scale((s.ln - ln_den).exp())
}

/// `W[a,c] = Σ_{bd} C[(c,d),(a,b)] M[b,d]`.
fn contract(c: &DMatrix<f64>, m: &DMatrix<f64>, out: &mut DMatrix<f64>, weight: f64) {
    let chi = m.nrows();
    let mt = m.transpose();
    for a in 0..chi {
        for cc in 0..chi {
            let v = c
                .view((cc * chi, a * chi), (chi, chi))
                .component_mul(&mt)
                .sum();
            out[(a, cc)] += weight * v;
        }
    }
}

/// Energy density and its gradient over the `2χ²` entries in
/// [`SiteTensor::to_entries`](crate::ansatz::SiteTensor::to_entries) order.
pub fn energy_density_gradient(mps: &UniformRingMps, lambda: f64) -> Result<(f64, Vec<f64>)> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidField(lambda));
    }
    let n = mps.n_sites();
    let b = RingBlocks::new(mps.tensor())?;
    let zz = b.z.mul(&b.z);
    let xt = b.x.mul(&b.t);
    let tx = b.t.mul(&b.x);
    let h2 = zz.add_scaled(0.5 * lambda, &xt.add_scaled(1.0, &tx));
    let (p, s) = power_and_ladder(&b.t, &h2, n - 2);
    let p1 = b.t.mul(&p);
    let ln_d = ln_norm(&b.t, &p1)?;
    let eps = -ratio(h2.ln_trace_product(&p), ln_d);

    let px = p.mul(&b.x).add_scaled(1.0, &b.x.mul(&p));
    let c_t = plain(&s, ln_d)
        .add_scaled(0.5 * lambda, &plain(&px, ln_d))
        .add_scaled(eps * n as f64, &plain(&p1, ln_d))
        .scale(-1.0);
    let c_x = plain(&p1, ln_d).scale(-lambda);
    let c_z = plain(&b.z.mul(&p).add_scaled(1.0, &p.mul(&b.z)), ln_d).scale(-1.0);

    let lift = |m: &BlockMatrix| b.basis.lift(m);
    let (c_t, c_x, c_z) = (lift(&c_t), lift(&c_x), lift(&c_z));
    let tensor = mps.tensor();
    let chi = tensor.chi();
    let slices = [tensor.dense_slice(0), tensor.dense_slice(1)];
    // T was divided by `unit`, i.e. M by `√unit`; both factors come back here.
    let unit = b.ln_unit.exp();
    let mut grad = Vec::with_capacity(2 * chi * chi);
    for tau in 0..2 {
        let z = if tau == 0 { 1.0 } else { -1.0 };
        let mut g = DMatrix::zeros(chi, chi);
        contract(&c_t, &slices[tau], &mut g, 1.0);
        contract(&c_z, &slices[tau], &mut g, z);
        contract(&c_x, &slices[1 - tau], &mut g, 1.0);
        for a in 0..chi {
            for c in 0..chi {
                grad.push(2.0 * g[(a, c)] / unit);
            }
        }
    }
    Ok((eps, grad))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::comps::energy_density;

    fn check(chi: usize, n: usize, lambda: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e: Vec<f64> = (0..2 * chi * chi)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let mps = UniformRingMps::from_entries(chi, &e, n).unwrap();
        let (eps, grad) = energy_density_gradient(&mps, lambda).unwrap();
        assert!((eps - energy_density(&mps, lambda).unwrap()).abs() < 1e-12);
        let h = 1e-6;
        for k in 0..e.len() {
            let mut up = e.clone();
            let mut dn = e.clone();
            up[k] += h;
            dn[k] -= h;
            let f = |v: &[f64]| {
                energy_density(&UniformRingMps::from_entries(chi, v, n).unwrap(), lambda).unwrap()
            };
            let fd = (f(&up) - f(&dn)) / (2.0 * h);
            assert!(
                (fd - grad[k]).abs() < 1e-6 * fd.abs().max(1.0),
                "{k}: {fd} vs {}",
                grad[k]
            );
        }
    }

    #[test]
    fn matches_finite_differences() {
        check(2, 5, 1.0, 1);
        check(3, 9, 0.7, 2);
        check(4, 120, 1.0, 3);
    }

    #[test]
    fn orthogonal_to_tensor() {
        // ε is scale invariant, so the gradient is orthogonal to the tensor.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mps = UniformRingMps::from_entries(4, &e, 40).unwrap();
        let (_, g) = energy_density_gradient(&mps, 1.0).unwrap();
        let dot: f64 = g.iter().zip(&e).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-10);
    }
}
