use super::blocks::{power_sequential, power_squaring, BlockMatrix, Scaled, SymmetryBasis};
use super::{check_chi, dense_transfer, Axis, LocalOperator, UniformRingMps, DEGENERATE_NORM};
use crate::ansatz::SiteTensor;
use crate::error::{Error, Result};

/// How powers of the transfer matrix are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TracePath {
    /// Binary squaring, `O(log N)` products.
    #[default]
    Squaring,
    /// `N` successive products, each followed by rescaling.
    Sequential,
}

/// An expectation value together with `ln Tr[T^N]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingExpectation {
    pub value: f64,
    pub log_norm: f64,
}

/// Block forms of `T_I`, `T_z`, `T_x`, all divided by a common factor
/// `exp(ln_unit)` so that `max|T_I| = 1`.
pub(crate) struct RingBlocks {
    pub(crate) basis: SymmetryBasis,
    pub(crate) t: Scaled,
    pub(crate) z: Scaled,
    pub(crate) x: Scaled,
    pub(crate) ln_unit: f64,
}

impl RingBlocks {
    pub(crate) fn new(tensor: &SiteTensor) -> Result<Self> {
        let chi = tensor.chi();
        check_chi(chi)?;
        let basis = SymmetryBasis::swap(1, chi);
        let t = basis.project(&dense_transfer(tensor, &LocalOperator::identity()));
        let unit = t.max_abs();
        if !(unit > 0.0 && unit.is_finite()) {
            return Err(Error::DegenerateNorm(unit));
        }
        let block = |op: &LocalOperator| Scaled {
            m: basis.project(&dense_transfer(tensor, op)).scale(1.0 / unit),
            ln: 0.0,
        };
        Ok(Self {
            t: Scaled {
                m: t.scale(1.0 / unit),
                ln: 0.0,
            },
            z: block(&LocalOperator::sigma_z()),
            x: block(&LocalOperator::sigma_x()),
            basis,
            ln_unit: unit.ln(),
        })
    }

    pub(crate) fn power(&self, n: usize, path: TracePath) -> Scaled {
        power(&self.t, n, path)
    }
}

pub(crate) fn power(t: &Scaled, n: usize, path: TracePath) -> Scaled {
    match (n, path) {
        (0, _) => Scaled {
            m: BlockMatrix::identity_like(&t.m),
            ln: 0.0,
        },
        (_, TracePath::Squaring) => power_squaring(t, n),
        (_, TracePath::Sequential) => power_sequential(t, n),
    }
}

/// Checks the normalization `Tr[a·b]` and returns its logarithm.
pub(crate) fn ln_norm(a: &Scaled, b: &Scaled) -> Result<f64> {
    let mantissa = a.m.trace_product(&b.m);
    if !(mantissa > DEGENERATE_NORM) {
        return Err(Error::DegenerateNorm(mantissa));
    }
    Ok(mantissa.ln() + a.ln + b.ln)
}

pub(crate) fn ratio((ln, sign): (f64, f64), ln_den: f64) -> f64 {
    sign * (ln - ln_den).exp()
}

fn check_field(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidField(lambda));
    }
    Ok(())
}

/// Ising energy per site and the log norm of the ring state.
pub fn energy_expectation(
    mps: &UniformRingMps,
    lambda: f64,
    path: TracePath,
) -> Result<RingExpectation> {
    check_field(lambda)?;
    let n = mps.n_sites();
    let b = RingBlocks::new(mps.tensor())?;
    let p = b.power(n - 2, path);
    let t2 = b.t.mul(&b.t);
    let ln_d = ln_norm(&t2, &p)?;
    let zz = b.z.mul(&b.z).ln_trace_product(&p);
    let xt = b.x.mul(&b.t).ln_trace_product(&p);
    let value = -(ratio(zz, ln_d) + lambda * ratio(xt, ln_d));
    Ok(RingExpectation {
        value,
        log_norm: ln_d + n as f64 * b.ln_unit,
    })
}

/// `⟨H⟩ / N` for `H = -Σ σᶻσᶻ - λ Σ σˣ` on the ring.
pub fn energy_density(mps: &UniformRingMps, lambda: f64) -> Result<f64> {
    Ok(energy_expectation(mps, lambda, TracePath::Squaring)?.value)
}

/// `Tr[T_a T^{N-1}] / Tr[T^N]`.
pub fn magnetization(mps: &UniformRingMps, axis: Axis) -> Result<f64> {
    let b = RingBlocks::new(mps.tensor())?;
    let p = b.power(mps.n_sites() - 1, TracePath::Squaring);
    let ln_d = ln_norm(&b.t, &p)?;
    let op = match axis {
        Axis::X => &b.x,
        Axis::Z => &b.z,
    };
    Ok(ratio(op.ln_trace_product(&p), ln_d))
}

/// Connected `⟨σᶻ_1 σᶻ_{1+r}⟩_c` for `r = 1..=r_max`.
pub fn connected_zz_correlators(mps: &UniformRingMps, r_max: usize) -> Result<Vec<f64>> {
    let n = mps.n_sites();
    if r_max == 0 || r_max >= n {
        return Err(Error::InvalidArgument(format!(
            "correlator distance must lie in 1..{n}, got {r_max}"
        )));
    }
    let b = RingBlocks::new(mps.tensor())?;
    let full = b.power(n - 1, TracePath::Squaring);
    let ln_d = ln_norm(&b.t, &full)?;
    let m = ratio(b.z.ln_trace_product(&full), ln_d);
    let mut left = b.z.clone();
    let mut out = Vec::with_capacity(r_max);
    for r in 1..=r_max {
        // left = Z T^{r-1}
        let right = b.z.mul(&b.power(n - r - 1, TracePath::Squaring));
        out.push(ratio(left.ln_trace_product(&right), ln_d) - m * m);
        left = left.mul(&b.t);
    }
    Ok(out)
}

/// Connected `⟨σᶻ_1 σᶻ_{1+r}⟩_c` for a single `1 ≤ r ≤ N-1`.
pub fn connected_zz_correlator(mps: &UniformRingMps, r: usize) -> Result<f64> {
    let n = mps.n_sites();
    if r == 0 || r >= n {
        return Err(Error::InvalidArgument(format!(
            "correlator distance must lie in 1..{n}, got {r}"
        )));
    }
    let b = RingBlocks::new(mps.tensor())?;
    let full = b.power(n - 1, TracePath::Squaring);
    let ln_d = ln_norm(&b.t, &full)?;
    let m = ratio(b.z.ln_trace_product(&full), ln_d);
    let left = b.z.mul(&b.power(r - 1, TracePath::Squaring));
    let right = b.z.mul(&b.power(n - r - 1, TracePath::Squaring));
    Ok(ratio(left.ln_trace_product(&right), ln_d) - m * m)
}
