//! Symmetry-adapted block algebra and rescaled matrix powers.
//!
//! Transfer matrices act on a doubled index `(o, a, b)` where `a` labels the
//! ket bond and `b` the bra bond. Exchanging `a ↔ b` commutes with every
//! transfer matrix built from a real tensor and a symmetric local operator,
//! so they split into a symmetric block of size `o·d(d+1)/2` and an
//! antisymmetric block of size `o·d(d-1)/2`. Products then cost about a
//! quarter of the dense ones. Further commuting involutions, such as a global
//! spin flip, split each block again.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

/// Orthonormal basis adapted to a group generated by commuting involutive
/// index permutations. Each character of the group gives one block.
#[derive(Debug, Clone)]
pub(crate) struct SymmetryBasis {
    full: usize,
    /// `members[block][p]` lists `(full index, coefficient)` of basis vector `p`.
    members: Vec<Vec<Vec<(usize, f64)>>>,
    /// For each full index, the `(block, p, coefficient)` it appears in.
    owners: Vec<Vec<(usize, usize, f64)>>,
}

impl SymmetryBasis {
    /// `generators` are permutations of `0..full`; each must be an involution
    /// and all must commute.
    pub(crate) fn new(full: usize, generators: &[Vec<usize>]) -> Self {
        let k = generators.len();
        let elements: Vec<(usize, Vec<usize>)> = (0..1usize << k)
            .map(|mask| {
                let perm = (0..full)
                    .map(|i| {
                        (0..k)
                            .filter(|g| mask >> g & 1 == 1)
                            .fold(i, |j, g| generators[g][j])
                    })
                    .collect();
                (mask, perm)
            })
            .collect();
        let mut members = vec![Vec::new(); 1 << k];
        let mut owners = vec![Vec::new(); full];
        let mut seen = vec![false; full];
        for i in 0..full {
            if seen[i] {
                continue;
            }
            for (_, perm) in &elements {
                seen[perm[i]] = true;
            }
            for (block, list) in members.iter_mut().enumerate() {
                let mut v: BTreeMap<usize, f64> = BTreeMap::new();
                for (mask, perm) in &elements {
                    let sign = if (mask & block).count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    *v.entry(perm[i]).or_insert(0.0) += sign;
                }
                let norm = v.values().map(|c| c * c).sum::<f64>().sqrt();
                if norm < 0.5 {
                    continue;
                }
                let p = list.len();
                let vec: Vec<(usize, f64)> = v
                    .into_iter()
                    .filter(|(_, c)| *c != 0.0)
                    .map(|(j, c)| (j, c / norm))
                    .collect();
                for &(j, c) in &vec {
                    owners[j].push((block, p, c));
                }
                list.push(vec);
            }
        }
        Self {
            full,
            members,
            owners,
        }
    }

    /// Ket/bra exchange on `outer × d × d`.
    pub(crate) fn swap(outer: usize, d: usize) -> Self {
        Self::new(outer * d * d, &[swap_permutation(outer, d)])
    }

    /// Diagonal blocks `Uᵀ T U` of a dense matrix on the full space.
    pub(crate) fn project(&self, t: &DMatrix<f64>) -> BlockMatrix {
        let blocks = self
            .members
            .iter()
            .map(|list| {
                DMatrix::from_fn(list.len(), list.len(), |p, q| {
                    let mut v = 0.0;
                    for &(i, ci) in &list[p] {
                        for &(j, cj) in &list[q] {
                            v += ci * cj * t[(i, j)];
                        }
                    }
                    v
                })
            })
            .collect();
        BlockMatrix { blocks }
    }

    /// Dense matrix `U B Uᵀ` on the full space.
    pub(crate) fn lift(&self, b: &BlockMatrix) -> DMatrix<f64> {
        DMatrix::from_fn(self.full, self.full, |i, j| {
            let mut v = 0.0;
            for &(bi, pi, ci) in &self.owners[i] {
                for &(bj, pj, cj) in &self.owners[j] {
                    if bi == bj {
                        v += ci * cj * b.blocks[bi][(pi, pj)];
                    }
                }
            }
            v
        })
    }
}

/// `(o, a, b) ↦ (o, b, a)`.
pub(crate) fn swap_permutation(outer: usize, d: usize) -> Vec<usize> {
    (0..outer * d * d)
        .map(|i| {
            let (o, a, b) = (i / (d * d), (i / d) % d, i % d);
            (o * d + b) * d + a
        })
        .collect()
}

/// An operator commuting with a symmetry group, stored as its diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BlockMatrix {
    pub(crate) blocks: Vec<DMatrix<f64>>,
}

impl BlockMatrix {
    fn zip(
        &self,
        rhs: &BlockMatrix,
        f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
    ) -> BlockMatrix {
        BlockMatrix {
            blocks: self
                .blocks
                .iter()
                .zip(&rhs.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub(crate) fn identity_like(other: &BlockMatrix) -> Self {
        Self {
            blocks: other
                .blocks
                .iter()
                .map(|b| DMatrix::identity(b.nrows(), b.nrows()))
                .collect(),
        }
    }

    pub(crate) fn mul(&self, rhs: &BlockMatrix) -> BlockMatrix {
        self.zip(rhs, |a, b| a * b)
    }

    pub(crate) fn add_scaled(&self, c: f64, rhs: &BlockMatrix) -> BlockMatrix {
        self.zip(rhs, |a, b| a + b * c)
    }

    pub(crate) fn scale(&self, c: f64) -> BlockMatrix {
        BlockMatrix {
            blocks: self.blocks.iter().map(|b| b * c).collect(),
        }
    }

    #[cfg(test)]
    pub(crate) fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// `Tr[self · rhs]` without forming the product.
    pub(crate) fn trace_product(&self, rhs: &BlockMatrix) -> f64 {
        self.blocks
            .iter()
            .zip(&rhs.blocks)
            .map(|(a, b)| a.component_mul(&b.transpose()).sum())
            .sum()
    }

    pub(crate) fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| b.amax())
            .fold(0.0, f64::max)
    }
}

/// The value `exp(ln) · m`, kept with `max|m| = 1` after every operation.
#[derive(Debug, Clone)]
pub(crate) struct Scaled {
    pub(crate) m: BlockMatrix,
    pub(crate) ln: f64,
}

impl Scaled {
    #[cfg(test)]
    pub(crate) fn new(m: BlockMatrix) -> Self {
        Self { m, ln: 0.0 }.normalized()
    }

    fn normalized(mut self) -> Self {
        let a = self.m.max_abs();
        if a > 0.0 && a.is_finite() {
            self.m = self.m.scale(1.0 / a);
            self.ln += a.ln();
        }
        self
    }

    pub(crate) fn mul(&self, rhs: &Scaled) -> Scaled {
        Scaled {
            m: self.m.mul(&rhs.m),
            ln: self.ln + rhs.ln,
        }
        .normalized()
    }

    /// `self + c · rhs`.
    pub(crate) fn add_scaled(&self, c: f64, rhs: &Scaled) -> Scaled {
        let top = self.ln.max(rhs.ln);
        let a = self.m.scale((self.ln - top).exp());
        Scaled {
            m: a.add_scaled(c * (rhs.ln - top).exp(), &rhs.m),
            ln: top,
        }
        .normalized()
    }

    #[cfg(test)]
    /// `(ln|Tr|, sign)` of the trace.
    pub(crate) fn ln_trace(&self) -> (f64, f64) {
        split_ln(self.m.trace(), self.ln)
    }

    /// `(ln|Tr[self · rhs]|, sign)`.
    pub(crate) fn ln_trace_product(&self, rhs: &Scaled) -> (f64, f64) {
        split_ln(self.m.trace_product(&rhs.m), self.ln + rhs.ln)
    }
}

fn split_ln(v: f64, ln: f64) -> (f64, f64) {
    if v == 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        (v.abs().ln() + ln, v.signum())
    }
}

/// `t^n` by binary squaring, `n ≥ 1`.
pub(crate) fn power_squaring(t: &Scaled, n: usize) -> Scaled {
    assert!(n >= 1);
    let mut result: Option<Scaled> = None;
    let mut base = t.clone();
    let mut k = n;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.mul(&base),
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = base.mul(&base);
    }
    result.expect("n >= 1")
}

/// `t^n` by `n - 1` successive rescaled multiplications.
pub(crate) fn power_sequential(t: &Scaled, n: usize) -> Scaled {
    assert!(n >= 1);
    let mut r = t.clone();
    for _ in 1..n {
        r = r.mul(t);
    }
    r
}

/// `(t^m, S_m(y))` with `S_m(y) = Σ_{k<m} t^{m-1-k} y t^k`, `m ≥ 1`.
///
/// Uses `S_{2m} = P_m S_m + S_m P_m` and `S_{m+1} = t S_m + y P_m`.
pub(crate) fn power_and_ladder(t: &Scaled, y: &Scaled, m: usize) -> (Scaled, Scaled) {
    assert!(m >= 1);
    let bits = usize::BITS - m.leading_zeros();
    let mut p = t.clone();
    let mut s = y.clone();
    for b in (0..bits - 1).rev() {
        let s2 = p.mul(&s).add_scaled(1.0, &s.mul(&p));
        p = p.mul(&p);
        s = s2;
        if (m >> b) & 1 == 1 {
            let s1 = t.mul(&s).add_scaled(1.0, &y.mul(&p));
            p = t.mul(&p);
            s = s1;
        }
    }
    (p, s)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn permutation_matrix(perm: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(perm.len(), perm.len(), |i, j| f64::from(j == perm[i]))
    }

    fn swap_symmetric(outer: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let n = outer * d * d;
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let swap = permutation_matrix(&swap_permutation(outer, d));
        &raw + &swap * &raw * &swap
    }

    #[test]
    fn project_lift_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (outer, d) in [(1, 3), (2, 2), (1, 1)] {
            let t = swap_symmetric(outer, d, &mut rng);
            let basis = SymmetryBasis::swap(outer, d);
            let back = basis.lift(&basis.project(&t));
            assert!((back - &t).amax() < 1e-13);
        }
    }

    #[test]
    fn two_generators_give_four_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (outer, d) = (2, 4);
        let n = outer * d * d;
        let swap = swap_permutation(outer, d);
        let flip: Vec<usize> = (0..n)
            .map(|i| {
                let (o, a, b) = (i / (d * d), (i / d) % d, i % d);
                ((1 - o) * d + (d - 1 - a)) * d + (d - 1 - b)
            })
            .collect();
        let (ps, pf) = (permutation_matrix(&swap), permutation_matrix(&flip));
        let sym = |m: DMatrix<f64>| {
            let m = &m + &ps * &m * &ps;
            &m + &pf * &m * &pf
        };
        let a = sym(DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)));
        let b = sym(DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)));
        let basis = SymmetryBasis::new(n, &[swap, flip]);
        let (ba, bb) = (basis.project(&a), basis.project(&b));
        assert_eq!(ba.blocks.len(), 4);
        let sizes: usize = ba.blocks.iter().map(|m| m.nrows()).sum();
        assert_eq!(sizes, n);
        assert!((basis.lift(&ba) - &a).amax() < 1e-12);
        assert!((ba.trace_product(&bb) - (&a * &b).trace()).abs() < 1e-10);
    }

    #[test]
    fn block_products_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let basis = SymmetryBasis::swap(1, 4);
        let a = swap_symmetric(1, 4, &mut rng);
        let b = swap_symmetric(1, 4, &mut rng);
        let (ba, bb) = (basis.project(&a), basis.project(&b));
        assert!((basis.lift(&ba.mul(&bb)) - &a * &b).amax() < 1e-12);
        assert!((ba.trace_product(&bb) - (&a * &b).trace()).abs() < 1e-12);
    }

    #[test]
    fn powers_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = SymmetryBasis::swap(1, 3);
        let t = Scaled::new(basis.project(&swap_symmetric(1, 3, &mut rng)));
        for n in [1, 2, 7, 64, 401] {
            let a = power_squaring(&t, n).ln_trace();
            let b = power_sequential(&t, n).ln_trace();
            assert_eq!(a.1, b.1);
            assert!((a.0 - b.0).abs() < 1e-10 * a.0.abs().max(1.0), "{n}");
        }
    }

    #[test]
    fn ladder_matches_explicit_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let basis = SymmetryBasis::swap(1, 2);
        let t = basis.project(&swap_symmetric(1, 2, &mut rng));
        let y = basis.project(&swap_symmetric(1, 2, &mut rng));
        for m in [1, 2, 3, 6, 11] {
            let (p, s) = power_and_ladder(&Scaled::new(t.clone()), &Scaled::new(y.clone()), m);
            let pow = |k: usize| (0..k).fold(BlockMatrix::identity_like(&t), |acc, _| acc.mul(&t));
            let mut expect = pow(m).scale(0.0);
            for k in 0..m {
                expect = expect.add_scaled(1.0, &pow(m - 1 - k).mul(&y).mul(&pow(k)));
            }
            let got = s.m.scale(s.ln.exp());
            assert!(got.add_scaled(-1.0, &expect).max_abs() < 1e-9 * expect.max_abs());
            let pm = p.m.scale(p.ln.exp());
            assert!(pm.add_scaled(-1.0, &pow(m)).max_abs() < 1e-9 * pow(m).max_abs());
        }
    }
}
