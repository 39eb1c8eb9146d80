use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Index of a spin value in `[σ = +1, σ = -1]` order.
#[inline]
pub fn spin_index(s: i8) -> usize {
    if s > 0 {
        0
    } else {
        1
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Slices {
    Dense([DMatrix<f64>; 2]),
    Diagonal([DVector<f64>; 2]),
}

/// A rank-3 local tensor `M^σ_{αβ}` with physical dimension 2.
///
/// Slices are stored in `[σ = +1, σ = -1]` order. Diagonal tensors (such as
/// the RBM `Σ` matrices, whose bond dimension is `2^M`) keep only their
/// diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    chi: usize,
    slices: Slices,
}

impl SiteTensor {
    pub fn new(up: DMatrix<f64>, down: DMatrix<f64>) -> Result<Self> {
        let chi = up.nrows();
        for m in [&up, &down] {
            if m.nrows() != chi || m.ncols() != chi {
                return Err(Error::DimensionMismatch {
                    expected: chi,
                    found: if m.nrows() != chi {
                        m.nrows()
                    } else {
                        m.ncols()
                    },
                });
            }
        }
        if chi == 0 {
            return Err(Error::InvalidArgument(
                "bond dimension must be positive".into(),
            ));
        }
        if up.iter().chain(down.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("site tensor"));
        }
        Ok(Self {
            chi,
            slices: Slices::Dense([up, down]),
        })
    }

    pub fn diagonal(up: DVector<f64>, down: DVector<f64>) -> Result<Self> {
        let chi = up.len();
        if down.len() != chi {
            return Err(Error::DimensionMismatch {
                expected: chi,
                found: down.len(),
            });
        }
        if chi == 0 {
            return Err(Error::InvalidArgument(
                "bond dimension must be positive".into(),
            ));
        }
        if up.iter().chain(down.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("site tensor"));
        }
        Ok(Self {
            chi,
            slices: Slices::Diagonal([up, down]),
        })
    }

    /// Builds a dense tensor from `2χ²` entries laid out as `[σ][α][β]`,
    /// row-major within each slice.
    pub fn from_entries(chi: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != 2 * chi * chi {
            return Err(Error::DimensionMismatch {
                expected: 2 * chi * chi,
                found: entries.len(),
            });
        }
        let slice = |s: usize| {
            DMatrix::from_row_slice(chi, chi, &entries[s * chi * chi..(s + 1) * chi * chi])
        };
        Self::new(slice(0), slice(1))
    }

    /// Inverse of [`SiteTensor::from_entries`].
    pub fn to_entries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.chi * self.chi);
        for s in 0..2 {
            let m = self.dense_slice(s);
            for a in 0..self.chi {
                for b in 0..self.chi {
                    out.push(m[(a, b)]);
                }
            }
        }
        out
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.slices, Slices::Diagonal(_))
    }

    /// Dense `χ×χ` slice for spin index `s` (0 for `σ = +1`).
    pub fn dense_slice(&self, s: usize) -> Cow<'_, DMatrix<f64>> {
        match &self.slices {
            Slices::Dense(m) => Cow::Borrowed(&m[s]),
            Slices::Diagonal(d) => Cow::Owned(DMatrix::from_diagonal(&d[s])),
        }
    }

    /// Slice for spin value `σ = ±1`.
    pub fn slice(&self, sigma: i8) -> Cow<'_, DMatrix<f64>> {
        self.dense_slice(spin_index(sigma))
    }

    /// Diagonal of the slice for spin index `s`, if the tensor is diagonal.
    pub fn diagonal_slice(&self, s: usize) -> Option<&DVector<f64>> {
        match &self.slices {
            Slices::Diagonal(d) => Some(&d[s]),
            Slices::Dense(_) => None,
        }
    }

    /// Converts to dense storage.
    pub fn to_dense(&self) -> Self {
        Self {
            chi: self.chi,
            slices: Slices::Dense([
                self.dense_slice(0).into_owned(),
                self.dense_slice(1).into_owned(),
            ]),
        }
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let slices = match &self.slices {
            Slices::Dense([a, b]) => Slices::Dense([a * c, b * c]),
            Slices::Diagonal([a, b]) => Slices::Diagonal([a * c, b * c]),
        };
        Self {
            chi: self.chi,
            slices,
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        match &self.slices {
            Slices::Dense([a, b]) => a.amax().max(b.amax()),
            Slices::Diagonal([a, b]) => a.amax().max(b.amax()),
        }
    }
}
