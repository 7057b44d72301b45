use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::SparseHamiltonian;

/// Scalars the band factorization runs over.
pub trait LdlScalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl LdlScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl LdlScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Unpivoted `LDLᵀ` factorization of the banded matrix `H − shift`
/// (plain transpose, so complex symmetric shifts work too).
#[derive(Debug, Clone)]
pub struct BandedLdl<T> {
    n: usize,
    bw: usize,
    /// `lower[i * bw + (i − j − 1)] = L_ij` for `i − bw ≤ j < i`.
    lower: Vec<T>,
    pivots: Vec<T>,
}

impl<T: LdlScalar> BandedLdl<T> {
    /// Fails with the offending row when a pivot has magnitude `≤ pivot_tol`.
    pub fn factor(h: &SparseHamiltonian, shift: T, pivot_tol: f64) -> std::result::Result<Self, usize> {
        let n = h.n();
        let bw = h.bandwidth();
        let mut lower = vec![T::zero(); n * bw];
        let mut pivots = vec![T::zero(); n];
        // scaled[k] = L_ik * D_k for the current row i
        let mut scaled = vec![T::zero(); bw];
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let row = &mut lower[i * bw..(i + 1) * bw];
            for (j, v) in h.row(i) {
                if j < i {
                    row[i - j - 1] = T::from_real(v);
                }
            }
            for j in start..i {
                let mut s = lower[i * bw + (i - j - 1)];
                let kstart = start.max(j.saturating_sub(bw));
                for k in kstart..j {
                    s = s - scaled[i - k - 1] * lower[j * bw + (j - k - 1)];
                }
                let lij = s / pivots[j];
                lower[i * bw + (i - j - 1)] = lij;
                scaled[i - j - 1] = lij * pivots[j];
            }
            let mut dii = T::from_real(h.diagonal()[i]) - shift;
            for k in start..i {
                dii = dii - scaled[i - k - 1] * lower[i * bw + (i - k - 1)];
            }
            if dii.magnitude() <= pivot_tol {
                return Err(i);
            }
            pivots[i] = dii;
        }
        Ok(Self { n, bw, lower, pivots })
    }

    pub fn pivots(&self) -> &[T] {
        &self.pivots
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        if rhs.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                got: rhs.len(),
            });
        }
        let (n, bw) = (self.n, self.bw);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in i.saturating_sub(bw)..i {
                s = s - self.lower[i * bw + (i - j - 1)] * y[j];
            }
            y[i] = s;
        }
        for (yi, &d) in y.iter_mut().zip(&self.pivots) {
            *yi = *yi / d;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..(i + 1 + bw).min(n) {
                s = s - self.lower[k * bw + (k - i - 1)] * y[k];
            }
            y[i] = s;
        }
        Ok(y)
    }
}

impl BandedLdl<f64> {
    pub fn negative_pivots(&self) -> usize {
        self.pivots.iter().filter(|&&d| d < 0.0).count()
    }
}
