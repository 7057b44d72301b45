//! Spectral kernels.
//!
//! Window counts are exact integer counts of eigenvalues in `(a, b]`,
//! obtained as `N(b) − N(a)` where `N(x) = #{λ ≤ x}` is read off the signs
//! of pivots of an `LDLᵀ` factorization of `H − x` (Sylvester's law of
//! inertia). Tridiagonal matrices use the Sturm recurrence directly.
//!
//! A pivot with `|d_i| ≤ PIVOT_TOL · ‖H‖_∞` counts as a breakdown: the shift
//! is moved upward by `k · JITTER · ‖H‖_∞` for `k = 1, 2, 3` and the count
//! retried. Moving upward keeps an eigenvalue sitting exactly on an endpoint
//! inside `(−∞, x]`, consistent with the half-open convention.

mod banded;
mod dense;
mod green;
mod sturm;

use serde::{Deserialize, Serialize};

pub use banded::{BandedLdl, LdlScalar};
pub use dense::{eigenvalues_dense, eigenvalues_dense_with_cap, DENSE_CAP};
pub use green::{
    check_perturbation_identity, green_column, green_entry, perturbation_residual, GreenColumn,
    GreenQuery, GreenSolver, GREEN_RESIDUAL_TOL,
};
pub use sturm::sturm_count_below;

use crate::error::{Error, Result};
use crate::lattice::SparseHamiltonian;

pub const PIVOT_TOL: f64 = 1e-14;
pub const JITTER: f64 = 1e-12;
pub const MAX_JITTER_RETRIES: u32 = 3;

/// Half-open energy window `(a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub a: f64,
    pub b: f64,
}

impl SpectralWindow {
    /// `a == b` is accepted and always counts zero.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("window ({a}, {b}] is not finite")));
        }
        if a > b {
            return Err(Error::ArgumentOrder { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x <= self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WindowCount {
    pub count: usize,
    /// Largest upward shift applied to either endpoint (0 when none).
    pub jitter: f64,
    pub retries: u32,
}

/// Reusable counter for one matrix; picks the Sturm path when tridiagonal.
#[derive(Debug, Clone)]
pub struct EigenCounter {
    kind: CounterKind,
    scale: f64,
}

#[derive(Debug, Clone)]
enum CounterKind {
    Tridiagonal { diag: Vec<f64>, off_sq: Vec<f64> },
    Banded(SparseHamiltonian),
}

impl EigenCounter {
    pub fn new(h: &SparseHamiltonian) -> Self {
        let norm = h.norm_inf();
        let scale = if norm > 0.0 { norm } else { 1.0 };
        let kind = match h.tridiagonal() {
            Some((diag, off)) => CounterKind::Tridiagonal {
                diag,
                off_sq: off.iter().map(|e| e * e).collect(),
            },
            None => CounterKind::Banded(h.clone()),
        };
        Self { kind, scale }
    }

    /// Forces the general `LDLᵀ` path even for tridiagonal input.
    pub fn new_banded(h: &SparseHamiltonian) -> Self {
        let norm = h.norm_inf();
        Self {
            kind: CounterKind::Banded(h.clone()),
            scale: if norm > 0.0 { norm } else { 1.0 },
        }
    }

    pub fn is_sturm(&self) -> bool {
        matches!(self.kind, CounterKind::Tridiagonal { .. })
    }

    pub fn n(&self) -> usize {
        match &self.kind {
            CounterKind::Tridiagonal { diag, .. } => diag.len(),
            CounterKind::Banded(h) => h.n(),
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn count_below_raw(&self, x: f64) -> Option<usize> {
        let tol = PIVOT_TOL * self.scale;
        match &self.kind {
            CounterKind::Tridiagonal { diag, off_sq } => sturm_count_below(diag, off_sq, x, tol),
            CounterKind::Banded(h) => BandedLdl::<f64>::factor(h, x, tol).ok().map(|f| f.negative_pivots()),
        }
    }

    /// `#{λ ≤ x}` with the jitter protocol; returns the count and the shift used.
    pub fn count_at_most(&self, x: f64) -> Result<(usize, f64, u32)> {
        if let Some(c) = self.count_below_raw(x) {
            return Ok((c, 0.0, 0));
        }
        for k in 1..=MAX_JITTER_RETRIES {
            let delta = k as f64 * JITTER * self.scale;
            if let Some(c) = self.count_below_raw(x + delta) {
                return Ok((c, delta, k));
            }
        }
        Err(Error::TieBreak {
            shift: x,
            retries: MAX_JITTER_RETRIES,
        })
    }

    pub fn count_in_window(&self, w: &SpectralWindow) -> Result<WindowCount> {
        if w.a == w.b {
            return Ok(WindowCount::default());
        }
        let (hi, jb, rb) = self.count_at_most(w.b)?;
        let (lo, ja, ra) = self.count_at_most(w.a)?;
        Ok(WindowCount {
            count: hi.saturating_sub(lo),
            jitter: ja.max(jb),
            retries: ra + rb,
        })
    }

    /// Eigenvalues in `(a, b]` by bisection on the counting function, each
    /// located to an absolute width of `tol`.
    pub fn eigenvalues_in_window(&self, w: &SpectralWindow, tol: f64) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        if w.a == w.b {
            return Ok(out);
        }
        let tol = tol.max(4.0 * f64::EPSILON * self.scale);
        let (lo, _, _) = self.count_at_most(w.a)?;
        let (hi, _, _) = self.count_at_most(w.b)?;
        let mut stack = vec![(w.a, w.b, lo, hi)];
        while let Some((a, b, ca, cb)) = stack.pop() {
            if cb <= ca {
                continue;
            }
            if b - a <= tol {
                let mid = 0.5 * (a + b);
                out.extend(std::iter::repeat(mid).take(cb - ca));
                continue;
            }
            let mid = 0.5 * (a + b);
            let (cm, _, _) = self.count_at_most(mid)?;
            let cm = cm.clamp(ca, cb);
            stack.push((a, mid, ca, cm));
            stack.push((mid, b, cm, cb));
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

/// Exact number of eigenvalues of `h` in `(a, b]`.
pub fn count_in_window(h: &SparseHamiltonian, w: &SpectralWindow) -> Result<WindowCount> {
    EigenCounter::new(h).count_in_window(w)
}

pub fn eigenvalues_in_window(h: &SparseHamiltonian, w: &SpectralWindow, tol: f64) -> Result<Vec<f64>> {
    EigenCounter::new(h).eigenvalues_in_window(w, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{assemble_hamiltonian, CubeGeometry, HamiltonianSpec, Hopping};
    use crate::measures::{sample_iid, SingleSiteDistribution};
    use crate::rng::RandomStream;

    fn random_h(d: usize, l: usize, hopping: Hopping, seed: u64) -> SparseHamiltonian {
        let g = CubeGeometry::whole(d, l).unwrap();
        let dist = SingleSiteDistribution::uniform(-2.0, 2.0).unwrap();
        let mut s = RandomStream::from_seed(seed);
        let omega = sample_iid(&dist, g.volume(), &mut s).unwrap();
        assemble_hamiltonian(&HamiltonianSpec::new(hopping, 1.0).unwrap(), &g, &omega).unwrap()
    }

    #[test]
    fn window_examples() {
        let h = SparseHamiltonian::diagonal_matrix(vec![0.1, 0.5, 0.9]);
        let w = SpectralWindow::new(0.4, 0.6).unwrap();
        assert_eq!(count_in_window(&h, &w).unwrap().count, 1);
        let h = SparseHamiltonian::diagonal_matrix(vec![0.1, 0.9]);
        let w = SpectralWindow::new(0.5, 0.5 + 1e-300).unwrap();
        assert_eq!(count_in_window(&h, &w).unwrap().count, 0);
        assert!(SpectralWindow::new(1.0, 0.0).is_err());
    }

    #[test]
    fn endpoint_ties_follow_half_open_convention() {
        // eigenvalue exactly at b is counted, exactly at a is not
        let h = SparseHamiltonian::diagonal_matrix(vec![0.0, 1.0, 1.0, 0.0]);
        let c = count_in_window(&h, &SpectralWindow::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(c.count, 2);
        assert!(c.jitter > 0.0 && c.retries >= 2);
        let c = count_in_window(&h, &SpectralWindow::new(-1.0, 0.0).unwrap()).unwrap();
        assert_eq!(c.count, 2);
    }

    #[test]
    fn inertia_matches_dense_oracle() {
        let mut s = RandomStream::from_seed(99);
        for (d, l, seed) in [(1, 100, 1), (2, 6, 2), (3, 2, 3)] {
            let h = random_h(d, l, Hopping::LaplacianOffdiag, seed);
            let eig = eigenvalues_dense(&h).unwrap();
            let counter = EigenCounter::new(&h);
            let banded = EigenCounter::new_banded(&h);
            for _ in 0..100 {
                let a = -6.0 + 12.0 * s.next_f64();
                let b = a + 3.0 * s.next_f64();
                let w = SpectralWindow::new(a, b).unwrap();
                let expected = eig.iter().filter(|&&e| w.contains(e)).count();
                assert_eq!(counter.count_in_window(&w).unwrap().count, expected);
                assert_eq!(banded.count_in_window(&w).unwrap().count, expected);
            }
        }
    }

    #[test]
    fn full_range_counts_everything() {
        for (d, l) in [(1, 30), (2, 4)] {
            let h = random_h(d, l, Hopping::LaplacianOffdiag, 5);
            let r = h.norm_inf() + 1.0;
            let c = count_in_window(&h, &SpectralWindow::new(-r, r).unwrap()).unwrap();
            assert_eq!(c.count, h.n());
        }
    }

    #[test]
    fn bisection_recovers_eigenvalues() {
        let h = random_h(1, 40, Hopping::LaplacianOffdiag, 8);
        let eig = eigenvalues_dense(&h).unwrap();
        let w = SpectralWindow::new(-0.5, 0.7).unwrap();
        let got = eigenvalues_in_window(&h, &w, 1e-12).unwrap();
        let expected: Vec<f64> = eig.into_iter().filter(|&e| w.contains(e)).collect();
        assert_eq!(got.len(), expected.len());
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-10);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn inertia_additivity(seed in 0u64..1000, a in -5.0f64..5.0, x in 0.0f64..3.0, y in 0.0f64..3.0) {
                let h = random_h(2, 3, Hopping::LaplacianOffdiag, seed);
                let (b, c) = (a + x, a + x + y);
                let n = |p: f64, q: f64| count_in_window(&h, &SpectralWindow::new(p, q).unwrap()).unwrap().count;
                prop_assert_eq!(n(a, b) + n(b, c), n(a, c));
            }

            #[test]
            fn sturm_and_inertia_agree(seed in 0u64..10_000, a in -5.0f64..5.0, x in 0.0f64..4.0) {
                let h = random_h(1, 25, Hopping::LaplacianOffdiag, seed);
                let w = SpectralWindow::new(a, a + x).unwrap();
                let sturm = EigenCounter::new(&h);
                prop_assert!(sturm.is_sturm());
                let banded = EigenCounter::new_banded(&h);
                prop_assert_eq!(sturm.count_in_window(&w).unwrap().count, banded.count_in_window(&w).unwrap().count);
            }
        }
    }
}
