use crate::error::{Error, Result};
use crate::lattice::SparseHamiltonian;

pub const DENSE_CAP: usize = 4000;

/// All eigenvalues, ascending (symmetric QR via `nalgebra`).
pub fn eigenvalues_dense(h: &SparseHamiltonian) -> Result<Vec<f64>> {
    eigenvalues_dense_with_cap(h, DENSE_CAP)
}

pub fn eigenvalues_dense_with_cap(h: &SparseHamiltonian, cap: usize) -> Result<Vec<f64>> {
    if h.n() > cap {
        return Err(Error::DenseCapExceeded { n: h.n(), cap });
    }
    if h.n() == 0 {
        return Ok(Vec::new());
    }
    let eig = nalgebra::SymmetricEigen::new(h.to_dense()).eigenvalues;
    let mut v: Vec<f64> = eig.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_examples() {
        let h = SparseHamiltonian::diagonal_matrix(vec![3.0, 1.0, 2.0]);
        assert_eq!(eigenvalues_dense(&h).unwrap(), vec![1.0, 2.0, 3.0]);

        let h = SparseHamiltonian::from_parts(vec![0.0; 3], &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let e = eigenvalues_dense(&h).unwrap();
        let r2 = 2f64.sqrt();
        for (a, b) in e.iter().zip([-r2, 0.0, r2]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(
            eigenvalues_dense_with_cap(&h, 2),
            Err(Error::DenseCapExceeded { n: 3, cap: 2 })
        ));
    }

    #[test]
    fn trace_invariance() {
        let n = 150;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.5).collect();
        let upper: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let h = SparseHamiltonian::from_parts(diag.clone(), &upper).unwrap();
        let e = eigenvalues_dense(&h).unwrap();
        let tr: f64 = diag.iter().sum();
        assert!((e.iter().sum::<f64>() - tr).abs() <= 1e-9 * n as f64 * h.norm_inf());
    }
}
