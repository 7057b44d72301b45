/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with diagonal `diag` and squared off-diagonals `off_sq`.
///
/// Returns `None` when some pivot `q_i` satisfies `|q_i| ≤ tol`.
pub fn sturm_count_below(diag: &[f64], off_sq: &[f64], x: f64, tol: f64) -> Option<usize> {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - x } else { d - x - off_sq[i - 1] / q };
        if q.abs() <= tol {
            return None;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    Some(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_of_three() {
        // eigenvalues -√2, 0, √2
        let diag = [0.0; 3];
        let off = [1.0; 2];
        assert_eq!(sturm_count_below(&diag, &off, -1.5, 1e-14), Some(0));
        assert_eq!(sturm_count_below(&diag, &off, -1.2, 1e-14), Some(1));
        assert_eq!(sturm_count_below(&diag, &off, 0.5, 1e-14), Some(2));
        assert_eq!(sturm_count_below(&diag, &off, 2.0, 1e-14), Some(3));
        assert_eq!(sturm_count_below(&diag, &off, 0.0, 1e-14), None);
        assert_eq!(sturm_count_below(&diag, &off, -1.0, 1e-14), None);
    }
}
