//! Deterministic problem instances shared by the benchmarks.

use recipkit::linear::LinearSystem;
use recipkit::{Matrix, SignatureMatrix};

/// Stable reciprocal system `A = −G⁻¹P`, `B = G⁻¹Cᵀ` with tridiagonal
/// `G` and `P`, both positive definite, and one input.
pub fn relaxation_chain(n: usize) -> (LinearSystem, Matrix, SignatureMatrix) {
    let tridiag = |diag: f64, off: f64| {
        Matrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => diag,
            1 => off,
            _ => 0.0,
        })
    };
    let g = tridiag(2.0, 0.5);
    let p = tridiag(3.0, -1.0);
    let c = Matrix::from_fn(1, n, |_, j| 1.0 / (j + 1) as f64);
    let gi = g.clone().try_inverse().expect("diagonally dominant");
    let sys = LinearSystem::new(-(&gi * p), &gi * c.transpose(), c, Matrix::zeros(1, 1)).expect("consistent blocks");
    (sys, g, SignatureMatrix::identity(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use recipkit::linalg::spectral_abscissa;
    use recipkit::linear::check_linear_reciprocity;

    #[test]
    fn chain_is_stable_and_reciprocal() {
        for n in [2, 5, 8] {
            let (sys, g, sigma) = relaxation_chain(n);
            assert!(spectral_abscissa(&sys.a) < 0.0);
            assert!(check_linear_reciprocity(&sys, &g, &sigma, 1e-10).unwrap().reciprocal);
        }
    }
}
