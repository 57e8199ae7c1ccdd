//! Dense linear algebra helpers: matrix exponential, symmetric spectral
//! functions, the SPD geometric mean and kernel bases.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::types::{Matrix, Vector};

const PADE7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const THETA7: f64 = 0.950_417_899_616_293_2;

fn norm1(a: &Matrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` by scaling and squaring with a degree-7 Padé approximant.
pub fn expm(a: &Matrix) -> Matrix {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > THETA7 {
        (norm / THETA7).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a / 2f64.powi(squarings);
    let id = Matrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = PADE7;
    let u = &a * (&a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let v = &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .expect("Padé denominator is invertible after scaling");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Eigendecomposition of the symmetric part of `m`.
pub fn sym_eigen(m: &Matrix) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(0.5 * (m + m.transpose()))
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym_eigen(m).eigenvalues.min()
}

pub fn max_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym_eigen(m).eigenvalues.max()
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_function(m: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let eig = sym_eigen(m);
    let d = Matrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn require_pd(m: &Matrix) -> Result<()> {
    let lam = min_eigenvalue(m);
    if !(lam > 0.0) {
        return Err(Error::NotPositiveDefinite(lam));
    }
    Ok(())
}

pub fn sqrtm_spd(m: &Matrix) -> Result<Matrix> {
    require_pd(m)?;
    Ok(sym_function(m, f64::sqrt))
}

pub fn inv_sqrtm_spd(m: &Matrix) -> Result<Matrix> {
    require_pd(m)?;
    Ok(sym_function(m, |v| 1.0 / v.sqrt()))
}

/// `A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}` for SPD `A`, `B`.
pub fn geometric_mean(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let ah = sqrtm_spd(a)?;
    let aih = inv_sqrtm_spd(a)?;
    let inner = &aih * b * &aih;
    let mid = sqrtm_spd(&(0.5 * (&inner + inner.transpose())))?;
    let out = &ah * mid * &ah;
    Ok(0.5 * (&out + out.transpose()))
}

/// Orthonormal basis (as columns) of the kernel of `m`: right singular
/// vectors whose singular value is below `tol`.
pub fn kernel_basis(m: &Matrix, tol: f64) -> Matrix {
    let n = m.ncols();
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    // Pad to at least n rows so the thin SVD returns a full V.
    let padded = if m.nrows() < n {
        let mut p = Matrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Largest real part among the eigenvalues.
pub fn spectral_abscissa(a: &Matrix) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn inverse(m: &Matrix, context: &str) -> Result<Matrix> {
    m.clone().try_inverse().ok_or_else(|| Error::Singular {
        context: context.to_string(),
    })
}

pub fn solve(m: &Matrix, rhs: &Vector, context: &str) -> Result<Vector> {
    m.clone().lu().solve(rhs).ok_or_else(|| Error::Singular {
        context: context.to_string(),
    })
}

/// Flips the sign of each column so its largest-magnitude entry is positive.
pub fn normalize_column_signs(m: &mut Matrix) {
    for j in 0..m.ncols() {
        let mut best = 0.0;
        for i in 0..m.nrows() {
            if m[(i, j)].abs() > f64::abs(best) + 1e-12 {
                best = m[(i, j)];
            }
        }
        if best < 0.0 {
            m.column_mut(j).neg_mut();
        }
    }
}

pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let (n1, n2) = (a.nrows(), b.nrows());
    let (m1, m2) = (a.ncols(), b.ncols());
    let mut out = Matrix::zeros(n1 + n2, m1 + m2);
    out.view_mut((0, 0), (n1, m1)).copy_from(a);
    out.view_mut((n1, m1), (n2, m2)).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expm_matches_nalgebra() {
        let a = Matrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.5, 0.3, -4.0, 1.0, 2.0, 0.0, -0.2]);
        for scale in [0.01, 1.0, 7.5] {
            let m = &a * scale;
            let ours = expm(&m);
            let reference = m.clone().exp();
            assert!((&ours - &reference).amax() <= 1e-12 * reference.amax().max(1.0));
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = expm(&a);
        assert_abs_diff_eq!(e[(0, 0)], 1f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(e[(0, 1)], 1f64.sin(), epsilon = 1e-14);
    }

    #[test]
    fn geometric_mean_scalar_and_inverse_pair() {
        let a = Matrix::from_element(1, 1, 4.0);
        let b = Matrix::from_element(1, 1, 9.0);
        assert_abs_diff_eq!(geometric_mean(&a, &b).unwrap()[(0, 0)], 6.0, epsilon = 1e-14);
        // A # A^{-1} = I
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let gm = geometric_mean(&a, &a.clone().try_inverse().unwrap()).unwrap();
        assert!((gm - Matrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn geometric_mean_solves_riccati() {
        // X = A # B is the SPD solution of X A^{-1} X = B.
        let a = Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let b = Matrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 0.5]);
        let x = geometric_mean(&a, &b).unwrap();
        let lhs = &x * a.clone().try_inverse().unwrap() * &x;
        assert!((lhs - b).amax() < 1e-12);
    }

    #[test]
    fn kernel_of_diag() {
        let k = kernel_basis(&Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, 0.0, 2.0])), 1e-10);
        assert_eq!(k.ncols(), 1);
        assert_abs_diff_eq!(k[(1, 0)].abs(), 1.0, epsilon = 1e-14);
        let wide = Matrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        assert_eq!(kernel_basis(&wide, 1e-10).ncols(), 2);
    }

    #[test]
    fn spectral_abscissa_of_oscillator() {
        let a = Matrix::from_row_slice(2, 2, &[-0.5, 1.0, -1.0, -0.5]);
        assert_abs_diff_eq!(spectral_abscissa(&a), -0.5, epsilon = 1e-12);
    }
}
