use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::{check_symmetric, LinearSystem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Matrix, Vector};

const KERNEL_TOL: f64 = 1e-10;
const INVARIANCE_TOL: f64 = 1e-8;

/// The dissipation LMI `Π(Q) ⪰ 0` evaluated at a candidate storage matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiReport {
    pub pi: Matrix,
    pub min_eigenvalue: f64,
    pub passive: bool,
    pub kernel_basis: Vec<Vector>,
}

impl Serialize for LmiReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LmiReport", 3)?;
        st.serialize_field("min_eigenvalue", &self.min_eigenvalue)?;
        st.serialize_field("passive", &self.passive)?;
        st.serialize_field("kernel_dimension", &self.kernel_basis.len())?;
        st.end()
    }
}

/// `Π = [[−QA−AᵀQ, −QB+Cᵀ], [−BᵀQ+C, D+Dᵀ]]`.
fn pi_matrix(sys: &LinearSystem, q: &Matrix) -> Matrix {
    let (n, m) = (sys.n(), sys.m());
    let qa = q * &sys.a;
    let off = -(q * &sys.b) + sys.c.transpose();
    let mut pi = Matrix::zeros(n + m, n + m);
    pi.view_mut((0, 0), (n, n)).copy_from(&(-(&qa + qa.transpose())));
    pi.view_mut((0, n), (n, m)).copy_from(&off);
    pi.view_mut((n, 0), (m, n)).copy_from(&off.transpose());
    pi.view_mut((n, n), (m, m)).copy_from(&(&sys.d + sys.d.transpose()));
    pi
}

/// Passive iff `min eig Π ≥ −tol` and `Q ⪰ 0` (to the same tolerance).
pub fn lmi_residual(sys: &LinearSystem, q: &Matrix, tol: f64) -> Result<LmiReport> {
    check_symmetric(q, sys.n(), "Q")?;
    let pi = pi_matrix(sys, q);
    let min_eigenvalue = linalg::min_eigenvalue(&pi);
    let q_psd = linalg::min_eigenvalue(q) >= -tol;
    let ker = linalg::kernel_basis(q, KERNEL_TOL);
    Ok(LmiReport {
        pi,
        min_eigenvalue,
        passive: q_psd && min_eigenvalue >= -tol,
        kernel_basis: ker.column_iter().map(|c| c.into_owned()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelInvariance {
    pub a_invariant: bool,
    pub in_ker_c: bool,
    pub kernel_dimension: usize,
}

/// For a passive storage `Q`, `ker Q` must be `A`-invariant and inside `ker C`.
pub fn kernel_invariance_check(sys: &LinearSystem, q: &Matrix, tol: f64) -> Result<KernelInvariance> {
    let report = lmi_residual(sys, q, tol)?;
    if !report.passive {
        return Err(Error::LmiViolated {
            min_eig: report.min_eigenvalue.min(linalg::min_eigenvalue(q)),
        });
    }
    let n = sys.n();
    let basis = linalg::kernel_basis(q, KERNEL_TOL);
    if basis.ncols() == 0 {
        return Ok(KernelInvariance {
            a_invariant: true,
            in_ker_c: true,
            kernel_dimension: 0,
        });
    }
    let projector = Matrix::identity(n, n) - &basis * basis.transpose();
    let leak = (projector * &sys.a * &basis).amax();
    let output = (&sys.c * &basis).amax();
    Ok(KernelInvariance {
        a_invariant: leak <= INVARIANCE_TOL,
        in_ker_c: output <= INVARIANCE_TOL,
        kernel_dimension: basis.ncols(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneImage {
    pub m1: Matrix,
    pub m2: Matrix,
    pub min_eigenvalue: f64,
    pub monotone: bool,
}

/// `M1 = [[−A, −B], [C, D]]`, `M2 = diag(Q, I)`; monotone iff the symmetric
/// part of `M2ᵀM1` is PSD to `−tol`.
pub fn build_monotone_image(sys: &LinearSystem, q: &Matrix, tol: f64) -> Result<MonotoneImage> {
    check_symmetric(q, sys.n(), "Q")?;
    let (n, m) = (sys.n(), sys.m());
    let mut m1 = Matrix::zeros(n + m, n + m);
    m1.view_mut((0, 0), (n, n)).copy_from(&(-&sys.a));
    m1.view_mut((0, n), (n, m)).copy_from(&(-&sys.b));
    m1.view_mut((n, 0), (m, n)).copy_from(&sys.c);
    m1.view_mut((n, n), (m, m)).copy_from(&sys.d);
    let m2 = linalg::block_diag(q, &Matrix::identity(m, m));
    let prod = m2.transpose() * &m1;
    let min_eigenvalue = linalg::min_eigenvalue(&(&prod + prod.transpose()));
    Ok(MonotoneImage {
        m1,
        m2,
        min_eigenvalue,
        monotone: min_eigenvalue >= -tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_relaxation() -> LinearSystem {
        LinearSystem::scalar(-1.0, 1.0, 1.0, 0.0)
    }

    #[test]
    fn scalar_lmi() {
        let r = lmi_residual(&scalar_relaxation(), &Matrix::from_element(1, 1, 1.0), 1e-12).unwrap();
        assert_eq!(r.pi, Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        assert_abs_diff_eq!(r.min_eigenvalue, 0.0, epsilon = 1e-15);
        assert!(r.passive);
        assert!(r.kernel_basis.is_empty());

        let r = lmi_residual(&scalar_relaxation(), &Matrix::from_element(1, 1, -1.0), 1e-12).unwrap();
        assert!(!r.passive);
    }

    #[test]
    fn negative_feedthrough_is_never_passive() {
        let sys = LinearSystem::scalar(-1.0, 1.0, 1.0, -0.5);
        for q in [0.1, 1.0, 10.0] {
            let r = lmi_residual(&sys, &Matrix::from_element(1, 1, q), 1e-12).unwrap();
            assert!(!r.passive);
            assert!(r.min_eigenvalue <= -1.0 + 1e-12);
        }
    }

    #[test]
    fn asymmetric_q_is_an_error() {
        let sys = LinearSystem::new(
            -Matrix::identity(2, 2),
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 2),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let q = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(lmi_residual(&sys, &q, 1e-9), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn report_serializes_summary_fields() {
        let r = lmi_residual(&scalar_relaxation(), &Matrix::from_element(1, 1, 1.0), 1e-12).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["passive"], true);
        assert_eq!(json["kernel_dimension"], 0);
        assert!(json.get("min_eigenvalue").is_some());
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_invariance_check(&scalar_relaxation(), &Matrix::from_element(1, 1, 1.0), 1e-9).unwrap();
        assert_eq!(k.kernel_dimension, 0);
        assert!(k.a_invariant && k.in_ker_c);

        let sys = LinearSystem::new(
            Matrix::from_diagonal(&Vector::from_column_slice(&[-1.0, -2.0])),
            Matrix::from_row_slice(2, 1, &[1.0, 0.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let q = Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, 0.0]));
        let k = kernel_invariance_check(&sys, &q, 1e-9).unwrap();
        assert_eq!(k.kernel_dimension, 1);
        assert!(k.a_invariant && k.in_ker_c);

        let err = kernel_invariance_check(&sys, &(-q), 1e-9).unwrap_err();
        assert!(matches!(err, Error::LmiViolated { .. }));
    }

    #[test]
    fn observable_passive_system_has_trivial_kernel() {
        // Observable pair; Q = I solves the LMI because A + Aᵀ ⪯ 0 and B = Cᵀ.
        let sys = LinearSystem::new(
            Matrix::from_row_slice(2, 2, &[-1.0, 1.0, -1.0, 0.0]),
            Matrix::from_row_slice(2, 1, &[1.0, 0.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let k = kernel_invariance_check(&sys, &Matrix::identity(2, 2), 1e-12).unwrap();
        assert_eq!(k.kernel_dimension, 0);
    }

    #[test]
    fn monotone_examples() {
        let q = Matrix::from_element(1, 1, 1.0);
        let img = build_monotone_image(&scalar_relaxation(), &q, 1e-12).unwrap();
        assert!(img.monotone);
        let lmi = lmi_residual(&scalar_relaxation(), &q, 1e-12).unwrap();
        assert_abs_diff_eq!(img.min_eigenvalue, lmi.min_eigenvalue, epsilon = 1e-14);

        let unstable = LinearSystem::scalar(1.0, 0.0, 0.0, 0.0);
        assert!(!build_monotone_image(&unstable, &q, 1e-12).unwrap().monotone);
    }
}
