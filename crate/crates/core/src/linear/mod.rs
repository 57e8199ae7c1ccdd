//! Linear systems `ẋ = Ax + Bu`, `y = Cx + Du`: reciprocity, metric recovery,
//! passivity, compatible storage and the split port-Hamiltonian form.

mod compatibility;
mod hankel;
mod passivity;
mod reciprocity;
mod split;

pub use compatibility::{compatible_storage_fixed_point, CompatibilityOptions, CompatibleStorage};
pub use hankel::{
    default_past_inputs, recover_metric_hankel, recover_metric_hankel_with, HankelOptions,
    HankelRecovery,
};
pub use passivity::{
    build_monotone_image, kernel_invariance_check, lmi_residual, KernelInvariance, LmiReport,
    MonotoneImage,
};
pub use reciprocity::{
    check_linear_reciprocity, dual_system, impulse_response, impulse_response_symmetry,
    solve_dual_isomorphism, to_pseudo_gradient, ImpulseSymmetry, LinearPseudoGradientForm,
    LinearReciprocity,
};
pub use split::{split_port_hamiltonian_form, SplitForm};

use crate::error::{Error, Result};
use crate::types::{AffineSystem, BoxDomain, JacobianKind, Matrix, NonlinearSystem, SignatureMatrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl LinearSystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        let shapes = [
            ("A", a.shape(), (n, n)),
            ("B", b.shape(), (n, m)),
            ("C", c.shape(), (m, n)),
            ("D", d.shape(), (m, m)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("{name} has non-finite entries")));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Convenience constructor for the all-scalar case.
    pub fn scalar(a: f64, b: f64, c: f64, d: f64) -> Self {
        let s = |v| Matrix::from_element(1, 1, v);
        Self::new(s(a), s(b), s(c), s(d)).expect("scalar blocks are consistent")
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input (and output) dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn vector_field(&self, x: &Vector, u: &Vector) -> Vector {
        &self.a * x + &self.b * u
    }

    pub fn output(&self, x: &Vector, u: &Vector) -> Vector {
        &self.c * x + &self.d * u
    }

    /// The same system as a [`NonlinearSystem`] with exact Jacobians.
    pub fn to_nonlinear(&self, domain: BoxDomain, input_domain: BoxDomain) -> NonlinearSystem {
        let (s1, s2) = (self.clone(), self.clone());
        let (a, b, c, d) = (self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone());
        NonlinearSystem::new(
            domain,
            input_domain,
            move |x, u| s1.vector_field(x, u),
            move |x, u| s2.output(x, u),
        )
        .with_jacobian(JacobianKind::Fx, move |_, _| a.clone())
        .with_jacobian(JacobianKind::Fu, move |_, _| b.clone())
        .with_jacobian(JacobianKind::Hx, move |_, _| c.clone())
        .with_jacobian(JacobianKind::Hu, move |_, _| d.clone())
    }
    /// The same system in input-affine form, with `D` as the feedthrough.
    pub fn to_affine(&self, domain: BoxDomain, input_domain: BoxDomain) -> AffineSystem {
        let (a, b, c, d) = (self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone());
        AffineSystem::new(domain, input_domain, move |x| &a * x, move |_| b.clone(), move |x| &c * x)
            .with_feedthrough(move |_| d.clone())
    }
}

pub(crate) fn check_sigma(sys: &LinearSystem, sigma: &SignatureMatrix) -> Result<()> {
    if sigma.dim() != sys.m() {
        return Err(Error::Dimension(format!(
            "signature has size {}, system has {} inputs",
            sigma.dim(),
            sys.m()
        )));
    }
    Ok(())
}

/// Validates a symmetric invertible metric of the right size.
pub(crate) fn check_metric(g: &Matrix, n: usize) -> Result<Matrix> {
    if g.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "metric is {}x{}, expected {n}x{n}",
            g.nrows(),
            g.ncols()
        )));
    }
    let asym = crate::diff::symmetry_residual(g)?;
    if asym > 1e-10 * (1.0 + g.amax()) {
        return Err(Error::NotSymmetric { residual: asym });
    }
    g.clone().try_inverse().ok_or_else(|| Error::Singular {
        context: "metric G".into(),
    })
}

pub(crate) fn check_symmetric(q: &Matrix, n: usize, name: &str) -> Result<()> {
    if q.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    let asym = crate::diff::symmetry_residual(q)?;
    if asym > 1e-10 * (1.0 + q.amax()) {
        return Err(Error::NotSymmetric { residual: asym });
    }
    Ok(())
}

/// Induced infinity norm (largest absolute row sum).
pub(crate) fn inf_norm(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_blocks() {
        let err = LinearSystem::new(
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 3),
            Matrix::zeros(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        let err = LinearSystem::new(
            Matrix::from_element(1, 1, f64::NAN),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }
}
