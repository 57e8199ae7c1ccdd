use serde::Serialize;

use super::systems::{HessianPseudoGradientSystem, Potential};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::DEFAULT_SAMPLES;
use crate::types::{ScalarField, Vector};

/// Joint `(x, u)` samples, defaulting to the low-discrepancy sequence of the
/// product box when `samples` is empty.
fn joint_samples(sys: &HessianPseudoGradientSystem, samples: &[(Vector, Vector)]) -> Vec<(Vector, Vector)> {
    if !samples.is_empty() {
        return samples.to_vec();
    }
    let (n, m) = (sys.nx(), sys.nu());
    sys.domain()
        .product(&sys.input_domain())
        .low_discrepancy(DEFAULT_SAMPLES)
        .into_iter()
        .map(|p| (p.rows(0, n).into_owned(), p.rows(n, m).into_owned()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneClassification {
    /// `V` jointly convex in `(x, u)`; the relevant class when `σ = −I`.
    pub cyclically_monotone: bool,
    /// `V` convex in `x` and concave in `u`; the relevant class when `σ = I`.
    pub monotone: bool,
    pub min_joint_eig: f64,
    pub min_xx_eig: f64,
    pub max_uu_eig: f64,
    pub points: usize,
}

/// Classifies the `z = ∇K(x)` form of the system from the curvature of `V`
/// at sampled `(x, u)`. Both classes are evaluated regardless of `σ`.
pub fn classify_monotone_ph(
    sys: &HessianPseudoGradientSystem,
    samples: &[(Vector, Vector)],
    tol: f64,
) -> Result<MonotoneClassification> {
    let pts = joint_samples(sys, samples);
    let (n, m) = (sys.nx(), sys.nu());
    let mut out = MonotoneClassification {
        cyclically_monotone: true,
        monotone: true,
        min_joint_eig: f64::INFINITY,
        min_xx_eig: f64::INFINITY,
        max_uu_eig: f64::NEG_INFINITY,
        points: pts.len(),
    };
    for (x, u) in &pts {
        let h = sys.potential.joint_hessian(x, u);
        out.min_joint_eig = out.min_joint_eig.min(linalg::min_eigenvalue(&h));
        out.min_xx_eig = out.min_xx_eig.min(linalg::min_eigenvalue(&h.view((0, 0), (n, n)).into_owned()));
        if m > 0 {
            out.max_uu_eig = out.max_uu_eig.max(linalg::max_eigenvalue(&h.view((n, n), (m, m)).into_owned()));
        }
    }
    if m == 0 {
        out.max_uu_eig = 0.0;
    }
    out.cyclically_monotone = out.min_joint_eig >= -tol;
    out.monotone = out.min_xx_eig >= -tol && out.max_uu_eig <= tol;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RelaxationBranch {
    /// `σ = I`, general potential: `xᵀV_x − uᵀV_u ≥ 0`.
    Identity,
    /// `σ = I`, `V = P(x) − xᵀgu`: reduces to `xᵀ∇P ≥ 0`.
    IdentityAffine,
    /// `σ = −I`: `xᵀV_x + uᵀV_u ≥ 0`.
    NegativeIdentity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationReport {
    pub relaxation: bool,
    pub branch: RelaxationBranch,
    /// Smallest value of the relaxation inequality's left side.
    pub min_margin: f64,
    pub worst_point: Vec<f64>,
    /// Smallest `S(x) − S(0)`; `None` when the origin is outside the domain.
    pub storage_floor_margin: Option<f64>,
    pub min_metric_eig: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct RelaxationCertificate {
    pub report: RelaxationReport,
    /// `S(x) = K*(∇K(x)) = xᵀ∇K(x) − K(x)`.
    pub storage: ScalarField,
}

/// `S(x) = xᵀ∇K(x) − K(x)` with `∇S(x) = ∇²K(x)·x`. This is `K*(∇K(x))`
/// without a Newton solve.
pub fn relaxation_storage(k: &ScalarField) -> ScalarField {
    let (a, b) = (k.clone(), k.clone());
    ScalarField::new(k.domain().clone(), move |x| x.dot(&a.gradient(x)) - a.value(x))
        .with_gradient(move |x| b.hessian(x) * x)
}

/// Certifies a relaxation system: `∇²K > 0` at the samples, the relaxation
/// inequality on sampled `(x, u)`, and the storage floor `S(x) ≥ S(0)`.
/// `σ` must be `I` or `−I`.
pub fn certify_relaxation(
    sys: &HessianPseudoGradientSystem,
    samples: &[(Vector, Vector)],
    tol: f64,
) -> Result<RelaxationCertificate> {
    let branch = if sys.sigma.is_identity() {
        match sys.potential {
            Potential::Affine { .. } => RelaxationBranch::IdentityAffine,
            Potential::General(_) => RelaxationBranch::Identity,
        }
    } else if sys.sigma.is_negative_identity() {
        RelaxationBranch::NegativeIdentity
    } else {
        return Err(Error::Unsupported("relaxation certification needs sigma = I or -I".into()));
    };
    let pts = joint_samples(sys, samples);
    let mut min_metric_eig = f64::INFINITY;
    for (x, _) in &pts {
        let e = linalg::min_eigenvalue(&sys.k.hessian(x));
        if !(e > 0.0) {
            return Err(Error::NotPositiveDefinite(e));
        }
        min_metric_eig = min_metric_eig.min(e);
    }
    let mut min_margin = f64::INFINITY;
    let mut worst_point = Vec::new();
    for (x, u) in &pts {
        let margin = match (&sys.potential, branch) {
            (Potential::Affine { p, .. }, RelaxationBranch::IdentityAffine) => x.dot(&p.gradient(x)),
            (pot, RelaxationBranch::Identity) => x.dot(&pot.grad_x(x, u)) - u.dot(&pot.grad_u(x, u)),
            (pot, _) => x.dot(&pot.grad_x(x, u)) + u.dot(&pot.grad_u(x, u)),
        };
        if margin < min_margin {
            min_margin = margin;
            worst_point = x.iter().chain(u.iter()).copied().collect();
        }
    }
    let storage = relaxation_storage(&sys.k);
    let origin = Vector::zeros(sys.nx());
    let storage_floor_margin = sys.domain().contains(&origin).then(|| {
        let s0 = storage.value(&origin);
        pts.iter().map(|(x, _)| storage.value(x) - s0).fold(f64::INFINITY, f64::min)
    });
    let relaxation = min_margin >= -tol && storage_floor_margin.is_none_or(|m| m >= -1e-10);
    Ok(RelaxationCertificate {
        report: RelaxationReport {
            relaxation,
            branch,
            min_margin,
            worst_point,
            storage_floor_margin,
            min_metric_eig,
            points: pts.len(),
        },
        storage,
    })
}
