use serde::Serialize;

use super::{check_metric, check_sigma, LinearSystem};
use crate::diff::symmetry_residual;
use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Matrix, SignatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearReciprocity {
    pub reciprocal: bool,
    pub residual: f64,
}

/// Residual of the symmetry of `[[GA, GB], [σC, σD]]`.
pub fn check_linear_reciprocity(
    sys: &LinearSystem,
    g: &Matrix,
    sigma: &SignatureMatrix,
    tol: f64,
) -> Result<LinearReciprocity> {
    check_sigma(sys, sigma)?;
    check_metric(g, sys.n())?;
    let (n, m) = (sys.n(), sys.m());
    let s = sigma.matrix();
    let mut block = Matrix::zeros(n + m, n + m);
    block.view_mut((0, 0), (n, n)).copy_from(&(g * &sys.a));
    block.view_mut((0, n), (n, m)).copy_from(&(g * &sys.b));
    block.view_mut((n, 0), (m, n)).copy_from(&(&s * &sys.c));
    block.view_mut((n, n), (m, m)).copy_from(&(&s * &sys.d));
    let residual = symmetry_residual(&block)?;
    Ok(LinearReciprocity {
        reciprocal: residual <= tol,
        residual,
    })
}

/// `Gẋ = −Px + Cᵀσu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPseudoGradientForm {
    pub g: Matrix,
    pub p: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    pub sigma: SignatureMatrix,
}

impl LinearPseudoGradientForm {
    /// Rebuilds `(A, B, C, D)` with `A = −G⁻¹P`, `B = G⁻¹Cᵀσ`.
    pub fn to_system(&self) -> Result<LinearSystem> {
        let g_inv = linalg::inverse(&self.g, "metric G")?;
        let a = -(&g_inv * &self.p);
        let b = &g_inv * self.c.transpose() * self.sigma.matrix();
        LinearSystem::new(a, b, self.c.clone(), self.d.clone())
    }
}

pub fn to_pseudo_gradient(
    sys: &LinearSystem,
    g: &Matrix,
    sigma: &SignatureMatrix,
    tol: f64,
) -> Result<LinearPseudoGradientForm> {
    let check = check_linear_reciprocity(sys, g, sigma, tol)?;
    if !check.reciprocal {
        return Err(Error::NotReciprocal {
            residual: check.residual,
            tol,
        });
    }
    let p = -(g * &sys.a);
    Ok(LinearPseudoGradientForm {
        g: g.clone(),
        p: 0.5 * (&p + p.transpose()),
        c: sys.c.clone(),
        d: sys.d.clone(),
        sigma: sigma.clone(),
    })
}

/// `(Aᵀ, Cᵀσ, Bᵀ, Dᵀσ)`.
pub fn dual_system(sys: &LinearSystem, sigma: &SignatureMatrix) -> Result<LinearSystem> {
    check_sigma(sys, sigma)?;
    let s = sigma.matrix();
    LinearSystem::new(
        sys.a.transpose(),
        sys.c.transpose() * &s,
        sys.b.transpose(),
        sys.d.transpose() * &s,
    )
}

/// The state map `G` with `G·(AᵏB) = (Aᵀ)ᵏCᵀσ` for all `k`, i.e. the
/// isomorphism from the system's reachable states to its dual's. Requires
/// the controllability matrix to have full row rank.
pub fn solve_dual_isomorphism(sys: &LinearSystem, sigma: &SignatureMatrix) -> Result<Matrix> {
    let dual = dual_system(sys, sigma)?;
    let ctrb = controllability(sys);
    let ctrb_dual = controllability(&dual);
    let gram = &ctrb * ctrb.transpose();
    let gram_inv = linalg::inverse(&gram, "controllability Gramian (system not controllable)")?;
    let g = ctrb_dual * ctrb.transpose() * gram_inv;
    Ok(g)
}

fn controllability(sys: &LinearSystem) -> Matrix {
    let (n, m) = (sys.n(), sys.m());
    let mut out = Matrix::zeros(n, n * m);
    let mut block = sys.b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = &sys.a * block;
    }
    out
}

/// `W(t) = C·exp(At)·B`.
pub fn impulse_response(sys: &LinearSystem, t: f64) -> Matrix {
    &sys.c * linalg::expm(&(&sys.a * t)) * &sys.b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpulseSymmetry {
    pub symmetric: bool,
    pub max_residual: f64,
}

/// Checks `σW(t) = Wᵀ(t)σ` at each time, and `σD = Dᵀσ`.
pub fn impulse_response_symmetry(
    sys: &LinearSystem,
    sigma: &SignatureMatrix,
    times: &[f64],
    tol: f64,
) -> Result<ImpulseSymmetry> {
    check_sigma(sys, sigma)?;
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::Input(format!("impulse response time {t} must be finite and >= 0")));
    }
    let s = sigma.matrix();
    let mut worst = (&s * &sys.d - sys.d.transpose() * &s).amax();
    for &t in times {
        let w = impulse_response(sys, t);
        worst = worst.max((&s * &w - w.transpose() * &s).amax());
    }
    Ok(ImpulseSymmetry {
        symmetric: worst <= tol,
        max_residual: worst,
    })
}
