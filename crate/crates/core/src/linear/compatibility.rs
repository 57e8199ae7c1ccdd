//! Storage matrices compatible with the metric: `Q = GQ⁻¹G`.
//!
//! If `Q` solves the dissipation LMI for a reciprocal system, so does
//! `GQ⁻¹G`. The update `Q ← Q # (GQ⁻¹G)` (matrix geometric mean) fixes every
//! compatible `Q`. Since `G(Q # GQ⁻¹G)⁻¹G = GQ⁻¹G # Q`, a single update
//! already lands on a compatible matrix in exact arithmetic; further
//! iterations only clean up rounding.

use serde::Serialize;

use super::{check_linear_reciprocity, check_metric, check_symmetric, inf_norm, lmi_residual, LinearSystem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Matrix, SignatureMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityOptions {
    pub max_iter: usize,
    /// Stop once `‖Q − GQ⁻¹G‖∞ ≤ tol`.
    pub tol: f64,
    pub lmi_tol: f64,
    pub reciprocity_tol: f64,
}

impl Default for CompatibilityOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-10,
            lmi_tol: 1e-8,
            reciprocity_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibleStorage {
    #[serde(skip)]
    pub q: Matrix,
    pub iterations: usize,
    pub compatibility_residual: f64,
    pub lmi_min_eigenvalue: f64,
}

fn residual(q: &Matrix, g: &Matrix) -> Result<f64> {
    let q_inv = linalg::inverse(q, "storage iterate")?;
    Ok(inf_norm(&(q - g * q_inv * g)))
}

pub fn compatible_storage_fixed_point(
    sys: &LinearSystem,
    g: &Matrix,
    sigma: &SignatureMatrix,
    q0: &Matrix,
    opts: &CompatibilityOptions,
) -> Result<CompatibleStorage> {
    check_metric(g, sys.n())?;
    check_symmetric(q0, sys.n(), "Q0")?;
    let rec = check_linear_reciprocity(sys, g, sigma, opts.reciprocity_tol)?;
    if !rec.reciprocal {
        return Err(Error::NotReciprocal {
            residual: rec.residual,
            tol: opts.reciprocity_tol,
        });
    }
    let lam = linalg::min_eigenvalue(q0);
    if !(lam > 0.0) {
        return Err(Error::NotPositiveDefinite(lam));
    }
    let lmi = lmi_residual(sys, q0, opts.lmi_tol)?;
    if !lmi.passive {
        return Err(Error::LmiViolated {
            min_eig: lmi.min_eigenvalue,
        });
    }

    let mut q = crate::diff::symmetrize(q0);
    let mut change = residual(&q, g)?;
    let mut iterations = 0;
    while change > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                last_change: change,
            });
        }
        let q_inv = linalg::inverse(&q, "storage iterate")?;
        let partner = crate::diff::symmetrize(&(g * q_inv * g));
        q = linalg::geometric_mean(&q, &partner)?;
        iterations += 1;
        change = residual(&q, g)?;
    }
    let lmi = lmi_residual(sys, &q, opts.lmi_tol)?;
    if !lmi.passive {
        return Err(Error::LmiViolated {
            min_eig: lmi.min_eigenvalue,
        });
    }
    Ok(CompatibleStorage {
        q,
        iterations,
        compatibility_residual: change,
        lmi_min_eigenvalue: lmi.min_eigenvalue,
    })
}
