use serde::Serialize;

use super::relaxation::classify_monotone_ph;
use super::systems::HessianPseudoGradientSystem;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::types::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationReport {
    /// Largest `S(x_{k+1}) − S(x_k) − ∫uᵀy dt` over the grid intervals.
    pub max_violation: f64,
    pub passive_along: bool,
    /// `max(1, ∫|uᵀy| dt)`, the scale violations are judged against.
    pub supply_scale: f64,
    pub steps: usize,
}

/// Checks `S(x_{k+1}) − S(x_k) ≤ ∫_{t_k}^{t_{k+1}} uᵀy dt + tol·Δt` on every
/// grid interval, with the supply integral by the trapezoid rule.
pub fn dissipation_monitor(traj: &Trajectory, s: &ScalarField, tol: f64) -> DissipationReport {
    let values: Vec<f64> = traj.states.iter().map(|x| s.value(x)).collect();
    let mut max_violation = f64::NEG_INFINITY;
    let mut passive_along = true;
    let mut total_supply = 0.0;
    for k in 0..traj.len().saturating_sub(1) {
        let dt = traj.times[k + 1] - traj.times[k];
        let supply = 0.5 * dt * (traj.supply[k] + traj.supply[k + 1]);
        total_supply += 0.5 * dt * (traj.supply[k].abs() + traj.supply[k + 1].abs());
        let violation = values[k + 1] - values[k] - supply;
        max_violation = max_violation.max(violation);
        if !(violation <= tol * dt) {
            passive_along = false;
        }
    }
    DissipationReport {
        max_violation: if traj.len() < 2 { 0.0 } else { max_violation },
        passive_along,
        supply_scale: total_supply.max(1.0),
        steps: traj.len().saturating_sub(1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementalReport {
    /// Largest `⟨x₁−x₂, ż₁−ż₂⟩ − ⟨y₁−y₂, u₁−u₂⟩` over sample times.
    pub max_violation: f64,
    pub passed: bool,
    pub samples: usize,
}

/// Incremental passivity of the `z = ∇K(x)` form: along each pair of
/// trajectories, `⟨∇K*(z₁)−∇K*(z₂), ż₁−ż₂⟩ ≤ ⟨y₁−y₂, u₁−u₂⟩ + tol`.
/// Here `∇K*(z) = x` and `ż = −∂V/∂x(x, u)` is taken from the right-hand
/// side, not by differencing. Both trajectories of a pair must share the
/// time grid.
pub fn incremental_passivity_check(
    sys: &HessianPseudoGradientSystem,
    pairs: &[(Trajectory, Trajectory)],
    tol: f64,
) -> Result<IncrementalReport> {
    let class = classify_monotone_ph(sys, &[], 1e-8)?;
    let guaranteed = if sys.sigma.is_negative_identity() {
        class.cyclically_monotone
    } else {
        class.monotone
    };
    if !guaranteed {
        return Err(Error::CheckFailed(
            "monotone classification fails; incremental passivity is not guaranteed".into(),
        ));
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut samples = 0;
    for (a, b) in pairs {
        if a.times != b.times {
            return Err(Error::Input("trajectory pair has different time grids".into()));
        }
        for k in 0..a.len() {
            let (x1, x2) = (&a.states[k], &b.states[k]);
            let (u1, u2) = (&a.inputs[k], &b.inputs[k]);
            let zdot1 = -sys.potential.grad_x(x1, u1);
            let zdot2 = -sys.potential.grad_x(x2, u2);
            let lhs = (x1 - x2).dot(&(zdot1 - zdot2));
            let rhs = (&a.outputs[k] - &b.outputs[k]).dot(&(u1 - u2));
            max_violation = max_violation.max(lhs - rhs);
            samples += 1;
        }
    }
    if samples == 0 {
        max_violation = 0.0;
    }
    Ok(IncrementalReport {
        max_violation,
        passed: max_violation <= tol,
        samples,
    })
}
