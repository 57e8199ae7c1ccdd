//! Fixed-grid integrators for `M(t,y)·ẏ = f(t,y)`.
//!
//! Implicit midpoint is the default: it is symmetric, conserves quadratic
//! invariants exactly and handles the mass matrix natively. RK4 (on
//! `ẏ = M⁻¹f`) serves as a reference.

use crate::diff;
use crate::error::{Error, Result};
use crate::types::{BoxDomain, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ImplicitMidpoint,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub step: f64,
    pub method: Method,
    /// When set, each grid step is split in halves until the step-doubling
    /// error estimate is below this value.
    pub error_tol: Option<f64>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl StepControl {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            method: Method::ImplicitMidpoint,
            error_tol: None,
            newton_tol: 1e-14,
            newton_max_iter: 50,
        }
    }

    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4,
            ..Self::new(step)
        }
    }

    pub fn with_error_tol(mut self, tol: f64) -> Self {
        self.error_tol = Some(tol);
        self
    }
}

const MAX_SPLIT_DEPTH: u32 = 20;

/// Mass-matrix ODE. Without a mass the identity is used.
pub struct Ode<'a> {
    pub mass: Option<&'a dyn Fn(f64, &Vector) -> Matrix>,
    pub rhs: &'a dyn Fn(f64, &Vector) -> Vector,
    /// States must stay inside this box.
    pub domain: Option<&'a BoxDomain>,
}

impl Ode<'_> {
    fn velocity(&self, t: f64, y: &Vector) -> Result<Vector> {
        let f = (self.rhs)(t, y);
        match self.mass {
            None => Ok(f),
            Some(m) => {
                let mm = m(t, y);
                mm.lu().solve(&f).ok_or_else(|| Error::Singular {
                    context: format!("mass matrix at t = {t}"),
                })
            }
        }
    }

    fn midpoint_residual(&self, t: f64, h: f64, y0: &Vector, y1: &Vector) -> Vector {
        let ym = 0.5 * (y0 + y1);
        let tm = t + 0.5 * h;
        let dy = y1 - y0;
        let lhs = match self.mass {
            None => dy,
            Some(m) => m(tm, &ym) * dy,
        };
        lhs - h * (self.rhs)(tm, &ym)
    }

    fn midpoint_step(&self, t: f64, h: f64, y0: &Vector, ctl: &StepControl) -> Result<Vector> {
        let mut y = y0 + h * self.velocity(t, y0)?;
        let mut jac: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = None;
        let mut last = f64::INFINITY;
        for it in 0..ctl.newton_max_iter {
            let r = self.midpoint_residual(t, h, y0, &y);
            // Simplified Newton: refresh the Jacobian only when progress stalls.
            if jac.is_none() || it % 8 == 7 {
                let j = diff::jacobian_unchecked(&|yy: &Vector| self.midpoint_residual(t, h, y0, yy), &y);
                jac = Some(j.lu());
            }
            let delta = jac
                .as_ref()
                .expect("Jacobian set above")
                .solve(&r)
                .ok_or_else(|| Error::Newton(format!("singular Newton matrix at t = {t}")))?;
            y -= &delta;
            let change = delta.amax();
            if !change.is_finite() {
                return Err(Error::Newton(format!("non-finite Newton update at t = {t}")));
            }
            if change <= ctl.newton_tol * (1.0 + y.amax()) || (change == last && change < 1e-10) {
                return Ok(y);
            }
            last = change;
        }
        Err(Error::Newton(format!(
            "implicit midpoint did not converge at t = {t} (last update {last:e})"
        )))
    }

    fn rk4_step(&self, t: f64, h: f64, y0: &Vector) -> Result<Vector> {
        let k1 = self.velocity(t, y0)?;
        let k2 = self.velocity(t + 0.5 * h, &(y0 + 0.5 * h * &k1))?;
        let k3 = self.velocity(t + 0.5 * h, &(y0 + 0.5 * h * &k2))?;
        let k4 = self.velocity(t + h, &(y0 + h * &k3))?;
        Ok(y0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    }

    fn single(&self, t: f64, h: f64, y0: &Vector, ctl: &StepControl) -> Result<Vector> {
        let y = match ctl.method {
            Method::ImplicitMidpoint => self.midpoint_step(t, h, y0, ctl)?,
            Method::Rk4 => self.rk4_step(t, h, y0)?,
        };
        if let Some(d) = self.domain {
            if !d.contains(&y) {
                return Err(Error::LeftDomain { t: t + h });
            }
        }
        Ok(y)
    }

    fn controlled(&self, t: f64, h: f64, y0: &Vector, ctl: &StepControl, depth: u32) -> Result<Vector> {
        let Some(tol) = ctl.error_tol else {
            return self.single(t, h, y0, ctl);
        };
        let full = self.single(t, h, y0, ctl)?;
        let mid = self.single(t, 0.5 * h, y0, ctl)?;
        let half = self.single(t + 0.5 * h, 0.5 * h, &mid, ctl)?;
        // Both methods here have even order ≥ 2; (half − full)/3 bounds the
        // error of `half` for second order and overestimates it for RK4.
        let err = (&half - &full).amax() / 3.0;
        if err <= tol || depth >= MAX_SPLIT_DEPTH {
            return Ok(half);
        }
        let mid = self.controlled(t, 0.5 * h, y0, ctl, depth + 1)?;
        self.controlled(t + 0.5 * h, 0.5 * h, &mid, ctl, depth + 1)
    }

    /// Integrates from `t0` to `t1` on a uniform grid of spacing at most
    /// `ctl.step` and returns the grid and states at grid points.
    pub fn solve(&self, y0: &Vector, t0: f64, t1: f64, ctl: &StepControl) -> Result<(Vec<f64>, Vec<Vector>)> {
        if !(ctl.step > 0.0) || !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::Input(format!(
                "need step > 0 and t1 ≥ t0, got step {}, span [{t0}, {t1}]",
                ctl.step
            )));
        }
        if let Some(d) = self.domain {
            if !d.contains(y0) {
                return Err(Error::OutsideDomain {
                    point: y0.iter().copied().collect(),
                });
            }
        }
        let steps = ((t1 - t0) / ctl.step - 1e-9).ceil().max(0.0) as usize;
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity(steps + 1);
        times.push(t0);
        states.push(y0.clone());
        for k in 0..steps {
            let ta = t0 + (t1 - t0) * k as f64 / steps as f64;
            let tb = if k + 1 == steps {
                t1
            } else {
                t0 + (t1 - t0) * (k + 1) as f64 / steps as f64
            };
            let y = self.controlled(ta, tb - ta, states.last().expect("non-empty"), ctl, 0)?;
            times.push(tb);
            states.push(y);
        }
        Ok((times, states))
    }
}
