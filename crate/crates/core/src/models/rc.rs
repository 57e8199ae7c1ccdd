//! Resistor-capacitor networks in node potentials. Capacitor nodes carry the
//! state, terminal nodes are driven, and every edge holds a conductor.

use crate::dynamics::{HessianPseudoGradientSystem, Potential};
use crate::error::{Error, Result};
use crate::types::{BoxDomain, Matrix, ScalarField, SignatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conductor {
    /// Current `tanh(v)`, co-content `log cosh v`.
    Tanh,
    /// Current `v`, co-content `½v²`.
    Linear,
}

impl Conductor {
    fn co_content(self, v: f64) -> f64 {
        match self {
            // log cosh v without overflow for large |v|.
            Conductor::Tanh => v.abs() + (-2.0 * v.abs()).exp().ln_1p() - std::f64::consts::LN_2,
            Conductor::Linear => 0.5 * v * v,
        }
    }

    fn current(self, v: f64) -> f64 {
        match self {
            Conductor::Tanh => v.tanh(),
            Conductor::Linear => v,
        }
    }

    fn conductance(self, v: f64) -> f64 {
        match self {
            Conductor::Tanh => 1.0 - v.tanh().powi(2),
            Conductor::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RcModel {
    /// Incidence rows for the capacitor nodes, `nc × edges`.
    pub dc: Matrix,
    /// Incidence rows for the terminal nodes, `nt × edges`.
    pub dt: Matrix,
    /// Capacitor law `ψ = Q + βQ³`.
    pub beta: f64,
    pub conductor: Conductor,
    pub state_half_width: f64,
    pub input_half_width: f64,
}

impl RcModel {
    /// Capacitor nodes `c1, c2` and terminal `t` with edges `c1–c2`,
    /// `c1–ground` and `c2–t`; tanh conductors and `β = ½`.
    pub fn ladder() -> Self {
        Self {
            dc: Matrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, -1.0, 0.0, 1.0]),
            dt: Matrix::from_row_slice(1, 3, &[0.0, 0.0, -1.0]),
            beta: 0.5,
            conductor: Conductor::Tanh,
            state_half_width: 2.0,
            input_half_width: 1.0,
        }
    }

    /// One linear capacitor tied to the terminal by one linear conductor.
    pub fn scalar_linear() -> Self {
        Self {
            dc: Matrix::from_element(1, 1, 1.0),
            dt: Matrix::from_element(1, 1, -1.0),
            beta: 0.0,
            conductor: Conductor::Linear,
            state_half_width: 2.0,
            input_half_width: 1.0,
        }
    }

    pub fn capacitors(&self) -> usize {
        self.dc.nrows()
    }

    pub fn terminals(&self) -> usize {
        self.dt.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dc.ncols() != self.dt.ncols() {
            return Err(Error::Dimension(format!(
                "capacitor incidence has {} edges, terminal incidence {}",
                self.dc.ncols(),
                self.dt.ncols()
            )));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::Input(format!("capacitor nonlinearity must be nonnegative, got {}", self.beta)));
        }
        if !(self.state_half_width > 0.0 && self.input_half_width > 0.0) {
            return Err(Error::Input("box half-widths must be positive".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain::cube(self.capacitors(), -self.state_half_width, self.state_half_width)
    }

    pub fn input_domain(&self) -> BoxDomain {
        BoxDomain::cube(self.terminals(), -self.input_half_width, self.input_half_width)
    }

    /// `H(Q) = Σ ½Qᵢ² + ¼βQᵢ⁴`.
    pub fn charge_energy(&self) -> ScalarField {
        let beta = self.beta;
        let (b1, b2) = (beta, beta);
        let n = self.capacitors();
        let qmax = charge(self.state_half_width, beta);
        ScalarField::new(BoxDomain::cube(n, -qmax, qmax), move |q| {
            q.iter().map(|q| 0.5 * q * q + 0.25 * beta * q.powi(4)).sum()
        })
        .with_gradient(move |q| q.map(|q| q + b1 * q.powi(3)))
        .with_hessian(move |q| Matrix::from_diagonal(&q.map(|q| 1.0 + 3.0 * b2 * q * q)))
    }

    /// `K = H*` in closed form: `K(ψ) = Σ ψᵢQᵢ − H(Qᵢ)` with `Q(ψ)` the
    /// inverse of the capacitor law.
    pub fn metric_generator(&self) -> ScalarField {
        let beta = self.beta;
        let (b1, b2) = (beta, beta);
        ScalarField::new(self.domain(), move |psi| {
            psi.iter()
                .map(|&p| {
                    let q = charge(p, beta);
                    p * q - 0.5 * q * q - 0.25 * beta * q.powi(4)
                })
                .sum()
        })
        .with_gradient(move |psi| psi.map(|p| charge(p, b1)))
        .with_hessian(move |psi| {
            Matrix::from_diagonal(&psi.map(|p| 1.0 / (1.0 + 3.0 * b2 * charge(p, b2).powi(2))))
        })
    }

    /// `D = [Dc; Dt]`.
    pub fn incidence(&self) -> Matrix {
        stack(&self.dc, &self.dt)
    }

    /// `W(ψc, ψt) = Σⱼ w((Dᵀψ)ⱼ)` over the joint `(state, input)` box.
    pub fn co_content(&self) -> ScalarField {
        let d = self.incidence();
        let c = self.conductor;
        let (d1, d2, d3) = (d.clone(), d.clone(), d);
        ScalarField::new(self.domain().product(&self.input_domain()), move |psi| {
            d1.tr_mul(psi).iter().map(|v| c.co_content(*v)).sum()
        })
        .with_gradient(move |psi| &d2 * d2.tr_mul(psi).map(|v| c.current(v)))
        .with_hessian(move |psi| {
            let g = Matrix::from_diagonal(&d3.tr_mul(psi).map(|v| c.conductance(v)));
            &d3 * g * d3.transpose()
        })
    }
}

fn stack(top: &Matrix, bottom: &Matrix) -> Matrix {
    let mut d = Matrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    d.rows_mut(0, top.nrows()).copy_from(top);
    d.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    d
}

/// Solves `Q + βQ³ = ψ` by Cardano's formula with two Newton steps.
pub(crate) fn charge(psi: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return psi;
    }
    // Depressed cubic Q³ + pQ + r = 0 with p = 1/β > 0: one real root.
    let p = 1.0 / beta;
    let half_r = -0.5 * psi / beta;
    let disc = (half_r * half_r + p * p * p / 27.0).sqrt();
    let mut q = (-half_r + disc).cbrt() + (-half_r - disc).cbrt();
    for _ in 0..2 {
        q -= (q + beta * q.powi(3) - psi) / (1.0 + 3.0 * beta * q * q);
    }
    q
}

/// `∇²K(ψc)ψ̇c = −∂W/∂ψc`, `y = ∂W/∂ψt` with `σ = −I`: the output is the
/// current drawn into each terminal.
pub fn rc_as_pseudo_gradient(model: &RcModel) -> Result<HessianPseudoGradientSystem> {
    model.validate()?;
    HessianPseudoGradientSystem::new(
        model.metric_generator(),
        Potential::General(model.co_content()),
        SignatureMatrix::negative_identity(model.terminals()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{certify_relaxation, dissipation_monitor, simulate_hessian_pseudo_gradient, StepControl};
    use crate::types::{Signal, Vector};
    use approx::assert_abs_diff_eq;

    #[test]
    fn capacitor_law_inverts() {
        for beta in [0.0, 0.1, 0.5, 3.0] {
            for psi in [-2.0, -0.7, -1e-9, 0.0, 1e-6, 0.3, 2.0] {
                let q = charge(psi, beta);
                assert_abs_diff_eq!(q + beta * q.powi(3), psi, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn generator_is_conjugate_of_charge_energy() {
        let model = RcModel::ladder();
        let k = model.metric_generator();
        let h = model.charge_energy();
        assert!(k.verify_derivatives(&model.domain().low_discrepancy(30)).unwrap().passed);
        for psi in model.domain().low_discrepancy(30) {
            // Fenchel–Young equality at Q = ∇K(ψ).
            let q = k.gradient(&psi);
            assert_abs_diff_eq!(k.value(&psi) + h.value(&q), psi.dot(&q), epsilon = 1e-12);
        }
    }

    #[test]
    fn co_content_derivatives() {
        let model = RcModel::ladder();
        let w = model.co_content();
        assert!(w.verify_derivatives(&w.domain().low_discrepancy(30)).unwrap().passed);
        assert_abs_diff_eq!(Conductor::Tanh.co_content(40.0), 40.0f64.cosh().ln(), epsilon = 1e-12);
    }

    #[test]
    fn ladder_is_certified_and_storage_is_charge_energy() {
        let model = RcModel::ladder();
        let sys = rc_as_pseudo_gradient(&model).unwrap();
        let cert = certify_relaxation(&sys, &[], 1e-10).unwrap();
        assert!(cert.report.relaxation, "{:?}", cert.report);
        let h = model.charge_energy();
        for psi in model.domain().low_discrepancy(20) {
            let q = sys.k.gradient(&psi);
            assert_abs_diff_eq!(cert.storage.value(&psi), h.value(&q), epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_variant_has_quadratic_storage() {
        let sys = rc_as_pseudo_gradient(&RcModel::scalar_linear()).unwrap();
        let cert = certify_relaxation(&sys, &[], 1e-12).unwrap();
        assert!(cert.report.relaxation);
        for p in [-1.5, 0.2, 1.9] {
            let x = Vector::from_element(1, p);
            assert_abs_diff_eq!(cert.storage.value(&x), 0.5 * p * p, epsilon = 1e-14);
        }
    }

    #[test]
    fn driven_ladder_is_passive_along_trajectory() {
        let model = RcModel::ladder();
        let sys = rc_as_pseudo_gradient(&model).unwrap();
        let cert = certify_relaxation(&sys, &[], 1e-10).unwrap();
        let u = Signal::new(1, |t| Vector::from_element(1, 0.8 * (2.0 * t).sin()));
        let x0 = Vector::from_column_slice(&[1.0, -0.5]);
        let traj = simulate_hessian_pseudo_gradient(&sys, &x0, &u, (0.0, 10.0), &StepControl::new(0.01)).unwrap();
        let r = dissipation_monitor(&traj, &cert.storage, 1e-4);
        assert!(r.passive_along && r.max_violation <= 1e-6 * r.supply_scale, "{r:?}");
    }

    #[test]
    fn mismatched_incidence_is_rejected() {
        let mut model = RcModel::ladder();
        model.dt = Matrix::zeros(1, 2);
        assert!(matches!(rc_as_pseudo_gradient(&model), Err(Error::Dimension(_))));
    }
}
