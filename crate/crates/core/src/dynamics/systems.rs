use std::fmt;
use std::sync::Arc;

use super::integrator::{Ode, StepControl};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{
    AffineSystem, BoxDomain, Matrix, MetricField, NonlinearSystem, ScalarField, SignatureMatrix,
    Signal, StateMap, StateMatrixMap, Vector,
};

/// The potential `V(x, u)` of a pseudo-gradient system.
#[derive(Debug, Clone)]
pub enum Potential {
    /// A field on the joint `(x, u)` box.
    General(ScalarField),
    /// `V = P(x) − xᵀg·u`, for which the output is `y = gᵀx`.
    Affine { p: ScalarField, g: Matrix, input_domain: BoxDomain },
}

impl Potential {
    pub fn affine(p: ScalarField, g: Matrix, input_domain: BoxDomain) -> Result<Self> {
        if g.nrows() != p.dim() || g.ncols() != input_domain.dim() {
            return Err(Error::Dimension(format!(
                "g is {}x{}, expected {}x{}",
                g.nrows(),
                g.ncols(),
                p.dim(),
                input_domain.dim()
            )));
        }
        Ok(Potential::Affine { p, g, input_domain })
    }

    fn split(&self, z: &Vector, nx: usize) -> (Vector, Vector) {
        (z.rows(0, nx).into_owned(), z.rows(nx, z.len() - nx).into_owned())
    }

    fn join(x: &Vector, u: &Vector) -> Vector {
        Vector::from_iterator(x.len() + u.len(), x.iter().chain(u.iter()).copied())
    }

    pub fn value(&self, x: &Vector, u: &Vector) -> f64 {
        match self {
            Potential::General(v) => v.value(&Self::join(x, u)),
            Potential::Affine { p, g, .. } => p.value(x) - x.dot(&(g * u)),
        }
    }

    pub fn grad_x(&self, x: &Vector, u: &Vector) -> Vector {
        match self {
            Potential::General(v) => v.gradient(&Self::join(x, u)).rows(0, x.len()).into_owned(),
            Potential::Affine { p, g, .. } => p.gradient(x) - g * u,
        }
    }

    pub fn grad_u(&self, x: &Vector, u: &Vector) -> Vector {
        match self {
            Potential::General(v) => v.gradient(&Self::join(x, u)).rows(x.len(), u.len()).into_owned(),
            Potential::Affine { g, .. } => -(g.transpose() * x),
        }
    }

    /// Hessian in the joint `(x, u)` variables.
    pub fn joint_hessian(&self, x: &Vector, u: &Vector) -> Matrix {
        match self {
            Potential::General(v) => v.hessian(&Self::join(x, u)),
            Potential::Affine { p, g, .. } => {
                let (n, m) = (x.len(), u.len());
                let mut h = Matrix::zeros(n + m, n + m);
                h.view_mut((0, 0), (n, n)).copy_from(&p.hessian(x));
                h.view_mut((0, n), (n, m)).copy_from(&(-g));
                h.view_mut((n, 0), (m, n)).copy_from(&(-g.transpose()));
                h
            }
        }
    }

    /// `V` as a single field on the joint box.
    pub fn joint_field(&self, state_domain: &BoxDomain) -> ScalarField {
        match self {
            Potential::General(v) => v.clone(),
            Potential::Affine { input_domain, .. } => {
                let nx = state_domain.dim();
                let (a, b) = (self.clone(), self.clone());
                ScalarField::new(state_domain.product(input_domain), move |z| {
                    let (x, u) = a.split(z, nx);
                    a.value(&x, &u)
                })
                .with_gradient(move |z| {
                    let (x, u) = b.split(z, nx);
                    Self::join(&b.grad_x(&x, &u), &b.grad_u(&x, &u))
                })
            }
        }
    }

    fn input_domain(&self, nx: usize) -> BoxDomain {
        match self {
            Potential::General(v) => {
                let idx: Vec<usize> = (nx..v.dim()).collect();
                v.domain().select(&idx)
            }
            Potential::Affine { input_domain, .. } => input_domain.clone(),
        }
    }
}

/// `G(x)ẋ = −∂V/∂x(x,u)`, `σy = −∂V/∂u(x,u)`.
#[derive(Debug, Clone)]
pub struct PseudoGradientSystem {
    pub metric: MetricField,
    pub potential: Potential,
    pub sigma: SignatureMatrix,
}

impl PseudoGradientSystem {
    pub fn new(metric: MetricField, potential: Potential, sigma: SignatureMatrix) -> Result<Self> {
        let n = metric.dim();
        let m = sigma.dim();
        if let Potential::General(v) = &potential {
            if v.dim() != n + m {
                return Err(Error::Dimension(format!(
                    "potential has {} variables, expected {n} states + {m} inputs",
                    v.dim()
                )));
            }
        }
        if let Potential::Affine { g, p, .. } = &potential {
            if p.dim() != n || g.ncols() != m {
                return Err(Error::Dimension(format!(
                    "affine potential has {} states and {} inputs, expected {n} and {m}",
                    p.dim(),
                    g.ncols()
                )));
            }
            if !sigma.is_identity() {
                return Err(Error::Input("the (P, g) potential form requires sigma = I".into()));
            }
        }
        Ok(Self { metric, potential, sigma })
    }

    pub fn nx(&self) -> usize {
        self.metric.dim()
    }

    pub fn nu(&self) -> usize {
        self.sigma.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        self.metric.domain()
    }

    pub fn input_domain(&self) -> BoxDomain {
        self.potential.input_domain(self.nx())
    }

    pub fn vector_field(&self, x: &Vector, u: &Vector) -> Result<Vector> {
        linalg::solve(&self.metric.eval_checked(x)?, &(-self.potential.grad_x(x, u)), "metric G")
    }

    pub fn output(&self, x: &Vector, u: &Vector) -> Vector {
        -self.sigma.apply(&self.potential.grad_u(x, u))
    }

    /// The explicit form `ẋ = −G⁻¹∂V/∂x`. Points with singular `G` map to NaN.
    pub fn to_nonlinear(&self) -> NonlinearSystem {
        let (a, b) = (self.clone(), self.clone());
        NonlinearSystem::new(
            self.domain().clone(),
            self.input_domain(),
            move |x, u| {
                a.vector_field(x, u)
                    .unwrap_or_else(|_| Vector::from_element(x.len(), f64::NAN))
            },
            move |x, u| b.output(x, u),
        )
    }

    /// For the `(P, g)` form: `f = −G⁻¹∇P`, `g(x) = G⁻¹g`, `h = gᵀx`.
    pub fn to_affine(&self) -> Result<AffineSystem> {
        let Potential::Affine { p, g, input_domain } = &self.potential else {
            return Err(Error::Unsupported("affine form needs a (P, g) potential".into()));
        };
        let (m1, m2) = (self.metric.clone(), self.metric.clone());
        let (p1, g1, g2) = (p.clone(), g.clone(), g.clone());
        let n = self.nx();
        let nan_v = move || Vector::from_element(n, f64::NAN);
        let nan_m = move |c: usize| Matrix::from_element(n, c, f64::NAN);
        Ok(AffineSystem::new(
            self.domain().clone(),
            input_domain.clone(),
            move |x| {
                linalg::solve(&m1.eval(x), &(-p1.gradient(x)), "metric G").unwrap_or_else(|_| nan_v())
            },
            move |x| {
                m2.eval(x)
                    .lu()
                    .solve(&g1)
                    .unwrap_or_else(|| nan_m(g1.ncols()))
            },
            move |x| g2.transpose() * x,
        ))
    }
}

/// A pseudo-gradient system whose metric is the Hessian `∇²K`.
#[derive(Debug, Clone)]
pub struct HessianPseudoGradientSystem {
    pub k: ScalarField,
    pub potential: Potential,
    pub sigma: SignatureMatrix,
}

impl HessianPseudoGradientSystem {
    pub fn new(k: ScalarField, potential: Potential, sigma: SignatureMatrix) -> Result<Self> {
        PseudoGradientSystem::new(MetricField::from_hessian(&k), potential.clone(), sigma.clone())?;
        Ok(Self { k, potential, sigma })
    }

    pub fn nx(&self) -> usize {
        self.k.dim()
    }

    pub fn nu(&self) -> usize {
        self.sigma.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        self.k.domain()
    }

    pub fn metric(&self) -> MetricField {
        MetricField::from_hessian(&self.k)
    }

    pub fn as_pseudo_gradient(&self) -> PseudoGradientSystem {
        PseudoGradientSystem {
            metric: self.metric(),
            potential: self.potential.clone(),
            sigma: self.sigma.clone(),
        }
    }

    pub fn input_domain(&self) -> BoxDomain {
        self.potential.input_domain(self.nx())
    }

    pub fn vector_field(&self, x: &Vector, u: &Vector) -> Result<Vector> {
        self.as_pseudo_gradient().vector_field(x, u)
    }

    pub fn output(&self, x: &Vector, u: &Vector) -> Vector {
        -self.sigma.apply(&self.potential.grad_u(x, u))
    }

    pub fn to_nonlinear(&self) -> NonlinearSystem {
        self.as_pseudo_gradient().to_nonlinear()
    }

    pub fn to_affine(&self) -> Result<AffineSystem> {
        self.as_pseudo_gradient().to_affine()
    }
}

/// `ż = J(z)∇H(z) − R(∇H(z)) + g(z)u`, `y = g(z)ᵀ∇H(z)`.
#[derive(Clone)]
pub struct PortHamiltonianSystem {
    pub j: StateMatrixMap,
    /// Dissipation as a function of the co-energy `x = ∇H(z)`.
    pub r: StateMap,
    pub h: ScalarField,
    pub g: StateMatrixMap,
    pub input_domain: BoxDomain,
}

impl fmt::Debug for PortHamiltonianSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PortHamiltonianSystem")
            .field("nz", &self.h.dim())
            .field("nu", &self.input_domain.dim())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PhCheck {
    pub j_skew_residual: f64,
    /// Smallest `xᵀR(x)` over the samples.
    pub min_dissipation: f64,
}

impl PortHamiltonianSystem {
    pub fn new(
        h: ScalarField,
        j: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
        r: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        g: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
        input_domain: BoxDomain,
    ) -> Self {
        Self {
            j: Arc::new(j),
            r: Arc::new(r),
            h,
            g: Arc::new(g),
            input_domain,
        }
    }

    /// Constant `J`, linear `R(x) = Rx` and constant `g`.
    pub fn linear(h: ScalarField, j: Matrix, r: Matrix, g: Matrix, input_domain: BoxDomain) -> Self {
        Self::new(h, move |_| j.clone(), move |x| &r * x, move |_| g.clone(), input_domain)
    }

    pub fn nz(&self) -> usize {
        self.h.dim()
    }

    pub fn nu(&self) -> usize {
        self.input_domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        self.h.domain()
    }

    pub fn vector_field(&self, z: &Vector, u: &Vector) -> Vector {
        let e = self.h.gradient(z);
        (self.j)(z) * &e - (self.r)(&e) + (self.g)(z) * u
    }

    pub fn output(&self, z: &Vector, _u: &Vector) -> Vector {
        (self.g)(z).transpose() * self.h.gradient(z)
    }

    /// Checks `J + Jᵀ = 0` (1e-10) and `xᵀR(x) ≥ −1e-12` at `x = ∇H(z)`.
    pub fn verify(&self, points: &[Vector]) -> Result<PhCheck> {
        let mut check = PhCheck {
            j_skew_residual: 0.0,
            min_dissipation: f64::INFINITY,
        };
        for z in points {
            let j = (self.j)(z);
            check.j_skew_residual = check.j_skew_residual.max((&j + j.transpose()).amax());
            let e = self.h.gradient(z);
            check.min_dissipation = check.min_dissipation.min(e.dot(&(self.r)(&e)));
        }
        if check.j_skew_residual > 1e-10 {
            return Err(Error::CheckFailed(format!(
                "J is not skew (residual {:e})",
                check.j_skew_residual
            )));
        }
        if check.min_dissipation < -1e-12 {
            return Err(Error::CheckFailed(format!(
                "dissipation xᵀR(x) = {:e} < 0",
                check.min_dissipation
            )));
        }
        Ok(check)
    }

    pub fn to_nonlinear(&self) -> NonlinearSystem {
        let (a, b) = (self.clone(), self.clone());
        NonlinearSystem::new(
            self.domain().clone(),
            self.input_domain.clone(),
            move |z, u| a.vector_field(z, u),
            move |z, u| b.output(z, u),
        )
    }
}

fn check_start(domain: &BoxDomain, x0: &Vector, u: &Signal, nu: usize) -> Result<()> {
    if x0.len() != domain.dim() || u.dim() != nu {
        return Err(Error::Dimension(format!(
            "initial state has length {}, input has {} channels; system has {} states and {nu} inputs",
            x0.len(),
            u.dim(),
            domain.dim()
        )));
    }
    Ok(())
}

/// Integrates `G(x)ẋ = −∂V/∂x(x, u(t))` in mass-matrix form and records
/// `σy = −∂V/∂u`.
pub fn simulate_pseudo_gradient(
    sys: &PseudoGradientSystem,
    x0: &Vector,
    u: &Signal,
    t_span: (f64, f64),
    ctl: &StepControl,
) -> Result<Trajectory> {
    check_start(sys.domain(), x0, u, sys.nu())?;
    sys.metric.eval_checked(x0)?;
    let mass = |_: f64, x: &Vector| sys.metric.eval(x);
    let rhs = |t: f64, x: &Vector| -sys.potential.grad_x(x, &u.at(t));
    let ode = Ode {
        mass: Some(&mass),
        rhs: &rhs,
        domain: Some(sys.domain()),
    };
    let (times, states) = ode.solve(x0, t_span.0, t_span.1, ctl)?;
    for x in &states {
        sys.metric.eval_checked(x)?;
    }
    let inputs: Vec<Vector> = times.iter().map(|t| u.at(*t)).collect();
    let outputs = states.iter().zip(&inputs).map(|(x, u)| sys.output(x, u)).collect();
    Trajectory::new(times, states, inputs, outputs)
}

pub fn simulate_hessian_pseudo_gradient(
    sys: &HessianPseudoGradientSystem,
    x0: &Vector,
    u: &Signal,
    t_span: (f64, f64),
    ctl: &StepControl,
) -> Result<Trajectory> {
    simulate_pseudo_gradient(&sys.as_pseudo_gradient(), x0, u, t_span, ctl)
}

/// Integrates the port-Hamiltonian dynamics; the storage channel holds `H(z)`.
pub fn simulate_port_hamiltonian(
    sys: &PortHamiltonianSystem,
    z0: &Vector,
    u: &Signal,
    t_span: (f64, f64),
    ctl: &StepControl,
) -> Result<Trajectory> {
    check_start(sys.domain(), z0, u, sys.nu())?;
    let rhs = |t: f64, z: &Vector| sys.vector_field(z, &u.at(t));
    let ode = Ode {
        mass: None,
        rhs: &rhs,
        domain: Some(sys.domain()),
    };
    let (times, states) = ode.solve(z0, t_span.0, t_span.1, ctl)?;
    let inputs: Vec<Vector> = times.iter().map(|t| u.at(*t)).collect();
    let outputs = states.iter().zip(&inputs).map(|(z, u)| sys.output(z, u)).collect();
    Ok(Trajectory::new(times, states, inputs, outputs)?.with_storage(&sys.h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn scalar_decay() -> PseudoGradientSystem {
        let dom = BoxDomain::cube(1, -2.0, 2.0);
        let p = ScalarField::quadratic(Matrix::from_element(1, 1, 2.0), dom.clone());
        PseudoGradientSystem::new(
            MetricField::constant(Matrix::from_element(1, 1, 2.0), dom),
            Potential::affine(p, Matrix::from_element(1, 1, 0.0), BoxDomain::cube(1, -1.0, 1.0)).unwrap(),
            SignatureMatrix::identity(1),
        )
        .unwrap()
    }

    #[test]
    fn scalar_exponential() {
        let t = simulate_pseudo_gradient(&scalar_decay(), &v(&[1.0]), &Signal::zero(1), (0.0, 1.0), &StepControl::new(1e-3))
            .unwrap();
        assert_eq!(t.len(), 1001);
        let err = t
            .times
            .iter()
            .zip(&t.states)
            .map(|(s, x)| (x[0] - (-s).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn x_independent_potential_is_constant() {
        let dom = BoxDomain::cube(2, -1.0, 1.0);
        let sys = PseudoGradientSystem::new(
            MetricField::constant(Matrix::identity(2, 2), dom.clone()),
            Potential::General(ScalarField::new(dom.product(&BoxDomain::cube(1, -1.0, 1.0)), |z| z[2] * z[2])),
            SignatureMatrix::identity(1),
        )
        .unwrap();
        let t = simulate_pseudo_gradient(&sys, &v(&[0.3, -0.2]), &Signal::constant(v(&[0.5])), (0.0, 1.0), &StepControl::new(0.1))
            .unwrap();
        assert!((t.final_state() - v(&[0.3, -0.2])).amax() < 1e-12);
        // σy = −∂V/∂u = −2u.
        assert_abs_diff_eq!(t.outputs[3][0], -1.0, epsilon = 1e-8);
    }

    #[test]
    fn affine_form_matches_explicit_system() {
        let dom = BoxDomain::cube(2, -1.0, 1.0);
        let p = ScalarField::new(dom.clone(), |x| x[0].powi(4) / 4.0 + 0.5 * x[1] * x[1] + x[0] * x[1]);
        let k = ScalarField::quadratic(Matrix::from_diagonal(&v(&[2.0, -1.0])), dom);
        let g = Matrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let sys = HessianPseudoGradientSystem::new(
            k,
            Potential::affine(p, g, BoxDomain::cube(1, -1.0, 1.0)).unwrap(),
            SignatureMatrix::identity(1),
        )
        .unwrap();
        let aff = sys.to_affine().unwrap();
        let (x, u) = (v(&[0.4, -0.3]), v(&[0.7]));
        let direct = sys.vector_field(&x, &u).unwrap();
        assert!((aff.vector_field(&x, &u) - &direct).amax() < 1e-7);
        assert_abs_diff_eq!(aff.output_map(&x)[0], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(sys.output(&x, &u)[0], 0.4, epsilon = 1e-9);
    }

    #[test]
    fn affine_potential_requires_identity_sigma() {
        let dom = BoxDomain::cube(1, -1.0, 1.0);
        let p = ScalarField::quadratic(Matrix::identity(1, 1), dom.clone());
        let err = PseudoGradientSystem::new(
            MetricField::constant(Matrix::identity(1, 1), dom.clone()),
            Potential::affine(p, Matrix::identity(1, 1), dom).unwrap(),
            SignatureMatrix::negative_identity(1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    fn oscillator(damping: f64) -> PortHamiltonianSystem {
        let h = ScalarField::new(BoxDomain::cube(2, -5.0, 5.0), |z| 0.5 * z[0] * z[0] + 0.5 * z[1] * z[1])
            .with_gradient(|z| z.clone());
        PortHamiltonianSystem::linear(
            h,
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            Matrix::from_diagonal(&v(&[0.0, damping])),
            Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
            BoxDomain::cube(1, -1.0, 1.0),
        )
    }

    #[test]
    fn port_hamiltonian_examples() {
        let still = PortHamiltonianSystem::linear(
            ScalarField::quadratic(Matrix::identity(2, 2), BoxDomain::cube(2, -1.0, 1.0)),
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 1),
            BoxDomain::cube(1, -1.0, 1.0),
        );
        let t = simulate_port_hamiltonian(&still, &v(&[0.5, 0.5]), &Signal::constant(v(&[1.0])), (0.0, 1.0), &StepControl::new(0.1))
            .unwrap();
        assert_eq!(t.final_state(), &v(&[0.5, 0.5]));

        let lossless = oscillator(0.0);
        lossless.verify(&lossless.domain().low_discrepancy(20)).unwrap();
        let t = simulate_port_hamiltonian(&lossless, &v(&[1.0, 0.0]), &Signal::zero(1), (0.0, 10.0), &StepControl::new(0.01))
            .unwrap();
        let h0 = t.storage[0];
        assert!(t.storage.iter().all(|h| (h - h0).abs() < 1e-12));

        let damped = oscillator(0.5);
        let t = simulate_port_hamiltonian(&damped, &v(&[1.0, 0.0]), &Signal::zero(1), (0.0, 10.0), &StepControl::new(0.01))
            .unwrap();
        assert!(t.storage.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    }

    #[test]
    fn ph_verification_catches_bad_structure() {
        let h = ScalarField::quadratic(Matrix::identity(2, 2), BoxDomain::cube(2, -1.0, 1.0));
        let bad_j = PortHamiltonianSystem::linear(
            h.clone(),
            Matrix::identity(2, 2),
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 1),
            BoxDomain::cube(1, -1.0, 1.0),
        );
        assert!(bad_j.verify(&h.domain().low_discrepancy(5)).is_err());
        let bad_r = PortHamiltonianSystem::linear(
            h.clone(),
            Matrix::zeros(2, 2),
            -Matrix::identity(2, 2),
            Matrix::zeros(2, 1),
            BoxDomain::cube(1, -1.0, 1.0),
        );
        assert!(bad_r.verify(&h.domain().low_discrepancy(5)).is_err());
    }
}
