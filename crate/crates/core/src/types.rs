//! Shared numerical vocabulary: box domains, scalar and metric fields,
//! nonlinear input-state-output systems, signature matrices and input signals.
//!
//! Every field lives on a single box-shaped chart. Evaluation closures are
//! pure and `Send + Sync`, so fields can be shared across threads freely.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diff;
use crate::error::{Error, Result};
use crate::sampling;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
pub type StateInputMap = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;
pub type StateInputJacobian = Arc<dyn Fn(&Vector, &Vector) -> Matrix + Send + Sync>;
pub type StateMap = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type StateMatrixMap = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// Axis-aligned box `lower < x < upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "coordinate {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; n], vec![hi; n]).expect("cube bounds must be ordered")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn center(&self) -> Vector {
        Vector::from_iterator(
            self.dim(),
            self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)),
        )
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    /// Shrinks the box about its center by `factor` in `(0, 1]`.
    pub fn shrink(&self, factor: f64) -> Self {
        let c = self.center();
        let lower = (0..self.dim())
            .map(|i| c[i] + factor * (self.lower[i] - c[i]))
            .collect();
        let upper = (0..self.dim())
            .map(|i| c[i] + factor * (self.upper[i] - c[i]))
            .collect();
        Self { lower, upper }
    }

    /// Cartesian product `self x other`.
    pub fn product(&self, other: &BoxDomain) -> Self {
        let mut lower = self.lower.clone();
        lower.extend_from_slice(&other.lower);
        let mut upper = self.upper.clone();
        upper.extend_from_slice(&other.upper);
        Self { lower, upper }
    }

    /// Sub-box made of the listed coordinates.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            lower: indices.iter().map(|&i| self.lower[i]).collect(),
            upper: indices.iter().map(|&i| self.upper[i]).collect(),
        }
    }

    /// Tensor grid of cell centers with `resolution` points per axis. All
    /// points lie strictly inside the box.
    pub fn grid(&self, resolution: usize) -> Vec<Vector> {
        let n = self.dim();
        let res = resolution.max(1);
        let total = res.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut x = Vector::zeros(n);
                for i in 0..n {
                    let k = idx % res;
                    idx /= res;
                    let frac = (k as f64 + 0.5) / res as f64;
                    x[i] = self.lower[i] + frac * (self.upper[i] - self.lower[i]);
                }
                x
            })
            .collect()
    }

    /// `count` Halton points strictly inside the box.
    pub fn low_discrepancy(&self, count: usize) -> Vec<Vector> {
        sampling::halton(self.dim(), count)
            .into_iter()
            .map(|unit| {
                Vector::from_iterator(
                    self.dim(),
                    unit.iter().enumerate().map(|(i, t)| {
                        self.lower[i] + t * (self.upper[i] - self.lower[i])
                    }),
                )
            })
            .collect()
    }
}

/// Diagonal matrix with entries in {+1, -1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SignatureMatrix {
    diag: Vec<f64>,
}

impl SignatureMatrix {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if let Some(bad) = diag.iter().find(|d| **d != 1.0 && **d != -1.0) {
            return Err(Error::InvalidSignature(*bad));
        }
        Ok(Self { diag })
    }

    pub fn identity(m: usize) -> Self {
        Self { diag: vec![1.0; m] }
    }

    pub fn negative_identity(m: usize) -> Self {
        Self { diag: vec![-1.0; m] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.diag
    }

    pub fn is_identity(&self) -> bool {
        self.diag.iter().all(|d| *d == 1.0)
    }

    pub fn is_negative_identity(&self) -> bool {
        self.diag.iter().all(|d| *d == -1.0)
    }

    pub fn matrix(&self) -> Matrix {
        Matrix::from_diagonal(&Vector::from_column_slice(&self.diag))
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        Vector::from_iterator(v.len(), v.iter().zip(&self.diag).map(|(a, s)| a * s))
    }
}

impl TryFrom<Vec<f64>> for SignatureMatrix {
    type Error = Error;
    fn try_from(diag: Vec<f64>) -> Result<Self> {
        Self::new(diag)
    }
}

impl From<SignatureMatrix> for Vec<f64> {
    fn from(s: SignatureMatrix) -> Self {
        s.diag
    }
}

/// A twice differentiable function on a box. Gradient and Hessian are
/// optional; central differences stand in when they are absent.
#[derive(Clone)]
pub struct ScalarField {
    domain: BoxDomain,
    value: ValueFn,
    gradient: Option<GradientFn>,
    hessian: Option<HessianFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim())
            .field("domain", &self.domain)
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(domain: BoxDomain, value: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            domain,
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    /// Drops the analytic Hessian so finite differences are used instead.
    pub fn without_hessian(mut self) -> Self {
        self.hessian = None;
        self
    }

    /// `½ xᵀ G x`, with exact derivatives.
    pub fn quadratic(g: Matrix, domain: BoxDomain) -> Self {
        let g = 0.5 * (&g + g.transpose());
        let (g1, g2, g3) = (g.clone(), g.clone(), g);
        Self::new(domain, move |x| 0.5 * x.dot(&(&g1 * x)))
            .with_gradient(move |x| &g2 * x)
            .with_hessian(move |_| g3.clone())
    }

    pub fn constant(c: f64, domain: BoxDomain) -> Self {
        let n = domain.dim();
        Self::new(domain, move |_| c)
            .with_gradient(move |_| Vector::zeros(n))
            .with_hessian(move |_| Matrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        match &self.gradient {
            Some(g) => g(x),
            None => diff::gradient_unchecked(&*self.value, x),
        }
    }

    pub fn hessian(&self, x: &Vector) -> Matrix {
        match (&self.hessian, &self.gradient) {
            (Some(h), _) => h(x),
            (None, Some(g)) => diff::symmetrize(&diff::jacobian_unchecked(&**g, x)),
            (None, None) => diff::hessian_from_value(&*self.value, x),
        }
    }

    /// Third partial derivatives `∂³f/∂x_l∂x_i∂x_j`, indexed `[l][(i, j)]`.
    pub fn third_partials(&self, x: &Vector) -> Vec<Matrix> {
        match &self.gradient {
            Some(g) => diff::third_partials_from_gradient(&**g, x),
            None => diff::third_partials_from_value(&*self.value, x),
        }
    }

    pub fn value_fn(&self) -> ValueFn {
        self.value.clone()
    }

    /// Checks supplied derivatives against central differences on `points`.
    /// Gradient: relative 1e-5; Hessian: symmetric to 1e-10 and within 1e-4 of
    /// differences of the gradient.
    pub fn verify_derivatives(&self, points: &[Vector]) -> Result<DerivativeCheck> {
        let mut check = DerivativeCheck::default();
        for x in points {
            if let Some(g) = &self.gradient {
                let analytic = g(x);
                let numeric = diff::gradient_unchecked(&*self.value, x);
                let scale = 1.0 + numeric.amax();
                check.gradient_error = check.gradient_error.max((analytic - numeric).amax() / scale);
            }
            if let Some(h) = &self.hessian {
                let analytic = h(x);
                let asym = diff::symmetry_residual(&analytic)?;
                check.hessian_asymmetry = check.hessian_asymmetry.max(asym);
                let numeric = match &self.gradient {
                    Some(g) => diff::symmetrize(&diff::jacobian_unchecked(&**g, x)),
                    None => diff::hessian_from_value(&*self.value, x),
                };
                let scale = 1.0 + numeric.amax();
                check.hessian_error = check.hessian_error.max((analytic - numeric).amax() / scale);
            }
        }
        check.passed = check.gradient_error <= 1e-5
            && check.hessian_asymmetry <= 1e-10
            && check.hessian_error <= 1e-4;
        Ok(check)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub gradient_error: f64,
    pub hessian_asymmetry: f64,
    pub hessian_error: f64,
    pub passed: bool,
}

/// Symmetric invertible matrix field `G(x)`.
#[derive(Clone)]
pub struct MetricField {
    domain: BoxDomain,
    eval: StateMatrixMap,
    det_floor: f64,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim())
            .field("domain", &self.domain)
            .field("det_floor", &self.det_floor)
            .finish()
    }
}

impl MetricField {
    pub const DEFAULT_DET_FLOOR: f64 = 1e-12;

    pub fn new(domain: BoxDomain, eval: impl Fn(&Vector) -> Matrix + Send + Sync + 'static) -> Self {
        Self {
            domain,
            eval: Arc::new(eval),
            det_floor: Self::DEFAULT_DET_FLOOR,
        }
    }

    pub fn constant(g: Matrix, domain: BoxDomain) -> Self {
        Self::new(domain, move |_| g.clone())
    }

    /// The Hessian metric `∇²K`.
    pub fn from_hessian(k: &ScalarField) -> Self {
        let k = k.clone();
        let domain = k.domain().clone();
        Self::new(domain, move |x| k.hessian(x))
    }

    pub fn with_det_floor(mut self, floor: f64) -> Self {
        self.det_floor = floor;
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn det_floor(&self) -> f64 {
        self.det_floor
    }

    pub fn eval(&self, x: &Vector) -> Matrix {
        (self.eval)(x)
    }

    /// `G(x)`, failing with a located error when `|det G(x)|` is below the floor.
    pub fn eval_checked(&self, x: &Vector) -> Result<Matrix> {
        let g = self.eval(x);
        let det = g.determinant();
        if !(det.abs() > self.det_floor) {
            return Err(Error::DegenerateMetric {
                point: x.iter().copied().collect(),
                det,
            });
        }
        Ok(g)
    }

    pub fn inverse_at(&self, x: &Vector) -> Result<Matrix> {
        let g = self.eval_checked(x)?;
        g.try_inverse().ok_or_else(|| Error::Singular {
            context: format!("metric at {:?}", x.as_slice()),
        })
    }

    /// `∂G/∂x_k` at `x` by central differences.
    pub fn partial(&self, x: &Vector, k: usize) -> Matrix {
        let h = diff::default_step(x[k]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        (self.eval(&xp) - self.eval(&xm)) / (2.0 * h)
    }

    /// Checks symmetry (1e-10) and invertibility at each point.
    pub fn verify(&self, points: &[Vector]) -> Result<()> {
        for x in points {
            let g = self.eval_checked(x)?;
            let r = diff::symmetry_residual(&g)?;
            if r > 1e-10 {
                return Err(Error::NotSymmetric { residual: r });
            }
        }
        Ok(())
    }
}

/// `ẋ = F(x,u)`, `y = H(x,u)` with equal input and output dimension.
#[derive(Clone)]
pub struct NonlinearSystem {
    nx: usize,
    nu: usize,
    f: StateInputMap,
    h: StateInputMap,
    jac_fx: Option<StateInputJacobian>,
    jac_fu: Option<StateInputJacobian>,
    jac_hx: Option<StateInputJacobian>,
    jac_hu: Option<StateInputJacobian>,
    domain: BoxDomain,
    input_domain: BoxDomain,
}

impl fmt::Debug for NonlinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearSystem")
            .field("nx", &self.nx)
            .field("nu", &self.nu)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Which Jacobian of a [`NonlinearSystem`] is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianKind {
    Fx,
    Fu,
    Hx,
    Hu,
}

impl NonlinearSystem {
    pub fn new(
        domain: BoxDomain,
        input_domain: BoxDomain,
        f: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
        h: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            nx: domain.dim(),
            nu: input_domain.dim(),
            f: Arc::new(f),
            h: Arc::new(h),
            jac_fx: None,
            jac_fu: None,
            jac_hx: None,
            jac_hu: None,
            domain,
            input_domain,
        }
    }

    pub fn with_jacobian(
        mut self,
        kind: JacobianKind,
        jac: impl Fn(&Vector, &Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        let jac: StateInputJacobian = Arc::new(jac);
        match kind {
            JacobianKind::Fx => self.jac_fx = Some(jac),
            JacobianKind::Fu => self.jac_fu = Some(jac),
            JacobianKind::Hx => self.jac_hx = Some(jac),
            JacobianKind::Hu => self.jac_hu = Some(jac),
        }
        self
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn input_domain(&self) -> &BoxDomain {
        &self.input_domain
    }

    pub fn dynamics(&self, x: &Vector, u: &Vector) -> Vector {
        (self.f)(x, u)
    }

    pub fn output(&self, x: &Vector, u: &Vector) -> Vector {
        (self.h)(x, u)
    }

    pub fn dynamics_fn(&self) -> StateInputMap {
        self.f.clone()
    }

    pub fn output_fn(&self) -> StateInputMap {
        self.h.clone()
    }

    pub fn jacobian(&self, kind: JacobianKind, x: &Vector, u: &Vector) -> Matrix {
        let supplied = match kind {
            JacobianKind::Fx => &self.jac_fx,
            JacobianKind::Fu => &self.jac_fu,
            JacobianKind::Hx => &self.jac_hx,
            JacobianKind::Hu => &self.jac_hu,
        };
        if let Some(j) = supplied {
            return j(x, u);
        }
        self.numeric_jacobian(kind, x, u)
    }

    fn numeric_jacobian(&self, kind: JacobianKind, x: &Vector, u: &Vector) -> Matrix {
        match kind {
            JacobianKind::Fx => diff::jacobian_unchecked(&|x: &Vector| (self.f)(x, u), x),
            JacobianKind::Fu => diff::jacobian_unchecked(&|u: &Vector| (self.f)(x, u), u),
            JacobianKind::Hx => diff::jacobian_unchecked(&|x: &Vector| (self.h)(x, u), x),
            JacobianKind::Hu => diff::jacobian_unchecked(&|u: &Vector| (self.h)(x, u), u),
        }
    }

    /// Largest relative gap between supplied Jacobians and finite differences
    /// over the sample pairs.
    pub fn jacobian_error(&self, samples: &[(Vector, Vector)]) -> f64 {
        let kinds = [
            (JacobianKind::Fx, self.jac_fx.is_some()),
            (JacobianKind::Fu, self.jac_fu.is_some()),
            (JacobianKind::Hx, self.jac_hx.is_some()),
            (JacobianKind::Hu, self.jac_hu.is_some()),
        ];
        let mut worst: f64 = 0.0;
        for (x, u) in samples {
            for (kind, present) in kinds {
                if present {
                    let a = self.jacobian(kind, x, u);
                    let n = self.numeric_jacobian(kind, x, u);
                    worst = worst.max((a - &n).amax() / (1.0 + n.amax()));
                }
            }
        }
        worst
    }

    /// Sample pairs `(x, u)` from the low-discrepancy sequence of the joint box.
    pub fn sample_pairs(&self, count: usize) -> Vec<(Vector, Vector)> {
        let joint = self.domain.product(&self.input_domain);
        joint
            .low_discrepancy(count)
            .into_iter()
            .map(|p| {
                (
                    p.rows(0, self.nx).into_owned(),
                    p.rows(self.nx, self.nu).into_owned(),
                )
            })
            .collect()
    }
}

/// Input-affine system `ẋ = f(x) + g(x)u`, `y = h(x) + k(x)u`.
#[derive(Clone)]
pub struct AffineSystem {
    pub f: StateMap,
    pub g: StateMatrixMap,
    pub h: StateMap,
    pub k: StateMatrixMap,
    domain: BoxDomain,
    input_domain: BoxDomain,
}

impl fmt::Debug for AffineSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AffineSystem")
            .field("nx", &self.nx())
            .field("nu", &self.nu())
            .finish()
    }
}

impl AffineSystem {
    pub fn new(
        domain: BoxDomain,
        input_domain: BoxDomain,
        f: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        g: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
        h: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        let m = input_domain.dim();
        Self {
            f: Arc::new(f),
            g: Arc::new(g),
            h: Arc::new(h),
            k: Arc::new(move |_| Matrix::zeros(m, m)),
            domain,
            input_domain,
        }
    }

    pub fn with_feedthrough(mut self, k: impl Fn(&Vector) -> Matrix + Send + Sync + 'static) -> Self {
        self.k = Arc::new(k);
        self
    }

    pub fn nx(&self) -> usize {
        self.domain.dim()
    }

    pub fn nu(&self) -> usize {
        self.input_domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn input_domain(&self) -> &BoxDomain {
        &self.input_domain
    }

    pub fn drift(&self, x: &Vector) -> Vector {
        (self.f)(x)
    }

    pub fn input_matrix(&self, x: &Vector) -> Matrix {
        (self.g)(x)
    }

    pub fn output_map(&self, x: &Vector) -> Vector {
        (self.h)(x)
    }

    pub fn feedthrough(&self, x: &Vector) -> Matrix {
        (self.k)(x)
    }

    pub fn vector_field(&self, x: &Vector, u: &Vector) -> Vector {
        (self.f)(x) + (self.g)(x) * u
    }

    pub fn to_nonlinear(&self) -> NonlinearSystem {
        let (f, g) = (self.f.clone(), self.g.clone());
        let (h, k) = (self.h.clone(), self.k.clone());
        let (g2, k2) = (self.g.clone(), self.k.clone());
        NonlinearSystem::new(
            self.domain.clone(),
            self.input_domain.clone(),
            move |x, u| f(x) + g(x) * u,
            move |x, u| h(x) + k(x) * u,
        )
        .with_jacobian(JacobianKind::Fu, move |x, _| g2(x))
        .with_jacobian(JacobianKind::Hu, move |x, _| k2(x))
    }
}

/// Vector-valued time signal `t ↦ u(t)`.
#[derive(Clone)]
pub struct Signal {
    dim: usize,
    f: Arc<dyn Fn(f64) -> Vector + Send + Sync>,
}

impl fmt::Debug for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Signal").field("dim", &self.dim).finish()
    }
}

impl Signal {
    pub fn new(dim: usize, f: impl Fn(f64) -> Vector + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| Vector::zeros(dim))
    }

    pub fn constant(v: Vector) -> Self {
        Self::new(v.len(), move |_| v.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, t: f64) -> Vector {
        (self.f)(t)
    }

    /// Pointwise sum of two signals of equal dimension.
    pub fn add(&self, other: &Signal) -> Signal {
        let (a, b) = (self.clone(), other.clone());
        Signal::new(self.dim, move |t| a.at(t) + b.at(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(BoxDomain::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn grid_points_lie_strictly_inside() {
        let b = BoxDomain::new(vec![-1.0, 2.0], vec![1.0, 3.0]).unwrap();
        for res in [1, 2, 7] {
            let pts = b.grid(res);
            assert_eq!(pts.len(), res * res);
            for p in pts {
                for i in 0..2 {
                    assert!(p[i] > b.lower()[i] && p[i] < b.upper()[i]);
                }
            }
        }
        for p in b.low_discrepancy(100) {
            for i in 0..2 {
                assert!(p[i] > b.lower()[i] && p[i] < b.upper()[i]);
            }
        }
    }

    #[test]
    fn signature_squares_to_identity() {
        let s = SignatureMatrix::new(vec![1.0, -1.0, -1.0]).unwrap();
        let m = s.matrix();
        assert_eq!(&m * &m, Matrix::identity(3, 3));
        assert!(SignatureMatrix::new(vec![0.5]).is_err());
    }

    #[test]
    fn quadratic_field_derivatives_verify() {
        let g = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]);
        let k = ScalarField::quadratic(g, BoxDomain::cube(2, -1.0, 1.0));
        let pts = k.domain().low_discrepancy(20);
        let c = k.verify_derivatives(&pts).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let k = ScalarField::new(BoxDomain::cube(1, -1.0, 1.0), |x| x[0] * x[0])
            .with_gradient(|x| Vector::from_element(1, 3.0 * x[0]));
        let pts = k.domain().low_discrepancy(10);
        assert!(!k.verify_derivatives(&pts).unwrap().passed);
    }

    #[test]
    fn degenerate_metric_is_located() {
        let g = MetricField::new(BoxDomain::cube(1, -1.0, 1.0), |x| {
            Matrix::from_element(1, 1, x[0])
        });
        let err = g.eval_checked(&Vector::from_element(1, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateMetric { .. }));
    }
}
