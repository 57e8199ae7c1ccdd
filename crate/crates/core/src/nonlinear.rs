//! Reciprocity of nonlinear systems `ẋ = F(x,u)`, `y = H(x,u)` with respect
//! to a metric field `G(x)` and a signature `σ`, and recovery of the
//! potential `V` with `−∂V/∂x = GF`, `−∂V/∂u = σH`.
//!
//! All "for every x, u" conditions are checked on sample points, so a
//! positive result means the conditions pass on the samples, not a proof.

use serde::Serialize;

use crate::diff;
use crate::error::{Error, Result};
use crate::quadrature;
use crate::sampling::DEFAULT_SAMPLES;
use crate::types::{
    AffineSystem, BoxDomain, JacobianKind, Matrix, MetricField, NonlinearSystem, ScalarField,
    SignatureMatrix, Vector,
};

pub const SAMPLE_SCOPE: &str = "passes on samples";

const QUAD_TOL: f64 = 1e-10;
const POTENTIAL_GRADIENT_TOL: f64 = 1e-4;
const HESSIAN_METRIC_TOL: f64 = 1e-6;
const REBUILT_HESSIAN_TOL: f64 = 1e-3;
const VERIFY_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReciprocityReport {
    /// Asymmetry of `∂(GF)/∂x` (or of `G·∂F/∂x` for the Hessian test).
    pub residual_state: f64,
    /// Asymmetry of `σ·∂H/∂u`.
    pub residual_output: f64,
    /// `‖G·∂F/∂u − (∂H/∂x)ᵀσ‖`.
    pub residual_cross: f64,
    pub reciprocal: bool,
    pub points_tested: usize,
    pub worst_point: Vec<f64>,
    pub scope: &'static str,
}

#[derive(Default)]
struct Accumulator {
    state: f64,
    output: f64,
    cross: f64,
    worst: f64,
    worst_point: Vec<f64>,
    count: usize,
}

impl Accumulator {
    fn add(&mut self, point: Vec<f64>, state: f64, output: f64, cross: f64) {
        self.state = self.state.max(state);
        self.output = self.output.max(output);
        self.cross = self.cross.max(cross);
        let w = state.max(output).max(cross);
        if w > self.worst || self.worst_point.is_empty() {
            self.worst = w;
            self.worst_point = point;
        }
        self.count += 1;
    }

    fn finish(self, tol: f64) -> ReciprocityReport {
        let all = [self.state, self.output, self.cross];
        ReciprocityReport {
            residual_state: self.state,
            residual_output: self.output,
            residual_cross: self.cross,
            reciprocal: all.iter().all(|r| *r <= tol),
            points_tested: self.count,
            worst_point: self.worst_point,
            scope: SAMPLE_SCOPE,
        }
    }
}

fn asym(m: &Matrix) -> f64 {
    (m - m.transpose()).amax()
}

fn check_sizes(nx: usize, nu: usize, g: &MetricField, sigma: &SignatureMatrix) -> Result<()> {
    if g.dim() != nx || sigma.dim() != nu {
        return Err(Error::Dimension(format!(
            "system has {nx} states and {nu} ports, metric is {}, signature is {}",
            g.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

fn pairs_or_default(sys: &NonlinearSystem, samples: &[(Vector, Vector)]) -> Result<Vec<(Vector, Vector)>> {
    if samples.is_empty() {
        return Ok(sys.sample_pairs(DEFAULT_SAMPLES));
    }
    for (x, u) in samples {
        if !sys.domain().contains(x) || !sys.input_domain().contains(u) {
            return Err(Error::OutsideDomain {
                point: x.iter().chain(u.iter()).copied().collect(),
            });
        }
    }
    Ok(samples.to_vec())
}

fn joined(x: &Vector, u: &Vector) -> Vec<f64> {
    x.iter().chain(u.iter()).copied().collect()
}

/// `∂(G F)/∂x`, column `k` being `(∂G/∂x_k)F + G·∂F/∂x_k`.
fn d_gf(sys: &NonlinearSystem, g: &MetricField, gx: &Matrix, x: &Vector, u: &Vector) -> Matrix {
    let f = sys.dynamics(x, u);
    let mut out = gx * sys.jacobian(JacobianKind::Fx, x, u);
    for k in 0..x.len() {
        let col = g.partial(x, k) * &f;
        let mut c = out.column_mut(k);
        c += col;
    }
    out
}

fn output_and_cross(
    sys: &NonlinearSystem,
    gx: &Matrix,
    sigma: &SignatureMatrix,
    x: &Vector,
    u: &Vector,
) -> (f64, f64) {
    let s = sigma.matrix();
    let output = asym(&(&s * sys.jacobian(JacobianKind::Hu, x, u)));
    let cross = (gx * sys.jacobian(JacobianKind::Fu, x, u)
        - sys.jacobian(JacobianKind::Hx, x, u).transpose() * &s)
        .amax();
    (output, cross)
}

/// The three integrability conditions: `∂(GF)/∂x` symmetric,
/// `σ·∂H/∂u` symmetric and `G·∂F/∂u = (∂H/∂x)ᵀσ`. An empty sample list
/// means 200 low-discrepancy points of the joint box.
pub fn check_reciprocity(
    sys: &NonlinearSystem,
    g: &MetricField,
    sigma: &SignatureMatrix,
    samples: &[(Vector, Vector)],
    tol: f64,
) -> Result<ReciprocityReport> {
    check_sizes(sys.nx(), sys.nu(), g, sigma)?;
    let mut acc = Accumulator::default();
    for (x, u) in pairs_or_default(sys, samples)? {
        let gx = g.eval_checked(&x)?;
        let state = asym(&d_gf(sys, g, &gx, &x, &u));
        let (output, cross) = output_and_cross(sys, &gx, sigma, &x, &u);
        acc.add(joined(&x, &u), state, output, cross);
    }
    Ok(acc.finish(tol))
}

/// Conditions for `F = f + g·u`, `H = h + k·u`: `∂(Gf)/∂x` and every
/// `∂(Ggⱼ)/∂x` symmetric (reported together as `residual_state`),
/// `σk = kᵀσ`, and `Gg = (∂h/∂x)ᵀσ`. The last identity must hold for all
/// `u`, so `residual_cross` also includes `max|∂k/∂x|`. An empty sample list
/// means 200 points of the state box.
pub fn check_reciprocity_affine(
    sys: &AffineSystem,
    g: &MetricField,
    sigma: &SignatureMatrix,
    samples: &[Vector],
    tol: f64,
) -> Result<ReciprocityReport> {
    check_sizes(sys.nx(), sys.nu(), g, sigma)?;
    let points = if samples.is_empty() {
        sys.domain().low_discrepancy(DEFAULT_SAMPLES)
    } else {
        samples.to_vec()
    };
    let s = sigma.matrix();
    let (n, m) = (sys.nx(), sys.nu());
    let mut acc = Accumulator::default();
    for x in &points {
        if !sys.domain().contains(x) {
            return Err(Error::OutsideDomain {
                point: x.iter().copied().collect(),
            });
        }
        g.eval_checked(x)?;
        let gf = |y: &Vector| g.eval(y) * sys.drift(y);
        let mut state = asym(&diff::jacobian_unchecked(&gf, x));
        for j in 0..m {
            let ggj = |y: &Vector| g.eval(y) * sys.input_matrix(y).column(j);
            state = state.max(asym(&diff::jacobian_unchecked(&ggj, x)));
        }
        let k = sys.feedthrough(x);
        let output = asym(&(&s * &k));
        let hx = diff::jacobian_unchecked(&|y: &Vector| sys.output_map(y), x);
        let mut cross = (g.eval(x) * sys.input_matrix(x) - hx.transpose() * &s).amax();
        for i in 0..n {
            let h = diff::default_step(x[i]);
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            cross = cross.max(((sys.feedthrough(&xp) - sys.feedthrough(&xm)) / (2.0 * h)).amax());
        }
        acc.add(x.iter().copied().collect(), state, output, cross);
    }
    Ok(acc.finish(tol))
}

/// The simplified first condition for a Hessian metric `G = ∇²K`:
/// `G·∂F/∂x` symmetric. The other two conditions are unchanged.
pub fn check_reciprocity_hessian(
    sys: &NonlinearSystem,
    k: &ScalarField,
    sigma: &SignatureMatrix,
    samples: &[(Vector, Vector)],
    tol: f64,
) -> Result<ReciprocityReport> {
    let g = MetricField::from_hessian(k);
    check_sizes(sys.nx(), sys.nu(), &g, sigma)?;
    let mut acc = Accumulator::default();
    for (x, u) in pairs_or_default(sys, samples)? {
        let gx = g.eval_checked(&x)?;
        let state = asym(&(&gx * sys.jacobian(JacobianKind::Fx, &x, &u)));
        let (output, cross) = output_and_cross(sys, &gx, sigma, &x, &u);
        acc.add(joined(&x, &u), state, output, cross);
    }
    Ok(acc.finish(tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianMetricCheck {
    pub hessian: bool,
    pub residual: f64,
}

/// `max |∂Gⱼₖ/∂xᵢ − ∂Gᵢₖ/∂xⱼ|` over the samples (200 domain points if empty).
pub fn is_hessian_metric(g: &MetricField, samples: &[Vector], tol: f64) -> HessianMetricCheck {
    let points = if samples.is_empty() {
        g.domain().low_discrepancy(DEFAULT_SAMPLES)
    } else {
        samples.to_vec()
    };
    let n = g.dim();
    let mut residual: f64 = 0.0;
    for x in &points {
        let partials: Vec<Matrix> = (0..n).map(|i| g.partial(x, i)).collect();
        for i in 0..n {
            for j in 0..i {
                for k in 0..n {
                    residual = residual.max((partials[i][(j, k)] - partials[j][(i, k)]).abs());
                }
            }
        }
    }
    HessianMetricCheck {
        hessian: residual <= tol,
        residual,
    }
}

/// A potential `K` with `∇²K = G`, normalized by `K(x₀) = 0`, `∇K(x₀) = 0`.
///
/// The gradient is `χ(x) = ∫₀¹ G(x₀ + t(x−x₀))(x−x₀) dt` and the value is
/// `∫₀¹ χ(γ(t))ᵀ(x−x₀) dt`, evaluated in the equivalent single-integral
/// form `∫₀¹ (1−t)(x−x₀)ᵀG(γ(t))(x−x₀) dt`.
pub fn reconstruct_k(g: &MetricField, base: &Vector) -> Result<ScalarField> {
    if !g.domain().contains(base) {
        return Err(Error::OutsideDomain {
            point: base.iter().copied().collect(),
        });
    }
    let check = is_hessian_metric(g, &[], HESSIAN_METRIC_TOL);
    if !check.hessian {
        return Err(Error::NotHessian {
            residual: check.residual,
            tol: HESSIAN_METRIC_TOL,
        });
    }
    let (g1, g2) = (g.clone(), g.clone());
    let (b1, b2) = (base.clone(), base.clone());
    let k = ScalarField::new(g.domain().clone(), move |x| {
        let dx = x - &b1;
        quadrature::integrate(
            &|t| (1.0 - t) * dx.dot(&(g1.eval(&(&b1 + t * &dx)) * &dx)),
            0.0,
            1.0,
            QUAD_TOL,
        )
    })
    .with_gradient(move |x| {
        let dx = x - &b2;
        quadrature::integrate_vector(&|t| g2.eval(&(&b2 + t * &dx)) * &dx, 0.0, 1.0, QUAD_TOL)
    });
    let probes = g.domain().shrink(0.9).low_discrepancy(VERIFY_POINTS);
    for x in &probes {
        let gap = (k.hessian(x) - g.eval(x)).amax();
        if gap > REBUILT_HESSIAN_TOL {
            return Err(Error::NotHessian {
                residual: gap,
                tol: REBUILT_HESSIAN_TOL,
            });
        }
    }
    Ok(k)
}

/// `V` on the joint `(x, u)` box together with its base point.
#[derive(Debug, Clone)]
pub struct PotentialFunction {
    pub v: ScalarField,
    pub base_point: Vector,
    nx: usize,
}

impl PotentialFunction {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn value(&self, x: &Vector, u: &Vector) -> f64 {
        self.v.value(&Vector::from_iterator(x.len() + u.len(), x.iter().chain(u.iter()).copied()))
    }

    /// Rows `(x₁, …, xₙ, V(x, u))` over a state grid at fixed input `u`.
    pub fn tabulate_state_grid(&self, domain: &BoxDomain, u: &Vector, resolution: usize) -> Vec<Vec<f64>> {
        domain
            .grid(resolution)
            .into_iter()
            .map(|x| {
                let mut row: Vec<f64> = x.iter().copied().collect();
                row.push(self.value(&x, u));
                row
            })
            .collect()
    }
}

/// The covector `w(x,u) = (G(x)F(x,u), σH(x,u))` whose negative is `∇V`.
fn potential_covector(sys: &NonlinearSystem, g: &MetricField, sigma: &SignatureMatrix, z: &Vector) -> Vector {
    let (n, m) = (sys.nx(), sys.nu());
    let x = z.rows(0, n).into_owned();
    let u = z.rows(n, m).into_owned();
    let gf = g.eval(&x) * sys.dynamics(&x, &u);
    let sh = sigma.apply(&sys.output(&x, &u));
    Vector::from_iterator(n + m, gf.iter().chain(sh.iter()).copied())
}

/// Reconstructs `V` by the straight-line integral
/// `V(z) = −∫₀¹ w(z₀ + t(z−z₀))·(z−z₀) dt` from `(x₀, u₀)`, after checking
/// reciprocity at `tol`. The result is then checked against finite
/// differences: `−∇V` must match `w` to 1e-4 (relative to `1 + |w|`).
pub fn reconstruct_potential(
    sys: &NonlinearSystem,
    g: &MetricField,
    sigma: &SignatureMatrix,
    x0: &Vector,
    u0: &Vector,
    tol: f64,
) -> Result<PotentialFunction> {
    let report = check_reciprocity(sys, g, sigma, &[], tol)?;
    if !report.reciprocal {
        return Err(Error::NotReciprocal {
            residual: report
                .residual_state
                .max(report.residual_output)
                .max(report.residual_cross),
            tol,
        });
    }
    if !sys.domain().contains(x0) || !sys.input_domain().contains(u0) {
        return Err(Error::OutsideDomain { point: joined(x0, u0) });
    }
    let (n, m) = (sys.nx(), sys.nu());
    let joint = sys.domain().product(sys.input_domain());
    let base = Vector::from_iterator(n + m, joined(x0, u0));
    let (s1, g1, sg1, b1) = (sys.clone(), g.clone(), sigma.clone(), base.clone());
    let (s2, g2, sg2) = (sys.clone(), g.clone(), sigma.clone());
    let v = ScalarField::new(joint.clone(), move |z| {
        let dz = z - &b1;
        -quadrature::integrate(
            &|t| potential_covector(&s1, &g1, &sg1, &(&b1 + t * &dz)).dot(&dz),
            0.0,
            1.0,
            QUAD_TOL,
        )
    })
    .with_gradient(move |z| -potential_covector(&s2, &g2, &sg2, z));

    let value_fn = v.value_fn();
    for z in joint.shrink(0.9).low_discrepancy(VERIFY_POINTS) {
        let fd = diff::gradient_unchecked(&*value_fn, &z);
        let w = potential_covector(sys, g, sigma, &z);
        let gap = (&fd + &w).amax() / (1.0 + w.amax());
        if gap > POTENTIAL_GRADIENT_TOL {
            return Err(Error::CheckFailed(format!(
                "reconstructed potential gradient is off by {gap:e} at {:?}",
                z.as_slice()
            )));
        }
    }
    Ok(PotentialFunction { v, base_point: base, nx: n })
}

/// `V` along the axis-aligned staircase from the base point to `(x, u)`,
/// moving one coordinate at a time. Agrees with the straight-line value
/// exactly when the covector is closed.
pub fn potential_along_staircase(
    sys: &NonlinearSystem,
    g: &MetricField,
    sigma: &SignatureMatrix,
    base: &PotentialFunction,
    x: &Vector,
    u: &Vector,
) -> f64 {
    let target = Vector::from_iterator(x.len() + u.len(), joined(x, u));
    let mut corner = base.base_point.clone();
    let mut total = 0.0;
    for i in 0..target.len() {
        let (a, b) = (corner[i], target[i]);
        if a != b {
            let seg = corner.clone();
            total -= quadrature::integrate(
                &|s| {
                    let mut p = seg.clone();
                    p[i] = s;
                    potential_covector(sys, g, sigma, &p)[i]
                },
                a,
                b,
                QUAD_TOL,
            );
        }
        corner[i] = b;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::LinearSystem;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    /// `ẋ = −∇P(x) + Bu`, `y = Bᵀx` with `P = x₁⁴/4 + x₁x₂ + cos x₂`.
    fn gradient_system(perturb: f64) -> NonlinearSystem {
        let b = Matrix::from_row_slice(2, 1, &[1.0, 0.5]);
        let b2 = b.clone();
        NonlinearSystem::new(
            BoxDomain::cube(2, -1.0, 1.0),
            BoxDomain::cube(1, -1.0, 1.0),
            move |x, u| {
                let grad = v(&[x[0].powi(3) + x[1] + perturb * x[1], x[0] - x[1].sin()]);
                -grad + &b * u
            },
            move |x, _| b2.transpose() * x,
        )
    }

    fn lin_fixture() -> (LinearSystem, Matrix, SignatureMatrix) {
        // A = −G⁻¹P, B = G⁻¹Cᵀσ with G = diag(1, −1), P = [[1,2],[2,−1]], σ = I.
        let sys = LinearSystem::new(
            Matrix::from_row_slice(2, 2, &[-1.0, -2.0, 2.0, -1.0]),
            Matrix::from_row_slice(2, 1, &[1.0, 0.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Matrix::from_element(1, 1, 0.5),
        )
        .unwrap();
        (sys, Matrix::from_diagonal(&v(&[1.0, -1.0])), SignatureMatrix::identity(1))
    }

    #[test]
    fn linear_system_embedded() {
        let (sys, g, sigma) = lin_fixture();
        let nl = sys.to_nonlinear(BoxDomain::cube(2, -1.0, 1.0), BoxDomain::cube(1, -1.0, 1.0));
        let metric = MetricField::constant(g, nl.domain().clone());
        let r = check_reciprocity(&nl, &metric, &sigma, &[], 1e-6).unwrap();
        assert!(r.reciprocal);
        assert!(r.residual_state < 1e-6 && r.residual_output < 1e-6 && r.residual_cross < 1e-6);
        assert_eq!(r.points_tested, 200);
        assert_eq!(r.scope, "passes on samples");
    }

    #[test]
    fn gradient_system_and_perturbation() {
        let g = MetricField::constant(Matrix::identity(2, 2), BoxDomain::cube(2, -1.0, 1.0));
        let sigma = SignatureMatrix::identity(1);
        let r = check_reciprocity(&gradient_system(0.0), &g, &sigma, &[], 1e-6).unwrap();
        assert!(r.reciprocal, "{r:?}");
        let eps = 0.01;
        let r = check_reciprocity(&gradient_system(eps), &g, &sigma, &[], 1e-6).unwrap();
        assert!(!r.reciprocal);
        assert!(r.residual_state > 0.1 * eps);
    }

    #[test]
    fn singular_metric_is_located() {
        let g = MetricField::new(BoxDomain::cube(2, -1.0, 1.0), |x| {
            Matrix::from_diagonal(&v(&[1.0, x[0]]))
        });
        let pts = [(v(&[0.0, 0.3]), v(&[0.0]))];
        let err = check_reciprocity(&gradient_system(0.0), &g, &SignatureMatrix::identity(1), &pts, 1e-6)
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateMetric { .. }));
    }

    #[test]
    fn samples_outside_domain_are_rejected() {
        let g = MetricField::constant(Matrix::identity(2, 2), BoxDomain::cube(2, -1.0, 1.0));
        let pts = [(v(&[3.0, 0.0]), v(&[0.0]))];
        assert!(matches!(
            check_reciprocity(&gradient_system(0.0), &g, &SignatureMatrix::identity(1), &pts, 1e-6),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn affine_examples() {
        let gm = Matrix::from_row_slice(2, 1, &[1.0, -2.0]);
        let (g1, g2) = (gm.clone(), gm.clone());
        let sys = AffineSystem::new(
            BoxDomain::cube(2, -1.0, 1.0),
            BoxDomain::cube(1, -1.0, 1.0),
            |x| v(&[-x[0].powi(3) - x[1], -x[0] - 2.0 * x[1]]),
            move |_| g1.clone(),
            move |x| g2.transpose() * x,
        );
        let g = MetricField::constant(Matrix::identity(2, 2), sys.domain().clone());
        let r = check_reciprocity_affine(&sys, &g, &SignatureMatrix::identity(1), &[], 1e-6).unwrap();
        assert!(r.reciprocal, "{r:?}");

        let skew = AffineSystem::new(
            BoxDomain::cube(2, -1.0, 1.0),
            BoxDomain::cube(2, -1.0, 1.0),
            |x| -x,
            |_| Matrix::identity(2, 2),
            |x| x.clone(),
        )
        .with_feedthrough(|_| Matrix::from_row_slice(2, 2, &[0.0, 0.7, -0.7, 0.0]));
        let r = check_reciprocity_affine(&skew, &g, &SignatureMatrix::identity(2), &[], 1e-6).unwrap();
        assert_abs_diff_eq!(r.residual_output, 1.4, epsilon = 1e-15);
        assert!(!r.reciprocal);
    }

    #[test]
    fn affine_agrees_with_general_check() {
        let sys = AffineSystem::new(
            BoxDomain::cube(2, 0.5, 1.5),
            BoxDomain::cube(1, -1.0, 1.0),
            |x| v(&[-x[0] * x[1], -0.5 * x[0] * x[0]]),
            |x| Matrix::from_row_slice(2, 1, &[x[1], x[0]]),
            |x| v(&[x[0] * x[1]]),
        );
        let g = MetricField::constant(Matrix::identity(2, 2), sys.domain().clone());
        let sigma = SignatureMatrix::identity(1);
        let a = check_reciprocity_affine(&sys, &g, &sigma, &[], 1e-6).unwrap();
        let b = check_reciprocity(&sys.to_nonlinear(), &g, &sigma, &[], 1e-6).unwrap();
        assert!(a.reciprocal && b.reciprocal);
    }

    #[test]
    fn hessian_metric_examples() {
        let c = MetricField::constant(Matrix::identity(3, 3), BoxDomain::cube(3, -1.0, 1.0));
        let r = is_hessian_metric(&c, &[], 1e-8);
        assert!(r.hessian);
        assert_eq!(r.residual, 0.0);

        let not = MetricField::new(BoxDomain::cube(2, 0.5, 2.0), |x| Matrix::from_diagonal(&v(&[1.0, x[0]])));
        let r = is_hessian_metric(&not, &[], 1e-6);
        assert!(!r.hessian);
        assert_abs_diff_eq!(r.residual, 1.0, epsilon = 1e-6);

        // K = x₁⁴ + x₁²x₂².
        let hk = MetricField::new(BoxDomain::cube(2, 0.5, 2.0), |x| {
            let (a, b) = (x[0], x[1]);
            Matrix::from_row_slice(2, 2, &[12.0 * a * a + 2.0 * b * b, 4.0 * a * b, 4.0 * a * b, 2.0 * a * a])
        });
        assert!(is_hessian_metric(&hk, &[], 1e-6).hessian);
    }

    #[test]
    fn reconstruct_k_examples() {
        let id = MetricField::constant(Matrix::identity(2, 2), BoxDomain::cube(2, -1.0, 1.0));
        let k = reconstruct_k(&id, &v(&[0.0, 0.0])).unwrap();
        let x = v(&[0.3, -0.8]);
        assert_abs_diff_eq!(k.value(&x), 0.5 * x.norm_squared(), epsilon = 1e-12);

        let e = MetricField::new(BoxDomain::cube(1, -1.0, 2.0), |x| Matrix::from_element(1, 1, x[0].exp()));
        let k = reconstruct_k(&e, &v(&[0.0])).unwrap();
        for x in [-0.7, 0.4, 1.9] {
            // eˣ minus its tangent line at the base point.
            assert_abs_diff_eq!(k.value(&v(&[x])), x.exp() - 1.0 - x, epsilon = 1e-10);
            assert!((k.hessian(&v(&[x]))[(0, 0)] - x.exp()).abs() < 1e-6);
        }

        let ind = MetricField::constant(Matrix::from_diagonal(&v(&[2.0, -3.0])), BoxDomain::cube(2, -1.0, 1.0));
        let k = reconstruct_k(&ind, &v(&[0.0, 0.0])).unwrap();
        let x = v(&[0.5, 0.4]);
        assert_abs_diff_eq!(k.value(&x), 0.25 - 1.5 * 0.16, epsilon = 1e-12);

        let not = MetricField::new(BoxDomain::cube(2, 0.5, 2.0), |x| Matrix::from_diagonal(&v(&[1.0, x[0]])));
        assert!(matches!(reconstruct_k(&not, &v(&[1.0, 1.0])), Err(Error::NotHessian { .. })));
    }

    #[test]
    fn hessian_test_matches_general_test() {
        // K = ½x₁² + x₂⁴/12 + x₂²/2, F = (∇²K)⁻¹(−∇P + Bu), y = Bᵀx.
        let k = ScalarField::new(BoxDomain::cube(2, -1.0, 1.0), |x| {
            0.5 * x[0] * x[0] + x[1].powi(4) / 12.0 + 0.5 * x[1] * x[1]
        })
        .with_gradient(|x| v(&[x[0], x[1].powi(3) / 3.0 + x[1]]))
        .with_hessian(|x| Matrix::from_diagonal(&v(&[1.0, x[1] * x[1] + 1.0])));
        let (k1, k2) = (k.clone(), k.clone());
        let sys = NonlinearSystem::new(
            BoxDomain::cube(2, -1.0, 1.0),
            BoxDomain::cube(1, -1.0, 1.0),
            move |x, u| {
                let hinv = k1.hessian(x).try_inverse().unwrap();
                let grad_p = v(&[x[0] + 0.3 * x[1], 0.3 * x[0] + x[1].powi(3)]);
                hinv * (-grad_p + v(&[1.0, 0.0]) * u[0])
            },
            |x, _| v(&[x[0]]),
        );
        let sigma = SignatureMatrix::identity(1);
        let a = check_reciprocity_hessian(&sys, &k2, &sigma, &[], 1e-6).unwrap();
        let b = check_reciprocity(&sys, &MetricField::from_hessian(&k2), &sigma, &[], 1e-6).unwrap();
        assert!(a.reciprocal, "{a:?}");
        assert_eq!(a.reciprocal, b.reciprocal);

        let lin = LinearSystem::new(
            Matrix::from_row_slice(2, 2, &[-1.0, 0.4, 0.2, -2.0]),
            Matrix::from_row_slice(2, 1, &[1.0, 0.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let nl = lin.to_nonlinear(BoxDomain::cube(2, -1.0, 1.0), BoxDomain::cube(1, -1.0, 1.0));
        let q = ScalarField::quadratic(Matrix::from_diagonal(&v(&[1.0, 2.0])), nl.domain().clone());
        // GA = [[−1, 0.4], [0.4, −4]] is symmetric.
        assert!(check_reciprocity_hessian(&nl, &q, &sigma, &[], 1e-9).unwrap().reciprocal);
        let q = ScalarField::quadratic(Matrix::identity(2, 2), nl.domain().clone());
        let r = check_reciprocity_hessian(&nl, &q, &sigma, &[], 1e-9).unwrap();
        assert_abs_diff_eq!(r.residual_state, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn linear_potential_closed_form() {
        let (sys, g, sigma) = lin_fixture();
        let nl = sys.to_nonlinear(BoxDomain::cube(2, -1.0, 1.0), BoxDomain::cube(1, -1.0, 1.0));
        let metric = MetricField::constant(g.clone(), nl.domain().clone());
        let pot = reconstruct_potential(&nl, &metric, &sigma, &v(&[0.0, 0.0]), &v(&[0.0]), 1e-6).unwrap();
        let p = -(&g * &sys.a);
        let s = sigma.matrix();
        for (x, u) in nl.sample_pairs(20) {
            let expected = 0.5 * x.dot(&(&p * &x))
                - x.dot(&(sys.c.transpose() * &s * &u))
                - 0.5 * u.dot(&(&s * &sys.d * &u));
            assert_abs_diff_eq!(pot.value(&x, &u), expected, epsilon = 1e-12);
            let stair = potential_along_staircase(&nl, &metric, &sigma, &pot, &x, &u);
            assert_abs_diff_eq!(stair, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn trivial_potential_is_constant() {
        let sys = NonlinearSystem::new(
            BoxDomain::cube(2, -1.0, 1.0),
            BoxDomain::cube(1, -1.0, 1.0),
            |_, _| Vector::zeros(2),
            |_, _| Vector::zeros(1),
        );
        let g = MetricField::constant(Matrix::identity(2, 2), sys.domain().clone());
        let pot = reconstruct_potential(&sys, &g, &SignatureMatrix::identity(1), &v(&[0.0, 0.0]), &v(&[0.0]), 1e-9)
            .unwrap();
        assert_eq!(pot.value(&v(&[0.4, -0.2]), &v(&[0.9])), 0.0);
    }

    #[test]
    fn nonreciprocal_potential_is_refused() {
        let g = MetricField::constant(Matrix::identity(2, 2), BoxDomain::cube(2, -1.0, 1.0));
        let err = reconstruct_potential(&gradient_system(0.1), &g, &SignatureMatrix::identity(1), &v(&[0.0, 0.0]), &v(&[0.0]), 1e-6)
            .unwrap_err();
        assert!(matches!(err, Error::NotReciprocal { .. }));
    }

    #[test]
    fn nonlinear_potential_path_independent() {
        let g = MetricField::constant(Matrix::identity(2, 2), BoxDomain::cube(2, -1.0, 1.0));
        let sigma = SignatureMatrix::identity(1);
        let sys = gradient_system(0.0);
        let pot = reconstruct_potential(&sys, &g, &sigma, &v(&[0.0, 0.0]), &v(&[0.0]), 1e-6).unwrap();
        for (x, u) in sys.sample_pairs(20) {
            let p = x[0].powi(4) / 4.0 + x[0] * x[1] + x[1].cos() - 1.0;
            let expected = p - x.dot(&v(&[1.0, 0.5])) * u[0];
            assert_abs_diff_eq!(pot.value(&x, &u), expected, epsilon = 1e-10);
            let stair = potential_along_staircase(&sys, &g, &sigma, &pot, &x, &u);
            assert!((stair - pot.value(&x, &u)).abs() < 1e-4);
        }
    }
}
