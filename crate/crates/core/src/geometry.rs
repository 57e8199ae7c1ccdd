//! Levi-Civita connections of (pseudo-)Riemannian and Hessian metrics, and
//! the variational and dual variational systems along a nominal trajectory.

use std::sync::Arc;

use serde::Serialize;

use crate::diff;
use crate::dynamics::{Ode, StepControl, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::report;
use crate::sampling::DEFAULT_SAMPLES;
use crate::types::{AffineSystem, Matrix, MetricField, ScalarField, Signal, Vector};

/// Christoffel symbols of the second kind, `gamma[k][(i, j)] = Γᵏᵢⱼ`.
pub type Christoffel = Vec<Matrix>;

/// Nested `[k][i][j]` arrays for JSON export.
pub fn christoffel_to_nested(gamma: &Christoffel) -> Vec<Vec<Vec<f64>>> {
    gamma
        .iter()
        .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
        .collect()
}

/// `Γᵏᵢⱼ = Σ_ℓ G^{kℓ}·½(∂ⱼG_ℓᵢ + ∂ᵢG_ℓⱼ − ∂_ℓGᵢⱼ)` with partials of `G` by
/// central differences.
pub fn levi_civita(g: &MetricField, x: &Vector) -> Result<Christoffel> {
    let n = g.dim();
    let ginv = g.inverse_at(x)?;
    let dg: Vec<Matrix> = (0..n).map(|k| g.partial(x, k)).collect();
    let mut lowered = vec![Matrix::zeros(n, n); n];
    for (l, low) in lowered.iter_mut().enumerate() {
        for i in 0..n {
            for j in 0..n {
                low[(i, j)] = 0.5 * (dg[j][(l, i)] + dg[i][(l, j)] - dg[l][(i, j)]);
            }
        }
    }
    Ok(raise(&ginv, &lowered))
}

fn raise(inv: &Matrix, lowered: &[Matrix]) -> Christoffel {
    let n = inv.nrows();
    (0..n)
        .map(|k| {
            let mut m = Matrix::zeros(n, n);
            for (l, low) in lowered.iter().enumerate() {
                m += inv[(k, l)] * low;
            }
            m
        })
        .collect()
}

/// For `G = ∇²K` the lowered symbols are `½∂³K/∂x_ℓ∂xᵢ∂xⱼ`; third partials
/// come from second differences of `∇K`.
pub fn hessian_christoffel(k: &ScalarField, x: &Vector) -> Result<Christoffel> {
    let inv = linalg::inverse(&k.hessian(x), "Hessian of K")?;
    let lowered: Vec<Matrix> = k.third_partials(x).into_iter().map(|t| 0.5 * t).collect();
    Ok(raise(&inv, &lowered))
}

pub fn max_abs(gamma: &Christoffel) -> f64 {
    gamma.iter().map(|m| m.amax()).fold(0.0, f64::max)
}

/// A torsion-free affine connection given by its symbols.
#[derive(Clone)]
pub struct Connection {
    dim: usize,
    gamma: Arc<dyn Fn(&Vector) -> Result<Christoffel> + Send + Sync>,
}

impl std::fmt::Debug for Connection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Connection").field("dim", &self.dim).finish()
    }
}

impl Connection {
    pub fn new(dim: usize, gamma: impl Fn(&Vector) -> Result<Christoffel> + Send + Sync + 'static) -> Self {
        Self { dim, gamma: Arc::new(gamma) }
    }

    pub fn flat(dim: usize) -> Self {
        Self::new(dim, move |_| Ok(vec![Matrix::zeros(dim, dim); dim]))
    }

    pub fn levi_civita(g: MetricField) -> Self {
        Self::new(g.dim(), move |x| levi_civita(&g, x))
    }

    pub fn hessian(k: ScalarField) -> Self {
        Self::new(k.dim(), move |x| hessian_christoffel(&k, x))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &Vector) -> Result<Christoffel> {
        (self.gamma)(x)
    }

    /// Largest `|Γᵏᵢⱼ − Γᵏⱼᵢ|` over `points`.
    pub fn torsion_residual(&self, points: &[Vector]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in points {
            for m in self.eval(x)? {
                worst = worst.max((&m - m.transpose()).amax());
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub flat: bool,
    pub max_third_partial: f64,
    /// Largest `|Γ|` at samples where `∇²K` is invertible.
    pub max_gamma: f64,
    pub points: usize,
}

/// `flat` holds iff every sampled third partial of `K` is at most `tol`.
/// Rounding in the differences is about `2e-8·|∇K|`, so `tol` near `1e-6`
/// is a sensible floor. An empty `samples` slice means the default
/// low-discrepancy set on the domain.
pub fn flatness_check(k: &ScalarField, samples: &[Vector], tol: f64) -> FlatnessReport {
    let pts = if samples.is_empty() {
        k.domain().low_discrepancy(DEFAULT_SAMPLES)
    } else {
        samples.to_vec()
    };
    let mut max_third: f64 = 0.0;
    let mut max_gamma: f64 = 0.0;
    for x in &pts {
        let third = k.third_partials(x);
        max_third = max_third.max(third.iter().map(|m| m.amax()).fold(0.0, f64::max));
        if let Some(inv) = k.hessian(x).try_inverse() {
            let lowered: Vec<Matrix> = third.into_iter().map(|t| 0.5 * t).collect();
            max_gamma = max_gamma.max(max_abs(&raise(&inv, &lowered)));
        }
    }
    FlatnessReport {
        flat: max_third <= tol,
        max_third_partial: max_third,
        max_gamma,
        points: pts.len(),
    }
}

fn require_no_feedthrough(sys: &AffineSystem, x: &Vector) -> Result<()> {
    let k = sys.feedthrough(x);
    if k.amax() > 1e-12 {
        return Err(Error::Unsupported("variational systems need zero feedthrough".into()));
    }
    Ok(())
}

/// Jacobians `∂f/∂x`, `∂gⱼ/∂x` for each input channel and `∂h/∂x`.
struct Jacobians {
    f: Matrix,
    g: Vec<Matrix>,
    h: Matrix,
}

fn jacobians(sys: &AffineSystem, x: &Vector) -> Jacobians {
    let g = (0..sys.nu())
        .map(|j| diff::jacobian_unchecked(&|y: &Vector| sys.input_matrix(y).column(j).into_owned(), x))
        .collect();
    Jacobians {
        f: diff::jacobian_unchecked(&|y: &Vector| sys.drift(y), x),
        g,
        h: diff::jacobian_unchecked(&|y: &Vector| sys.output_map(y), x),
    }
}

/// `δẋ = A δx + B δu`, `δy = C δx` frozen at one point of the nominal.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalMatrices {
    pub t: f64,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

/// `A = ∂f/∂x + Σⱼuⱼ∂gⱼ/∂x`, `B = g(x)`, `C = ∂h/∂x`.
pub fn variational_matrices(sys: &AffineSystem, x: &Vector, u: &Vector) -> (Matrix, Matrix, Matrix) {
    let jac = jacobians(sys, x);
    let mut a = jac.f;
    for (j, dg) in jac.g.iter().enumerate() {
        a += u[j] * dg;
    }
    (a, sys.input_matrix(x), jac.h)
}

fn check_nominal(sys: &AffineSystem, nominal: &Trajectory) -> Result<()> {
    for (t, x) in nominal.times.iter().zip(&nominal.states) {
        if !sys.domain().contains(x) {
            return Err(Error::LeftDomain { t: *t });
        }
        require_no_feedthrough(sys, x)?;
    }
    Ok(())
}

/// The variational system evaluated at every sample of `nominal`.
pub fn variational_system(sys: &AffineSystem, nominal: &Trajectory) -> Result<Vec<VariationalMatrices>> {
    check_nominal(sys, nominal)?;
    Ok(nominal
        .times
        .iter()
        .zip(nominal.states.iter().zip(&nominal.inputs))
        .map(|(t, (x, u))| {
            let (a, b, c) = variational_matrices(sys, x, u);
            VariationalMatrices { t: *t, a, b, c }
        })
        .collect())
}

/// `ṗ = A p + B uᵈ`, `yᵈ = C p` frozen at one point of the nominal.
#[derive(Debug, Clone, PartialEq)]
pub struct DualMatrices {
    pub t: f64,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

/// `M[(b, a)] = Σ_c Γᵃ_bc v_c`.
fn contract(gamma: &Christoffel, v: &Vector) -> Matrix {
    let n = v.len();
    let mut m = Matrix::zeros(n, n);
    for (a, ga) in gamma.iter().enumerate() {
        m.set_column(a, &(ga * v));
    }
    m
}

/// Dual variational matrices, summing the drift and each input channel
/// separately:
/// `A[(b, a)] = ∂f_a/∂x_b + 2Γᵃ_bc f_c + Σⱼuⱼ(∂g_ja/∂x_b + 2Γᵃ_bc g_jc)`,
/// `B = (∂h/∂x)ᵀ`, `C = g(x)ᵀ`.
pub fn dual_variational_matrices(
    sys: &AffineSystem,
    conn: &Connection,
    x: &Vector,
    u: &Vector,
) -> Result<(Matrix, Matrix, Matrix)> {
    let gamma = conn.eval(x)?;
    let jac = jacobians(sys, x);
    let gx = sys.input_matrix(x);
    let mut a = jac.f.transpose() + 2.0 * contract(&gamma, &sys.drift(x));
    for (j, dg) in jac.g.iter().enumerate() {
        a += u[j] * (dg.transpose() + 2.0 * contract(&gamma, &gx.column(j).into_owned()));
    }
    Ok((a, jac.h.transpose(), gx.transpose()))
}

/// The same right-hand side written with the state velocity:
/// `ṗ_b = (∂f_a/∂x_b)p_a + Σⱼuⱼ(∂g_ja/∂x_b)p_a + 2Γᵃ_bc p_a ẋ_c + Σⱼuᵈⱼ∂hⱼ/∂x_b`.
pub fn dual_rhs_with_velocity(
    sys: &AffineSystem,
    conn: &Connection,
    x: &Vector,
    u: &Vector,
    xdot: &Vector,
    p: &Vector,
    ud: &Vector,
) -> Result<Vector> {
    let gamma = conn.eval(x)?;
    let jac = jacobians(sys, x);
    let mut out = jac.f.tr_mul(p) + jac.h.tr_mul(ud);
    for (j, dg) in jac.g.iter().enumerate() {
        out += u[j] * dg.tr_mul(p);
    }
    for (a, ga) in gamma.iter().enumerate() {
        out += 2.0 * p[a] * (ga * xdot);
    }
    Ok(out)
}

/// The dual variational system evaluated at every sample of `nominal`.
pub fn dual_variational_system(
    sys: &AffineSystem,
    conn: &Connection,
    nominal: &Trajectory,
) -> Result<Vec<DualMatrices>> {
    check_nominal(sys, nominal)?;
    nominal
        .times
        .iter()
        .zip(nominal.states.iter().zip(&nominal.inputs))
        .map(|(t, (x, u))| {
            let (a, b, c) = dual_variational_matrices(sys, conn, x, u)?;
            Ok(DualMatrices { t: *t, a, b, c })
        })
        .collect()
}

/// Initial state and input of the nominal trajectory.
#[derive(Debug, Clone)]
pub struct Nominal {
    pub x0: Vector,
    pub input: Signal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalTestOptions {
    pub horizon: f64,
    pub step: f64,
    /// `δx(0)`; defaults to `0.1` in every coordinate.
    pub xi: Option<Vector>,
    pub tol: f64,
}

impl Default for ExternalTestOptions {
    fn default() -> Self {
        Self {
            horizon: 5.0,
            step: 1e-2,
            xi: None,
            tol: 1e-5,
        }
    }
}

/// Per input channel, a unit pulse on `t < 1` and `sin t`.
pub fn default_probes(m: usize) -> Vec<(String, Signal)> {
    let mut out = Vec::with_capacity(2 * m);
    for j in 0..m {
        out.push((
            format!("pulse_{}", j + 1),
            Signal::new(m, move |t| {
                let mut v = Vector::zeros(m);
                if t < 1.0 {
                    v[j] = 1.0;
                }
                v
            }),
        ));
        out.push((
            format!("sin_{}", j + 1),
            Signal::new(m, move |t| {
                let mut v = Vector::zeros(m);
                v[j] = t.sin();
                v
            }),
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub name: String,
    pub max_output_gap: f64,
    /// Largest `‖p − G(x)δx‖`.
    pub max_isomorphism_gap: f64,
    /// Columns `t, dy_*, yd_*, gap`.
    #[serde(skip)]
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalReport {
    pub matched: bool,
    pub max_output_gap: f64,
    pub max_isomorphism_gap: f64,
    pub tol: f64,
    pub horizon: f64,
    pub step: f64,
    pub probes: Vec<ProbeResult>,
}

/// Compares the variational system (from `δx(0) = ξ`) with the dual
/// variational system of the Levi-Civita connection of `G` (from
/// `p(0) = G(x(0))ξ`, driven by `uᵈ = δu`) for each probe `δu`. The nominal,
/// variational and dual states are integrated together with RK4.
///
/// `matched` requires both the output gap `‖δy − yᵈ‖` and the isomorphism
/// gap `‖p − Gδx‖` to stay below `tol`. Empty `probes` means
/// [`default_probes`].
pub fn external_reciprocity_test(
    sys: &AffineSystem,
    g: &MetricField,
    nominal: &Nominal,
    probes: &[(String, Signal)],
    opts: &ExternalTestOptions,
) -> Result<ExternalReport> {
    let (n, m) = (sys.nx(), sys.nu());
    if g.dim() != n || nominal.x0.len() != n || nominal.input.dim() != m {
        return Err(Error::Dimension(format!(
            "system has {n} states and {m} inputs; metric is {}, x0 has {}, input has {}",
            g.dim(),
            nominal.x0.len(),
            nominal.input.dim()
        )));
    }
    if !sys.domain().contains(&nominal.x0) {
        return Err(Error::OutsideDomain {
            point: nominal.x0.iter().copied().collect(),
        });
    }
    require_no_feedthrough(sys, &nominal.x0)?;
    let defaults;
    let probes = if probes.is_empty() {
        defaults = default_probes(m);
        &defaults[..]
    } else {
        probes
    };
    let xi = opts.xi.clone().unwrap_or_else(|| Vector::from_element(n, 0.1));
    if xi.len() != n {
        return Err(Error::Dimension(format!("xi has length {}, expected {n}", xi.len())));
    }
    let conn = Connection::levi_civita(g.clone());
    let g0 = g.eval_checked(&nominal.x0)?;
    let mut y0 = Vector::zeros(3 * n);
    y0.rows_mut(0, n).copy_from(&nominal.x0);
    y0.rows_mut(n, n).copy_from(&xi);
    y0.rows_mut(2 * n, n).copy_from(&(&g0 * &xi));

    let mut results = Vec::with_capacity(probes.len());
    for (name, probe) in probes {
        if probe.dim() != m {
            return Err(Error::Dimension(format!("probe {name} has {} channels, expected {m}", probe.dim())));
        }
        let rhs = |t: f64, y: &Vector| -> Vector {
            let x = y.rows(0, n).into_owned();
            let dx = y.rows(n, n).into_owned();
            let p = y.rows(2 * n, n).into_owned();
            let (u, du) = (nominal.input.at(t), probe.at(t));
            let (a, b, _) = variational_matrices(sys, &x, &u);
            let Ok((ad, bd, _)) = dual_variational_matrices(sys, &conn, &x, &u) else {
                return Vector::from_element(3 * n, f64::NAN);
            };
            let mut out = Vector::zeros(3 * n);
            out.rows_mut(0, n).copy_from(&sys.vector_field(&x, &u));
            out.rows_mut(n, n).copy_from(&(a * dx + b * &du));
            out.rows_mut(2 * n, n).copy_from(&(ad * p + bd * &du));
            out
        };
        let ode = Ode { mass: None, rhs: &rhs, domain: None };
        let (times, states) = ode.solve(&y0, 0.0, opts.horizon, &StepControl::rk4(opts.step))?;

        let mut rows = Vec::with_capacity(times.len());
        let (mut out_gap, mut iso_gap): (f64, f64) = (0.0, 0.0);
        for (t, y) in times.iter().zip(&states) {
            let x = y.rows(0, n).into_owned();
            if !sys.domain().contains(&x) {
                return Err(Error::LeftDomain { t: *t });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Singular {
                    context: format!("metric along the nominal at t = {t}"),
                });
            }
            let dx = y.rows(n, n).into_owned();
            let p = y.rows(2 * n, n).into_owned();
            let dy = diff::jacobian_unchecked(&|z: &Vector| sys.output_map(z), &x) * &dx;
            let yd = sys.input_matrix(&x).tr_mul(&p);
            let gap = (&dy - &yd).norm();
            out_gap = out_gap.max(gap);
            iso_gap = iso_gap.max((&p - g.eval(&x) * &dx).norm());
            let mut row = vec![*t];
            row.extend(dy.iter());
            row.extend(yd.iter());
            row.push(gap);
            rows.push(row);
        }
        let mut headers = vec!["t".to_string()];
        headers.extend((1..=m).map(|i| format!("dy_{i}")));
        headers.extend((1..=m).map(|i| format!("yd_{i}")));
        headers.push("gap".into());
        results.push(ProbeResult {
            name: name.clone(),
            max_output_gap: out_gap,
            max_isomorphism_gap: iso_gap,
            csv: report::csv_table(&headers, &rows),
        });
    }
    let max_output_gap = results.iter().map(|r| r.max_output_gap).fold(0.0, f64::max);
    let max_isomorphism_gap = results.iter().map(|r| r.max_isomorphism_gap).fold(0.0, f64::max);
    Ok(ExternalReport {
        matched: max_output_gap <= opts.tol && max_isomorphism_gap <= opts.tol,
        max_output_gap,
        max_isomorphism_gap,
        tol: opts.tol,
        horizon: opts.horizon,
        step: opts.step,
        probes: results,
    })
}
