//! Numerical Legendre transform `K*(z) = zᵀx − K(x)` with `z = ∇K(x)`.
//!
//! The transform is solve-based: `∇K(x) = z` is inverted by damped Newton,
//! which stays valid for indefinite Hessians where the sup formula does
//! not. The co-domain is only represented by a bounding box; a point `z`
//! belongs to it exactly when the Newton solve converges.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::diff;
use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::DEFAULT_SAMPLES;
use crate::types::{BoxDomain, Matrix, ScalarField, Vector};

const CACHE_CAPACITY: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Residual target `‖∇K(x) − z‖∞ ≤ tol·max(1, ‖z‖∞)`.
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-10,
            max_halvings: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: Vector,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton for `grad(x) = target` inside `domain`. A step is halved
/// until it stays in the box, `grad` is defined there and the residual
/// drops. Once the tolerance is met, full steps continue while they still
/// reduce the residual, so solutions are accurate to rounding.
pub fn newton_solve(
    grad: &dyn Fn(&Vector) -> Result<Vector>,
    hess: &dyn Fn(&Vector) -> Result<Matrix>,
    target: &Vector,
    x0: &Vector,
    domain: &BoxDomain,
    opts: &NewtonOptions,
) -> Result<NewtonSolution> {
    let tol = opts.tol * target.amax().max(1.0);
    let mut x = x0.clone();
    let mut r = grad(&x)? - target;
    let mut rn = r.amax();
    let mut converged = false;
    for it in 0..opts.max_iter {
        if rn <= tol {
            converged = true;
        }
        if rn == 0.0 {
            return Ok(NewtonSolution { x, residual: rn, iterations: it });
        }
        let h = hess(&x)?;
        let step = h.lu().solve(&r).ok_or_else(|| Error::Singular {
            context: format!("Hessian at Newton iterate {:?}", x.as_slice()),
        })?;
        let mut lambda = 1.0;
        let mut accepted = None;
        let halvings = if converged { 0 } else { opts.max_halvings };
        for _ in 0..=halvings {
            let trial = &x - lambda * &step;
            if domain.contains(&trial) {
                if let Ok(g) = grad(&trial) {
                    let rt = g - target;
                    let rtn = rt.amax();
                    if rtn < rn {
                        accepted = Some((trial, rt, rtn));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xt, rt, rtn)) => {
                x = xt;
                r = rt;
                rn = rtn;
            }
            None if converged => {
                return Ok(NewtonSolution { x, residual: rn, iterations: it });
            }
            None => {
                return Err(Error::Newton(format!(
                    "line search stalled at residual {rn:e} (target {:?})",
                    target.as_slice()
                )))
            }
        }
    }
    if rn <= tol {
        return Ok(NewtonSolution {
            x,
            residual: rn,
            iterations: opts.max_iter,
        });
    }
    Err(Error::Newton(format!(
        "no convergence in {} iterations, residual {rn:e}",
        opts.max_iter
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendrePoint {
    pub x: Vec<f64>,
    pub value: f64,
    pub residual: f64,
}

/// Solves `∇K(x) = z` from `x_init` and returns `x` with `K*(z) = zᵀx − K(x)`.
pub fn legendre_transform(k: &ScalarField, z: &Vector, x_init: &Vector) -> Result<LegendrePoint> {
    let sol = solve_gradient(k, z, x_init, &NewtonOptions::default())?;
    Ok(LegendrePoint {
        value: z.dot(&sol.x) - k.value(&sol.x),
        x: sol.x.iter().copied().collect(),
        residual: sol.residual,
    })
}

fn solve_gradient(k: &ScalarField, z: &Vector, x0: &Vector, opts: &NewtonOptions) -> Result<NewtonSolution> {
    if z.len() != k.dim() || x0.len() != k.dim() {
        return Err(Error::Dimension(format!(
            "field has dimension {}, got z of length {} and start of length {}",
            k.dim(),
            z.len(),
            x0.len()
        )));
    }
    newton_solve(
        &|x| Ok(k.gradient(x)),
        &|x| Ok(k.hessian(x)),
        z,
        x0,
        k.domain(),
        opts,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    /// Start from the nearest previously solved point, else the center.
    WarmStart,
    /// Always start from the domain center.
    ColdStart,
}

/// Cache of solved `(z, x)` pairs shared by clones of one pair.
#[derive(Debug, Default)]
struct SolveCache {
    entries: VecDeque<(Vector, Vector)>,
}

impl SolveCache {
    fn nearest(&self, z: &Vector) -> Option<Vector> {
        let dist = |w: &Vector| w.iter().zip(z.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        self.entries
            .iter()
            .map(|(w, x)| (dist(w), x))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, x)| x.clone())
    }

    fn insert(&mut self, z: Vector, x: Vector) {
        if self.entries.len() == CACHE_CAPACITY {
            self.entries.pop_front();
        }
        self.entries.push_back((z, x));
    }
}

#[derive(Clone)]
struct Solver {
    k: ScalarField,
    policy: InitPolicy,
    opts: NewtonOptions,
    cache: Arc<Mutex<SolveCache>>,
}

impl Solver {
    fn inverse(&self, z: &Vector) -> Result<Vector> {
        let center = self.k.domain().center();
        let start = match self.policy {
            InitPolicy::WarmStart => self
                .cache
                .lock()
                .expect("cache lock poisoned")
                .nearest(z)
                .unwrap_or(center.clone()),
            InitPolicy::ColdStart => center.clone(),
        };
        let sol = match solve_gradient(&self.k, z, &start, &self.opts) {
            Ok(s) => s,
            // A stale warm start can sit in a bad basin; retry from the center.
            Err(_) if start != center => solve_gradient(&self.k, z, &center, &self.opts)?,
            Err(e) => return Err(e),
        };
        if self.policy == InitPolicy::WarmStart {
            self.cache
                .lock()
                .expect("cache lock poisoned")
                .insert(z.clone(), sol.x.clone());
        }
        Ok(sol.x)
    }
}

/// `K` together with its Legendre transform `K*`.
///
/// The `K*` field evaluates by Newton solves; its value, gradient and
/// Hessian return NaN entries at points outside the co-domain. Use
/// [`LegendrePair::inverse`] for a checked solve.
#[derive(Clone)]
pub struct LegendrePair {
    solver: Solver,
    kstar: ScalarField,
}

impl std::fmt::Debug for LegendrePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LegendrePair")
            .field("k", &self.solver.k)
            .field("codomain", self.kstar.domain())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendreCheck {
    pub round_trip: f64,
    pub inverse_round_trip: f64,
    pub hessian_gap: f64,
    pub biconjugation: f64,
    pub points: usize,
    pub worst_point: Vec<f64>,
    pub passed: bool,
}

pub const ROUND_TRIP_TOL: f64 = 1e-8;
pub const HESSIAN_TOL: f64 = 1e-6;
pub const BICONJUGATION_TOL: f64 = 1e-8;

impl LegendrePair {
    /// Builds the pair without verifying the invariants.
    pub fn new(k: ScalarField, policy: InitPolicy) -> Self {
        let solver = Solver {
            k: k.clone(),
            policy,
            opts: NewtonOptions::default(),
            cache: Arc::new(Mutex::new(SolveCache::default())),
        };
        let codomain = gradient_bounding_box(&k);
        let n = k.dim();
        let nan_vec = move || Vector::from_element(n, f64::NAN);
        let (s1, s2, s3) = (solver.clone(), solver.clone(), solver.clone());
        let kstar = ScalarField::new(codomain, move |z| match s1.inverse(z) {
            Ok(x) => z.dot(&x) - s1.k.value(&x),
            Err(_) => f64::NAN,
        })
        .with_gradient(move |z| s2.inverse(z).unwrap_or_else(|_| nan_vec()))
        .with_hessian(move |z| {
            s3.inverse(z)
                .ok()
                .and_then(|x| s3.k.hessian(&x).try_inverse())
                .unwrap_or_else(|| Matrix::from_element(n, n, f64::NAN))
        });
        Self { solver, kstar }
    }

    pub fn k(&self) -> &ScalarField {
        &self.solver.k
    }

    pub fn kstar(&self) -> &ScalarField {
        &self.kstar
    }

    pub fn forward(&self, x: &Vector) -> Vector {
        self.solver.k.gradient(x)
    }

    /// `x = ∇K*(z)`, failing when `z` is outside the co-domain.
    pub fn inverse(&self, z: &Vector) -> Result<Vector> {
        self.solver.inverse(z)
    }

    pub fn kstar_value(&self, z: &Vector) -> Result<f64> {
        let x = self.inverse(z)?;
        Ok(z.dot(&x) - self.solver.k.value(&x))
    }

    /// `∇²K*(z) = (∇²K(x))⁻¹` at `x = ∇K*(z)`.
    pub fn kstar_hessian(&self, z: &Vector) -> Result<Matrix> {
        let x = self.inverse(z)?;
        linalg::inverse(&self.solver.k.hessian(&x), "Hessian of K")
    }

    /// `(K*)*(x)`, computed by a cold-start Newton solve of `∇K*(z) = x`
    /// on the co-domain box.
    pub fn biconjugate(&self, x: &Vector) -> Result<f64> {
        let z0 = match self.kstar.domain().center() {
            c if self.inverse(&c).is_ok() => c,
            _ => self.forward(&self.solver.k.domain().center()),
        };
        let sol = newton_solve(
            &|z| self.inverse(z),
            &|z| self.kstar_hessian(z),
            x,
            &z0,
            self.kstar.domain(),
            &self.solver.opts,
        )?;
        Ok(x.dot(&sol.x) - self.kstar_value(&sol.x)?)
    }

    /// Checks the round trips, the Hessian inverse relation (against finite
    /// differences of `∇K*`) and biconjugation at `points`.
    pub fn verify(&self, points: &[Vector]) -> Result<LegendreCheck> {
        let mut check = LegendreCheck {
            round_trip: 0.0,
            inverse_round_trip: 0.0,
            hessian_gap: 0.0,
            biconjugation: 0.0,
            points: points.len(),
            worst_point: Vec::new(),
            passed: true,
        };
        let mut worst_score = 0.0;
        for x in points {
            let z = self.forward(x);
            let back = self.inverse(&z)?;
            let rt = (&back - x).amax();
            let irt = (self.forward(&back) - &z).amax();
            let fd = diff::jacobian_unchecked(
                &|zz: &Vector| self.inverse(zz).unwrap_or_else(|_| Vector::from_element(zz.len(), f64::NAN)),
                &z,
            );
            let exact = linalg::inverse(&self.solver.k.hessian(x), "Hessian of K")?;
            let hg = (diff::symmetrize(&fd) - exact).amax();
            let bc = (self.biconjugate(x)? - self.solver.k.value(x)).abs();
            check.round_trip = check.round_trip.max(rt);
            check.inverse_round_trip = check.inverse_round_trip.max(irt);
            check.hessian_gap = check.hessian_gap.max(if hg.is_nan() { f64::INFINITY } else { hg });
            check.biconjugation = check.biconjugation.max(bc);
            let score = (rt / ROUND_TRIP_TOL)
                .max(irt / ROUND_TRIP_TOL)
                .max(hg / HESSIAN_TOL)
                .max(bc / BICONJUGATION_TOL);
            if score.is_nan() || score > worst_score {
                worst_score = if score.is_nan() { f64::INFINITY } else { score };
                check.worst_point = x.iter().copied().collect();
            }
        }
        check.passed = check.round_trip <= ROUND_TRIP_TOL
            && check.inverse_round_trip <= ROUND_TRIP_TOL
            && check.hessian_gap <= HESSIAN_TOL
            && check.biconjugation <= BICONJUGATION_TOL;
        Ok(check)
    }
}

/// Bounding box of `∇K` over a grid on the domain, padded slightly.
fn gradient_bounding_box(k: &ScalarField) -> BoxDomain {
    let n = k.dim();
    let res = match n {
        1 => 201,
        2 => 41,
        3 => 13,
        4 => 7,
        _ => 4,
    };
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    let dom = k.domain();
    let mut pts = dom.grid(res);
    // Grid cell centers miss the faces; add the vertices of the box.
    if n <= 10 {
        for mask in 0..(1usize << n) {
            pts.push(Vector::from_iterator(
                n,
                (0..n).map(|i| if mask >> i & 1 == 1 { dom.upper()[i] } else { dom.lower()[i] }),
            ));
        }
    }
    for p in pts {
        let g = k.gradient(&p);
        for i in 0..n {
            if g[i].is_finite() {
                lo[i] = lo[i].min(g[i]);
                hi[i] = hi[i].max(g[i]);
            }
        }
    }
    for i in 0..n {
        if !(lo[i] < hi[i]) {
            let c = if lo[i].is_finite() { lo[i] } else { 0.0 };
            lo[i] = c - 1.0;
            hi[i] = c + 1.0;
        }
        let pad = 1e-9 * (hi[i] - lo[i]);
        lo[i] -= pad;
        hi[i] += pad;
    }
    BoxDomain::new(lo, hi).expect("padded bounds are ordered")
}

/// Builds the pair and verifies every invariant on 200 low-discrepancy
/// points of the (slightly shrunk) domain.
pub fn make_legendre_pair(k: &ScalarField, policy: InitPolicy) -> Result<LegendrePair> {
    let pair = LegendrePair::new(k.clone(), policy);
    let points = k.domain().shrink(0.95).low_discrepancy(DEFAULT_SAMPLES);
    let check = pair.verify(&points)?;
    if !check.passed {
        return Err(Error::CheckFailed(format!(
            "Legendre invariants fail (round trip {:e}, Hessian gap {:e}, biconjugation {:e}) worst at {:?}",
            check.round_trip.max(check.inverse_round_trip),
            check.hessian_gap,
            check.biconjugation,
            check.worst_point
        )));
    }
    Ok(pair)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TildeReport {
    /// max |S̃(z) − (zᵀ∇S*(z) − S*(z))|
    pub identity_gap: f64,
    /// max ‖∇S̃(z) − zᵀ∇²S*(z)‖ with the left side by finite differences.
    pub gradient_gap: f64,
    /// ‖∇S̃(0)‖ when 0 lies in the co-domain.
    pub gradient_at_zero: Option<f64>,
    pub convex: bool,
    /// min over samples of S̃(z) − S̃(0), when convex and 0 is in the co-domain.
    pub floor_margin: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct TildeFunction {
    pub field: ScalarField,
    pub report: TildeReport,
}

/// `S̃(z) = S(∇S*(z))`, defined on the co-domain of `∇S`.
pub fn tilde_function(s: &ScalarField) -> Result<TildeFunction> {
    let pair = LegendrePair::new(s.clone(), InitPolicy::WarmStart);
    let (p1, p2) = (pair.clone(), pair.clone());
    let n = s.dim();
    let field = ScalarField::new(pair.kstar().domain().clone(), move |z| {
        p1.inverse(z).map(|x| p1.k().value(&x)).unwrap_or(f64::NAN)
    })
    .with_gradient(move |z| {
        p2.kstar_hessian(z)
            .map(|h| h * z)
            .unwrap_or_else(|_| Vector::from_element(n, f64::NAN))
    });

    let xs = s.domain().shrink(0.95).low_discrepancy(DEFAULT_SAMPLES);
    let mut report = TildeReport {
        identity_gap: 0.0,
        gradient_gap: 0.0,
        gradient_at_zero: None,
        convex: true,
        floor_margin: None,
        points: xs.len(),
    };
    for x in &xs {
        let z = pair.forward(x);
        let st = field.value(&z);
        let rhs = z.dot(&pair.inverse(&z)?) - pair.kstar_value(&z)?;
        report.identity_gap = report.identity_gap.max((st - rhs).abs());
        let fd = diff::gradient_unchecked(&*field.value_fn(), &z);
        let closed = pair.kstar_hessian(&z)? * &z;
        report.gradient_gap = report.gradient_gap.max((fd - closed).amax() / (1.0 + z.amax()));
        if linalg::min_eigenvalue(&s.hessian(x)) < 0.0 {
            report.convex = false;
        }
    }
    let zero = Vector::zeros(n);
    if let Ok(g0) = pair.kstar_hessian(&zero).map(|h| h * &zero) {
        report.gradient_at_zero = Some(g0.amax());
        if report.convex {
            let base = field.value(&zero);
            let margin = xs
                .iter()
                .map(|x| field.value(&pair.forward(x)) - base)
                .fold(f64::INFINITY, f64::min);
            report.floor_margin = Some(margin);
        }
    }
    Ok(TildeFunction { field, report })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    /// K*(∇K(x)) = K(x) for `K − K(0)`.
    pub equal: bool,
    /// `K − K(0)` homogeneous of degree 2.
    pub degree2: bool,
    pub equal_residual: f64,
    pub degree2_residual: f64,
    /// The two booleans agree, as the theorem requires.
    pub consistent: bool,
    pub points: usize,
}

/// Compares `K*(∇K(x)) = K(x)` with degree-2 homogeneity of `K − K(0)`.
/// Samples are restricted to points `x` with `0.5x` and `2x` in the domain.
/// `K` is evaluated at the origin even when the origin is outside the box.
pub fn homogeneity_check(k: &ScalarField, tol: f64) -> Result<HomogeneityReport> {
    let dom = k.domain();
    let scales = [0.5, 2.0];
    let points: Vec<Vector> = dom
        .low_discrepancy(4 * DEFAULT_SAMPLES)
        .into_iter()
        .filter(|x| scales.iter().all(|t| dom.contains(&(x * *t))))
        .take(DEFAULT_SAMPLES)
        .collect();
    if points.len() < 10 {
        return Err(Error::InvalidDomain(
            "too few sample points x with 0.5x and 2x inside the domain".into(),
        ));
    }
    let pair = LegendrePair::new(k.clone(), InitPolicy::WarmStart);
    let k0 = k.value(&Vector::zeros(k.dim()));
    let mut equal_residual: f64 = 0.0;
    let mut degree2_residual: f64 = 0.0;
    for x in &points {
        let kx = k.value(x);
        let kstar = pair.kstar_value(&pair.forward(x))?;
        // Conjugate of K − K(0) is K* + K(0).
        equal_residual = equal_residual.max((kstar + k0 - (kx - k0)).abs());
        for t in scales {
            let lhs = k.value(&(x * t)) - k0;
            degree2_residual = degree2_residual.max((lhs - t * t * (kx - k0)).abs());
        }
    }
    let equal = equal_residual <= tol;
    let degree2 = degree2_residual <= tol;
    Ok(HomogeneityReport {
        equal,
        degree2,
        equal_residual,
        degree2_residual,
        consistent: equal == degree2,
        points: points.len(),
    })
}

/// Euler's relation `∇f(x)·x = degree·f(x)`, relative to `1 + |f(x)|`.
pub fn euler_degree_check(f: &ScalarField, degree: f64, tol: f64) -> bool {
    f.domain().low_discrepancy(DEFAULT_SAMPLES).iter().all(|x| {
        let v = f.value(x);
        (f.gradient(x).dot(x) - degree * v).abs() <= tol * (1.0 + v.abs())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityReport {
    pub injective: bool,
    /// Smallest `‖∇K(x) − ∇K(y)‖ / ‖x − y‖` over sample pairs.
    pub min_ratio: f64,
    pub worst_pair: (Vec<f64>, Vec<f64>),
}

/// Empirical injectivity of `x ↦ ∇K(x)`: distinct samples must have images
/// separated by more than `tol·‖x − y‖`.
pub fn injectivity_check(k: &ScalarField, count: usize, tol: f64) -> InjectivityReport {
    let xs = k.domain().low_discrepancy(count);
    let zs: Vec<Vector> = xs.iter().map(|x| k.gradient(x)).collect();
    let mut min_ratio = f64::INFINITY;
    let mut worst = (Vec::new(), Vec::new());
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let ratio = (&zs[i] - &zs[j]).norm() / (&xs[i] - &xs[j]).norm();
            if ratio < min_ratio {
                min_ratio = ratio;
                worst = (xs[i].iter().copied().collect(), xs[j].iter().copied().collect());
            }
        }
    }
    InjectivityReport {
        injective: min_ratio > tol,
        min_ratio,
        worst_pair: worst,
    }
}

/// Rows `(z_1, …, z_n, K*(z))` on a grid of the co-domain box; NaN where
/// the grid point is outside the co-domain.
pub fn tabulate_conjugate(pair: &LegendrePair, resolution: usize) -> Vec<Vec<f64>> {
    pair.kstar()
        .domain()
        .grid(resolution)
        .into_iter()
        .map(|z| {
            let mut row: Vec<f64> = z.iter().copied().collect();
            row.push(pair.kstar_value(&z).unwrap_or(f64::NAN));
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn exp_field() -> ScalarField {
        ScalarField::new(BoxDomain::cube(1, -2.0, 2.0), |x| x[0].exp())
            .with_gradient(|x| v(&[x[0].exp()]))
            .with_hessian(|x| Matrix::from_element(1, 1, x[0].exp()))
    }

    fn cosh_field() -> ScalarField {
        ScalarField::new(BoxDomain::cube(1, -2.0, 2.0), |x| x[0].cosh())
            .with_gradient(|x| v(&[x[0].sinh()]))
            .with_hessian(|x| Matrix::from_element(1, 1, x[0].cosh()))
    }

    fn quartic(lo: f64) -> ScalarField {
        ScalarField::new(BoxDomain::cube(1, lo, 2.0), |x| x[0].powi(4) / 4.0)
            .with_gradient(|x| v(&[x[0].powi(3)]))
            .with_hessian(|x| Matrix::from_element(1, 1, 3.0 * x[0] * x[0]))
    }

    #[test]
    fn transform_examples() {
        let half_square = ScalarField::quadratic(Matrix::identity(1, 1), BoxDomain::cube(1, -5.0, 5.0));
        let p = legendre_transform(&half_square, &v(&[3.0]), &v(&[0.0])).unwrap();
        assert_abs_diff_eq!(p.x[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.value, 4.5, epsilon = 1e-12);

        let p = legendre_transform(&exp_field(), &v(&[2.0]), &v(&[0.0])).unwrap();
        assert_abs_diff_eq!(p.x[0], 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.value, 2.0 * 2f64.ln() - 2.0, epsilon = 1e-12);
        assert!(p.residual <= 1e-10);

        let g = Matrix::from_diagonal(&v(&[2.0, -1.0]));
        let q = ScalarField::quadratic(g, BoxDomain::cube(2, -3.0, 3.0));
        let p = legendre_transform(&q, &v(&[2.0, 1.0]), &v(&[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(p.x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.x[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.value, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn unreachable_target_fails() {
        let err = legendre_transform(&exp_field(), &v(&[-1.0]), &v(&[0.0])).unwrap_err();
        assert!(matches!(err, Error::Newton(_)));
    }

    #[test]
    fn quadratic_pair_has_inverse_matrix_hessian() {
        let g = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let q = ScalarField::quadratic(g.clone(), BoxDomain::cube(2, -1.0, 1.0));
        let pair = make_legendre_pair(&q, InitPolicy::WarmStart).unwrap();
        let z = v(&[0.3, -0.2]);
        let h = pair.kstar_hessian(&z).unwrap();
        assert!((h - g.clone().try_inverse().unwrap()).amax() < 1e-12);
        let expected = 0.5 * z.dot(&(g.try_inverse().unwrap() * &z));
        assert_abs_diff_eq!(pair.kstar_value(&z).unwrap(), expected, epsilon = 1e-13);
    }

    #[test]
    fn cosh_conjugate_matches_brute_force_sup() {
        let pair = make_legendre_pair(&cosh_field(), InitPolicy::WarmStart).unwrap();
        let grid: Vec<f64> = (0..100_000).map(|i| -2.0 + 4.0 * i as f64 / 99_999.0).collect();
        for z in [-3.0, -1.0, 0.0, 0.5, 2.5] {
            let sup = grid.iter().map(|x| z * x - x.cosh()).fold(f64::NEG_INFINITY, f64::max);
            let closed = z * f64::asinh(z) - (1.0 + z * z).sqrt();
            let ours = pair.kstar_value(&v(&[z])).unwrap();
            assert_abs_diff_eq!(ours, closed, epsilon = 1e-12);
            assert_abs_diff_eq!(ours, sup, epsilon = 1e-8);
        }
    }

    #[test]
    fn cosine_potential_conjugate() {
        let gamma = 1.5;
        let lim = 0.45 * std::f64::consts::PI;
        let h2 = ScalarField::new(BoxDomain::cube(1, -lim, lim), move |q| -gamma * q[0].cos())
            .with_gradient(move |q| v(&[gamma * q[0].sin()]))
            .with_hessian(move |q| Matrix::from_element(1, 1, gamma * q[0].cos()));
        let pair = make_legendre_pair(&h2, InitPolicy::WarmStart).unwrap();
        assert_abs_diff_eq!(pair.kstar_value(&v(&[0.0])).unwrap(), gamma, epsilon = 1e-12);
        let grid: Vec<f64> = (0..100_000).map(|i| -lim + 2.0 * lim * i as f64 / 99_999.0).collect();
        for p in [-1.2, 0.3, 1.0] {
            let s: f64 = p / gamma;
            let formula = p * s.asin() + gamma * s.asin().cos();
            let sup = grid.iter().map(|q| p * q + gamma * q.cos()).fold(f64::NEG_INFINITY, f64::max);
            let ours = pair.kstar_value(&v(&[p])).unwrap();
            assert_abs_diff_eq!(ours, formula, epsilon = 1e-12);
            assert_abs_diff_eq!(ours, sup, epsilon = 1e-8);
        }
    }

    #[test]
    fn indefinite_pair_verifies() {
        let g = Matrix::from_diagonal(&v(&[2.0, -1.0]));
        let q = ScalarField::quadratic(g, BoxDomain::cube(2, -1.0, 1.0));
        let pair = make_legendre_pair(&q, InitPolicy::ColdStart).unwrap();
        let check = pair.verify(&q.domain().low_discrepancy(20)).unwrap();
        assert!(check.passed, "{check:?}");
    }

    #[test]
    fn tilde_examples() {
        let qm = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = ScalarField::quadratic(qm.clone(), BoxDomain::cube(2, -1.0, 1.0));
        let t = tilde_function(&s).unwrap();
        let z = v(&[0.4, -0.3]);
        let expected = 0.5 * z.dot(&(qm.try_inverse().unwrap() * &z));
        assert_abs_diff_eq!(t.field.value(&z), expected, epsilon = 1e-13);
        assert!(t.report.identity_gap < 1e-12);
        assert!(t.report.gradient_gap < 1e-6);
        assert!(t.report.gradient_at_zero.unwrap() < 1e-14);
        assert!(t.report.convex && t.report.floor_margin.unwrap() >= -1e-10);

        // S = x⁴/4 on (0.1, 2): ∇S* = z^{1/3}, so S̃(z) = z^{4/3}/4.
        let t = tilde_function(&quartic(0.1)).unwrap();
        for z in [0.01, 0.5, 3.0, 7.0] {
            assert_abs_diff_eq!(t.field.value(&v(&[z])), z.powf(4.0 / 3.0) / 4.0, epsilon = 1e-12);
        }
        assert!(t.report.gradient_at_zero.is_none());
    }

    #[test]
    fn homogeneity_examples() {
        let g = Matrix::from_diagonal(&v(&[2.0, -1.0]));
        let q = ScalarField::quadratic(g, BoxDomain::cube(2, -1.0, 1.0));
        let r = homogeneity_check(&q, 1e-10).unwrap();
        assert!(r.equal && r.degree2 && r.consistent);

        let r = homogeneity_check(&quartic(0.05), 1e-8).unwrap();
        assert!(!r.equal && !r.degree2 && r.consistent);

        let shifted = ScalarField::new(BoxDomain::cube(1, -1.0, 1.0), |x| 0.5 * x[0] * x[0] + 7.0)
            .with_gradient(|x| v(&[x[0]]));
        let r = homogeneity_check(&shifted, 1e-10).unwrap();
        assert!(r.equal && r.degree2);
    }

    #[test]
    fn quartic_conjugate_is_three_times_k() {
        let k = quartic(0.05);
        let pair = LegendrePair::new(k.clone(), InitPolicy::WarmStart);
        for x in k.domain().low_discrepancy(50) {
            let lhs = pair.kstar_value(&pair.forward(&x)).unwrap();
            assert!((lhs - 3.0 * k.value(&x)).abs() < 1e-10);
        }
    }

    #[test]
    fn euler_examples() {
        let bilinear = ScalarField::new(BoxDomain::cube(2, -1.0, 1.0), |x| x[0] * x[1]);
        assert!(euler_degree_check(&bilinear, 2.0, 1e-8));
        let norm = ScalarField::new(BoxDomain::cube(2, 0.5, 2.0), |x| x.norm());
        assert!(euler_degree_check(&norm, 1.0, 1e-8));
        let e = exp_field();
        for d in [0.0, 1.0, 2.0, 3.5] {
            assert!(!euler_degree_check(&e, d, 1e-6));
        }
    }

    #[test]
    fn injectivity_of_strictly_monotone_gradient_and_fold() {
        assert!(injectivity_check(&exp_field(), 50, 1e-9).injective);
        // ∇K = x² folds the interval (−1, 1) onto itself.
        let fold = ScalarField::new(BoxDomain::cube(1, -1.0, 1.0), |x| x[0].powi(3) / 3.0)
            .with_gradient(|x| v(&[x[0] * x[0]]));
        let r = injectivity_check(&fold, 200, 1e-3);
        assert!(!r.injective);
    }

    #[test]
    fn conjugate_table_has_nan_outside_codomain() {
        let pair = LegendrePair::new(exp_field(), InitPolicy::WarmStart);
        let rows = tabulate_conjugate(&pair, 5);
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.len() == 2 && r[1].is_finite()));
    }
}
