//! From a port-Hamiltonian system with split energy to its mixed-potential
//! Hessian form, plus structure checks on Hessian pseudo-gradient systems.

use serde::Serialize;

use super::systems::{HessianPseudoGradientSystem, PortHamiltonianSystem, Potential};
use crate::error::{Error, Result};
use crate::legendre::{InitPolicy, LegendrePair};
use crate::linalg;
use crate::sampling::DEFAULT_SAMPLES;
use crate::types::{BoxDomain, Matrix, ScalarField, SignatureMatrix, Vector};

/// Split data for the conversion. The state is `z = (z1, z2)` with `z1` the
/// leading `n1` coordinates.
#[derive(Debug, Clone)]
pub struct PhSplit {
    pub n1: usize,
    pub h1: ScalarField,
    pub h2: ScalarField,
    /// Rayleigh potential of the first block, in co-energy `x1`.
    pub p1: ScalarField,
    /// Rayleigh potential of the second block, in co-energy `x2`.
    pub p2: ScalarField,
    pub pc: Matrix,
    pub g1: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub assumption: &'static str,
    pub passed: bool,
    pub residual: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConversionReport {
    pub assumptions: Vec<AssumptionCheck>,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct Conversion {
    pub system: HessianPseudoGradientSystem,
    /// `H̃(x) = H1(∇H1*(x1)) + H2(∇H2*(x2))`, the Hamiltonian in co-energy.
    pub storage: ScalarField,
    pub pair1: LegendrePair,
    pub pair2: LegendrePair,
    pub report: ConversionReport,
}

const J_TOL: f64 = 1e-10;
const SPLIT_TOL: f64 = 1e-8;
const RAYLEIGH_TOL: f64 = 1e-6;

fn split_vec(z: &Vector, n1: usize) -> (Vector, Vector) {
    (z.rows(0, n1).into_owned(), z.rows(n1, z.len() - n1).into_owned())
}

fn join(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

fn fail(assumption: &'static str, detail: String) -> Error {
    Error::Assumption { assumption, detail }
}

fn check_split_dims(sys: &PortHamiltonianSystem, s: &PhSplit) -> Result<(usize, usize)> {
    let n = sys.nz();
    let (n1, n2) = (s.n1, n.saturating_sub(s.n1));
    let ok = s.n1 <= n
        && s.h1.dim() == n1
        && s.h2.dim() == n2
        && s.p1.dim() == n1
        && s.p2.dim() == n2
        && s.pc.shape() == (n1, n2)
        && s.g1.shape() == (n1, sys.nu());
    if !ok {
        return Err(Error::Dimension(format!(
            "split data does not match a {n}-state system with blocks {n1} + {n2}"
        )));
    }
    Ok((n1, n2))
}

/// Checks the four assumptions on samples of the state box and builds
/// `∇²K ẋ = −∂P/∂x + gu` with `K = H1* − H2*`,
/// `P = P1(x1) + P2(x2) + x1ᵀPc x2` and `g = (g1; 0)`.
///
/// The first failing assumption is returned as `Error::Assumption`. The
/// lower-bound assumption (IV) can only be checked on the sampled box.
pub fn ph_to_hessian_pseudo_gradient(sys: &PortHamiltonianSystem, split: &PhSplit) -> Result<Conversion> {
    let (n1, n2) = check_split_dims(sys, split)?;
    let pts = sys.domain().low_discrepancy(DEFAULT_SAMPLES);
    let mut checks = Vec::new();

    // (I) constant J of the interconnection form.
    let mut j_expected = Matrix::zeros(n1 + n2, n1 + n2);
    j_expected.view_mut((0, n1), (n1, n2)).copy_from(&(-&split.pc));
    j_expected.view_mut((n1, 0), (n2, n1)).copy_from(&split.pc.transpose());
    let j_res = pts.iter().map(|z| ((sys.j)(z) - &j_expected).amax()).fold(0.0, f64::max);
    checks.push(AssumptionCheck {
        assumption: "I",
        passed: j_res <= J_TOL,
        residual: j_res,
        note: "J = [[0, -Pc], [Pc^T, 0]] at every sample".into(),
    });

    // (II) separable Hamiltonian.
    let h_res = pts
        .iter()
        .map(|z| {
            let (z1, z2) = split_vec(z, n1);
            let h = sys.h.value(z);
            (h - split.h1.value(&z1) - split.h2.value(&z2)).abs() / h.abs().max(1.0)
        })
        .fold(0.0, f64::max);
    checks.push(AssumptionCheck {
        assumption: "II",
        passed: h_res <= SPLIT_TOL,
        residual: h_res,
        note: "H(z) = H1(z1) + H2(z2)".into(),
    });

    // (III) Rayleigh dissipation and input acting on the first block only.
    let mut r_res: f64 = 0.0;
    let mut g_res: f64 = 0.0;
    for z in &pts {
        let x = sys.h.gradient(z);
        let (x1, x2) = split_vec(&x, n1);
        let expected = join(&split.p1.gradient(&x1), &(-split.p2.gradient(&x2)));
        r_res = r_res.max(((sys.r)(&x) - expected).amax() / x.amax().max(1.0));
        let g = (sys.g)(z);
        g_res = g_res.max((g.rows(0, n1) - &split.g1).amax());
        if n2 > 0 {
            g_res = g_res.max(g.rows(n1, n2).amax());
        }
    }
    checks.push(AssumptionCheck {
        assumption: "III",
        passed: r_res <= RAYLEIGH_TOL && g_res <= J_TOL,
        residual: r_res.max(g_res),
        note: "R(x) = (grad P1(x1), -grad P2(x2)) and g = (g1; 0)".into(),
    });

    // (IV) bounded below, sampled only.
    let min1 = split.h1.domain().low_discrepancy(DEFAULT_SAMPLES).iter().map(|z| split.h1.value(z)).fold(f64::INFINITY, f64::min);
    let min2 = split.h2.domain().low_discrepancy(DEFAULT_SAMPLES).iter().map(|z| split.h2.value(z)).fold(f64::INFINITY, f64::min);
    checks.push(AssumptionCheck {
        assumption: "IV",
        passed: min1.is_finite() && min2.is_finite(),
        residual: min1.min(min2),
        note: "sampled minimum of H1 and H2 on their boxes; global boundedness is not verifiable numerically".into(),
    });

    for c in &checks {
        if !c.passed {
            return Err(fail(c.assumption, format!("{} (residual {:e})", c.note, c.residual)));
        }
    }

    let pair1 = LegendrePair::new(split.h1.clone(), InitPolicy::WarmStart);
    let pair2 = LegendrePair::new(split.h2.clone(), InitPolicy::WarmStart);
    let kdom = pair1.kstar().domain().product(pair2.kstar().domain());
    let k = split_difference(pair1.kstar().clone(), pair2.kstar().clone(), kdom.clone(), n1);

    let (p1, p2, pc) = (split.p1.clone(), split.p2.clone(), split.pc.clone());
    let (q1, q2, qc) = (split.p1.clone(), split.p2.clone(), split.pc.clone());
    let p = ScalarField::new(kdom.clone(), move |x| {
        let (x1, x2) = split_vec(x, n1);
        p1.value(&x1) + p2.value(&x2) + x1.dot(&(&pc * &x2))
    })
    .with_gradient(move |x| {
        let (x1, x2) = split_vec(x, n1);
        join(&(q1.gradient(&x1) + &qc * &x2), &(q2.gradient(&x2) + qc.transpose() * &x1))
    });
    let mut g = Matrix::zeros(n1 + n2, sys.nu());
    g.view_mut((0, 0), (n1, sys.nu())).copy_from(&split.g1);
    let potential = Potential::affine(p, g, sys.input_domain.clone())?;
    let system = HessianPseudoGradientSystem::new(k, potential, SignatureMatrix::identity(sys.nu()))?;

    let (a, b) = (pair1.clone(), pair2.clone());
    let storage = ScalarField::new(kdom, move |x| {
        let (x1, x2) = split_vec(x, n1);
        match (a.inverse(&x1), b.inverse(&x2)) {
            (Ok(z1), Ok(z2)) => a.k().value(&z1) + b.k().value(&z2),
            _ => f64::NAN,
        }
    });

    Ok(Conversion {
        system,
        storage,
        pair1,
        pair2,
        report: ConversionReport {
            assumptions: checks,
            points: pts.len(),
        },
    })
}

/// `K(x) = A(x1) − B(x2)` with block-diagonal Hessian.
fn split_difference(a: ScalarField, b: ScalarField, domain: BoxDomain, n1: usize) -> ScalarField {
    let (a1, b1, a2, b2, a3, b3) = (a.clone(), b.clone(), a.clone(), b.clone(), a, b);
    ScalarField::new(domain, move |x| {
        let (x1, x2) = split_vec(x, n1);
        a1.value(&x1) - b1.value(&x2)
    })
    .with_gradient(move |x| {
        let (x1, x2) = split_vec(x, n1);
        join(&a2.gradient(&x1), &(-b2.gradient(&x2)))
    })
    .with_hessian(move |x| {
        let (x1, x2) = split_vec(x, n1);
        linalg::block_diag(&a3.hessian(&x1), &(-b3.hessian(&x2)))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassiveStructureReport {
    pub g2_zero: bool,
    pub sign_conditions: bool,
    /// Largest entry of the input matrix rows acting on `x2`.
    pub g2_max: f64,
    /// Smallest `x1ᵀ∂P/∂x1(x1, 0)`.
    pub min_first: f64,
    /// Largest `x2ᵀ∂P/∂x2(0, x2)`.
    pub max_second: f64,
    /// Largest `|K − (S1 − S2)|` after removing the constant offset at the
    /// domain center.
    pub split_residual: f64,
    pub points: usize,
}

/// Passivity structure of `K(x) = S1(x1) − S2(x2)` with storage `S1 + S2`:
/// `g2 = 0`, `x1ᵀ∂P/∂x1(x1,0) ≥ −tol` and `x2ᵀ∂P/∂x2(0,x2) ≤ tol`.
///
/// `P` is `V(·, 0)`. For a general potential the input rows are
/// `−∂²V/∂x∂u`.
pub fn check_passive_hessian_structure(
    sys: &HessianPseudoGradientSystem,
    s1: &ScalarField,
    s2: &ScalarField,
    n1: usize,
    tol: f64,
) -> Result<PassiveStructureReport> {
    let (n, m) = (sys.nx(), sys.nu());
    if n1 > n || s1.dim() != n1 || s2.dim() != n - n1 {
        return Err(Error::Dimension(format!(
            "split {n1} + {} does not match storage pieces of dimension {} and {}",
            n.saturating_sub(n1),
            s1.dim(),
            s2.dim()
        )));
    }
    let n2 = n - n1;
    let pts = sys.domain().low_discrepancy(DEFAULT_SAMPLES);
    let offset = |x: &Vector| {
        let (x1, x2) = split_vec(x, n1);
        sys.k.value(x) - s1.value(&x1) + s2.value(&x2)
    };
    let c0 = offset(&sys.domain().center());
    let split_residual = pts.iter().map(|x| (offset(x) - c0).abs()).fold(0.0, f64::max);
    if !(split_residual <= tol.max(1e-8)) {
        return Err(Error::CheckFailed(format!(
            "K differs from S1 - S2 by {split_residual:e}"
        )));
    }

    let u0 = Vector::zeros(m);
    let mut g2_max: f64 = 0.0;
    match &sys.potential {
        Potential::Affine { g, .. } => {
            if n2 > 0 {
                g2_max = g.rows(n1, n2).amax();
            }
        }
        pot => {
            for x in &pts {
                let h = pot.joint_hessian(x, &u0);
                if n2 > 0 && m > 0 {
                    g2_max = g2_max.max(h.view((n1, n), (n2, m)).amax());
                }
            }
        }
    }

    let mut min_first = f64::INFINITY;
    let mut max_second = f64::NEG_INFINITY;
    for x in &pts {
        let (x1, x2) = split_vec(x, n1);
        let a = join(&x1, &Vector::zeros(n2));
        let b = join(&Vector::zeros(n1), &x2);
        let ga = sys.potential.grad_x(&a, &u0);
        let gb = sys.potential.grad_x(&b, &u0);
        min_first = min_first.min(x1.dot(&ga.rows(0, n1)));
        max_second = max_second.max(x2.dot(&gb.rows(n1, n2)));
    }
    if n1 == 0 {
        min_first = 0.0;
    }
    if n2 == 0 {
        max_second = 0.0;
    }
    Ok(PassiveStructureReport {
        g2_zero: g2_max < 1e-12,
        sign_conditions: min_first >= -tol && max_second <= tol,
        g2_max,
        min_first,
        max_second,
        split_residual,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompatibilityIdentities {
    /// Largest `|S(x) − S*(∇K(x))|`.
    pub storage_from_k: f64,
    /// Largest `|K(x) − K*(∇S(x))|`, with `K*` the stationary-point transform.
    pub k_from_storage: f64,
    pub points: usize,
}

/// Evaluates the two candidate nonlinear compatibility identities. They are
/// diagnostics only: neither is required by the other checks. Points where
/// a transform cannot be evaluated are skipped.
pub fn compatibility_identities(k: &ScalarField, s: &ScalarField, points: &[Vector]) -> CompatibilityIdentities {
    let s_pair = LegendrePair::new(s.clone(), InitPolicy::WarmStart);
    let k_pair = LegendrePair::new(k.clone(), InitPolicy::WarmStart);
    let mut out = CompatibilityIdentities {
        storage_from_k: 0.0,
        k_from_storage: 0.0,
        points: 0,
    };
    for x in points {
        let (Ok(a), Ok(b)) = (s_pair.kstar_value(&k.gradient(x)), k_pair.kstar_value(&s.gradient(x))) else {
            continue;
        };
        out.storage_from_k = out.storage_from_k.max((s.value(x) - a).abs());
        out.k_from_storage = out.k_from_storage.max((k.value(x) - b).abs());
        out.points += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    /// Two-block linear PH system with `H = ½q1 z1² + ½q2 z2²`.
    fn linear_ph(q1: f64, q2: f64, pc: f64, r1: f64, r2: f64) -> (PortHamiltonianSystem, PhSplit) {
        let dom = BoxDomain::cube(2, -1.0, 1.0);
        let h = ScalarField::quadratic(Matrix::from_diagonal(&v(&[q1, q2])), dom);
        let j = Matrix::from_row_slice(2, 2, &[0.0, -pc, pc, 0.0]);
        let r = Matrix::from_diagonal(&v(&[r1, r2]));
        let g = Matrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let sys = PortHamiltonianSystem::linear(h, j, r, g, BoxDomain::cube(1, -1.0, 1.0));
        let d1 = BoxDomain::cube(1, -1.0, 1.0);
        let split = PhSplit {
            n1: 1,
            h1: ScalarField::quadratic(Matrix::from_element(1, 1, q1), d1.clone()),
            h2: ScalarField::quadratic(Matrix::from_element(1, 1, q2), d1.clone()),
            p1: ScalarField::quadratic(Matrix::from_element(1, 1, r1), BoxDomain::cube(1, -5.0, 5.0)),
            p2: ScalarField::quadratic(Matrix::from_element(1, 1, -r2), BoxDomain::cube(1, -5.0, 5.0)),
            pc: Matrix::from_element(1, 1, pc),
            g1: Matrix::from_element(1, 1, 1.0),
        };
        (sys, split)
    }

    #[test]
    fn linear_split_reproduces_quadratic_data() {
        let (sys, split) = linear_ph(2.0, 4.0, 1.5, 0.3, 0.1);
        let conv = ph_to_hessian_pseudo_gradient(&sys, &split).unwrap();
        assert!(conv.report.assumptions.iter().all(|c| c.passed));
        let x = v(&[0.5, -0.8]);
        // K = x1²/(2q1) − x2²/(2q2).
        assert_abs_diff_eq!(conv.system.k.value(&x), 0.25 / 4.0 - 0.64 / 8.0, epsilon = 1e-10);
        let hess = conv.system.k.hessian(&x);
        assert_abs_diff_eq!(hess[(0, 0)], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(hess[(1, 1)], -0.25, epsilon = 1e-9);
        // Dynamics agree with ż = J∇H − R∇H + gu mapped through z = ∇H*(x).
        let u = v(&[0.4]);
        let z = v(&[x[0] / 2.0, x[1] / 4.0]);
        let zdot = sys.vector_field(&z, &u);
        let xdot = conv.system.vector_field(&x, &u).unwrap();
        assert_abs_diff_eq!(xdot[0], 2.0 * zdot[0], epsilon = 1e-8);
        assert_abs_diff_eq!(xdot[1], 4.0 * zdot[1], epsilon = 1e-8);
        // Storage in co-energy is the Hamiltonian.
        assert_abs_diff_eq!(conv.storage.value(&x), sys.h.value(&z), epsilon = 1e-10);
        let s = check_passive_hessian_structure(
            &conv.system,
            &ScalarField::quadratic(Matrix::from_element(1, 1, 0.5), BoxDomain::cube(1, -2.0, 2.0)),
            &ScalarField::quadratic(Matrix::from_element(1, 1, 0.25), BoxDomain::cube(1, -4.0, 4.0)),
            1,
            1e-9,
        )
        .unwrap();
        assert!(s.g2_zero && s.sign_conditions, "{s:?}");
    }

    #[test]
    fn each_assumption_is_named() {
        let (sys, mut split) = linear_ph(1.0, 1.0, 1.0, 0.2, 0.0);
        split.pc = Matrix::from_element(1, 1, 2.0);
        match ph_to_hessian_pseudo_gradient(&sys, &split).unwrap_err() {
            Error::Assumption { assumption, .. } => assert_eq!(assumption, "I"),
            e => panic!("{e:?}"),
        }
        let (sys, mut split) = linear_ph(1.0, 1.0, 1.0, 0.2, 0.0);
        split.h2 = ScalarField::quadratic(Matrix::from_element(1, 1, 3.0), BoxDomain::cube(1, -1.0, 1.0));
        assert!(matches!(
            ph_to_hessian_pseudo_gradient(&sys, &split),
            Err(Error::Assumption { assumption: "II", .. })
        ));
        let (sys, mut split) = linear_ph(1.0, 1.0, 1.0, 0.2, 0.0);
        split.p1 = ScalarField::quadratic(Matrix::from_element(1, 1, 0.7), BoxDomain::cube(1, -5.0, 5.0));
        assert!(matches!(
            ph_to_hessian_pseudo_gradient(&sys, &split),
            Err(Error::Assumption { assumption: "III", .. })
        ));
    }

    #[test]
    fn nonzero_second_input_block_is_flagged() {
        let dom = BoxDomain::cube(2, -1.0, 1.0);
        let sys = HessianPseudoGradientSystem::new(
            ScalarField::quadratic(Matrix::from_diagonal(&v(&[1.0, -1.0])), dom.clone()),
            Potential::affine(
                ScalarField::quadratic(Matrix::from_diagonal(&v(&[1.0, -1.0])), dom),
                Matrix::from_row_slice(2, 1, &[1.0, 0.5]),
                BoxDomain::cube(1, -1.0, 1.0),
            )
            .unwrap(),
            SignatureMatrix::identity(1),
        )
        .unwrap();
        let half = ScalarField::quadratic(Matrix::identity(1, 1), BoxDomain::cube(1, -1.0, 1.0));
        let r = check_passive_hessian_structure(&sys, &half, &half, 1, 1e-9).unwrap();
        assert!(!r.g2_zero && r.sign_conditions);
        let wrong = ScalarField::quadratic(Matrix::from_element(1, 1, 3.0), BoxDomain::cube(1, -1.0, 1.0));
        assert!(matches!(
            check_passive_hessian_structure(&sys, &half, &wrong, 1, 1e-9),
            Err(Error::CheckFailed(_))
        ));
    }

    #[test]
    fn quadratic_identities_hold() {
        let dom = BoxDomain::cube(2, -1.0, 1.0);
        let g = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let k = ScalarField::quadratic(g.clone(), dom.clone());
        let d = compatibility_identities(&k, &k, &dom.shrink(0.5).low_discrepancy(10));
        assert_eq!(d.points, 10);
        assert!(d.storage_from_k < 1e-8 && d.k_from_storage < 1e-8, "{d:?}");
    }
}
