//! Swing equations on a network: node momenta `p`, edge angle differences
//! `q`, and in co-energy the frequencies `ω = M⁻¹p` and line flows
//! `π = γ sin q`.

use crate::dynamics::{HessianPseudoGradientSystem, PhSplit, PortHamiltonianSystem, Potential};
use crate::error::{Error, Result};
use crate::types::{AffineSystem, BoxDomain, Matrix, ScalarField, SignatureMatrix, Vector};

/// Largest `|π/γ|` passed to `arcsin`.
const CLAMP: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone)]
pub struct SwingModel {
    /// Node inertias, the diagonal of `M`.
    pub m: Vector,
    /// Damping, `n × n` and PSD.
    pub a: Matrix,
    /// Incidence, `n` nodes × `k` edges.
    pub d: Matrix,
    /// Line capacities, one per edge.
    pub gamma: Vector,
    /// Half-width of the momentum box.
    pub p_max: f64,
    /// Flows are confined to `|π| ≤ flow_fraction·γ`.
    pub flow_fraction: f64,
}

fn split(x: &Vector, n1: usize) -> (Vector, Vector) {
    (x.rows(0, n1).into_owned(), x.rows(n1, x.len() - n1).into_owned())
}

fn join(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

impl SwingModel {
    /// Two nodes joined by one line with `M = I`, `γ = 1` and damping
    /// `A = damping·I`.
    pub fn two_node(damping: f64) -> Self {
        Self {
            m: Vector::from_element(2, 1.0),
            a: damping * Matrix::identity(2, 2),
            d: Matrix::from_row_slice(2, 1, &[1.0, -1.0]),
            gamma: Vector::from_element(1, 1.0),
            p_max: 3.0,
            flow_fraction: 0.9,
        }
    }

    pub fn nodes(&self) -> usize {
        self.m.len()
    }

    pub fn edges(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.nodes(), self.edges());
        if self.a.shape() != (n, n) || self.d.shape() != (n, k) {
            return Err(Error::Dimension(format!(
                "swing data: A is {:?}, D is {:?}, expected {n}x{n} and {n}x{k}",
                self.a.shape(),
                self.d.shape()
            )));
        }
        if self.m.iter().chain(self.gamma.iter()).any(|v| !(*v > 0.0)) {
            return Err(Error::Input("inertias and line capacities must be positive".into()));
        }
        if !(self.flow_fraction > 0.0 && self.flow_fraction < 1.0) {
            return Err(Error::Input("flow fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Box for `z = (p, q)`.
    pub fn energy_domain(&self) -> BoxDomain {
        let qmax = self.flow_fraction.asin();
        let (n, k) = (self.nodes(), self.edges());
        BoxDomain::cube(n, -self.p_max, self.p_max).product(&BoxDomain::cube(k, -qmax, qmax))
    }

    /// Box for `x = (ω, π)`.
    pub fn coenergy_domain(&self) -> BoxDomain {
        let w: Vec<f64> = self.m.iter().map(|m| self.p_max / m).collect();
        let f: Vec<f64> = self.gamma.iter().map(|g| self.flow_fraction * g).collect();
        let lo = w.iter().chain(f.iter()).map(|v| -v).collect();
        let hi = w.iter().chain(f.iter()).copied().collect();
        BoxDomain::new(lo, hi).expect("bounds are ordered")
    }

    /// `x = ∇H(z) = (M⁻¹p, γ sin q)`.
    pub fn to_coenergy(&self, z: &Vector) -> Vector {
        let (p, q) = split(z, self.nodes());
        join(&p.component_div(&self.m), &q.zip_map(&self.gamma, |q, g| g * q.sin()))
    }

    /// `z = (Mω, arcsin(π/γ))`.
    pub fn to_energy(&self, x: &Vector) -> Vector {
        let (w, f) = (x.rows(0, self.nodes()).into_owned(), x.rows(self.nodes(), self.edges()).into_owned());
        join(&w.component_mul(&self.m), &f.zip_map(&self.gamma, |f, g| ratio(f, g).asin()))
    }

    /// `(I; 0)`: inputs are power injections at the nodes.
    pub fn input_matrix(&self) -> Matrix {
        let (n, k) = (self.nodes(), self.edges());
        let mut g = Matrix::zeros(n + k, n);
        g.view_mut((0, 0), (n, n)).fill_with_identity();
        g
    }

    /// `H(p, q) = ½pᵀM⁻¹p − Σγⱼ cos qⱼ`.
    pub fn hamiltonian(&self) -> ScalarField {
        let n = self.nodes();
        let (m1, g1) = (self.m.clone(), self.gamma.clone());
        let (m2, g2) = (self.m.clone(), self.gamma.clone());
        let (m3, g3) = (self.m.clone(), self.gamma.clone());
        ScalarField::new(self.energy_domain(), move |z| {
            let (p, q) = split(z, n);
            0.5 * p.dot(&p.component_div(&m1)) - q.zip_map(&g1, |q, g| g * q.cos()).sum()
        })
        .with_gradient(move |z| {
            let (p, q) = split(z, n);
            join(&p.component_div(&m2), &q.zip_map(&g2, |q, g| g * q.sin()))
        })
        .with_hessian(move |z| {
            let (_, q) = split(z, n);
            Matrix::from_diagonal(&join(&m3.map(|m| 1.0 / m), &q.zip_map(&g3, |q, g| g * q.cos())))
        })
    }

    /// `K(ω, π) = ½ωᵀMω − Σ[πⱼ arcsin(πⱼ/γⱼ) + γⱼ cos(arcsin(πⱼ/γⱼ))]`.
    pub fn metric_generator(&self) -> ScalarField {
        let n = self.nodes();
        let (m1, g1) = (self.m.clone(), self.gamma.clone());
        let (m2, g2) = (self.m.clone(), self.gamma.clone());
        let (m3, g3) = (self.m.clone(), self.gamma.clone());
        ScalarField::new(self.coenergy_domain(), move |x| {
            let (w, f) = split(x, n);
            0.5 * w.dot(&w.component_mul(&m1)) - f.zip_map(&g1, flow_conjugate).sum()
        })
        .with_gradient(move |x| {
            let (w, f) = split(x, n);
            join(&w.component_mul(&m2), &f.zip_map(&g2, |f, g| -ratio(f, g).asin()))
        })
        .with_hessian(move |x| {
            let (_, f) = split(x, n);
            Matrix::from_diagonal(&join(&m3, &f.zip_map(&g3, |f, g| -1.0 / (g * (1.0 - ratio(f, g).powi(2)).sqrt()))))
        })
    }

    /// `P(ω, π) = ωᵀDπ + ½ωᵀAω`.
    pub fn mixed_potential(&self) -> ScalarField {
        self.mixed_potential_with(self.d.clone())
    }

    fn mixed_potential_with(&self, d: Matrix) -> ScalarField {
        let n = self.nodes();
        let (a1, d1) = (self.a.clone(), d.clone());
        let (a2, d2) = (self.a.clone(), d);
        ScalarField::new(self.coenergy_domain(), move |x| {
            let (w, f) = split(x, n);
            w.dot(&(&d1 * &f)) + 0.5 * w.dot(&(&a1 * &w))
        })
        .with_gradient(move |x| {
            let (w, f) = split(x, n);
            join(&(&d2 * &f + &a2 * &w), &d2.tr_mul(&w))
        })
    }

    /// `S(ω, π) = ½ωᵀMω − Σγⱼ cos(arcsin(πⱼ/γⱼ))`, the Hamiltonian in
    /// co-energy.
    pub fn storage(&self) -> ScalarField {
        let n = self.nodes();
        let (m1, g1) = (self.m.clone(), self.gamma.clone());
        let (m2, g2) = (self.m.clone(), self.gamma.clone());
        ScalarField::new(self.coenergy_domain(), move |x| {
            let (w, f) = split(x, n);
            0.5 * w.dot(&w.component_mul(&m1)) - f.zip_map(&g1, |f, g| g * (1.0 - ratio(f, g).powi(2)).sqrt()).sum()
        })
        .with_gradient(move |x| {
            let (w, f) = split(x, n);
            join(&w.component_mul(&m2), &f.zip_map(&g2, |f, g| {
                let r = ratio(f, g);
                r / (1.0 - r * r).sqrt()
            }))
        })
    }

    /// The data for the energy/co-energy conversion, with `z1 = p`.
    pub fn split(&self) -> PhSplit {
        let (n, k) = (self.nodes(), self.edges());
        let ez = self.energy_domain();
        let idx_p: Vec<usize> = (0..n).collect();
        let idx_q: Vec<usize> = (n..n + k).collect();
        let (g1, g2) = (self.gamma.clone(), self.gamma.clone());
        let h2 = ScalarField::new(ez.select(&idx_q), move |q| -q.zip_map(&g1, |q, g| g * q.cos()).sum())
            .with_gradient(move |q| q.zip_map(&g2, |q, g| g * q.sin()));
        let gam = self.gamma.clone();
        let h2 = h2.with_hessian(move |q| Matrix::from_diagonal(&q.zip_map(&gam, |q, g| g * q.cos())));
        let cx = self.coenergy_domain();
        PhSplit {
            n1: n,
            h1: ScalarField::quadratic(Matrix::from_diagonal(&self.m.map(|m| 1.0 / m)), ez.select(&idx_p)),
            h2,
            p1: ScalarField::quadratic(self.a.clone(), cx.select(&idx_p)),
            p2: ScalarField::constant(0.0, cx.select(&idx_q)),
            pc: self.d.clone(),
            g1: Matrix::identity(n, n),
        }
    }
}

pub(crate) fn ratio(f: f64, g: f64) -> f64 {
    (f / g).clamp(-CLAMP, CLAMP)
}

/// `H2*(π) = π arcsin(π/γ) + γ cos(arcsin(π/γ))` for one line.
pub(crate) fn flow_conjugate(f: f64, g: f64) -> f64 {
    let r = ratio(f, g);
    f * r.asin() + g * (1.0 - r * r).sqrt()
}

/// `ṗ = −Dπ − Aω + u`, `q̇ = Dᵀω` with `y = ω`.
pub fn swing_as_port_hamiltonian(model: &SwingModel) -> Result<PortHamiltonianSystem> {
    model.validate()?;
    let (n, k) = (model.nodes(), model.edges());
    let mut j = Matrix::zeros(n + k, n + k);
    j.view_mut((0, n), (n, k)).copy_from(&(-&model.d));
    j.view_mut((n, 0), (k, n)).copy_from(&model.d.transpose());
    let a = model.a.clone();
    let g = model.input_matrix();
    Ok(PortHamiltonianSystem::new(
        model.hamiltonian(),
        move |_| j.clone(),
        move |x| {
            let mut r = Vector::zeros(n + k);
            r.rows_mut(0, n).copy_from(&(&a * x.rows(0, n)));
            r
        },
        move |_| g.clone(),
        BoxDomain::cube(n, -1.0, 1.0),
    ))
}

/// `diag(M, −L(π))·ẋ = −∂P/∂x + (I; 0)u` in `x = (ω, π)`, where
/// `L(π) = diag(1/√(γⱼ² − πⱼ²))`.
pub fn swing_as_hessian_pseudo_gradient(model: &SwingModel) -> Result<HessianPseudoGradientSystem> {
    model.validate()?;
    let n = model.nodes();
    HessianPseudoGradientSystem::new(
        model.metric_generator(),
        Potential::affine(model.mixed_potential(), model.input_matrix(), BoxDomain::cube(n, -1.0, 1.0))?,
        SignatureMatrix::identity(n),
    )
}

/// The co-energy system with the flow coupling in the frequency equation
/// replaced by `D + ε` (every entry shifted).
pub fn swing_perturbed(model: &SwingModel, eps: f64) -> Result<AffineSystem> {
    let base = swing_as_hessian_pseudo_gradient(model)?;
    let n = model.nodes();
    let d_eps = model.d.map(|v| v + eps);
    let (k, a, d) = (base.k.clone(), model.a.clone(), model.d.clone());
    let k2 = base.k.clone();
    let g = model.input_matrix();
    Ok(AffineSystem::new(
        model.coenergy_domain(),
        BoxDomain::cube(n, -1.0, 1.0),
        move |x| {
            let (w, f) = split(x, n);
            let rhs = join(&(-(&d_eps * &f) - &a * &w), &(-d.tr_mul(&w)));
            k.hessian(x).lu().solve(&rhs).unwrap_or_else(|| Vector::from_element(x.len(), f64::NAN))
        },
        move |x| {
            k2.hessian(x)
                .lu()
                .solve(&g)
                .unwrap_or_else(|| Matrix::from_element(g.nrows(), g.ncols(), f64::NAN))
        },
        move |x| x.rows(0, n).into_owned(),
    ))
}
