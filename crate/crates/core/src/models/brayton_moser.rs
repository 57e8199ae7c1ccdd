//! RLC circuits in mixed-potential form: currents `I` through inductors,
//! voltages `V` across capacitors.

use crate::dynamics::{HessianPseudoGradientSystem, PhSplit, PortHamiltonianSystem, Potential};
use crate::error::{Error, Result};
use crate::types::{AffineSystem, BoxDomain, Matrix, ScalarField, SignatureMatrix, Vector};

use super::spec::FieldSpec;

#[derive(Debug, Clone)]
pub struct BraytonMoserModel {
    /// Inductances, the diagonal of `L`.
    pub l: Vector,
    /// Capacitances, the diagonal of `C`.
    pub cap: Vector,
    /// Content, a function of the currents.
    pub p1: FieldSpec,
    /// Co-content, a function of the voltages.
    pub p2: FieldSpec,
    /// Coupling, `nI × nV`.
    pub lambda: Matrix,
    /// State box for `(I, V)`.
    pub domain: BoxDomain,
}

fn split(x: &Vector, n1: usize) -> (Vector, Vector) {
    (x.rows(0, n1).into_owned(), x.rows(n1, x.len() - n1).into_owned())
}

fn join(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

impl BraytonMoserModel {
    /// Linear resistors `P1 = ½ΣRᵢIᵢ²` and conductors `P2 = −½ΣG_jV_j²`.
    ///
    /// The minus sign on the co-content makes the conductors dissipate; with
    /// `+½G V²` they would inject energy.
    pub fn linear(l: Vector, cap: Vector, r: Vector, gc: Vector, lambda: Matrix, half_width: f64) -> Self {
        let (ni, nv) = (l.len(), cap.len());
        let p1 = FieldSpec::quadratic(&Matrix::from_diagonal(&r));
        let p2 = FieldSpec::quadratic(&-Matrix::from_diagonal(&gc));
        Self {
            l,
            cap,
            p1,
            p2,
            lambda,
            domain: BoxDomain::cube(ni + nv, -half_width, half_width),
        }
    }

    /// One inductor and one capacitor with `L = C = Λ = R = G = 1`.
    pub fn rlc() -> Self {
        let one = Vector::from_element(1, 1.0);
        Self::linear(one.clone(), one.clone(), one.clone(), one, Matrix::from_element(1, 1, 1.0), 2.0)
    }

    /// Cubic resistor `Rᵢ·(Iᵢ + Iᵢ³)` and tanh conductor, so the content is
    /// `½RI² + ¼RI⁴` and the co-content `−log cosh V`.
    pub fn nonlinear() -> Self {
        let p1 = FieldSpec::Polynomial { terms: vec![(0.5, vec![2]), (0.25, vec![4])] };
        let p2 = FieldSpec::scaled(-1.0, FieldSpec::LogCosh { matrix: vec![vec![1.0]], weights: None });
        Self {
            l: Vector::from_element(1, 1.0),
            cap: Vector::from_element(1, 0.5),
            p1,
            p2,
            lambda: Matrix::from_element(1, 1, 1.0),
            domain: BoxDomain::cube(2, -2.0, 2.0),
        }
    }

    pub fn n_currents(&self) -> usize {
        self.l.len()
    }

    pub fn n_voltages(&self) -> usize {
        self.cap.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.l.iter().chain(self.cap.iter()).any(|v| !(*v > 0.0)) {
            return Err(Error::Input("inductances and capacitances must be positive".into()));
        }
        let (ni, nv) = (self.n_currents(), self.n_voltages());
        if self.lambda.shape() != (ni, nv) || self.domain.dim() != ni + nv {
            return Err(Error::Dimension(format!(
                "Brayton-Moser data inconsistent with {ni} currents and {nv} voltages"
            )));
        }
        self.content()?;
        self.co_content()?;
        Ok(())
    }

    fn current_box(&self) -> BoxDomain {
        self.domain.select(&(0..self.n_currents()).collect::<Vec<_>>())
    }

    fn voltage_box(&self) -> BoxDomain {
        let ni = self.n_currents();
        self.domain.select(&(ni..ni + self.n_voltages()).collect::<Vec<_>>())
    }

    /// `P1(I)` on the current box.
    pub fn content(&self) -> Result<ScalarField> {
        self.p1.build(&self.current_box())
    }

    /// `P2(V)` on the voltage box.
    pub fn co_content(&self) -> Result<ScalarField> {
        self.p2.build(&self.voltage_box())
    }

    /// The constant metric `diag(L, −C)`.
    pub fn metric(&self) -> Matrix {
        Matrix::from_diagonal(&join(&self.l, &(-&self.cap)))
    }

    /// `K(I, V) = ½IᵀLI − ½VᵀCV`.
    pub fn metric_generator(&self) -> ScalarField {
        ScalarField::quadratic(self.metric(), self.domain.clone())
    }

    /// `P(I, V) = P1(I) + P2(V) + IᵀΛV`.
    pub fn mixed_potential(&self) -> Result<ScalarField> {
        let ni = self.n_currents();
        let (p1, p2, lam) = (self.content()?, self.co_content()?, self.lambda.clone());
        let (q1, q2, lam2) = (p1.clone(), p2.clone(), self.lambda.clone());
        Ok(ScalarField::new(self.domain.clone(), move |x| {
            let (i, v) = split(x, ni);
            p1.value(&i) + p2.value(&v) + i.dot(&(&lam * &v))
        })
        .with_gradient(move |x| {
            let (i, v) = split(x, ni);
            join(&(q1.gradient(&i) + &lam2 * &v), &(q2.gradient(&v) + lam2.transpose() * &i))
        }))
    }

    /// The mixed potential as one field: `P1 ⊕ P2` plus the coupling
    /// `½xᵀ[[0, Λ], [Λᵀ, 0]]x`.
    pub fn mixed_potential_spec(&self) -> FieldSpec {
        let (ni, nv) = (self.n_currents(), self.n_voltages());
        let mut coupling = Matrix::zeros(ni + nv, ni + nv);
        coupling.view_mut((0, ni), (ni, nv)).copy_from(&self.lambda);
        coupling.view_mut((ni, 0), (nv, ni)).copy_from(&self.lambda.transpose());
        FieldSpec::Sum {
            fields: vec![
                FieldSpec::embed(0..ni, self.p1.clone()),
                FieldSpec::embed(ni..ni + nv, self.p2.clone()),
                FieldSpec::quadratic(&coupling),
            ],
        }
    }

    /// A voltage source in series with the first inductor.
    pub fn default_input(&self) -> Matrix {
        let mut g = Matrix::zeros(self.n_currents() + self.n_voltages(), 1);
        g[(0, 0)] = 1.0;
        g
    }
}

/// `diag(L, −C)·ẋ = −∂P/∂x + g·u` with output `y = gᵀx`. The default input
/// is [`BraytonMoserModel::default_input`].
pub fn bm_as_pseudo_gradient(model: &BraytonMoserModel, g_input: Option<Matrix>) -> Result<HessianPseudoGradientSystem> {
    model.validate()?;
    let g = g_input.unwrap_or_else(|| model.default_input());
    let m = g.ncols();
    HessianPseudoGradientSystem::new(
        model.metric_generator(),
        Potential::affine(model.mixed_potential()?, g, BoxDomain::cube(m, -1.0, 1.0))?,
        SignatureMatrix::identity(m),
    )
}

/// The same circuit with the coupling in the current equation replaced by
/// `Λ + ε` (every entry shifted). For `ε ≠ 0` the vector field is no longer
/// generated by a mixed potential.
pub fn bm_perturbed(model: &BraytonMoserModel, eps: f64, g_input: Option<Matrix>) -> Result<AffineSystem> {
    model.validate()?;
    let g = g_input.unwrap_or_else(|| model.default_input());
    let ni = model.n_currents();
    let lam = model.lambda.clone();
    let lam_eps = lam.map(|v| v + eps);
    let (p1, p2) = (model.content()?, model.co_content()?);
    let (l, cap) = (model.l.clone(), model.cap.clone());
    let (l2, cap2) = (model.l.clone(), model.cap.clone());
    let g2 = g.clone();
    let m = g.ncols();
    Ok(AffineSystem::new(
        model.domain.clone(),
        BoxDomain::cube(m, -1.0, 1.0),
        move |x| {
            let (i, v) = split(x, ni);
            let di = -(p1.gradient(&i) + &lam_eps * &v);
            let dv = p2.gradient(&v) + lam.transpose() * &i;
            join(&di.component_div(&l), &dv.component_div(&cap))
        },
        move |_| {
            let mut out = g.clone();
            for r in 0..out.nrows() {
                let scale = if r < ni { l2[r] } else { -cap2[r - ni] };
                out.row_mut(r).unscale_mut(scale);
            }
            out
        },
        move |x| g2.transpose() * x,
    ))
}

/// Energy coordinates `z = (LI, CV)` with `H = ½φᵀL⁻¹φ + ½QᵀC⁻¹Q`,
/// `J = [[0, −Λ], [Λᵀ, 0]]` and `R(I, V) = (∇P1(I), −∇P2(V))`. Inputs may
/// only act on the inductor block.
pub fn bm_as_port_hamiltonian(model: &BraytonMoserModel, g_input: Option<Matrix>) -> Result<(PortHamiltonianSystem, PhSplit)> {
    model.validate()?;
    let g = g_input.unwrap_or_else(|| model.default_input());
    let (ni, nv) = (model.n_currents(), model.n_voltages());
    if g.nrows() != ni + nv || (nv > 0 && g.rows(ni, nv).amax() > 0.0) {
        return Err(Error::Input("inputs must act on the inductor currents only".into()));
    }
    let zdom = scaled_box(&model.domain, &join(&model.l, &model.cap))?;
    let inv = Matrix::from_diagonal(&join(&model.l, &model.cap).map(|v| 1.0 / v));
    let h = ScalarField::quadratic(inv, zdom.clone());
    let mut j = Matrix::zeros(ni + nv, ni + nv);
    j.view_mut((0, ni), (ni, nv)).copy_from(&(-&model.lambda));
    j.view_mut((ni, 0), (nv, ni)).copy_from(&model.lambda.transpose());
    let (p1, p2) = (model.content()?, model.co_content()?);
    let g1 = g.rows(0, ni).into_owned();
    let m = g.ncols();
    let sys = PortHamiltonianSystem::new(
        h,
        move |_| j.clone(),
        move |x| {
            let (i, v) = split(x, ni);
            join(&p1.gradient(&i), &(-p2.gradient(&v)))
        },
        move |_| g.clone(),
        BoxDomain::cube(m, -1.0, 1.0),
    );
    let idx1: Vec<usize> = (0..ni).collect();
    let idx2: Vec<usize> = (ni..ni + nv).collect();
    let split_data = PhSplit {
        n1: ni,
        h1: ScalarField::quadratic(Matrix::from_diagonal(&model.l.map(|v| 1.0 / v)), zdom.select(&idx1)),
        h2: ScalarField::quadratic(Matrix::from_diagonal(&model.cap.map(|v| 1.0 / v)), zdom.select(&idx2)),
        p1: model.content()?,
        p2: model.co_content()?,
        pc: model.lambda.clone(),
        g1,
    };
    Ok((sys, split_data))
}

fn scaled_box(dom: &BoxDomain, scale: &Vector) -> Result<BoxDomain> {
    let lo = dom.lower().iter().zip(scale.iter()).map(|(a, s)| a * s).collect();
    let hi = dom.upper().iter().zip(scale.iter()).map(|(a, s)| a * s).collect();
    BoxDomain::new(lo, hi)
}
