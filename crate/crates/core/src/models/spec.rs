//! JSON description of systems. A file holds one model object or an array
//! of them; each object carries `name`, `description` and a `kind` tag with
//! the kind-specific fields. Matrices are nested row arrays, boxes are
//! `{"lower": [...], "upper": [...]}` and scalar fields are [`FieldSpec`]s.

use serde::{Deserialize, Serialize};

use super::rc::charge;
use super::swing::{flow_conjugate, ratio};
use crate::dynamics::{HessianPseudoGradientSystem, PhSplit, PortHamiltonianSystem, Potential};
use crate::error::{Error, Result};
use crate::linear::LinearSystem;
use crate::types::{AffineSystem, BoxDomain, Matrix, MetricField, ScalarField, SignatureMatrix, Vector};

pub type Rows = Vec<Vec<f64>>;

pub fn matrix_from_rows(rows: &Rows, what: &str) -> Result<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Input(format!("{what}: rows have different lengths")));
    }
    Ok(Matrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied()))
}

pub fn rows_from_matrix(m: &Matrix) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainSpec {
    pub fn cube(n: usize, half_width: f64) -> Self {
        Self { lower: vec![-half_width; n], upper: vec![half_width; n] }
    }

    pub fn build(&self) -> Result<BoxDomain> {
        BoxDomain::new(self.lower.clone(), self.upper.clone())
    }
}

impl From<&BoxDomain> for DomainSpec {
    fn from(d: &BoxDomain) -> Self {
        Self { lower: d.lower().to_vec(), upper: d.upper().to_vec() }
    }
}

/// Scalar fields with closed-form gradients and Hessians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `Σ c·Πxᵢ^pᵢ` over `(c, [p₁, …, pₙ])` terms.
    Polynomial { terms: Vec<(f64, Vec<u32>)> },
    /// `½xᵀMx`.
    Quadratic { matrix: Rows },
    /// `Σⱼ wⱼ log cosh((Dᵀx)ⱼ)`; weights default to one.
    LogCosh {
        matrix: Rows,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// `Σ cosh xᵢ`.
    Cosh,
    /// `Σ exp xᵢ`.
    Exp,
    /// `−Σ γᵢ cos xᵢ`.
    NegCos { gamma: Vec<f64> },
    /// `−Σ [xᵢ arcsin(xᵢ/γᵢ) + γᵢ cos(arcsin(xᵢ/γᵢ))]`.
    SwingConjugate { gamma: Vec<f64> },
    /// `−Σ γᵢ cos(arcsin(xᵢ/γᵢ))`.
    FlowStorage { gamma: Vec<f64> },
    /// `Σ H*(xᵢ)` for `H(q) = ½q² + ¼βq⁴`.
    CapacitorConjugate { beta: f64 },
    Constant { value: f64 },
    Sum { fields: Vec<FieldSpec> },
    /// A field of the coordinates `x[indices]`.
    Embed { indices: Vec<usize>, field: Box<FieldSpec> },
    Scaled { factor: f64, field: Box<FieldSpec> },
}

impl FieldSpec {
    pub fn quadratic(m: &Matrix) -> Self {
        FieldSpec::Quadratic { matrix: rows_from_matrix(m) }
    }

    pub fn embed(indices: std::ops::Range<usize>, field: FieldSpec) -> Self {
        FieldSpec::Embed { indices: indices.collect(), field: Box::new(field) }
    }

    pub fn scaled(factor: f64, field: FieldSpec) -> Self {
        FieldSpec::Scaled { factor, field: Box::new(field) }
    }

    /// Builds the field on `domain`, checking every size against its
    /// dimension.
    pub fn build(&self, domain: &BoxDomain) -> Result<ScalarField> {
        let f = Compiled::new(self, domain.dim())?;
        let (f1, f2) = (f.clone(), f.clone());
        Ok(ScalarField::new(domain.clone(), move |x| f.value(x))
            .with_gradient(move |x| f1.gradient(x))
            .with_hessian(move |x| f2.hessian(x)))
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    Polynomial(Vec<(f64, Vec<i32>)>),
    Quadratic(Matrix),
    LogCosh(Matrix, Vector),
    Cosh,
    Exp,
    NegCos(Vector),
    SwingConjugate(Vector),
    FlowStorage(Vector),
    CapacitorConjugate(f64),
    Constant(f64),
    Sum(Vec<Compiled>),
    Embed(Vec<usize>, Box<Compiled>),
    Scaled(f64, Box<Compiled>),
}

fn positive(v: &[f64], n: usize, what: &str) -> Result<Vector> {
    if v.len() != n {
        return Err(Error::Dimension(format!("{what}: {} entries for a {n}-dimensional field", v.len())));
    }
    if v.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::Input(format!("{what}: entries must be positive")));
    }
    Ok(Vector::from_column_slice(v))
}

impl Compiled {
    fn new(spec: &FieldSpec, n: usize) -> Result<Self> {
        Ok(match spec {
            FieldSpec::Polynomial { terms } => {
                if let Some((_, p)) = terms.iter().find(|(_, p)| p.len() != n) {
                    return Err(Error::Dimension(format!("polynomial term has {} powers, field has {n} variables", p.len())));
                }
                Compiled::Polynomial(terms.iter().map(|(c, p)| (*c, p.iter().map(|&k| k as i32).collect())).collect())
            }
            FieldSpec::Quadratic { matrix } => {
                let m = matrix_from_rows(matrix, "quadratic matrix")?;
                if m.shape() != (n, n) {
                    return Err(Error::Dimension(format!("quadratic matrix is {:?}, field has {n} variables", m.shape())));
                }
                Compiled::Quadratic(0.5 * (&m + m.transpose()))
            }
            FieldSpec::LogCosh { matrix, weights } => {
                let d = matrix_from_rows(matrix, "log-cosh matrix")?;
                if d.nrows() != n {
                    return Err(Error::Dimension(format!("log-cosh matrix has {} rows, field has {n} variables", d.nrows())));
                }
                let w = match weights {
                    Some(w) if w.len() != d.ncols() => {
                        return Err(Error::Dimension(format!("{} weights for {} columns", w.len(), d.ncols())))
                    }
                    Some(w) => Vector::from_column_slice(w),
                    None => Vector::from_element(d.ncols(), 1.0),
                };
                Compiled::LogCosh(d, w)
            }
            FieldSpec::Cosh => Compiled::Cosh,
            FieldSpec::Exp => Compiled::Exp,
            FieldSpec::NegCos { gamma } => Compiled::NegCos(positive(gamma, n, "gamma")?),
            FieldSpec::SwingConjugate { gamma } => Compiled::SwingConjugate(positive(gamma, n, "gamma")?),
            FieldSpec::FlowStorage { gamma } => Compiled::FlowStorage(positive(gamma, n, "gamma")?),
            FieldSpec::CapacitorConjugate { beta } => {
                if !(*beta >= 0.0) {
                    return Err(Error::Input(format!("capacitor nonlinearity must be nonnegative, got {beta}")));
                }
                Compiled::CapacitorConjugate(*beta)
            }
            FieldSpec::Constant { value } => Compiled::Constant(*value),
            FieldSpec::Sum { fields } => {
                Compiled::Sum(fields.iter().map(|f| Compiled::new(f, n)).collect::<Result<_>>()?)
            }
            FieldSpec::Embed { indices, field } => {
                if let Some(i) = indices.iter().find(|&&i| i >= n) {
                    return Err(Error::Dimension(format!("embedded index {i} out of range for {n} variables")));
                }
                Compiled::Embed(indices.clone(), Box::new(Compiled::new(field, indices.len())?))
            }
            FieldSpec::Scaled { factor, field } => Compiled::Scaled(*factor, Box::new(Compiled::new(field, n)?)),
        })
    }

    fn value(&self, x: &Vector) -> f64 {
        match self {
            Compiled::Polynomial(terms) => terms
                .iter()
                .map(|(c, p)| c * x.iter().zip(p).map(|(x, k)| x.powi(*k)).product::<f64>())
                .sum(),
            Compiled::Quadratic(m) => 0.5 * x.dot(&(m * x)),
            Compiled::LogCosh(d, w) => d
                .tr_mul(x)
                .iter()
                .zip(w.iter())
                .map(|(v, w)| w * (v.abs() + (-2.0 * v.abs()).exp().ln_1p() - std::f64::consts::LN_2))
                .sum(),
            Compiled::Cosh => x.iter().map(|v| v.cosh()).sum(),
            Compiled::Exp => x.iter().map(|v| v.exp()).sum(),
            Compiled::NegCos(g) => -x.zip_map(g, |x, g| g * x.cos()).sum(),
            Compiled::SwingConjugate(g) => -x.zip_map(g, flow_conjugate).sum(),
            Compiled::FlowStorage(g) => -x.zip_map(g, |x, g| g * (1.0 - ratio(x, g).powi(2)).sqrt()).sum(),
            Compiled::CapacitorConjugate(b) => x
                .iter()
                .map(|&p| {
                    let q = charge(p, *b);
                    p * q - 0.5 * q * q - 0.25 * b * q.powi(4)
                })
                .sum(),
            Compiled::Constant(c) => *c,
            Compiled::Sum(fs) => fs.iter().map(|f| f.value(x)).sum(),
            Compiled::Embed(idx, f) => f.value(&gather(x, idx)),
            Compiled::Scaled(c, f) => c * f.value(x),
        }
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let n = x.len();
        match self {
            Compiled::Polynomial(terms) => {
                let mut g = Vector::zeros(n);
                for (c, p) in terms {
                    for k in 0..n {
                        if p[k] > 0 {
                            g[k] += c * monomial_derivative(x, p, k, None);
                        }
                    }
                }
                g
            }
            Compiled::Quadratic(m) => m * x,
            Compiled::LogCosh(d, w) => d * d.tr_mul(x).zip_map(w, |v, w| w * v.tanh()),
            Compiled::Cosh => x.map(f64::sinh),
            Compiled::Exp => x.map(f64::exp),
            Compiled::NegCos(g) => x.zip_map(g, |x, g| g * x.sin()),
            Compiled::SwingConjugate(g) => x.zip_map(g, |x, g| -ratio(x, g).asin()),
            Compiled::FlowStorage(g) => x.zip_map(g, |x, g| {
                let r = ratio(x, g);
                r / (1.0 - r * r).sqrt()
            }),
            Compiled::CapacitorConjugate(b) => x.map(|p| charge(p, *b)),
            Compiled::Constant(_) => Vector::zeros(n),
            Compiled::Sum(fs) => fs.iter().fold(Vector::zeros(n), |acc, f| acc + f.gradient(x)),
            Compiled::Embed(idx, f) => {
                let mut g = Vector::zeros(n);
                for (gi, &i) in f.gradient(&gather(x, idx)).iter().zip(idx) {
                    g[i] += gi;
                }
                g
            }
            Compiled::Scaled(c, f) => *c * f.gradient(x),
        }
    }

    fn hessian(&self, x: &Vector) -> Matrix {
        let n = x.len();
        match self {
            Compiled::Polynomial(terms) => {
                let mut h = Matrix::zeros(n, n);
                for (c, p) in terms {
                    for k in 0..n {
                        for l in 0..n {
                            if p[k] > 0 && p[l] > (k == l) as i32 {
                                h[(k, l)] += c * monomial_derivative(x, p, k, Some(l));
                            }
                        }
                    }
                }
                h
            }
            Compiled::Quadratic(m) => m.clone(),
            Compiled::LogCosh(d, w) => {
                let s = d.tr_mul(x).zip_map(w, |v, w| w * (1.0 - v.tanh().powi(2)));
                d * Matrix::from_diagonal(&s) * d.transpose()
            }
            Compiled::Cosh => Matrix::from_diagonal(&x.map(f64::cosh)),
            Compiled::Exp => Matrix::from_diagonal(&x.map(f64::exp)),
            Compiled::NegCos(g) => Matrix::from_diagonal(&x.zip_map(g, |x, g| g * x.cos())),
            Compiled::SwingConjugate(g) => {
                Matrix::from_diagonal(&x.zip_map(g, |x, g| -1.0 / (g * (1.0 - ratio(x, g).powi(2)).sqrt())))
            }
            Compiled::FlowStorage(g) => Matrix::from_diagonal(&x.zip_map(g, |x, g| {
                let r = ratio(x, g);
                1.0 / (g * (1.0 - r * r).powf(1.5))
            })),
            Compiled::CapacitorConjugate(b) => {
                Matrix::from_diagonal(&x.map(|p| 1.0 / (1.0 + 3.0 * b * charge(p, *b).powi(2))))
            }
            Compiled::Constant(_) => Matrix::zeros(n, n),
            Compiled::Sum(fs) => fs.iter().fold(Matrix::zeros(n, n), |acc, f| acc + f.hessian(x)),
            Compiled::Embed(idx, f) => {
                let mut h = Matrix::zeros(n, n);
                let sub = f.hessian(&gather(x, idx));
                for (a, &i) in idx.iter().enumerate() {
                    for (b, &j) in idx.iter().enumerate() {
                        h[(i, j)] += sub[(a, b)];
                    }
                }
                h
            }
            Compiled::Scaled(c, f) => *c * f.hessian(x),
        }
    }
}

fn gather(x: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| x[i]))
}

/// `∂/∂x_k` (and then `∂/∂x_l`) of `Πxᵢ^pᵢ`.
fn monomial_derivative(x: &Vector, p: &[i32], k: usize, l: Option<usize>) -> f64 {
    let mut q = p.to_vec();
    let mut c = q[k] as f64;
    q[k] -= 1;
    if let Some(l) = l {
        c *= q[l] as f64;
        q[l] -= 1;
    }
    c * x.iter().zip(&q).map(|(x, k)| x.powi(*k)).product::<f64>()
}

fn default_input_domain(m: usize) -> DomainSpec {
    DomainSpec::cube(m, 1.0)
}

fn sigma_from(s: &Option<Vec<f64>>, m: usize) -> Result<SignatureMatrix> {
    match s {
        None => Ok(SignatureMatrix::identity(m)),
        Some(d) if d.len() != m => Err(Error::Dimension(format!("sigma has {} entries for {m} inputs", d.len()))),
        Some(d) => SignatureMatrix::new(d.clone()),
    }
}

fn check_shape(m: &Matrix, shape: (usize, usize), what: &str) -> Result<()> {
    if m.shape() != shape {
        return Err(Error::Dimension(format!("{what} is {:?}, expected {:?}", m.shape(), shape)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSpec {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Rows>,
    /// Known reciprocity metric `G`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    /// Starting storage for the compatibility iteration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Rows>,
    /// State box for simulations; defaults to `[-1, 1]ⁿ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearSpec {
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_domain: Option<DomainSpec>,
    /// One field per state component of `f(x)`.
    pub drift: Vec<FieldSpec>,
    /// Constant `g`, `n × m`.
    pub input_matrix: Rows,
    /// One field per output component of `h(x)`.
    pub output: Vec<FieldSpec>,
    /// Constant metric; exclusive with `metric_generator`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Rows>,
    /// Hessian metric `∇²K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_generator: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianSpec {
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_domain: Option<DomainSpec>,
    pub k: FieldSpec,
    /// With `input_matrix`: `P(x)` on the state box and `σ = I`. Without it:
    /// `V(x, u)` on the joint box.
    pub potential: FieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_matrix: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n1: usize,
    pub h1: FieldSpec,
    pub h2: FieldSpec,
    pub p1: FieldSpec,
    pub p2: FieldSpec,
    pub pc: Rows,
    pub g1: Rows,
    /// Co-energy box for `(x1, x2)`, where `p1` and `p2` live.
    pub coenergy_domain: DomainSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortHamiltonianSpec {
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_domain: Option<DomainSpec>,
    pub h: FieldSpec,
    /// Constant skew `J`.
    pub j: Rows,
    /// `R(x) = ∇ρ(x)` on the co-energy `x = ∇H(z)`; omitted means lossless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipation: Option<FieldSpec>,
    /// Box on which `ρ` is evaluated; defaults to `domain`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coenergy_domain: Option<DomainSpec>,
    /// Constant `g`.
    pub g: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Linear(LinearSpec),
    Nonlinear(NonlinearSpec),
    HessianPseudoGradient(HessianSpec),
    PortHamiltonian(PortHamiltonianSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(flatten)]
    pub system: SystemSpec,
}

/// Parses a model file: one object or an array of objects.
pub fn parse_models(text: &str) -> Result<Vec<ModelSpec>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("malformed JSON: {e}")))?;
    // Parse per element so the error names the offending model.
    let parse = |v: serde_json::Value| {
        serde_json::from_value::<ModelSpec>(v).map_err(|e| Error::Input(format!("invalid model description: {e}")))
    };
    match value {
        serde_json::Value::Array(items) => items.into_iter().map(parse).collect(),
        other => Ok(vec![parse(other)?]),
    }
}

/// A linear system with its optional known metric.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub sys: LinearSystem,
    pub metric: Option<Matrix>,
    pub sigma: SignatureMatrix,
    pub q0: Option<Matrix>,
    pub domain: BoxDomain,
    pub input_domain: BoxDomain,
}

#[derive(Debug, Clone)]
pub enum ModelSystem {
    Linear(LinearModel),
    Nonlinear {
        system: AffineSystem,
        metric: MetricField,
        /// Present when the metric is a Hessian.
        metric_generator: Option<ScalarField>,
        sigma: SignatureMatrix,
    },
    HessianPseudoGradient {
        system: HessianPseudoGradientSystem,
        storage: Option<ScalarField>,
    },
    PortHamiltonian {
        system: PortHamiltonianSystem,
        split: Option<PhSplit>,
    },
}

impl ModelSystem {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSystem::Linear(_) => "linear",
            ModelSystem::Nonlinear { .. } => "nonlinear",
            ModelSystem::HessianPseudoGradient { .. } => "hessian_pseudo_gradient",
            ModelSystem::PortHamiltonian { .. } => "port_hamiltonian",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub description: String,
    pub spec: ModelSpec,
    pub system: ModelSystem,
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model> {
        let system = match &self.system {
            SystemSpec::Linear(s) => ModelSystem::Linear(build_linear(s)?),
            SystemSpec::Nonlinear(s) => build_nonlinear(s)?,
            SystemSpec::HessianPseudoGradient(s) => build_hessian(s)?,
            SystemSpec::PortHamiltonian(s) => build_port_hamiltonian(s)?,
        };
        Ok(Model {
            name: self.name.clone(),
            description: self.description.clone(),
            spec: self.clone(),
            system,
        })
    }
}

fn build_linear(s: &LinearSpec) -> Result<LinearModel> {
    let a = matrix_from_rows(&s.a, "A")?;
    let b = matrix_from_rows(&s.b, "B")?;
    let c = matrix_from_rows(&s.c, "C")?;
    let d = match &s.d {
        Some(d) => matrix_from_rows(d, "D")?,
        None => Matrix::zeros(c.nrows(), b.ncols()),
    };
    let sys = LinearSystem::new(a, b, c, d)?;
    let (n, m) = (sys.n(), sys.m());
    let square = |rows: &Option<Rows>, what: &str| -> Result<Option<Matrix>> {
        rows.as_ref()
            .map(|r| {
                let g = matrix_from_rows(r, what)?;
                check_shape(&g, (n, n), what)?;
                Ok(g)
            })
            .transpose()
    };
    let domain = s.domain.clone().unwrap_or_else(|| DomainSpec::cube(n, 1.0)).build()?;
    if domain.dim() != n {
        return Err(Error::Dimension(format!("state box has {} coordinates for {n} states", domain.dim())));
    }
    Ok(LinearModel {
        metric: square(&s.metric, "metric")?,
        q0: square(&s.q0, "q0")?,
        sigma: sigma_from(&s.sigma, m)?,
        domain,
        input_domain: default_input_domain(m).build()?,
        sys,
    })
}

fn build_input_domain(spec: &Option<DomainSpec>, m: usize) -> Result<BoxDomain> {
    let d = spec.clone().unwrap_or_else(|| default_input_domain(m)).build()?;
    if d.dim() != m {
        return Err(Error::Dimension(format!("input box has {} coordinates for {m} inputs", d.dim())));
    }
    Ok(d)
}

fn build_nonlinear(s: &NonlinearSpec) -> Result<ModelSystem> {
    let dom = s.domain.build()?;
    let n = dom.dim();
    let g = matrix_from_rows(&s.input_matrix, "input matrix")?;
    if g.nrows() != n || s.drift.len() != n {
        return Err(Error::Dimension(format!(
            "{} drift components and {} input-matrix rows for {n} states",
            s.drift.len(),
            g.nrows()
        )));
    }
    let m = g.ncols();
    if s.output.len() != m {
        return Err(Error::Dimension(format!("{} outputs for {m} inputs", s.output.len())));
    }
    let idom = build_input_domain(&s.input_domain, m)?;
    let drift = s.drift.iter().map(|f| f.build(&dom)).collect::<Result<Vec<_>>>()?;
    let output = s.output.iter().map(|f| f.build(&dom)).collect::<Result<Vec<_>>>()?;
    let (metric, metric_generator) = match (&s.metric, &s.metric_generator) {
        (Some(rows), None) => {
            let m = matrix_from_rows(rows, "metric")?;
            check_shape(&m, (n, n), "metric")?;
            (MetricField::constant(m, dom.clone()), None)
        }
        (None, Some(k)) => {
            let k = k.build(&dom)?;
            (MetricField::from_hessian(&k), Some(k))
        }
        _ => return Err(Error::Input("give exactly one of metric and metric_generator".into())),
    };
    let system = AffineSystem::new(
        dom,
        idom,
        move |x| Vector::from_iterator(drift.len(), drift.iter().map(|f| f.value(x))),
        move |_| g.clone(),
        move |x| Vector::from_iterator(output.len(), output.iter().map(|f| f.value(x))),
    );
    Ok(ModelSystem::Nonlinear { system, metric, metric_generator, sigma: sigma_from(&s.sigma, m)? })
}

fn build_hessian(s: &HessianSpec) -> Result<ModelSystem> {
    let dom = s.domain.build()?;
    let k = s.k.build(&dom)?;
    let (potential, sigma) = match &s.input_matrix {
        Some(rows) => {
            let g = matrix_from_rows(rows, "input matrix")?;
            let m = g.ncols();
            if s.sigma.as_ref().is_some_and(|d| d.iter().any(|v| *v != 1.0)) {
                return Err(Error::Input("an input matrix requires sigma = I".into()));
            }
            let idom = build_input_domain(&s.input_domain, m)?;
            (Potential::affine(s.potential.build(&dom)?, g, idom)?, SignatureMatrix::identity(m))
        }
        None => {
            let m = s
                .inputs
                .or_else(|| s.sigma.as_ref().map(Vec::len))
                .ok_or_else(|| Error::Input("a joint potential needs `inputs` or `sigma`".into()))?;
            let idom = build_input_domain(&s.input_domain, m)?;
            (Potential::General(s.potential.build(&dom.product(&idom))?), sigma_from(&s.sigma, m)?)
        }
    };
    let system = HessianPseudoGradientSystem::new(k, potential, sigma)?;
    let storage = s.storage.as_ref().map(|f| f.build(&dom)).transpose()?;
    Ok(ModelSystem::HessianPseudoGradient { system, storage })
}

fn build_port_hamiltonian(s: &PortHamiltonianSpec) -> Result<ModelSystem> {
    let dom = s.domain.build()?;
    let n = dom.dim();
    let h = s.h.build(&dom)?;
    let j = matrix_from_rows(&s.j, "J")?;
    check_shape(&j, (n, n), "J")?;
    let g = matrix_from_rows(&s.g, "g")?;
    if g.nrows() != n {
        return Err(Error::Dimension(format!("g has {} rows for {n} states", g.nrows())));
    }
    let idom = build_input_domain(&s.input_domain, g.ncols())?;
    let xdom = s.coenergy_domain.as_ref().map(DomainSpec::build).transpose()?.unwrap_or_else(|| dom.clone());
    let rho = s.dissipation.as_ref().map(|f| f.build(&xdom)).transpose()?;
    let system = PortHamiltonianSystem::new(
        h,
        move |_| j.clone(),
        move |x| rho.as_ref().map_or_else(|| Vector::zeros(x.len()), |r| r.gradient(x)),
        move |_| g.clone(),
        idom,
    );
    let split = s.split.as_ref().map(|sp| build_split(sp, &dom)).transpose()?;
    Ok(ModelSystem::PortHamiltonian { system, split })
}

fn build_split(s: &SplitSpec, dom: &BoxDomain) -> Result<PhSplit> {
    let n = dom.dim();
    if s.n1 > n {
        return Err(Error::Dimension(format!("split index {} exceeds {n} states", s.n1)));
    }
    let xdom = s.coenergy_domain.build()?;
    let (i1, i2): (Vec<usize>, Vec<usize>) = ((0..s.n1).collect(), (s.n1..n).collect());
    Ok(PhSplit {
        n1: s.n1,
        h1: s.h1.build(&dom.select(&i1))?,
        h2: s.h2.build(&dom.select(&i2))?,
        p1: s.p1.build(&xdom.select(&i1))?,
        p2: s.p2.build(&xdom.select(&i2))?,
        pc: matrix_from_rows(&s.pc, "pc")?,
        g1: matrix_from_rows(&s.g1, "g1")?,
    })
}
