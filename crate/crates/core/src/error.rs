use thiserror::Error;

/// Errors raised by the analysis, conversion and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (residual {residual:e})")]
    NotSymmetric { residual: f64 },

    #[error("singular matrix: {context}")]
    Singular { context: String },

    #[error("degenerate metric at {point:?}: |det G| = {det:e}")]
    DegenerateMetric { point: Vec<f64>, det: f64 },

    #[error("invalid signature matrix entry {0} (expected +1 or -1)")]
    InvalidSignature(f64),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("system is not reciprocal (residual {residual:e} > tol {tol:e})")]
    NotReciprocal { residual: f64, tol: f64 },

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:e}, required margin {margin:e})")]
    NotHurwitz { abscissa: f64, margin: f64 },

    #[error("past inputs produce rank-deficient initial states (smallest singular value {0:e})")]
    RankDeficient(f64),

    #[error("truncation tail bound {bound:e} above tolerance after extending horizon to {horizon}")]
    TailBound { bound: f64, horizon: f64 },

    #[error("storage matrix fails the dissipation LMI (min eigenvalue {min_eig:e})")]
    LmiViolated { min_eig: f64 },

    #[error("iteration did not converge in {iterations} steps (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("matrix lost positive definiteness (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("storage matrix is not compatible with the metric: eigenvalue {0} of G^-1 Q is not +-1")]
    Incompatible(f64),

    #[error("sign condition violated: {0}")]
    SignCondition(String),

    #[error("Newton iteration failed: {0}")]
    Newton(String),

    #[error("metric is not Hessian (residual {residual:e} > tol {tol:e})")]
    NotHessian { residual: f64, tol: f64 },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("assumption ({assumption}) violated: {detail}")]
    Assumption { assumption: &'static str, detail: String },

    #[error("trajectory left the domain at t = {t}")]
    LeftDomain { t: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
