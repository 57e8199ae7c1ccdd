//! Reciprocity, passivity and relaxation analysis for input-state-output
//! systems, with conversions between pseudo-gradient and port-Hamiltonian
//! forms and structure-aware simulation.

pub mod diff;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod legendre;
pub mod linalg;
pub mod linear;
pub mod models;
pub mod nonlinear;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    AffineSystem, BoxDomain, DerivativeCheck, JacobianKind, Matrix, MetricField, NonlinearSystem,
    ScalarField, Signal, SignatureMatrix, Vector,
};
