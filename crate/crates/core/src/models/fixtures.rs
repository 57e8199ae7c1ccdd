//! Small linear systems whose structural properties are known in closed
//! form, used as ground truth throughout the test suites.

use super::spec::{LinearSpec, ModelSpec, SystemSpec};

#[derive(Debug, Clone)]
pub struct Fixture {
    pub spec: ModelSpec,
    /// Reciprocal with respect to the attached metric.
    pub reciprocal: bool,
    pub passive: bool,
    /// Admits a symmetric form with a positive definite metric.
    pub relaxation: bool,
}

fn linear(name: &str, description: &str, spec: LinearSpec) -> ModelSpec {
    ModelSpec { name: name.into(), description: description.into(), system: SystemSpec::Linear(spec) }
}

/// `ẋ = −x + u`, `y = x` with `G = 1`.
pub fn scalar_relaxation() -> ModelSpec {
    linear(
        "scalar-relaxation",
        "first-order lag x' = -x + u, y = x; reciprocal, passive and a relaxation system",
        LinearSpec {
            a: vec![vec![-1.0]],
            b: vec![vec![1.0]],
            c: vec![vec![1.0]],
            d: Some(vec![vec![0.0]]),
            metric: Some(vec![vec![1.0]]),
            sigma: None,
            q0: Some(vec![vec![1.0]]),
            domain: None,
        },
    )
}

/// A rotation driven through `x₁` and observed through `x₂`. The impulse
/// response `−sin t` is not symmetric under any diagonal metric.
pub fn gyrator() -> ModelSpec {
    linear(
        "gyrator",
        "lossless rotation driven on x1 and observed on x2; not reciprocal for any diagonal metric",
        LinearSpec {
            a: vec![vec![0.0, 1.0], vec![-1.0, 0.0]],
            b: vec![vec![1.0], vec![0.0]],
            c: vec![vec![0.0, 1.0]],
            d: None,
            metric: Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            sigma: None,
            q0: None,
            domain: None,
        },
    )
}

/// Reciprocal for `G = diag(1, −1)` and passive with `Q = I`, which is
/// already compatible with `G`. The starting guess `diag(1, 2)` is not.
pub fn indefinite_g() -> ModelSpec {
    linear(
        "indefinite-G",
        "damped oscillator reciprocal for the indefinite metric diag(1, -1); passive with Q = I",
        LinearSpec {
            a: vec![vec![-1.0, -2.0], vec![2.0, -1.0]],
            b: vec![vec![1.0], vec![0.0]],
            c: vec![vec![1.0, 0.0]],
            d: None,
            metric: Some(vec![vec![1.0, 0.0], vec![0.0, -1.0]]),
            sigma: None,
            q0: Some(vec![vec![1.0, 0.0], vec![0.0, 2.0]]),
            domain: None,
        },
    )
}

pub fn fixture_library() -> Vec<Fixture> {
    vec![
        Fixture { spec: scalar_relaxation(), reciprocal: true, passive: true, relaxation: true },
        Fixture { spec: gyrator(), reciprocal: false, passive: false, relaxation: false },
        Fixture { spec: indefinite_g(), reciprocal: true, passive: true, relaxation: false },
    ]
}
