//! Recovery of the metric `G` from the Hankel operator of a stable
//! reciprocal system.
//!
//! A past input `u(s)`, `s ≤ 0`, steers the state from rest to
//! `x₀ = ∫₀^∞ e^{At} B u(−t) dt`. The free response after time zero then
//! yields `q(x₀) = ∫₀^∞ (σy(t))ᵀ u(−t) dt = x₀ᵀ G x₀`, so polarization over
//! enough past inputs pins down `G`. Integrals are truncated at a horizon
//! that is doubled until a tail bound falls below tolerance.

use serde::Serialize;

use super::{check_sigma, LinearSystem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::quadrature;
use crate::types::{Matrix, Signal, SignatureMatrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct HankelOptions {
    pub horizon: f64,
    /// Required stability margin: every eigenvalue of `A` has real part
    /// below `−margin`.
    pub margin: f64,
    pub tail_tol: f64,
    pub quadrature_tol: f64,
    pub max_doublings: usize,
}

impl Default for HankelOptions {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            margin: 1e-3,
            tail_tol: 1e-10,
            quadrature_tol: 1e-13,
            max_doublings: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HankelRecovery {
    #[serde(skip)]
    pub g: Matrix,
    pub horizon: f64,
    pub tail_bound: f64,
    pub min_singular_value: f64,
}

/// Orthonormal Laguerre functions `u(s) = √2·eˢ·Lₖ(−2s)·v` on `s ≤ 0`,
/// cycling through the input directions; `n` signals in all. Plain
/// exponentials `e^{ks}` give a Cauchy-like state matrix whose conditioning
/// collapses already at `n = 4`.
pub fn default_past_inputs(n: usize, m: usize) -> Vec<Signal> {
    let m = m.max(1);
    (0..n)
        .map(|k| {
            let (order, dir) = (k / m, k % m);
            Signal::new(m, move |s| {
                let mut v = Vector::zeros(m);
                v[dir] = std::f64::consts::SQRT_2 * s.exp() * laguerre(order, -2.0 * s);
                v
            })
        })
        .collect()
}

/// `Lₖ(x)` by the three-term recurrence.
fn laguerre(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 - x) * cur - j * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

pub fn recover_metric_hankel(
    sys: &LinearSystem,
    sigma: &SignatureMatrix,
    horizon: f64,
    past_inputs: &[Signal],
) -> Result<Matrix> {
    let opts = HankelOptions {
        horizon,
        ..HankelOptions::default()
    };
    Ok(recover_metric_hankel_with(sys, sigma, &opts, past_inputs)?.g)
}

pub fn recover_metric_hankel_with(
    sys: &LinearSystem,
    sigma: &SignatureMatrix,
    opts: &HankelOptions,
    past_inputs: &[Signal],
) -> Result<HankelRecovery> {
    check_sigma(sys, sigma)?;
    let n = sys.n();
    if past_inputs.len() < n {
        return Err(Error::Input(format!(
            "need at least {n} past inputs, got {}",
            past_inputs.len()
        )));
    }
    if let Some(bad) = past_inputs.iter().find(|u| u.dim() != sys.m()) {
        return Err(Error::Dimension(format!(
            "past input has dimension {}, system has {} inputs",
            bad.dim(),
            sys.m()
        )));
    }
    let abscissa = linalg::spectral_abscissa(&sys.a);
    if !(abscissa < -opts.margin) {
        return Err(Error::NotHurwitz {
            abscissa,
            margin: opts.margin,
        });
    }
    let alpha = -abscissa;
    let gain = sys.c.norm() * sys.b.norm() / alpha;

    let mut horizon = opts.horizon;
    let mut doublings = 0;
    let (states, tail_bound) = loop {
        let states: Vec<Vector> = past_inputs
            .iter()
            .map(|u| initial_state(sys, u, horizon, opts.quadrature_tol))
            .collect();
        let worst_state = states.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let bound = gain * worst_state * (-alpha * horizon).exp();
        let input_tail = past_inputs
            .iter()
            .map(|u| sup_norm(u, horizon))
            .fold(0.0, f64::max);
        if bound < opts.tail_tol && input_tail <= opts.tail_tol {
            break (states, bound);
        }
        if doublings == opts.max_doublings {
            return Err(Error::TailBound {
                bound: bound.max(input_tail),
                horizon,
            });
        }
        horizon *= 2.0;
        doublings += 1;
    };

    let x = Matrix::from_columns(&states);
    let sv = x.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-10 * smax.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient(smin));
    }

    // Polarization: q(uᵢ+uⱼ) − q(uᵢ) − q(uⱼ) = 2 xᵢᵀ G xⱼ.
    let k = past_inputs.len();
    let diag: Vec<f64> = past_inputs
        .iter()
        .map(|u| quadratic_form(sys, sigma, u, horizon, opts.quadrature_tol).1)
        .collect();
    let mut gram = Matrix::zeros(k, k);
    for i in 0..k {
        gram[(i, i)] = diag[i];
        for j in (i + 1)..k {
            let sum = past_inputs[i].add(&past_inputs[j]);
            let q = quadratic_form(sys, sigma, &sum, horizon, opts.quadrature_tol).1;
            let v = 0.5 * (q - diag[i] - diag[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    // G = X⁺ᵀ M X⁺ with X⁺ = Xᵀ(XXᵀ)⁻¹, which is X⁻¹ when k = n.
    let pinv = x.transpose() * linalg::inverse(&(&x * x.transpose()), "state sample matrix")?;
    let g = pinv.transpose() * gram * &pinv;
    Ok(HankelRecovery {
        g: 0.5 * (&g + g.transpose()),
        horizon,
        tail_bound,
        min_singular_value: smin,
    })
}

/// The state reached at time zero and the Hankel quadratic form `q(x₀)` for
/// one past input, both truncated at `horizon`.
pub(crate) fn quadratic_form(
    sys: &LinearSystem,
    sigma: &SignatureMatrix,
    u: &Signal,
    horizon: f64,
    tol: f64,
) -> (Vector, f64) {
    let x0 = initial_state(sys, u, horizon, tol);
    let sc = sigma.matrix() * &sys.c;
    let a = sys.a.clone();
    let x = x0.clone();
    let q = quadrature::integrate(
        &|t: f64| (&sc * linalg::expm(&(&a * t)) * &x).dot(&u.at(-t)),
        0.0,
        horizon,
        tol,
    );
    (x0, q)
}

fn initial_state(sys: &LinearSystem, u: &Signal, horizon: f64, tol: f64) -> Vector {
    quadrature::integrate_vector(
        &|t: f64| linalg::expm(&(&sys.a * t)) * (&sys.b * u.at(-t)),
        0.0,
        horizon,
        tol,
    )
}

/// Sampled `sup ‖u(−t)‖` for `t ∈ [T, 2T]`.
fn sup_norm(u: &Signal, horizon: f64) -> f64 {
    (0..=64)
        .map(|k| u.at(-horizon * (1.0 + k as f64 / 64.0)).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn laguerre_values() {
        // L₂(x) = 1 − 2x + x²/2, L₃(x) = 1 − 3x + 3x²/2 − x³/6.
        for x in [0.0, 0.5, 2.0, 7.0] {
            assert_abs_diff_eq!(laguerre(2, x), 1.0 - 2.0 * x + 0.5 * x * x, epsilon = 1e-12);
            assert_abs_diff_eq!(laguerre(3, x), 1.0 - 3.0 * x + 1.5 * x * x - x.powi(3) / 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn scalar_closed_form() {
        let sys = LinearSystem::scalar(-1.0, 1.0, 1.0, 0.0);
        let sigma = SignatureMatrix::identity(1);
        let u = Signal::new(1, |s| Vector::from_element(1, s.exp()));
        let (x0, q) = quadratic_form(&sys, &sigma, &u, 40.0, 1e-13);
        assert_abs_diff_eq!(x0[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(q, 0.25, epsilon = 1e-12);
        let g = recover_metric_hankel(&sys, &sigma, 5.0, &[u]).unwrap();
        assert_abs_diff_eq!(g[(0, 0)], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_past_input_gives_zero_form() {
        let sys = LinearSystem::scalar(-2.0, 1.0, 3.0, 0.0);
        let (x0, q) = quadratic_form(&sys, &SignatureMatrix::identity(1), &Signal::zero(1), 20.0, 1e-12);
        assert_eq!(x0[0], 0.0);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn diagonal_metric_recovered() {
        // G = diag(2, 3), P = diag(1, 6): A = −G⁻¹P = diag(−½, −2), GB = Cᵀ.
        let g = Matrix::from_diagonal(&Vector::from_column_slice(&[2.0, 3.0]));
        let a = Matrix::from_diagonal(&Vector::from_column_slice(&[-0.5, -2.0]));
        let c = Matrix::from_row_slice(1, 2, &[1.0, 1.5]);
        let b = g.clone().try_inverse().unwrap() * c.transpose();
        let sys = LinearSystem::new(a, b, c, Matrix::zeros(1, 1)).unwrap();
        let rec = recover_metric_hankel_with(
            &sys,
            &SignatureMatrix::identity(1),
            &HankelOptions::default(),
            &default_past_inputs(2, 1),
        )
        .unwrap();
        assert!((&rec.g - &g).norm() / g.norm() < 1e-4, "{}", rec.g);
        assert!(rec.tail_bound < 1e-10);
    }

    #[test]
    fn unstable_system_is_rejected() {
        let sys = LinearSystem::scalar(0.5, 1.0, 1.0, 0.0);
        let err = recover_metric_hankel(&sys, &SignatureMatrix::identity(1), 5.0, &default_past_inputs(1, 1))
            .unwrap_err();
        assert!(matches!(err, Error::NotHurwitz { .. }));
    }

    #[test]
    fn repeated_inputs_are_rank_deficient() {
        let sys = LinearSystem::new(
            Matrix::from_diagonal(&Vector::from_column_slice(&[-1.0, -2.0])),
            Matrix::from_row_slice(2, 1, &[1.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let u = default_past_inputs(1, 1).remove(0);
        let err = recover_metric_hankel(&sys, &SignatureMatrix::identity(1), 5.0, &[u.clone(), u])
            .unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
    }

    #[test]
    fn slowly_decaying_input_hits_the_tail_guard() {
        let sys = LinearSystem::scalar(-1.0, 1.0, 1.0, 0.0);
        let opts = HankelOptions {
            max_doublings: 2,
            ..HankelOptions::default()
        };
        let u = Signal::new(1, |_| Vector::from_element(1, 1.0));
        let err = recover_metric_hankel_with(&sys, &SignatureMatrix::identity(1), &opts, &[u]).unwrap_err();
        assert!(matches!(err, Error::TailBound { .. }));
    }
}
