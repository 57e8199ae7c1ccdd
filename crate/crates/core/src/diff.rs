//! Central finite differences. These back every derivative check in the
//! crate, and stand in for derivatives a field does not supply.

use crate::error::{Error, Result};
use crate::types::{BoxDomain, Matrix, Vector};

/// Step for first derivatives: `max(1e-6, 1e-6·|xᵢ|)`.
pub fn default_step(xi: f64) -> f64 {
    (1e-6 * xi.abs()).max(1e-6)
}

/// Step for second and third differences of values, where rounding is
/// amplified by `1/h²` or `1/h³`.
pub fn higher_order_step(xi: f64) -> f64 {
    (1e-4 * xi.abs()).max(1e-4)
}

fn check_stencil(domain: Option<&BoxDomain>, x: &Vector, steps: &[f64]) -> Result<()> {
    let Some(domain) = domain else {
        return Ok(());
    };
    if x.len() != domain.dim() {
        return Err(Error::Dimension(format!(
            "point has length {}, domain has dimension {}",
            x.len(),
            domain.dim()
        )));
    }
    for i in 0..x.len() {
        let lo = x[i] - steps[i];
        let hi = x[i] + steps[i];
        if lo < domain.lower()[i] || hi > domain.upper()[i] {
            return Err(Error::OutsideDomain {
                point: x.iter().copied().collect(),
            });
        }
    }
    Ok(())
}

fn steps_for(x: &Vector, h: Option<f64>) -> Vec<f64> {
    x.iter().map(|xi| h.unwrap_or_else(|| default_step(*xi))).collect()
}

/// Central-difference gradient of `f` at `x`. With a domain, every stencil
/// point `x ± h·eᵢ` must lie inside it.
pub fn finite_difference_gradient<F>(
    f: &F,
    x: &Vector,
    h: Option<f64>,
    domain: Option<&BoxDomain>,
) -> Result<Vector>
where
    F: Fn(&Vector) -> f64 + ?Sized,
{
    let steps = steps_for(x, h);
    check_stencil(domain, x, &steps)?;
    Ok(gradient_with_steps(f, x, &steps))
}

/// Central-difference Jacobian of `f` at `x`, column `j` holding `∂f/∂xⱼ`.
pub fn finite_difference_jacobian<F>(
    f: &F,
    x: &Vector,
    h: Option<f64>,
    domain: Option<&BoxDomain>,
) -> Result<Matrix>
where
    F: Fn(&Vector) -> Vector + ?Sized,
{
    let steps = steps_for(x, h);
    check_stencil(domain, x, &steps)?;
    Ok(jacobian_with_steps(f, x, &steps))
}

/// Largest absolute entry of `M − Mᵀ`.
pub fn symmetry_residual(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    Ok(worst)
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    0.5 * (m + m.transpose())
}

fn gradient_with_steps<F>(f: &F, x: &Vector, steps: &[f64]) -> Vector
where
    F: Fn(&Vector) -> f64 + ?Sized,
{
    let mut g = Vector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let h = steps[i];
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

fn jacobian_with_steps<F>(f: &F, x: &Vector, steps: &[f64]) -> Matrix
where
    F: Fn(&Vector) -> Vector + ?Sized,
{
    let mut cols = Vec::with_capacity(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let h = steps[i];
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        cols.push((fp - fm) / (2.0 * h));
    }
    if cols.is_empty() {
        let rows = f(x).len();
        return Matrix::zeros(rows, 0);
    }
    Matrix::from_columns(&cols)
}

pub fn gradient_unchecked<F>(f: &F, x: &Vector) -> Vector
where
    F: Fn(&Vector) -> f64 + ?Sized,
{
    gradient_with_steps(f, x, &steps_for(x, None))
}

pub fn jacobian_unchecked<F>(f: &F, x: &Vector) -> Matrix
where
    F: Fn(&Vector) -> Vector + ?Sized,
{
    jacobian_with_steps(f, x, &steps_for(x, None))
}

/// Hessian from values alone, using second differences with the wider step.
pub fn hessian_from_value<F>(f: &F, x: &Vector) -> Matrix
where
    F: Fn(&Vector) -> f64 + ?Sized,
{
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| higher_order_step(*v)).collect();
    let f0 = f(x);
    let mut out = Matrix::zeros(n, n);
    let mut xp = x.clone();
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in (i + 1)..n {
            let mut eval = |si: f64, sj: f64| {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Second differences of each component of a vector map: entry `[l][(i, j)]`
/// approximates `∂²g_l/∂xᵢ∂xⱼ`.
fn second_differences<F>(g: &F, x: &Vector, step: impl Fn(f64) -> f64) -> Vec<Matrix>
where
    F: Fn(&Vector) -> Vector + ?Sized,
{
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| step(*v)).collect();
    let g0 = g(x);
    let m = g0.len();
    let mut out = vec![Matrix::zeros(n, n); m];
    let mut xp = x.clone();
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let gp = g(&xp);
        xp[i] = x[i] - h[i];
        let gm = g(&xp);
        xp[i] = x[i];
        for l in 0..m {
            out[l][(i, i)] = (gp[l] - 2.0 * g0[l] + gm[l]) / (h[i] * h[i]);
        }
        for j in (i + 1)..n {
            let mut eval = |si: f64, sj: f64| {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                let v = g(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let d = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            for l in 0..m {
                out[l][(i, j)] = d[l];
                out[l][(j, i)] = d[l];
            }
        }
    }
    out
}

/// Averages a 3-index array over all index permutations.
fn symmetrize_three(t: &[Matrix]) -> Vec<Matrix> {
    let n = t.len();
    let mut out = vec![Matrix::zeros(n, n); n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                out[a][(b, c)] = (t[a][(b, c)]
                    + t[a][(c, b)]
                    + t[b][(a, c)]
                    + t[b][(c, a)]
                    + t[c][(a, b)]
                    + t[c][(b, a)])
                    / 6.0;
            }
        }
    }
    out
}

/// Third partials `∂³K/∂x_l∂xᵢ∂xⱼ` from the gradient, by second differences
/// of each gradient component with step ~1e-4.
pub fn third_partials_from_gradient<F>(g: &F, x: &Vector) -> Vec<Matrix>
where
    F: Fn(&Vector) -> Vector + ?Sized,
{
    symmetrize_three(&second_differences(g, x, higher_order_step))
}

/// Step for third differences of values. Rounding grows like `ε/h³`, so the
/// step is larger than for the gradient path: about `2e-3` keeps rounding
/// near `1e-7·|f|`.
fn value_third_step(xi: f64) -> f64 {
    (2e-3 * xi.abs()).max(2e-3)
}

/// Third partials from values alone (nested central differences, step ~2e-3).
pub fn third_partials_from_value<F>(f: &F, x: &Vector) -> Vec<Matrix>
where
    F: Fn(&Vector) -> f64 + ?Sized,
{
    let grad = |y: &Vector| {
        let h: Vec<f64> = y.iter().map(|v| value_third_step(*v)).collect();
        gradient_with_steps(f, y, &h)
    };
    symmetrize_three(&second_differences(&grad, x, value_third_step))
}
