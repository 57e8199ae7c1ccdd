//! Composite Gauss-Legendre quadrature with panel doubling.

use std::sync::OnceLock;

use crate::types::Vector;

pub const NODES_PER_PANEL: usize = 32;
const MAX_PANELS: usize = 1 << 12;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule32() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES_PER_PANEL))
}

/// Fixed composite rule with `panels` equal panels on `[a, b]`.
pub fn composite<F>(f: &F, a: f64, b: f64, panels: usize) -> Vector
where
    F: Fn(f64) -> Vector + ?Sized,
{
    let (nodes, weights) = rule32();
    let width = (b - a) / panels as f64;
    let mut acc: Option<Vector> = None;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        for (t, w) in nodes.iter().zip(weights) {
            let v = f(mid + 0.5 * width * t) * (0.5 * width * w);
            acc = Some(match acc {
                Some(s) => s + v,
                None => v,
            });
        }
    }
    acc.unwrap_or_else(|| Vector::zeros(0))
}

/// Integrates a vector-valued `f` on `[a, b]`, doubling the panel count until
/// successive estimates differ by less than `tol·max(1, |I|)`.
pub fn integrate_vector<F>(f: &F, a: f64, b: f64, tol: f64) -> Vector
where
    F: Fn(f64) -> Vector + ?Sized,
{
    let mut panels = 1;
    let mut prev = composite(f, a, b, panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = composite(f, a, b, panels);
        let scale = next.amax().max(1.0);
        let change = (&next - &prev).amax();
        prev = next;
        if change <= tol * scale {
            break;
        }
    }
    prev
}

pub fn integrate<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    integrate_vector(&|t| Vector::from_element(1, f(t)), a, b, tol)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_two() {
        let (x, w) = gauss_legendre(32);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert_abs_diff_eq!(s, 2.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn exponential_decay_integral() {
        let i = integrate(&|t: f64| (-2.0 * t).exp(), 0.0, 40.0, 1e-12);
        assert_abs_diff_eq!(i, 0.5, epsilon = 1e-12);
    }
}
