//! Gauss–Legendre rules on (-1, 1).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights, nodes strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussGrid {
    pub fn new(order: usize) -> Result<Self> {
        gauss_legendre(order)
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ wᵢ fᵢ` for samples on the nodes.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.order());
        self.weights.iter().zip(samples).map(|(w, f)| w * f).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, w)| w * f(t))
            .sum()
    }

    /// Nodes and weights affinely mapped to `(a, b)`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (p0 - x * p1) / (1.0 - x * x);
    (p1, dp)
}

/// Builds the `n`-point Gauss–Legendre rule by Newton iteration on `P_n`
/// started from Chebyshev-like guesses.
pub fn gauss_legendre(n: usize) -> Result<GaussGrid> {
    if n < 2 {
        return Err(Error::InvalidOrder(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(GaussGrid { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_orders() {
        assert_eq!(gauss_legendre(1), Err(Error::InvalidOrder(1)));
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn two_point_rule() {
        let g = gauss_legendre(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((g.nodes()[0] + r).abs() < 1e-15);
        assert!((g.nodes()[1] - r).abs() < 1e-15);
        assert!((g.weights()[0] - 1.0).abs() < 1e-15);
        assert!((g.weights()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_point_rule() {
        let g = gauss_legendre(3).unwrap();
        assert_eq!(g.nodes()[1], 0.0);
        assert!((g.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn invariants_hold_across_orders() {
        for n in [2, 3, 7, 16, 33, 64, 96, 128, 192] {
            let g = gauss_legendre(n).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 2.0).abs() < 1e-14, "n={n} sum={total}");
            for i in 0..n {
                assert!((g.nodes()[i] + g.nodes()[n - 1 - i]).abs() < 1e-14);
                assert!(g.weights()[i] > 0.0);
                if i > 0 {
                    assert!(g.nodes()[i] > g.nodes()[i - 1]);
                }
            }
            assert!(g.nodes()[0] > -1.0 && g.nodes()[n - 1] < 1.0);
        }
    }

    #[test]
    fn monomial_exactness() {
        for n in [4, 9, 20, 64] {
            let g = gauss_legendre(n).unwrap();
            for k in 0..2 * n {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = g.integrate_fn(|t| t.powi(k as i32));
                let tol = if k % 2 == 1 { 1e-15 } else { 1e-13 * exact };
                assert!((got - exact).abs() <= tol, "n={n} k={k}");
            }
        }
        let g = gauss_legendre(64).unwrap();
        assert!((g.integrate_fn(|t| t.powi(8)) - 2.0 / 9.0).abs() < 1e-14);
    }
}
