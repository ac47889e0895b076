//! Adaptive Gauss-Legendre quadrature.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Default relative target for radial integrals.
pub const RELATIVE_TOLERANCE: f64 = 1e-10;
/// Absolute floor below which panels are accepted regardless.
pub const ABSOLUTE_FLOOR: f64 = 1e-14;

const ORDER: usize = 15;
const MAX_DEPTH: usize = 48;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// found by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Adaptive integrator with a fixed panel rule.
pub struct Integrator {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rtol: f64,
    atol: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self::new(RELATIVE_TOLERANCE, ABSOLUTE_FLOOR)
    }
}

impl Integrator {
    pub fn new(rtol: f64, atol: f64) -> Self {
        let (nodes, weights) = gauss_legendre(ORDER);
        Self { nodes, weights, rtol, atol }
    }

    fn panel<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
    }

    /// Integrates `f` over `[a, b]`. Panels are bisected until the whole-panel
    /// and two-half estimates agree to the tolerance scaled by the panel's
    /// share of the interval.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let total_len = (b - a).abs();
        let coarse = self.panel(&mut f, a, b);
        let mut scale = coarse.abs();
        let mut stack: Vec<(f64, f64, f64, usize)> = Vec::new();
        stack.push((a, b, coarse, 0));
        let mut sum = 0.0;
        let mut compensation = 0.0;
        while let Some((lo, hi, whole, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = self.panel(&mut f, lo, mid);
            let right = self.panel(&mut f, mid, hi);
            let refined = left + right;
            if !refined.is_finite() {
                return Err(Error::QuadratureNonConvergence { a: lo, b: hi });
            }
            scale = scale.max(refined.abs());
            let share = (hi - lo).abs() / total_len;
            let tol = (self.rtol * scale).max(self.atol) * share.max(1e-6);
            if (refined - whole).abs() <= tol {
                let y = refined - compensation;
                let t = sum + y;
                compensation = (t - sum) - y;
                sum = t;
            } else if depth >= MAX_DEPTH {
                return Err(Error::QuadratureNonConvergence { a: lo, b: hi });
            } else {
                stack.push((mid, hi, right, depth + 1));
                stack.push((lo, mid, left, depth + 1));
            }
        }
        Ok(sum)
    }
}

/// Convenience wrapper using the default tolerances.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    Integrator::default().integrate(f, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(15);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(28)).sum();
        assert!((s - 2.0 / 29.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x| (1.0 - x * x).sqrt(), 0.0, 1.0).unwrap();
        assert!((v - core::f64::consts::FRAC_PI_4).abs() < 1e-10);
        let v = integrate(|x| x.ln(), 0.0, 1.0).unwrap();
        assert!((v + 1.0).abs() < 1e-9);
    }
}
