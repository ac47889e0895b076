//! Hyper-dual numbers for exact second derivatives of scalar functions.

use core::ops::{Add, Div, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;

/// `a + b ε₁ + c ε₂ + d ε₁ε₂` with `ε₁² = ε₂² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperDual {
    pub re: f64,
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
}

impl HyperDual {
    pub fn constant(x: f64) -> Self {
        HyperDual { re: x, e1: 0.0, e2: 0.0, e12: 0.0 }
    }

    /// A variable seeded in both infinitesimal directions, so that `e12` of
    /// `f(var(x))` is `f''(x)`.
    pub fn variable(x: f64) -> Self {
        HyperDual { re: x, e1: 1.0, e2: 1.0, e12: 0.0 }
    }

    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        HyperDual {
            re: f,
            e1: df * self.e1,
            e2: df * self.e2,
            e12: df * self.e12 + d2f * self.e1 * self.e2,
        }
    }

    pub fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re, -1.0 / (self.re * self.re))
    }

    pub fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.re))
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.re;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        HyperDual { re: self.re + o.re, e1: self.e1 + o.e1, e2: self.e2 + o.e2, e12: self.e12 + o.e12 }
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        HyperDual { re: self.re - o.re, e1: self.e1 - o.e1, e2: self.e2 - o.e2, e12: self.e12 - o.e12 }
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        HyperDual { re: -self.re, e1: -self.e1, e2: -self.e2, e12: -self.e12 }
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        HyperDual {
            re: self.re * o.re,
            e1: self.re * o.e1 + self.e1 * o.re,
            e2: self.re * o.e2 + self.e2 * o.re,
            e12: self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
        }
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Mul<f64> for HyperDual {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        HyperDual { re: self.re * k, e1: self.e1 * k, e2: self.e2 * k, e12: self.e12 * k }
    }
}

impl Add<f64> for HyperDual {
    type Output = Self;
    fn add(self, k: f64) -> Self {
        HyperDual { re: self.re + k, ..self }
    }
}

/// Laplacian `f_xx + f_yy` of `f(x, y)` at a point, exact up to rounding.
pub fn laplacian<F: Fn(HyperDual, HyperDual) -> HyperDual>(f: F, x: f64, y: f64) -> f64 {
    let fxx = f(HyperDual::variable(x), HyperDual::constant(y)).e12;
    let fyy = f(HyperDual::constant(x), HyperDual::variable(y)).e12;
    fxx + fyy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_derivatives() {
        let x = HyperDual::variable(0.7);
        let f = (x * x).sin() / x.exp();
        let h = 1e-4;
        let g = |t: f64| (t * t).sin() / t.exp();
        let fd = (g(0.7 + h) - 2.0 * g(0.7) + g(0.7 - h)) / (h * h);
        assert!((f.e12 - fd).abs() < 1e-6);
        let lap = laplacian(|x, y| (x * x + y * y).ln(), 0.3, 0.4);
        assert!(lap.abs() < 1e-12);
    }
}
