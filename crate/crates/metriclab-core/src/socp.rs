//! A small log-barrier interior-point solver for second-order cone programs
//! of the form: maximize `cᵀx` subject to unit-ball, cone and linear
//! constraints.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;

/// Sparse real vector as `(index, value)` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow(pub Vec<(usize, f64)>);

impl SparseRow {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&(i, a)| a * x[i]).sum()
    }

    fn axpy_into(&self, k: f64, out: &mut [f64]) {
        for &(i, a) in &self.0 {
            out[i] += k * a;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// `‖A x − b‖₂ ≤ 1`.
    UnitBall { rows: Vec<SparseRow>, offset: Vec<f64> },
    /// `‖A x‖₂ ≤ gᵀx`.
    Cone { rows: Vec<SparseRow>, bound: SparseRow },
    /// `gᵀx ≤ h`.
    Linear { g: SparseRow, h: f64 },
}

impl Constraint {
    fn barrier_parameter(&self) -> f64 {
        match self {
            Constraint::Cone { .. } => 2.0,
            _ => 1.0,
        }
    }

    /// Barrier value, or `None` outside the interior.
    fn value(&self, x: &[f64]) -> Option<f64> {
        let slack = match self {
            Constraint::UnitBall { rows, offset } => {
                1.0 - rows.iter().zip(offset).map(|(r, b)| (r.dot(x) - b).powi(2)).sum::<f64>()
            }
            Constraint::Cone { rows, bound } => {
                let t = bound.dot(x);
                if t <= 0.0 {
                    return None;
                }
                t * t - rows.iter().map(|r| r.dot(x).powi(2)).sum::<f64>()
            }
            Constraint::Linear { g, h } => h - g.dot(x),
        };
        if slack > 0.0 {
            Some(-slack.ln())
        } else {
            None
        }
    }

    /// `φ(x + α s) − φ(x)` from slack increments, which stays accurate when
    /// the slacks are tiny; `None` if the trial point leaves the interior.
    fn change(&self, x: &[f64], step: &[f64], alpha: f64) -> Option<f64> {
        let quad = |rows: &[SparseRow], offset: Option<&[f64]>| -> (f64, f64) {
            let mut norm2 = 0.0;
            let mut inc = 0.0;
            for (i, r) in rows.iter().enumerate() {
                let y = r.dot(x) - offset.map_or(0.0, |b| b[i]);
                let d = r.dot(step);
                norm2 += y * y;
                inc += alpha * d * (2.0 * y + alpha * d);
            }
            (norm2, inc)
        };
        let (s0, ds) = match self {
            Constraint::UnitBall { rows, offset } => {
                let (norm2, inc) = quad(rows, Some(offset));
                (1.0 - norm2, -inc)
            }
            Constraint::Cone { rows, bound } => {
                let t0 = bound.dot(x);
                let dt = alpha * bound.dot(step);
                if t0 + dt <= 0.0 {
                    return None;
                }
                let (norm2, inc) = quad(rows, None);
                (t0 * t0 - norm2, dt * (2.0 * t0 + dt) - inc)
            }
            Constraint::Linear { g, h } => (h - g.dot(x), -alpha * g.dot(step)),
        };
        let ratio = ds / s0;
        if ratio <= -1.0 || !ratio.is_finite() {
            return None;
        }
        Some(-ratio.ln_1p())
    }

    /// Adds the barrier gradient and Hessian at `x` into `grad`, `hess`.
    fn accumulate(&self, x: &[f64], grad: &mut [f64], hess: &mut [f64], n: usize) {
        match self {
            Constraint::UnitBall { rows, offset } => {
                let y: Vec<f64> = rows.iter().zip(offset).map(|(r, b)| r.dot(x) - b).collect();
                let s: f64 = y.iter().map(|v| v * v).sum();
                let w = 1.0 - s;
                for (r, yi) in rows.iter().zip(&y) {
                    r.axpy_into(2.0 * yi / w, grad);
                }
                // AᵀWA with W = (2/w) I + (4/w²) y yᵀ, written as rank-one terms.
                let mut g = vec![0.0; n];
                for (r, yi) in rows.iter().zip(&y) {
                    r.axpy_into(*yi, &mut g);
                }
                for r in rows {
                    rank_one(hess, n, &r.0, 2.0 / w);
                }
                dense_rank_one(hess, n, &g, 4.0 / (w * w));
            }
            Constraint::Cone { rows, bound } => {
                let t = bound.dot(x);
                let y: Vec<f64> = rows.iter().map(|r| r.dot(x)).collect();
                let d = t * t - y.iter().map(|v| v * v).sum::<f64>();
                // ∇D = 2t g − 2Aᵀy
                let mut dd = vec![0.0; n];
                bound.axpy_into(2.0 * t, &mut dd);
                for (r, yi) in rows.iter().zip(&y) {
                    r.axpy_into(-2.0 * yi, &mut dd);
                }
                for i in 0..n {
                    grad[i] -= dd[i] / d;
                }
                for r in rows {
                    rank_one(hess, n, &r.0, 2.0 / d);
                }
                rank_one(hess, n, &bound.0, -2.0 / d);
                dense_rank_one(hess, n, &dd, 1.0 / (d * d));
            }
            Constraint::Linear { g, h } => {
                let w = h - g.dot(x);
                g.axpy_into(1.0 / w, grad);
                rank_one(hess, n, &g.0, 1.0 / (w * w));
            }
        }
    }
}

fn rank_one(hess: &mut [f64], n: usize, v: &[(usize, f64)], k: f64) {
    for &(i, a) in v {
        let ka = k * a;
        for &(j, b) in v {
            hess[i * n + j] += ka * b;
        }
    }
}

fn dense_rank_one(hess: &mut [f64], n: usize, v: &[f64], k: f64) {
    let nz: Vec<(usize, f64)> = v.iter().copied().enumerate().filter(|(_, a)| *a != 0.0).collect();
    rank_one(hess, n, &nz, k);
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub dim: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Stop when the duality-gap bound `ν/t` falls below this fraction of
    /// the objective.
    pub rel_gap: f64,
    pub max_newton: usize,
    /// Barrier parameter growth per outer iteration.
    pub growth: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rel_gap: 1e-7, max_newton: 600, growth: 12.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Final relative gap bound.
    pub gap: f64,
}

impl Program {
    fn barrier(&self, x: &[f64]) -> Option<f64> {
        let mut s = 0.0;
        for c in &self.constraints {
            s += c.value(x)?;
        }
        Some(s)
    }

    fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Maximises the objective from a strictly feasible starting point.
    pub fn maximize(&self, x0: Vec<f64>, opts: &SolverOptions) -> Result<Solution> {
        let n = self.dim;
        let nu: f64 = self.constraints.iter().map(|c| c.barrier_parameter()).sum();
        if self.barrier(&x0).is_none() {
            return Err(Error::InvalidArgument("starting point is not strictly feasible".into()));
        }
        let mut x = x0;
        let mut t = 1.0;
        let mut iterations = 0usize;
        loop {
            // Centering: minimise −t cᵀx + φ(x) by damped Newton.
            let mut inner = 0usize;
            loop {
                inner += 1;
                if iterations >= opts.max_newton {
                    return Err(Error::SolverNonConvergence { iterations });
                }
                iterations += 1;
                let mut grad: Vec<f64> = self.objective.iter().map(|c| -t * c).collect();
                let mut hess = vec![0.0; n * n];
                for c in &self.constraints {
                    c.accumulate(&x, &mut grad, &mut hess, n);
                }
                let step = newton_step(&hess, &grad, n)?;
                let decrement: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
                // Rounding in the gradient puts a floor under the decrement
                // once t is large.
                if decrement <= 1e-7 || (inner > 40 && decrement < 1e-4) {
                    break;
                }
                let slope = self.objective_value(&step);
                let mut alpha = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let mut dphi = Some(0.0);
                    for c in &self.constraints {
                        dphi = match (dphi, c.change(&x, &step, alpha)) {
                            (Some(a), Some(b)) => Some(a + b),
                            _ => None,
                        };
                        if dphi.is_none() {
                            break;
                        }
                    }
                    if let Some(dphi) = dphi {
                        let change = -t * alpha * slope + dphi;
                        if change <= -0.25 * alpha * decrement {
                            for (a, s) in x.iter_mut().zip(&step) {
                                *a += alpha * s;
                            }
                            accepted = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if !accepted || alpha < 1e-12 {
                    return Err(Error::SolverNonConvergence { iterations });
                }
                if decrement < 1e-6 && alpha < 1e-3 {
                    break;
                }
            }
            let value = self.objective_value(&x);
            if !value.is_finite() || value.abs() > 1e15 {
                return Err(Error::SolverNonConvergence { iterations });
            }
            let gap = nu / t / value.abs().max(1e-3);
            if gap <= opts.rel_gap {
                return Ok(Solution { x, value, iterations, gap });
            }
            t *= opts.growth;
        }
    }
}

fn newton_step(hess: &[f64], grad: &[f64], n: usize) -> Result<Vec<f64>> {
    let trace: f64 = (0..n).map(|i| hess[i * n + i]).sum::<f64>() / n as f64;
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut l = hess.to_vec();
        for i in 0..n {
            l[i * n + i] += ridge;
        }
        if linalg::cholesky(&mut l, n) {
            let mut step: Vec<f64> = grad.iter().map(|g| -g).collect();
            linalg::cholesky_solve(&l, n, &mut step);
            // One round of iterative refinement against the unregularised system.
            let mut residual: Vec<f64> = (0..n)
                .map(|i| -grad[i] - (0..n).map(|j| hess[i * n + j] * step[j]).sum::<f64>())
                .collect();
            linalg::cholesky_solve(&l, n, &mut residual);
            for (s, r) in step.iter_mut().zip(&residual) {
                *s += r;
            }
            return Ok(step);
        }
        ridge = if ridge == 0.0 { 1e-14 * trace.max(1e-300) } else { ridge * 100.0 };
    }
    Err(Error::SolverNonConvergence { iterations: 0 })
}
