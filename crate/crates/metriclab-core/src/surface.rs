//! Potential theory on the disc and the annulus: the complete conformal
//! metric of curvature −2, Green's functions, logarithmic and analytic
//! capacity, and the comparison chain between them and the Bergman metric.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::bergman::KernelSeries;
use crate::domain::{Direction, DomainSpec, Point, Variant};
use crate::error::{Error, Result};
use crate::extremal::{circle_program, CertifiedBound};
use crate::hyperdual::{laplacian, HyperDual};
use crate::socp::SolverOptions;
use crate::C64;

/// Radii of the boundary circles: `(outer, inner)`; `inner` is `None` on a disc.
fn radii(spec: &DomainSpec) -> Result<(f64, Option<f64>)> {
    match spec.variant() {
        Variant::Disc => Ok((spec.scale(), None)),
        Variant::Annulus { r } => Ok((spec.scale(), Some(r * spec.scale()))),
        _ => Err(Error::Unsupported(alloc::format!("{spec} is not a planar disc or annulus"))),
    }
}

fn planar_point(spec: &DomainSpec, z: &[C64]) -> Result<C64> {
    radii(spec)?;
    if z.len() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: z.len() });
    }
    if !spec.contains(z)? {
        return Err(Error::OutsideDomain);
    }
    Ok(z[0])
}

fn density_hd(outer: f64, inner: Option<f64>, x: HyperDual, y: HyperDual) -> HyperDual {
    let rho2 = x * x + y * y;
    match inner {
        None => (HyperDual::constant(outer * outer) - rho2).recip() * outer,
        Some(ri) => {
            let l = (outer / ri).ln();
            let w = rho2.sqrt() * (1.0 / outer);
            let arg = -(w.ln()) * (PI / l);
            (w * arg.sin()).recip() * (PI / (2.0 * l * outer))
        }
    }
}

/// Density `λ` of the complete conformal metric `λ²|dz|²` with curvature
/// `−(1/λ²) ∂∂̄ log λ² = −2`.
///
/// On the annulus the density comes from the covering of the annulus by a
/// strip; each evaluation re-checks the curvature to `1e−8`.
pub fn poincare_density(spec: &DomainSpec, z: &[C64]) -> Result<f64> {
    let z = planar_point(spec, z)?;
    let (outer, inner) = radii(spec)?;
    let lambda = density_hd(outer, inner, HyperDual::constant(z.re), HyperDual::constant(z.im)).re;
    let lap = laplacian(|x, y| density_hd(outer, inner, x, y).ln() * 2.0, z.re, z.im);
    let curvature = -0.25 * lap / (lambda * lambda);
    if !((curvature + 2.0).abs() <= 1e-8) {
        return Err(Error::CurvatureValidation { curvature });
    }
    Ok(lambda)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollocationOptions {
    /// Fixed truncation; `None` doubles from 32 until the residual is met.
    pub truncation: Option<usize>,
    pub tolerance: f64,
}

impl Default for CollocationOptions {
    fn default() -> Self {
        CollocationOptions { truncation: None, tolerance: 1e-10 }
    }
}

/// Harmonic function
/// `u(z) = a₀ + b₀ log|z| + Re Σ_{k=1}^{N} [A_k (z/ρ_o)^k + B_k (ρ_i/z)^k]`
/// with boundary values `−log|ζ − z₀|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSolution {
    pub pole: C64,
    pub truncation: usize,
    pub outer_radius: f64,
    pub inner_radius: Option<f64>,
    pub a0: f64,
    pub b0: f64,
    pub outer: Vec<C64>,
    pub inner: Vec<C64>,
    /// Largest boundary mismatch at phases between the collocation nodes.
    pub boundary_residual: f64,
}

/// Coefficients `c_k = (1/S) Σ_j g(θ_j) e^{−ikθ_j}`, `k = 0..=n`.
fn fourier(g: impl Fn(f64) -> f64, n: usize, samples: usize) -> Vec<C64> {
    let vals: Vec<f64> = (0..samples).map(|j| g(2.0 * PI * j as f64 / samples as f64)).collect();
    (0..=n)
        .map(|k| {
            let mut s = C64::new(0.0, 0.0);
            for (j, v) in vals.iter().enumerate() {
                s += C64::from_polar(*v, -2.0 * PI * (k * j % samples) as f64 / samples as f64);
            }
            s / samples as f64
        })
        .collect()
}

impl HarmonicSolution {
    pub fn solve(spec: &DomainSpec, z0: &[C64], opts: &CollocationOptions) -> Result<Self> {
        let pole = planar_point(spec, z0)?;
        let (outer, inner) = radii(spec)?;
        match opts.truncation {
            Some(n) => {
                let sol = Self::solve_fixed(pole, outer, inner, n.max(1));
                if !(sol.boundary_residual <= opts.tolerance) {
                    return Err(Error::CollocationResidual { residual: sol.boundary_residual, tolerance: opts.tolerance });
                }
                Ok(sol)
            }
            None => {
                let mut n = 32;
                loop {
                    let sol = Self::solve_fixed(pole, outer, inner, n);
                    if sol.boundary_residual <= opts.tolerance {
                        return Ok(sol);
                    }
                    if n >= 4096 {
                        return Err(Error::CollocationResidual { residual: sol.boundary_residual, tolerance: opts.tolerance });
                    }
                    n *= 2;
                }
            }
        }
    }

    fn solve_fixed(pole: C64, outer: f64, inner: Option<f64>, n: usize) -> Self {
        let samples = 8 * n;
        let data = |rho: f64| move |t: f64| -(C64::from_polar(rho, t) - pole).norm().ln();
        let co = fourier(data(outer), n, samples);
        let mut sol = HarmonicSolution {
            pole,
            truncation: n,
            outer_radius: outer,
            inner_radius: inner,
            a0: 0.0,
            b0: 0.0,
            outer: vec![C64::new(0.0, 0.0); n],
            inner: Vec::new(),
            boundary_residual: 0.0,
        };
        match inner {
            None => {
                sol.a0 = co[0].re;
                for k in 1..=n {
                    sol.outer[k - 1] = co[k] * 2.0;
                }
            }
            Some(ri) => {
                let ci = fourier(data(ri), n, samples);
                let (lo, li) = (outer.ln(), ri.ln());
                sol.b0 = (co[0].re - ci[0].re) / (lo - li);
                sol.a0 = co[0].re - sol.b0 * lo;
                let r = ri / outer;
                sol.inner = vec![C64::new(0.0, 0.0); n];
                for k in 1..=n {
                    let rk = r.powi(k as i32);
                    let (d_o, d_i) = (co[k] * 2.0, ci[k] * 2.0);
                    let b_conj = (d_i - d_o * rk) / (1.0 - rk * rk);
                    sol.inner[k - 1] = b_conj.conj();
                    sol.outer[k - 1] = d_o - b_conj * rk;
                }
            }
        }
        let mut residual = 0.0f64;
        let circles: Vec<f64> = core::iter::once(outer).chain(inner).collect();
        for rho in circles {
            for j in 0..samples {
                let b = C64::from_polar(rho, 2.0 * PI * (j as f64 + 0.5) / samples as f64);
                residual = residual.max((sol.eval(b) + (b - pole).norm().ln()).abs());
            }
        }
        sol.boundary_residual = residual;
        sol
    }

    /// The harmonic correction `u(z)`.
    pub fn eval(&self, z: C64) -> f64 {
        let u = z / self.outer_radius;
        let mut acc = C64::new(0.0, 0.0);
        for a in self.outer.iter().rev() {
            acc = (acc + a) * u;
        }
        let mut value = self.a0 + acc.re;
        if let Some(ri) = self.inner_radius {
            let w = C64::new(ri, 0.0) / z;
            let mut b = C64::new(0.0, 0.0);
            for a in self.inner.iter().rev() {
                b = (b + a) * w;
            }
            value += self.b0 * z.norm().ln() + b.re;
        }
        value
    }

    /// `G(z, z₀) = log|z − z₀| + u(z)`.
    pub fn green(&self, z: C64) -> Result<f64> {
        if z == self.pole {
            return Err(Error::InvalidArgument("Green's function evaluated at its pole".into()));
        }
        Ok((z - self.pole).norm().ln() + self.eval(z))
    }
}

/// The Green's function with pole `z0`, evaluated at `z`.
pub fn greens_function(spec: &DomainSpec, z: &[C64], z0: &[C64]) -> Result<f64> {
    let zz = planar_point(spec, z)?;
    HarmonicSolution::solve(spec, z0, &CollocationOptions::default())?.green(zz)
}

/// Logarithmic capacity `c_β(z₀) = exp(u(z₀))`.
pub fn log_capacity(spec: &DomainSpec, z0: &[C64]) -> Result<f64> {
    log_capacity_with(spec, z0, &CollocationOptions::default()).map(|(c, _)| c)
}

pub fn log_capacity_with(spec: &DomainSpec, z0: &[C64], opts: &CollocationOptions) -> Result<(f64, HarmonicSolution)> {
    let sol = HarmonicSolution::solve(spec, z0, opts)?;
    Ok((sol.eval(sol.pole).exp(), sol))
}

/// Candidate degree used by the capacity bound when none is given.
pub fn capacity_degree(spec: &DomainSpec, z0: &[C64]) -> usize {
    match spec.variant() {
        Variant::Annulus { .. } => 24,
        _ => {
            let q = z0.first().map_or(0.0, |z| z.norm()) / spec.scale();
            if q <= 0.0 {
                8
            } else {
                ((1e-9f64.ln() / q.ln()).ceil() as usize).clamp(8, 96)
            }
        }
    }
}

/// Certified lower bound for the analytic capacity
/// `c_B(z₀) = sup{|f′(z₀)| : f: Ω → 𝔻 holomorphic, f(z₀) = 0}`.
pub fn analytic_capacity(spec: &DomainSpec, z0: &[C64], d: usize, m: usize) -> Result<CertifiedBound> {
    let z = planar_point(spec, z0)?;
    if d < 4 || m < 16 * d {
        return Err(Error::InvalidArgument(alloc::format!("need d >= 4 and M >= 16d (d = {d}, M = {m})")));
    }
    let opts = SolverOptions { rel_gap: 1e-9, ..SolverOptions::default() };
    circle_program(spec, z, C64::new(1.0, 0.0), d, m, &opts)
}

/// The four quantities compared at one point, with consecutive differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub z0: Point,
    /// Half the Bergman metric tensor, `B/2`.
    pub half_bergman: f64,
    pub poincare_sq: f64,
    pub log_cap_sq: f64,
    pub ana_cap_sq: f64,
    /// `[B/2 − λ², λ² − c_β², c_β² − c_B²]`.
    pub margins: [f64; 3],
    /// Holomorphic sectional curvature of the Bergman metric at `z0`.
    pub hsc: f64,
    pub collocation_residual: f64,
    pub solver_gap: f64,
    pub capacity_degree: usize,
}

pub fn chain_report(spec: &DomainSpec, series: &KernelSeries, z0: &Point) -> Result<ChainReport> {
    if series.spec() != spec {
        return Err(Error::InvalidArgument("kernel series belongs to another domain".into()));
    }
    let lambda = poincare_density(spec, z0)?;
    let g = series.metric_at(z0)?.get(0, 0).re;
    let hsc = series.hsc_at(z0, &Direction::axis(1, 0))?;
    let (cb, sol) = log_capacity_with(spec, z0, &CollocationOptions::default())?;
    let d = capacity_degree(spec, z0);
    let ana = analytic_capacity(spec, z0, d, 16 * d)?;
    let (half, lam2, cb2, ca2) = (g / 2.0, lambda * lambda, cb * cb, ana.value * ana.value);
    Ok(ChainReport {
        z0: z0.clone(),
        half_bergman: half,
        poincare_sq: lam2,
        log_cap_sq: cb2,
        ana_cap_sq: ca2,
        margins: [half - lam2, lam2 - cb2, cb2 - ca2],
        hsc,
        collocation_residual: sol.boundary_residual,
        solver_gap: ana.diagnostics.gap,
        capacity_degree: d,
    })
}

/// `B(z₀) − 2 c_B(z₀)²`, with `B` the Bergman metric tensor.
pub fn rigidity_gap(spec: &DomainSpec, series: &KernelSeries, z0: &Point) -> Result<f64> {
    if series.spec() != spec {
        return Err(Error::InvalidArgument("kernel series belongs to another domain".into()));
    }
    planar_point(spec, z0)?;
    let g = series.metric_at(z0)?.get(0, 0).re;
    let d = capacity_degree(spec, z0);
    let c = analytic_capacity(spec, z0, d, 16 * d)?.value;
    Ok(g - 2.0 * c * c)
}
