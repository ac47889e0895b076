//! Carathéodory and Kobayashi metrics: closed forms, certified bounds, the
//! Lu ratio, and the necessary conditions for Kähler Carathéodory metrics.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bergman::{exponents, KernelSeries};
use crate::domain::{euclidean_norm, BoundaryFrame, Direction, DomainSpec, Point, Variant};
use crate::error::{Error, Result};
use crate::form::HermitianForm;
use crate::linalg;
use crate::socp::{Constraint, Program, SolverOptions, SparseRow};
use crate::C64;

/// What the convex solver and the certification step reported.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// Relative duality-gap bound at termination.
    pub gap: f64,
    /// Objective of the sampled program before certification.
    pub raw_value: f64,
    /// Certified upper bound of the candidate's modulus on the boundary.
    pub certified_sup: f64,
    /// Degree of the candidate family.
    pub degree: usize,
}

/// A value proven to be a lower bound, with solver diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifiedBound {
    pub value: f64,
    pub diagnostics: SolverDiagnostics,
}

/// `[lower, upper]` bracket for both `C(z, v)` and `K(z, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricInterval {
    pub lower: f64,
    pub upper: f64,
    pub diagnostics: Option<SolverDiagnostics>,
}

impl MetricInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn has_closed_form(spec: &DomainSpec) -> bool {
    matches!(spec.variant(), Variant::Disc | Variant::Ball { .. } | Variant::Polydisc { .. })
}

fn check_point(spec: &DomainSpec, z: &[C64], v: &[C64]) -> Result<()> {
    if v.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: v.len() });
    }
    if !spec.contains(z)? {
        return Err(Error::OutsideDomain);
    }
    Ok(())
}

/// Exact Carathéodory length on the disc, ball and polydisc, normalised so
/// that `C(0, v) = |v|` on the unit disc.
pub fn carath_exact(spec: &DomainSpec, z: &[C64], v: &[C64]) -> Result<f64> {
    check_point(spec, z, v)?;
    let s = spec.scale();
    let zeta: Vec<C64> = z.iter().map(|x| x / s).collect();
    let w: Vec<C64> = v.iter().map(|x| x / s).collect();
    match spec.variant() {
        Variant::Disc | Variant::Ball { .. } => {
            let x: f64 = zeta.iter().map(|a| a.norm_sqr()).sum();
            let inner: C64 = w.iter().zip(&zeta).map(|(a, b)| a * b.conj()).sum();
            let vv: f64 = w.iter().map(|a| a.norm_sqr()).sum();
            Ok((vv / (1.0 - x) + inner.norm_sqr() / ((1.0 - x) * (1.0 - x))).sqrt())
        }
        Variant::Polydisc { .. } => Ok(zeta
            .iter()
            .zip(&w)
            .map(|(a, b)| b.norm() / (1.0 - a.norm_sqr()))
            .fold(0.0, f64::max)),
        _ => Err(Error::Unsupported(alloc::format!("closed-form metric on {spec}"))),
    }
}

/// Exact Kobayashi length; equal to the Carathéodory length on these domains.
pub fn kobayashi_exact(spec: &DomainSpec, z: &[C64], v: &[C64]) -> Result<f64> {
    carath_exact(spec, z, v)
}

/// Certified lower bound for `C(z, v)` from the best candidate of degree
/// `d`, using `m` boundary samples in the sampled program.
pub fn carath_lower_bound(spec: &DomainSpec, z: &[C64], v: &[C64], d: usize, m: usize) -> Result<CertifiedBound> {
    carath_lower_bound_with(spec, z, v, d, m, &SolverOptions::default())
}

pub fn carath_lower_bound_with(
    spec: &DomainSpec,
    z: &[C64],
    v: &[C64],
    d: usize,
    m: usize,
    opts: &SolverOptions,
) -> Result<CertifiedBound> {
    check_point(spec, z, v)?;
    if d < 1 || m < 8 * d {
        return Err(Error::InvalidArgument(alloc::format!("need d >= 1 and M >= 8d (d = {d}, M = {m})")));
    }
    if v.iter().all(|x| x.norm() == 0.0) {
        return Err(Error::ZeroDirection);
    }
    if spec.dim() == 1 {
        circle_program(spec, z[0], v[0], d, m, opts)
    } else {
        majorant_program(spec, z, v, d, m, opts)
    }
}

/// Laurent exponents of the one-variable candidate family.
fn circle_exponents(spec: &DomainSpec, d: usize) -> Vec<i32> {
    let d = d as i32;
    match spec.variant() {
        Variant::Annulus { .. } => (-d..=d).filter(|&k| k != 0).collect(),
        _ => (1..=d).collect(),
    }
}

/// Boundary circles of a planar catalog member: `(radius, is_outer)`.
fn circles(spec: &DomainSpec) -> Vec<f64> {
    match spec.variant() {
        Variant::Annulus { r } => vec![spec.scale(), spec.scale() * r],
        _ => vec![spec.scale()],
    }
}

/// Laurent polynomial `f(ζ) = Σ a_k (ζ/ρ_k)^k − c₀` with `ρ_k` the outer
/// radius for `k > 0` and the inner radius for `k < 0`.
struct Laurent {
    outer: f64,
    inner: f64,
    pos: Vec<C64>,
    neg: Vec<C64>,
    c0: C64,
}

impl Laurent {
    fn eval(&self, zeta: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        let u = zeta / self.outer;
        for a in self.pos.iter().rev() {
            acc = (acc + a) * u;
        }
        if !self.neg.is_empty() {
            let w = C64::new(self.inner, 0.0) / zeta;
            let mut b = C64::new(0.0, 0.0);
            for a in self.neg.iter().rev() {
                b = (b + a) * w;
            }
            acc += b;
        }
        acc - self.c0
    }
}

/// Rigorous upper bound of a nonnegative trigonometric polynomial of degree
/// at most `degree` on the circle, by branch and bound with Bernstein's
/// inequality `‖F''‖ ≤ N² ‖F‖`.
pub fn trig_sup<F: Fn(f64) -> f64>(f: F, degree: usize) -> f64 {
    let n2 = (degree.max(1) * degree.max(1)) as f64;
    let cells0 = 8 * degree.max(1);
    let h0 = 2.0 * PI / cells0 as f64;
    let mut cells: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(cells0);
    let vals: Vec<f64> = (0..=cells0).map(|k| f(h0 * k as f64)).collect();
    let mut best = vals.iter().cloned().fold(0.0, f64::max);
    for k in 0..cells0 {
        cells.push((h0 * k as f64, h0 * (k + 1) as f64, vals[k], vals[k + 1]));
    }
    let mut upper = best / (1.0 - h0 * h0 * n2 / 8.0);
    for _round in 0..60 {
        let mut next_upper = best;
        let mut refine = Vec::new();
        let mut keep = Vec::new();
        for c in cells.drain(..) {
            let h = c.1 - c.0;
            let bound = c.2.max(c.3) + h * h * n2 * upper / 8.0;
            next_upper = next_upper.max(bound);
            if bound > best * (1.0 + 1e-11) {
                refine.push(c);
            } else {
                keep.push(c);
            }
        }
        upper = upper.min(next_upper);
        if refine.is_empty() || keep.len() + 2 * refine.len() > 2_000_000 {
            break;
        }
        cells = keep;
        for c in refine {
            let mid = 0.5 * (c.0 + c.1);
            let fm = f(mid);
            best = best.max(fm);
            cells.push((c.0, mid, c.2, fm));
            cells.push((mid, c.1, fm, c.3));
        }
    }
    upper.max(best)
}

pub(crate) fn circle_program(
    spec: &DomainSpec,
    z0: C64,
    v: C64,
    d: usize,
    m: usize,
    opts: &SolverOptions,
) -> Result<CertifiedBound> {
    let ks = circle_exponents(spec, d);
    let rads = circles(spec);
    let outer = rads[0];
    let inner = *rads.last().unwrap();
    let basis = |k: i32, zeta: C64| -> C64 {
        if k > 0 {
            (zeta / outer).powi(k)
        } else {
            (C64::new(inner, 0.0) / zeta).powi(-k)
        }
    };
    let deriv = |k: i32, zeta: C64| -> C64 {
        if k > 0 {
            (zeta / outer).powi(k - 1) * (k as f64 / outer)
        } else {
            (C64::new(inner, 0.0) / zeta).powi(-k) * (k as f64) / zeta
        }
    };
    let dim = 2 * ks.len();
    let mut objective = vec![0.0; dim];
    for (j, &k) in ks.iter().enumerate() {
        let w = deriv(k, z0) * v;
        objective[2 * j] = w.re;
        objective[2 * j + 1] = -w.im;
    }
    let per_circle = m.div_ceil(rads.len());
    // Samples are placed relative to arg z0 so that rotating the point
    // rotates the whole program.
    let phase = if z0.norm() > 0.0 { z0.arg() } else { 0.0 };
    let mut constraints = Vec::with_capacity(per_circle * rads.len());
    for &rho in &rads {
        for j in 0..per_circle {
            let zeta = C64::from_polar(rho, phase + 2.0 * PI * (j as f64 + 0.5) / per_circle as f64);
            let mut re = Vec::with_capacity(dim);
            let mut im = Vec::with_capacity(dim);
            for (i, &k) in ks.iter().enumerate() {
                let e = basis(k, zeta) - basis(k, z0);
                re.push((2 * i, e.re));
                re.push((2 * i + 1, -e.im));
                im.push((2 * i, e.im));
                im.push((2 * i + 1, e.re));
            }
            constraints.push(Constraint::UnitBall {
                rows: vec![SparseRow(re), SparseRow(im)],
                offset: vec![0.0, 0.0],
            });
        }
    }
    let program = Program { dim, objective, constraints };
    let sol = program.maximize(vec![0.0; dim], opts)?;
    let coeff = |j: usize| C64::new(sol.x[2 * j], sol.x[2 * j + 1]);
    let mut lp = Laurent { outer, inner, pos: Vec::new(), neg: Vec::new(), c0: C64::new(0.0, 0.0) };
    let mut slope = C64::new(0.0, 0.0);
    for (j, &k) in ks.iter().enumerate() {
        let a = coeff(j);
        lp.c0 += a * basis(k, z0);
        slope += a * deriv(k, z0) * v;
        if k > 0 {
            lp.pos.push(a);
        } else {
            if lp.neg.len() < (-k) as usize {
                lp.neg.resize((-k) as usize, C64::new(0.0, 0.0));
            }
            lp.neg[(-k - 1) as usize] = a;
        }
    }
    let span = (ks.iter().max().unwrap() - ks.iter().min().unwrap().min(&0)) as usize;
    let mut sup2 = 0.0f64;
    for &rho in &rads {
        sup2 = sup2.max(trig_sup(|t| lp.eval(C64::from_polar(rho, t)).norm_sqr(), span));
    }
    let sup = sup2.sqrt();
    if !(sup > 0.0) {
        return Err(Error::InfeasibleSlack { bound: sup });
    }
    Ok(CertifiedBound {
        value: slope.norm() / sup,
        diagnostics: SolverDiagnostics {
            iterations: sol.iterations,
            gap: sol.gap,
            raw_value: sol.value,
            certified_sup: sup,
            degree: d,
        },
    })
}

fn monomial(b: &[f64], alpha: &[i32]) -> f64 {
    b.iter().zip(alpha).map(|(x, &a)| x.powi(a)).product()
}

fn complex_monomial(z: &[C64], alpha: &[i32]) -> C64 {
    z.iter().zip(alpha).map(|(x, &a)| x.powi(a)).product()
}

/// `∂_v z^α` at `z`.
fn directional(z: &[C64], v: &[C64], alpha: &[i32]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..alpha.len() {
        if alpha[i] == 0 || v[i].norm() == 0.0 {
            continue;
        }
        let mut e = alpha.to_vec();
        e[i] -= 1;
        s += complex_monomial(z, &e) * (alpha[i] as f64) * v[i];
    }
    s
}

/// Parameter grid of one radial chart with about `count` points.
fn chart_grid(dim: usize, count: usize) -> Vec<Vec<f64>> {
    if dim == 0 {
        return vec![Vec::new()];
    }
    let g = ((count as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * g);
        for p in &out {
            for j in 0..g {
                let mut q = p.clone();
                q.push(j as f64 / (g - 1) as f64);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Upper bound of `m_fn` over the image of `[0, 1]^dim` under chart `k`,
/// given a Lipschitz constant `lambda` of `m_fn` in the radial variables.
fn chart_sup<F: Fn(&[f64]) -> f64>(spec: &DomainSpec, k: usize, m_fn: &F, lambda: f64) -> f64 {
    let dim = spec.radial_chart_dim();
    if dim == 0 {
        return m_fn(&spec.radial_chart(k, &[]));
    }
    struct Cell {
        lo: Vec<f64>,
        hi: Vec<f64>,
        val: f64,
        radius: f64,
    }
    let make = |lo: Vec<f64>, hi: Vec<f64>| -> Cell {
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let bc = spec.radial_chart(k, &center);
        let mut radius = 0.0f64;
        for mask in 0..(1usize << dim) {
            let corner: Vec<f64> =
                (0..dim).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect();
            let b = spec.radial_chart(k, &corner);
            let d2: f64 = b.iter().zip(&bc).map(|(x, y)| (x - y) * (x - y)).sum();
            radius = radius.max(d2.sqrt());
        }
        Cell { val: m_fn(&bc), radius: 1.05 * radius, lo, hi }
    };
    let g0 = [512usize, 32, 10, 6][(dim - 1).min(3)];
    let mut cells = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let lo: Vec<f64> = idx.iter().map(|&i| i as f64 / g0 as f64).collect();
        let hi: Vec<f64> = idx.iter().map(|&i| (i + 1) as f64 / g0 as f64).collect();
        cells.push(make(lo, hi));
        let mut j = 0;
        while j < dim {
            idx[j] += 1;
            if idx[j] < g0 {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == dim {
            break;
        }
    }
    let mut best = cells.iter().map(|c| c.val).fold(0.0, f64::max);
    let mut upper = f64::INFINITY;
    for _round in 0..80 {
        let tol = 1e-9 * best.max(1e-300);
        let mut refine = Vec::new();
        let mut keep = Vec::new();
        let mut round_upper = best;
        for c in cells.drain(..) {
            let bound = c.val + lambda * c.radius;
            round_upper = round_upper.max(bound);
            if bound > best + tol {
                refine.push(c);
            } else {
                keep.push(c);
            }
        }
        upper = upper.min(round_upper);
        if refine.is_empty() || keep.len() + 2 * refine.len() > 400_000 {
            break;
        }
        cells = keep;
        for c in refine {
            let axis = (0..dim)
                .max_by(|&a, &b| (c.hi[a] - c.lo[a]).partial_cmp(&(c.hi[b] - c.lo[b])).unwrap())
                .unwrap();
            let mid = 0.5 * (c.lo[axis] + c.hi[axis]);
            let mut hi1 = c.hi.clone();
            hi1[axis] = mid;
            let mut lo2 = c.lo.clone();
            lo2[axis] = mid;
            let a = make(c.lo, hi1);
            let b = make(lo2, c.hi);
            best = best.max(a.val).max(b.val);
            cells.push(a);
            cells.push(b);
        }
    }
    upper.max(best)
}

/// Reinhardt domains in dimension ≥ 2: the candidate's modulus on the
/// boundary is bounded by the phase-free majorant `Σ|a_α| b^α + |f(0)-term|`
/// over the radial boundary, which makes the sampled program a restriction.
/// The certified value then post-composes `g = Σ a_α w^α` with the disc
/// automorphism sending `g(z)/S` to 0, where `S` bounds `|g|` on the domain.
/// Candidates of every degree up to `d` are certified and the best is kept.
fn majorant_program(
    spec: &DomainSpec,
    z: &[C64],
    v: &[C64],
    d: usize,
    m: usize,
    opts: &SolverOptions,
) -> Result<CertifiedBound> {
    let mut best = majorant_candidate(spec, z, v, 1, m, opts)?;
    for k in 2..=d {
        let b = majorant_candidate(spec, z, v, k, m, opts)?;
        if b.value > best.value {
            best = b;
        }
    }
    best.diagnostics.degree = d;
    Ok(best)
}

fn majorant_candidate(
    spec: &DomainSpec,
    z: &[C64],
    v: &[C64],
    d: usize,
    m: usize,
    opts: &SolverOptions,
) -> Result<CertifiedBound> {
    let alphas: Vec<Vec<i32>> =
        exponents(spec, d as u32).into_iter().filter(|a| a.iter().any(|&x| x != 0)).collect();
    let charts = spec.radial_chart_count();
    let cdim = spec.radial_chart_dim();
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for k in 0..charts {
        for u in chart_grid(cdim, m.div_ceil(charts)) {
            samples.push(spec.radial_chart(k, &u));
        }
    }
    let nu: Vec<f64> = alphas
        .iter()
        .map(|a| samples.iter().map(|b| monomial(b, a)).fold(0.0, f64::max).max(1e-300))
        .collect();
    let na = alphas.len();
    let dim = 3 * na + 1;
    let mut objective = vec![0.0; dim];
    let mut c0_re = Vec::new();
    let mut c0_im = Vec::new();
    let mut constraints = Vec::new();
    for (j, a) in alphas.iter().enumerate() {
        let w = directional(z, v, a) / nu[j];
        objective[3 * j] = w.re;
        objective[3 * j + 1] = -w.im;
        let e = complex_monomial(z, a) / nu[j];
        c0_re.push((3 * j, e.re));
        c0_re.push((3 * j + 1, -e.im));
        c0_im.push((3 * j, e.im));
        c0_im.push((3 * j + 1, e.re));
        constraints.push(Constraint::Cone {
            rows: vec![SparseRow(vec![(3 * j, 1.0)]), SparseRow(vec![(3 * j + 1, 1.0)])],
            bound: SparseRow(vec![(3 * j + 2, 1.0)]),
        });
    }
    constraints.push(Constraint::Cone {
        rows: vec![SparseRow(c0_re), SparseRow(c0_im)],
        bound: SparseRow(vec![(3 * na, 1.0)]),
    });
    for b in &samples {
        let mut g: Vec<(usize, f64)> =
            alphas.iter().enumerate().map(|(j, a)| (3 * j + 2, monomial(b, a) / nu[j])).collect();
        g.push((3 * na, 1.0));
        constraints.push(Constraint::Linear { g: SparseRow(g), h: 1.0 });
    }
    let eps = 0.5 / (na as f64 + 1.0);
    let mut x0 = vec![0.0; dim];
    for j in 0..na {
        x0[3 * j + 2] = eps;
    }
    x0[3 * na] = eps;
    let program = Program { dim, objective, constraints };
    let sol = program.maximize(x0, opts)?;

    let coeffs: Vec<C64> = (0..na).map(|j| C64::new(sol.x[3 * j], sol.x[3 * j + 1]) / nu[j]).collect();
    let slope: C64 = alphas.iter().zip(&coeffs).map(|(a, c)| c * directional(z, v, a)).sum();
    let c0: C64 = alphas.iter().zip(&coeffs).map(|(a, c)| c * complex_monomial(z, a)).sum();
    let mods: Vec<f64> = coeffs.iter().map(|c| c.norm()).collect();
    let boxes = spec.modulus_box();
    let n = spec.dim();
    let mut lambda2 = 0.0;
    for i in 0..n {
        let mut li = 0.0;
        for (a, &ma) in alphas.iter().zip(&mods) {
            if a[i] == 0 {
                continue;
            }
            let mut bound = (a[i].unsigned_abs()) as f64 * ma;
            for (k, &e) in a.iter().enumerate() {
                let e = if k == i { e - 1 } else { e };
                let (lo, hi) = boxes[k];
                bound *= match e.cmp(&0) {
                    core::cmp::Ordering::Greater => hi.powi(e),
                    core::cmp::Ordering::Less => lo.powi(e),
                    core::cmp::Ordering::Equal => 1.0,
                };
            }
            li += bound;
        }
        lambda2 += li * li;
    }
    let lambda = lambda2.sqrt();
    let c0n = c0.norm();
    let m_fn = |b: &[f64]| -> f64 { alphas.iter().zip(&mods).map(|(a, &ma)| ma * monomial(b, a)).sum::<f64>() };
    let mut sup = 0.0f64;
    for k in 0..charts {
        sup = sup.max(chart_sup(spec, k, &m_fn, lambda));
    }
    if !(sup > c0n) || !sup.is_finite() {
        return Err(Error::InfeasibleSlack { bound: sup });
    }
    Ok(CertifiedBound {
        value: slope.norm() * sup / (sup * sup - c0n * c0n),
        diagnostics: SolverDiagnostics {
            iterations: sol.iterations,
            gap: sol.gap,
            raw_value: sol.value,
            certified_sup: sup,
            degree: d,
        },
    })
}

/// Upper bound `|v| / R` for `K(z, v)` from the largest round affine disc
/// `ζ ↦ z + ζ R v/|v|` found to stay inside the domain.
pub fn kobayashi_upper_bound(spec: &DomainSpec, z: &[C64], v: &[C64]) -> Result<f64> {
    check_point(spec, z, v)?;
    let vn = euclidean_norm(v);
    if vn == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let u: Vec<C64> = v.iter().map(|x| x / vn).collect();
    let inside = |r: f64| affine_disc_inside(spec, z, &u, r);
    let mut lo = spec.boundary_distance(z)?;
    if lo < 1e-12 {
        return Err(Error::DegenerateRadius);
    }
    if !inside(lo) {
        lo *= 1.0 - 1e-9;
    }
    let mut hi = 2.0 * lo;
    while inside(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 * spec.scale() {
            return Err(Error::DegenerateRadius);
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(vn / (lo * (1.0 - 1e-10)))
}

fn affine_disc_inside(spec: &DomainSpec, z: &[C64], u: &[C64], r: f64) -> bool {
    const RADII: usize = 48;
    const PHASES: usize = 512;
    let point = |rho: f64, theta: f64| -> Vec<C64> {
        let w = C64::from_polar(rho * r, theta);
        z.iter().zip(u).map(|(a, b)| a + w * b).collect()
    };
    for j in 1..=RADII {
        let rho = j as f64 / RADII as f64;
        let f = |theta: f64| spec.defining(&point(rho, theta));
        let mut best = (f64::NEG_INFINITY, 0usize);
        for k in 0..PHASES {
            let val = f(2.0 * PI * k as f64 / PHASES as f64);
            if val >= 0.0 || !val.is_finite() {
                return false;
            }
            if val > best.0 {
                best = (val, k);
            }
        }
        let h = 2.0 * PI / PHASES as f64;
        let (mut a, mut b) = (h * (best.1 as f64 - 1.0), h * (best.1 as f64 + 1.0));
        let g = 0.5 * (5.0f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        if f(0.5 * (a + b)) >= 0.0 {
            return false;
        }
    }
    true
}

/// Carathéodory bound `lower` and Kobayashi bound `upper` at `(z, v)`,
/// using closed forms where available.
pub fn ck_interval(spec: &DomainSpec, z: &[C64], v: &[C64], d: usize, m: usize) -> Result<MetricInterval> {
    if has_closed_form(spec) {
        return Ok(MetricInterval {
            lower: carath_exact(spec, z, v)?,
            upper: kobayashi_exact(spec, z, v)?,
            diagnostics: None,
        });
    }
    let lower = carath_lower_bound(spec, z, v, d, m)?;
    Ok(MetricInterval {
        lower: lower.value,
        upper: kobayashi_upper_bound(spec, z, v)?,
        diagnostics: Some(lower.diagnostics),
    })
}

/// How Carathéodory values are obtained in scans.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CarathPath {
    /// Closed forms only (disc, ball, polydisc).
    Exact,
    /// Certified lower bounds from the convex program.
    Optimize { degree: usize, samples: usize },
    /// Closed form when available, otherwise the convex program.
    Auto { degree: usize, samples: usize },
}

impl CarathPath {
    pub fn evaluate(&self, spec: &DomainSpec, z: &[C64], v: &[C64]) -> Result<(f64, Option<SolverDiagnostics>)> {
        match *self {
            CarathPath::Exact => Ok((carath_exact(spec, z, v)?, None)),
            CarathPath::Auto { .. } if has_closed_form(spec) => Ok((carath_exact(spec, z, v)?, None)),
            CarathPath::Optimize { degree, samples } | CarathPath::Auto { degree, samples } => {
                let b = carath_lower_bound(spec, z, v, degree, samples)?;
                Ok((b.value, Some(b.diagnostics)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LuEstimate {
    pub value: f64,
    pub witness_point: Point,
    pub witness_direction: Direction,
    pub evaluations: usize,
}

/// `max C(z, v) / B(z, v)` over the grid, a lower bound for the Lu constant.
pub fn lu_lower_bound(
    spec: &DomainSpec,
    series: &KernelSeries,
    points: &[Point],
    fan: &[Direction],
    path: CarathPath,
) -> Result<LuEstimate> {
    if points.is_empty() || fan.is_empty() {
        return Err(Error::InvalidArgument("Lu scan needs points and directions".into()));
    }
    if series.spec() != spec {
        return Err(Error::InvalidArgument("kernel series belongs to another domain".into()));
    }
    let mut best: Option<LuEstimate> = None;
    let mut evaluations = 0;
    for z in points {
        let g = series.metric_at(z)?;
        for v in fan {
            let (c, _) = path.evaluate(spec, z, v)?;
            let ratio = c / g.quad(v).sqrt();
            evaluations += 1;
            if best.as_ref().is_none_or(|b| ratio > b.value) {
                best = Some(LuEstimate {
                    value: ratio,
                    witness_point: z.clone(),
                    witness_direction: v.clone(),
                    evaluations: 0,
                });
            }
        }
    }
    let mut est = best.unwrap();
    est.evaluations = evaluations;
    if est.value > 1.0 + 1e-9 {
        return Err(Error::LuBoundViolated(est.value));
    }
    Ok(est)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianFit {
    pub form: HermitianForm,
    /// `max |C² − Q(v, v̄)| / C²` over the fan.
    pub residual: f64,
}

/// Least-squares fit of a Hermitian form to `v ↦ C(z, v)²` over the fan.
pub fn hermitian_fit_residual(spec: &DomainSpec, z: &[C64], fan: &[Direction], path: CarathPath) -> Result<HermitianFit> {
    let n = spec.dim();
    if fan.len() < 4 * n * n {
        return Err(Error::InvalidArgument(alloc::format!("fan needs at least {} directions", 4 * n * n)));
    }
    let mut c2 = Vec::with_capacity(fan.len());
    for v in fan {
        let c = path.evaluate(spec, z, v)?.0;
        c2.push(c * c);
    }
    fit_hermitian(n, fan, &c2)
}

/// Least-squares Hermitian form for prescribed values `targets[k] ≈ Q(v_k)`,
/// with rows weighted by `1 / targets[k]`.
pub fn fit_hermitian(n: usize, fan: &[Direction], targets: &[f64]) -> Result<HermitianFit> {
    let unknowns = n * n;
    let features = |v: &[C64]| -> Vec<f64> {
        let mut f = Vec::with_capacity(unknowns);
        for i in 0..n {
            f.push(v[i].norm_sqr());
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let p = v[i] * v[j].conj();
                f.push(2.0 * p.re);
                f.push(-2.0 * p.im);
            }
        }
        f
    };
    let mut a = Vec::with_capacity(fan.len() * unknowns);
    let mut b = Vec::with_capacity(fan.len());
    for (v, &t) in fan.iter().zip(targets) {
        let w = 1.0 / t;
        a.extend(features(v).into_iter().map(|x| x * w));
        b.push(1.0);
    }
    let x = linalg::least_squares(&a, fan.len(), unknowns, &b).ok_or(Error::RankDeficient)?;
    let mut m = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        m[i * n + i] = C64::new(x[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            m[i * n + j] = C64::new(x[k], x[k + 1]);
            m[j * n + i] = C64::new(x[k], -x[k + 1]);
            k += 2;
        }
    }
    let form = HermitianForm::symmetrised(n, m)?;
    let residual = fan
        .iter()
        .zip(targets)
        .map(|(v, &t)| (t - form.quad(v)).abs() / t)
        .fold(0.0, f64::max);
    Ok(HermitianFit { form, residual })
}

/// Hermitian forms sampled on a cube grid in the `2n` real coordinates
/// `(Re z₁, Im z₁, …)`, `points_per_axis` nodes per axis with spacing `h`,
/// centred at `origin`; row-major with the first real axis slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    pub origin: Point,
    pub h: f64,
    pub points_per_axis: usize,
    pub values: Vec<HermitianForm>,
}

impl MetricField {
    pub fn node(&self, index: &[usize]) -> Point {
        node_point(&self.origin, self.h, self.points_per_axis, index)
    }

    pub fn sample<F: FnMut(&Point) -> Result<HermitianForm>>(
        origin: Point,
        h: f64,
        points_per_axis: usize,
        mut f: F,
    ) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("grid spacing must be positive".into()));
        }
        let axes = 2 * origin.len();
        let total = points_per_axis.pow(axes as u32);
        let mut values = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = unflatten(flat, points_per_axis, axes);
            values.push(f(&node_point(&origin, h, points_per_axis, &idx))?);
        }
        Ok(MetricField { origin, h, points_per_axis, values })
    }
}

fn unflatten(mut flat: usize, m: usize, axes: usize) -> Vec<usize> {
    let mut idx = vec![0; axes];
    for a in (0..axes).rev() {
        idx[a] = flat % m;
        flat /= m;
    }
    idx
}

fn node_point(origin: &Point, h: f64, m: usize, index: &[usize]) -> Point {
    let half = (m as f64 - 1.0) / 2.0;
    Point::new(
        origin
            .iter()
            .enumerate()
            .map(|(i, z)| {
                z + C64::new((index[2 * i] as f64 - half) * h, (index[2 * i + 1] as f64 - half) * h)
            })
            .collect(),
    )
}

/// `max |∂_γ g_{αβ̄} − ∂_α g_{γβ̄}|` by central differences over interior
/// nodes; the differencing error is `O(h²)`.
pub fn kahler_residual(field: &MetricField) -> Result<f64> {
    let m = field.points_per_axis;
    let n = field.origin.len();
    let axes = 2 * n;
    if m < 3 || field.values.len() != m.pow(axes as u32) {
        return Err(Error::GridTooSmall);
    }
    let flat = |idx: &[usize]| idx.iter().fold(0usize, |acc, &i| acc * m + i);
    let mut worst = 0.0f64;
    for f in 0..field.values.len() {
        let idx = unflatten(f, m, axes);
        if idx.iter().any(|&i| i == 0 || i == m - 1) {
            continue;
        }
        let partial = |gamma: usize, a: usize, b: usize| -> C64 {
            let diff = |axis: usize| {
                let mut p = idx.clone();
                let mut q = idx.clone();
                p[axis] += 1;
                q[axis] -= 1;
                (field.values[flat(&p)].get(a, b) - field.values[flat(&q)].get(a, b)) / (2.0 * field.h)
            };
            (diff(2 * gamma) - C64::new(0.0, 1.0) * diff(2 * gamma + 1)) * 0.5
        };
        for gamma in 0..n {
            for a in 0..n {
                for b in 0..n {
                    worst = worst.max((partial(gamma, a, b) - partial(a, gamma, b)).norm());
                }
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoincidenceOptions {
    /// Relative bracket width below which `C = K` is declared.
    pub tol: f64,
    /// Tangential cone parameter in `‖P⊥v‖ < ε‖Pv‖`.
    pub eps: f64,
    pub degree: usize,
    pub samples: usize,
}

impl Default for CoincidenceOptions {
    fn default() -> Self {
        CoincidenceOptions { tol: 5e-2, eps: 0.1, degree: 5, samples: 160 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceRow {
    pub interval: MetricInterval,
    pub coincident: bool,
    /// `‖P⊥v‖ / ‖Pv‖`.
    pub tangential_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceReport {
    pub fraction_coincident: f64,
    pub tangential_fraction: f64,
    pub frame: BoundaryFrame,
    pub rows: Vec<CoincidenceRow>,
}

/// Share of fan directions where the Carathéodory/Kobayashi bracket closes,
/// and the share of those lying in the tangential cone.
pub fn coincidence_scan(spec: &DomainSpec, z: &[C64], fan: &[Direction], opts: &CoincidenceOptions) -> Result<CoincidenceReport> {
    let frame = spec.boundary_frame(z)?;
    let mut rows = Vec::with_capacity(fan.len());
    for v in fan {
        let interval = ck_interval(spec, z, v, opts.degree, opts.samples)?;
        let coincident = interval.width() < opts.tol * interval.lower;
        let t = euclidean_norm(&frame.tangential_part(v));
        let p = euclidean_norm(&frame.normal_part(v));
        let tangential_ratio = if t > 0.0 { p / t } else { f64::INFINITY };
        rows.push(CoincidenceRow { interval, coincident, tangential_ratio });
    }
    let hits = rows.iter().filter(|r| r.coincident).count();
    let tangential = rows.iter().filter(|r| r.coincident && r.tangential_ratio < opts.eps).count();
    let share = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };
    Ok(CoincidenceReport {
        fraction_coincident: share(hits, rows.len()),
        tangential_fraction: share(tangential, hits),
        frame,
        rows,
    })
}

/// Unit directions `t + η ν` with `t` in the complex tangent space of the
/// frame and `|η| ≤ max_ratio`, seeded.
pub fn tangential_fan(frame: &BoundaryFrame, count: usize, max_ratio: f64, seed: u64) -> Vec<Direction> {
    let n = frame.normal.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let raw: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let t = frame.tangential_part(&raw);
        let tn = euclidean_norm(&t);
        if tn < 1e-3 {
            continue;
        }
        let eta = C64::from_polar(max_ratio * rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI));
        let v: Vec<C64> = (0..n).map(|i| t[i] / tn + frame.normal[i] * eta).collect();
        out.push(Direction::new(v).unwrap().normalized());
    }
    out
}
