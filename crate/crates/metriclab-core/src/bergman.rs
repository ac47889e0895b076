//! Truncated Bergman kernels and everything derived from them: the metric,
//! its derivatives, holomorphic sectional curvature and the Bergman
//! representative coordinates.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::domain::{Direction, DomainSpec, ExponentSet, Point};
use crate::error::{Error, Result};
use crate::fan;
use crate::form::HermitianForm;
use crate::C64;

/// One orthogonal monomial `z^α` with `c_α = 1 / ‖z^α‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub alpha: Vec<i32>,
    pub coeff: f64,
    /// `ln c_α`; kept separately because `c_α` over- or underflows for
    /// Laurent monomials of high degree.
    pub ln_coeff: f64,
}

/// `K_D(z, t) = Σ_{|α| ≤ D} c_α z^α t̄^α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSeries {
    spec: DomainSpec,
    degree_cap: u32,
    entries: Vec<SeriesEntry>,
}

/// Allowed exponents with `Σ|α_i| ≤ d`, in lexicographic order.
pub fn exponents(spec: &DomainSpec, d: u32) -> Vec<Vec<i32>> {
    fn rec(spec: &DomainSpec, i: usize, left: i32, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if i == spec.dim() {
            out.push(cur.clone());
            return;
        }
        let lo = match spec.exponent_set(i) {
            ExponentSet::Natural => 0,
            ExponentSet::Integer => -left,
        };
        for a in lo..=left {
            cur.push(a);
            rec(spec, i + 1, left - a.abs(), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(spec, 0, d as i32, &mut Vec::new(), &mut out);
    out
}

fn falling(a: i32, k: u8) -> f64 {
    (0..k as i32).map(|j| (a - j) as f64).product()
}

/// Multiset of derivative indices: per coordinate, the number of `∂_z`
/// (holomorphic) and `∂_{t̄}` (antiholomorphic) derivatives.
type Order = (Vec<u8>, Vec<u8>);

struct Logs(Vec<Option<C64>>);

impl Logs {
    fn new(z: &[C64], conjugate: bool) -> Self {
        Logs(
            z.iter()
                .map(|&w| {
                    if w.norm() == 0.0 {
                        None
                    } else {
                        let l = w.ln();
                        Some(if conjugate { l.conj() } else { l })
                    }
                })
                .collect(),
        )
    }
}

impl KernelSeries {
    pub fn build(spec: &DomainSpec, degree_cap: u32) -> Result<Self> {
        if degree_cap < 2 {
            return Err(Error::InvalidArgument("degree cap must be at least 2".into()));
        }
        let mut entries = Vec::new();
        for alpha in exponents(spec, degree_cap) {
            let ln_coeff = -spec.monomial_log_norm(&alpha)?;
            entries.push(SeriesEntry { coeff: ln_coeff.exp(), ln_coeff, alpha });
        }
        Ok(Self { spec: *spec, degree_cap, entries })
    }

    /// Reassembles a series (e.g. from a cache), checking the invariants.
    pub fn from_parts(spec: DomainSpec, degree_cap: u32, entries: Vec<SeriesEntry>) -> Result<Self> {
        let expected = exponents(&spec, degree_cap);
        if expected.len() != entries.len()
            || expected.iter().zip(&entries).any(|(a, e)| *a != e.alpha)
            || entries.iter().any(|e| !e.ln_coeff.is_finite())
        {
            return Err(Error::InvalidArgument("series entries do not match the spec".into()));
        }
        Ok(Self { spec, degree_cap, entries })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn degree_cap(&self) -> u32 {
        self.degree_cap
    }

    pub fn entries(&self) -> &[SeriesEntry] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn check(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: z.len() });
        }
        Ok(())
    }

    fn term(&self, e: &SeriesEntry, lz: &Logs, lt: &Logs, order: (&[u8], &[u8])) -> Result<C64> {
        let mut acc = C64::new(e.ln_coeff, 0.0);
        let mut pre = 1.0;
        for i in 0..e.alpha.len() {
            let a = e.alpha[i];
            let (h, b) = (order.0[i], order.1[i]);
            pre *= falling(a, h) * falling(a, b);
            if pre == 0.0 {
                return Ok(C64::new(0.0, 0.0));
            }
            for (pow, log) in [(a - h as i32, lz.0[i]), (a - b as i32, lt.0[i])] {
                match (pow, log) {
                    (0, _) => {}
                    (p, Some(l)) => acc += l * p as f64,
                    (p, None) if p > 0 => return Ok(C64::new(0.0, 0.0)),
                    _ => return Err(Error::OutsideDomain),
                }
            }
        }
        Ok(acc.exp() * pre)
    }

    /// `∂_z^h ∂_{t̄}^b K_D(z, t)` with per-coordinate derivative counts.
    pub fn derivative(&self, z: &[C64], t: &[C64], hol: &[u8], anti: &[u8]) -> Result<C64> {
        self.check(z)?;
        self.check(t)?;
        let (lz, lt) = (Logs::new(z, false), Logs::new(t, true));
        let mut s = C64::new(0.0, 0.0);
        for e in &self.entries {
            s += self.term(e, &lz, &lt, (hol, anti))?;
        }
        Ok(s)
    }

    pub fn kernel(&self, z: &[C64], t: &[C64]) -> Result<C64> {
        let zero = vec![0u8; self.dim()];
        self.derivative(z, t, &zero, &zero)
    }

    /// All diagonal derivatives `∂^h ∂̄^b K(z, z)` with `|h| ≤ max_h`,
    /// `|b| ≤ max_b`, in one pass over the series.
    fn table(&self, z: &[C64], max_h: u8, max_b: u8) -> Result<BTreeMap<Order, C64>> {
        self.check(z)?;
        let n = self.dim();
        let orders_h = orders_up_to(n, max_h);
        let orders_b = orders_up_to(n, max_b);
        let (lz, lt) = (Logs::new(z, false), Logs::new(z, true));
        let mut sums = vec![C64::new(0.0, 0.0); orders_h.len() * orders_b.len()];
        for e in &self.entries {
            for (i, h) in orders_h.iter().enumerate() {
                for (j, b) in orders_b.iter().enumerate() {
                    sums[i * orders_b.len() + j] += self.term(e, &lz, &lt, (h, b))?;
                }
            }
        }
        let mut map = BTreeMap::new();
        for (i, h) in orders_h.iter().enumerate() {
            for (j, b) in orders_b.iter().enumerate() {
                map.insert((h.clone(), b.clone()), sums[i * orders_b.len() + j]);
            }
        }
        Ok(map)
    }

    /// Jet of the Bergman metric at `z`: `g`, `∂g` and `∂∂̄g`, all from
    /// term-wise derivatives of the series.
    pub fn metric_jet(&self, z: &Point) -> Result<MetricJet> {
        let n = self.dim();
        let t = self.table(z, 2, 2)?;
        let s = t[&(vec![0; n], vec![0; n])].re;
        if !(s > 0.0) {
            return Err(Error::IndefiniteMetric);
        }
        let ld = |idx: &[(usize, bool)]| log_derivative(&t, s, n, idx);
        let mut g = vec![C64::new(0.0, 0.0); n * n];
        let mut dg = vec![C64::new(0.0, 0.0); n * n * n];
        let mut ddg = vec![C64::new(0.0, 0.0); n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] = ld(&[(a, false), (b, true)]);
                for c in 0..n {
                    dg[(c * n + a) * n + b] = ld(&[(a, false), (c, false), (b, true)]);
                    for d in 0..n {
                        ddg[((c * n + d) * n + a) * n + b] =
                            ld(&[(a, false), (c, false), (b, true), (d, true)]);
                    }
                }
            }
        }
        Ok(MetricJet { n, g: HermitianForm::new(n, g)?, dg, ddg })
    }

    /// `g_{αβ̄}(z) = ∂_α ∂̄_β log K_D(z, z)`.
    pub fn metric_at(&self, z: &Point) -> Result<HermitianForm> {
        let n = self.dim();
        let t = self.table(z, 1, 1)?;
        let s = t[&(vec![0; n], vec![0; n])].re;
        if !(s > 0.0) {
            return Err(Error::IndefiniteMetric);
        }
        let mut g = vec![C64::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] = log_derivative(&t, s, n, &[(a, false), (b, true)]);
            }
        }
        HermitianForm::new(n, g)
    }

    /// Bergman length `B(z, v) = g(v, v̄)^{1/2}`.
    pub fn bergman_length(&self, z: &Point, v: &Direction) -> Result<f64> {
        Ok(self.metric_at(z)?.quad(v).sqrt())
    }

    /// Holomorphic sectional curvature `R(v, v̄, v, v̄) / g(v, v̄)²`.
    pub fn hsc_at(&self, z: &Point, v: &Direction) -> Result<f64> {
        Ok(self.metric_jet(z)?.hsc(v)?)
    }

    /// `Φ_p(z) = log(K(z,z) K(p,p) / |K(z,p)|²)`.
    pub fn potential_phi(&self, p: &Point, z: &Point) -> Result<f64> {
        let kzz = self.kernel(z, z)?.re;
        let kpp = self.kernel(p, p)?.re;
        let kzp = self.kernel(z, p)?;
        if kzp.norm() < 1e-12 * (kzz * kpp).sqrt() {
            return Err(Error::ZeroSet);
        }
        Ok((kzz.ln() + kpp.ln() - 2.0 * kzp.norm().ln()).max(0.0))
    }

    /// Summary of `hsc_at` over all point/direction pairs.
    pub fn curvature_scan(&self, points: &[Point], fan: &[Direction]) -> Result<CurvatureScan> {
        if points.is_empty() || fan.is_empty() {
            return Err(Error::InvalidArgument("curvature scan needs points and directions".into()));
        }
        let mut scan = CurvatureScan {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            mean: 0.0,
            arg_min: (0, 0),
            arg_max: (0, 0),
        };
        let mut count = 0usize;
        for (i, z) in points.iter().enumerate() {
            let jet = self.metric_jet(z)?;
            for (j, v) in fan.iter().enumerate() {
                let h = jet.hsc(v)?;
                if h < scan.min {
                    scan.min = h;
                    scan.arg_min = (i, j);
                }
                if h > scan.max {
                    scan.max = h;
                    scan.arg_max = (i, j);
                }
                scan.mean += h;
                count += 1;
            }
        }
        scan.mean /= count as f64;
        Ok(scan)
    }

    /// Bergman representative coordinates based at `p`.
    pub fn rep_coords(&self, p: &Point) -> Result<RepMap<'_>> {
        RepMap::new(self, p)
    }

    /// Checks the potential identity and the pull-back of the reference
    /// ball metric along the representative map at the given samples.
    pub fn isometry_residual(&self, p: &Point, samples: &[Point]) -> Result<IsometryReport> {
        let map = self.rep_coords(p)?;
        let c2 = map.coords.curvature_constant;
        let x = &map.coords.reference_form;
        let mut report = IsometryReport {
            potential_residual: 0.0,
            pullback_residual: 0.0,
            image_ok: true,
            c_squared: c2,
            curvature_spread: map.curvature_spread,
            hypothesis_holds: map.curvature_spread <= 1e-2,
            max_displacement: 0.0,
        };
        for z in samples {
            let w = map.eval(z)?;
            let q = x.quad(&w);
            report.image_ok &= q < 2.0 / c2;
            let disp = w.iter().zip(z.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            report.max_displacement = report.max_displacement.max(disp);
            let phi = self.potential_phi(p, z)?;
            let h = 1.0 - 0.5 * c2 * q;
            let model = if h > 0.0 { -(2.0 / c2) * h.ln() } else { f64::INFINITY };
            report.potential_residual = report.potential_residual.max((phi - model).abs());
            let reference = map.reference_metric(&w)?;
            let pulled = reference.pullback(&map.jacobian(z)?);
            let g = self.metric_at(z)?;
            report.pullback_residual = report.pullback_residual.max(g.distance(&pulled));
        }
        Ok(report)
    }
}

fn orders_up_to(n: usize, max: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    fn rec(n: usize, left: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    rec(n, max, &mut Vec::new(), &mut out);
    out
}

/// Set partitions of `{0, .., k-1}` as block-label vectors.
fn partitions(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(k: usize, cur: &mut Vec<usize>, blocks: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for b in 0..=blocks {
            cur.push(b);
            rec(k, cur, blocks.max(b + 1), out);
            cur.pop();
        }
    }
    rec(k, &mut Vec::new(), 0, &mut out);
    out
}

/// Mixed partial derivative of `log S` from partial derivatives of `S`
/// (joint cumulant formula over set partitions of the index list).
fn log_derivative(t: &BTreeMap<Order, C64>, s: f64, n: usize, idx: &[(usize, bool)]) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for labels in partitions(idx.len()) {
        let blocks = labels.iter().max().map_or(0, |m| m + 1);
        let mut prod = C64::new(1.0, 0.0);
        for b in 0..blocks {
            let mut order = (vec![0u8; n], vec![0u8; n]);
            for (k, &(coord, anti)) in idx.iter().enumerate() {
                if labels[k] == b {
                    if anti {
                        order.1[coord] += 1;
                    } else {
                        order.0[coord] += 1;
                    }
                }
            }
            prod *= t[&order] / s;
        }
        let m = blocks as i32 - 1;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let fact: f64 = (1..=m).map(|j| j as f64).product();
        total += prod * (sign * fact);
    }
    total
}

/// The Bergman metric at a point together with its first and mixed second
/// derivatives. `dg[(γ n + α) n + β] = ∂_γ g_{αβ̄}` and
/// `ddg[((γ n + δ) n + α) n + β] = ∂_γ ∂̄_δ g_{αβ̄}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    pub n: usize,
    pub g: HermitianForm,
    pub dg: Vec<C64>,
    pub ddg: Vec<C64>,
}

impl MetricJet {
    pub fn dg(&self, gamma: usize, alpha: usize, beta: usize) -> C64 {
        self.dg[(gamma * self.n + alpha) * self.n + beta]
    }

    pub fn ddg(&self, gamma: usize, delta: usize, alpha: usize, beta: usize) -> C64 {
        self.ddg[((gamma * self.n + delta) * self.n + alpha) * self.n + beta]
    }

    /// `R_{αβ̄γδ̄} = −∂_γ∂̄_δ g_{αβ̄} + Σ g^{μ̄ν} ∂_γ g_{αμ̄} ∂̄_δ g_{νβ̄}`.
    pub fn curvature(&self, a: usize, b: usize, c: usize, d: usize, ginv: &[C64]) -> C64 {
        let n = self.n;
        let mut r = -self.ddg(c, d, a, b);
        for mu in 0..n {
            for nu in 0..n {
                r += ginv[mu * n + nu] * self.dg(c, a, mu) * self.dg(d, b, nu).conj();
            }
        }
        r
    }

    pub fn hsc(&self, v: &[C64]) -> Result<f64> {
        let n = self.n;
        let ginv = self.g.inverse()?;
        let mut r = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        r += self.curvature(a, b, c, d, &ginv)
                            * v[a]
                            * v[b].conj()
                            * v[c]
                            * v[d].conj();
                    }
                }
            }
        }
        let gv = self.g.quad(v);
        Ok(r.re / (gv * gv))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureScan {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(point index, direction index)` of the minimum.
    pub arg_min: (usize, usize),
    pub arg_max: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepCoordinates {
    pub base: Point,
    /// `g^{j̄α}(p)` as the matrix inverse of `g(p)`, row-major.
    pub inverse_metric_at_base: Vec<C64>,
    pub reference_form: HermitianForm,
    /// `c² = −H` averaged over a 16-direction fan at `p`.
    pub curvature_constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsometryReport {
    pub potential_residual: f64,
    pub pullback_residual: f64,
    pub image_ok: bool,
    pub c_squared: f64,
    pub curvature_spread: f64,
    /// Whether the curvature at the base point looked constant.
    pub hypothesis_holds: bool,
    /// `max |T(z) − z|` over the samples.
    pub max_displacement: f64,
}

/// The map `z ↦ T(z)` into the weighted reference ball.
pub struct RepMap<'a> {
    series: &'a KernelSeries,
    pub coords: RepCoordinates,
    pub curvature_spread: f64,
    dlog_at_base: Vec<C64>,
}

impl<'a> RepMap<'a> {
    fn new(series: &'a KernelSeries, p: &Point) -> Result<Self> {
        let n = series.dim();
        if !series.spec().contains(p)? {
            return Err(Error::OutsideDomain);
        }
        let jet = series.metric_jet(p)?;
        let mut h = Vec::new();
        for v in fan::mixed(n, 16, 0x5eed) {
            h.push(-jet.hsc(&v)?);
        }
        let c2 = h.iter().sum::<f64>() / h.len() as f64;
        let spread = h.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
            - h.iter().fold(f64::INFINITY, |m, &x| m.min(x));
        if !(c2 > 0.0) {
            return Err(Error::NonPositiveCurvature(c2));
        }
        let t = series.table(p, 0, 1)?;
        let s = t[&(vec![0; n], vec![0; n])].re;
        let dlog_at_base = (0..n)
            .map(|j| {
                let mut b = vec![0u8; n];
                b[j] = 1;
                t[&(vec![0; n], b)] / s
            })
            .collect();
        let ginv = jet.g.inverse()?;
        Ok(Self {
            series,
            coords: RepCoordinates {
                base: p.clone(),
                inverse_metric_at_base: ginv,
                reference_form: jet.g,
                curvature_constant: c2,
            },
            curvature_spread: spread,
            dlog_at_base,
        })
    }

    fn kernel_pieces(&self, z: &[C64], hol: &[u8]) -> Result<(C64, Vec<C64>)> {
        let n = self.series.dim();
        let p = &self.coords.base;
        let zero = vec![0u8; n];
        let k = self.series.derivative(z, p, hol, &zero)?;
        let kt = (0..n)
            .map(|j| {
                let mut b = vec![0u8; n];
                b[j] = 1;
                self.series.derivative(z, p, hol, &b)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((k, kt))
    }

    fn check_zero_set(&self, z: &[C64], k: C64) -> Result<()> {
        let kzz = self.series.kernel(z, z)?.re;
        let p = &self.coords.base;
        let kpp = self.series.kernel(p, p)?.re;
        if k.norm() < 1e-12 * (kzz * kpp).sqrt() {
            return Err(Error::ZeroSet);
        }
        Ok(())
    }

    /// `T(z)`.
    pub fn eval(&self, z: &[C64]) -> Result<Vec<C64>> {
        let n = self.series.dim();
        let (k, kt) = self.kernel_pieces(z, &vec![0u8; n])?;
        self.check_zero_set(z, k)?;
        let u: Vec<C64> = (0..n).map(|j| kt[j] / k - self.dlog_at_base[j]).collect();
        let ginv = &self.coords.inverse_metric_at_base;
        Ok((0..n).map(|a| (0..n).map(|j| ginv[j * n + a] * u[j]).sum()).collect())
    }

    /// `∂w_i/∂z_α` as a row-major `n × n` matrix with rows `i`.
    pub fn jacobian(&self, z: &[C64]) -> Result<Vec<C64>> {
        let n = self.series.dim();
        let (k, kt) = self.kernel_pieces(z, &vec![0u8; n])?;
        self.check_zero_set(z, k)?;
        let ginv = &self.coords.inverse_metric_at_base;
        let mut du = vec![C64::new(0.0, 0.0); n * n];
        for al in 0..n {
            let mut h = vec![0u8; n];
            h[al] = 1;
            let (ka, kat) = self.kernel_pieces(z, &h)?;
            for j in 0..n {
                du[j * n + al] = kat[j] / k - ka * kt[j] / (k * k);
            }
        }
        let mut jac = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for al in 0..n {
                jac[i * n + al] = (0..n).map(|j| ginv[j * n + i] * du[j * n + al]).sum();
            }
        }
        Ok(jac)
    }

    /// Hessian of `−(2/c²) log(1 − (c²/2)⟨w, w⟩_{g(p)})` at `w`.
    pub fn reference_metric(&self, w: &[C64]) -> Result<HermitianForm> {
        let n = w.len();
        let x = &self.coords.reference_form;
        let c2 = self.coords.curvature_constant;
        let q = x.quad(w);
        let h = 1.0 - 0.5 * c2 * q;
        if !(h > 0.0) {
            return Err(Error::OutsideDomain);
        }
        let qi: Vec<C64> = (0..n).map(|i| (0..n).map(|b| x.get(i, b) * w[b].conj()).sum()).collect();
        let qj: Vec<C64> = (0..n).map(|j| (0..n).map(|a| w[a] * x.get(a, j)).sum()).collect();
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = x.get(i, j) / h + qi[i] * qj[j] * (0.5 * c2 / (h * h));
            }
        }
        HermitianForm::symmetrised(n, m)
    }
}
