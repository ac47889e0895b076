//! The catalog of explicit domains: membership, boundary geometry, sampling
//! and the L² norms of (Laurent) monomials.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::ops::Deref;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quadrature::Integrator;
use crate::C64;

/// A point of ℂⁿ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<C64>);

/// A tangent vector of ℂⁿ; never identically zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction(Vec<C64>);

impl Point {
    pub fn new(coords: Vec<C64>) -> Self {
        Point(coords)
    }

    pub fn origin(n: usize) -> Self {
        Point(vec![C64::new(0.0, 0.0); n])
    }

    pub fn real(coords: &[f64]) -> Self {
        Point(coords.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn norm(&self) -> f64 {
        euclidean_norm(&self.0)
    }

    pub fn scaled(&self, s: f64) -> Point {
        Point(self.0.iter().map(|z| z * s).collect())
    }
}

impl Deref for Point {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl Direction {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::ZeroDirection);
        }
        Ok(Direction(coords))
    }

    pub fn real(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn axis(n: usize, i: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[i] = C64::new(1.0, 0.0);
        Direction(v)
    }

    pub fn norm(&self) -> f64 {
        euclidean_norm(&self.0)
    }

    pub fn normalized(&self) -> Direction {
        let s = 1.0 / self.norm();
        Direction(self.0.iter().map(|z| z * s).collect())
    }

    pub fn scaled(&self, s: C64) -> Result<Direction> {
        Direction::new(self.0.iter().map(|z| z * s).collect())
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }
}

impl Deref for Direction {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

pub(crate) fn euclidean_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// The catalog variants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant {
    /// The unit disc in ℂ.
    Disc,
    /// The unit ball of ℂⁿ.
    Ball { n: usize },
    /// The unit polydisc of ℂⁿ.
    Polydisc { n: usize },
    /// `|z|² + |w|^{2p} < 1`.
    Ellipsoid { p: u32 },
    /// `|z₁|⁴ + |z₁|² + |z₂|² < 1`.
    ReinhardtQuartic,
    /// `r < |z| < 1`.
    Annulus { r: f64 },
    /// `sin log|z| + |w|² < 0`, `e^{-π} < |z| < 1`.
    BurnsShnider,
}

/// Which integers a monomial exponent may take in one coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExponentSet {
    Natural,
    Integer,
}

/// A catalog domain, optionally dilated by a factor `scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    variant: Variant,
    scale: f64,
}

/// Nearest boundary point with the splitting of ℂⁿ into the complex tangent
/// space there and its orthogonal complement.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFrame {
    pub foot: Point,
    /// Unit outward normal `∂ρ/∂z̄` at the foot.
    pub normal: Vec<C64>,
    /// `P_z`, row-major `n × n`.
    pub tangential: Vec<C64>,
    /// `P_z⊥ = ν νᴴ`, row-major `n × n`.
    pub normal_projector: Vec<C64>,
}

impl BoundaryFrame {
    fn apply(m: &[C64], v: &[C64]) -> Vec<C64> {
        let n = v.len();
        (0..n).map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum()).collect()
    }

    pub fn tangential_part(&self, v: &[C64]) -> Vec<C64> {
        Self::apply(&self.tangential, v)
    }

    pub fn normal_part(&self, v: &[C64]) -> Vec<C64> {
        Self::apply(&self.normal_projector, v)
    }
}

/// `sqrt((√5 − 1)/2)`: the largest `|z₁|` on the quartic domain.
pub fn quartic_r1_max() -> f64 {
    ((5.0f64.sqrt() - 1.0) / 2.0).sqrt()
}

const BURNS_SHNIDER_INRADIUS: f64 = 0.478_393_039_861_971;
const BURNS_SHNIDER_MARGIN: f64 = 1e-9;

fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

impl DomainSpec {
    pub fn new(variant: Variant) -> Result<Self> {
        match variant {
            Variant::Ball { n } | Variant::Polydisc { n } if n == 0 => {
                return Err(Error::InvalidSpec("dimension must be at least 1".into()))
            }
            Variant::Ellipsoid { p } if p < 2 => {
                return Err(Error::InvalidSpec(format!("ellipsoid exponent {p} must be >= 2")))
            }
            Variant::Annulus { r } if !(r > 0.0 && r < 1.0) => {
                return Err(Error::InvalidSpec(format!("annulus radius {r} must lie in (0, 1)")))
            }
            _ => {}
        }
        Ok(DomainSpec { variant, scale: 1.0 })
    }

    pub fn disc() -> Self {
        DomainSpec { variant: Variant::Disc, scale: 1.0 }
    }

    pub fn ball(n: usize) -> Result<Self> {
        Self::new(Variant::Ball { n })
    }

    pub fn polydisc(n: usize) -> Result<Self> {
        Self::new(Variant::Polydisc { n })
    }

    pub fn ellipsoid(p: u32) -> Result<Self> {
        Self::new(Variant::Ellipsoid { p })
    }

    pub fn reinhardt_quartic() -> Self {
        DomainSpec { variant: Variant::ReinhardtQuartic, scale: 1.0 }
    }

    pub fn annulus(r: f64) -> Result<Self> {
        Self::new(Variant::Annulus { r })
    }

    pub fn burns_shnider() -> Self {
        DomainSpec { variant: Variant::BurnsShnider, scale: 1.0 }
    }

    /// The image of this domain under `z ↦ s z`.
    pub fn dilated(self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidSpec(format!("dilation factor {s} must be positive")));
        }
        Ok(DomainSpec { variant: self.variant, scale: self.scale * s })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        match self.variant {
            Variant::Disc | Variant::Annulus { .. } => 1,
            Variant::Ball { n } | Variant::Polydisc { n } => n,
            Variant::Ellipsoid { .. } | Variant::ReinhardtQuartic | Variant::BurnsShnider => 2,
        }
    }

    pub fn exponent_set(&self, coord: usize) -> ExponentSet {
        match (self.variant, coord) {
            (Variant::Annulus { .. }, _) | (Variant::BurnsShnider, 0) => ExponentSet::Integer,
            _ => ExponentSet::Natural,
        }
    }

    pub fn allows(&self, alpha: &[i32]) -> bool {
        alpha.len() == self.dim()
            && alpha
                .iter()
                .enumerate()
                .all(|(i, &a)| a >= 0 || self.exponent_set(i) == ExponentSet::Integer)
    }

    pub fn is_simply_connected_plane(&self) -> bool {
        matches!(self.variant, Variant::Disc)
    }

    fn check_dim(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: z.len() });
        }
        Ok(())
    }

    /// A defining function of the undilated domain evaluated at `z / scale`;
    /// negative exactly on the domain.
    pub fn defining(&self, z: &[C64]) -> f64 {
        let s2: Vec<f64> = z.iter().map(|w| (w / self.scale).norm_sqr()).collect();
        match self.variant {
            Variant::Disc | Variant::Ball { .. } => s2.iter().sum::<f64>() - 1.0,
            Variant::Polydisc { .. } => s2.iter().fold(0.0f64, |m, &x| m.max(x)) - 1.0,
            Variant::Ellipsoid { p } => s2[0] + s2[1].powi(p as i32) - 1.0,
            Variant::ReinhardtQuartic => s2[0] * s2[0] + s2[0] + s2[1] - 1.0,
            Variant::Annulus { r } => (s2[0] - 1.0).max(r * r - s2[0]),
            Variant::BurnsShnider => {
                let m = s2[0].sqrt();
                if m == 0.0 {
                    return 1.0;
                }
                (m.ln().sin() + s2[1]).max((-PI).exp() - m).max(m - 1.0)
            }
        }
    }

    pub fn contains(&self, z: &[C64]) -> Result<bool> {
        self.check_dim(z)?;
        if z.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Ok(false);
        }
        Ok(self.defining(z) < 0.0)
    }

    fn require_inside(&self, z: &[C64]) -> Result<()> {
        if self.contains(z)? {
            Ok(())
        } else {
            Err(Error::OutsideDomain)
        }
    }

    /// Radius of the largest ball contained in the domain.
    pub fn inradius(&self) -> f64 {
        self.scale
            * match self.variant {
                Variant::Disc
                | Variant::Ball { .. }
                | Variant::Polydisc { .. }
                | Variant::Ellipsoid { .. } => 1.0,
                Variant::ReinhardtQuartic => quartic_r1_max(),
                Variant::Annulus { r } => 0.5 * (1.0 - r),
                Variant::BurnsShnider => BURNS_SHNIDER_INRADIUS,
            }
    }

    /// Default distance below which [`DomainSpec::boundary_frame`] applies.
    pub fn near_boundary_threshold(&self) -> f64 {
        0.2 * self.inradius()
    }

    /// Point on the radial boundary curve of a two-dimensional Reinhardt
    /// variant without closed-form distance, for `u ∈ [0, 1]` (undilated).
    fn curve(&self, u: f64) -> [f64; 2] {
        let t = smoothstep(u.clamp(0.0, 1.0));
        match self.variant {
            Variant::Ellipsoid { p } => [(1.0 - t.powi(2 * p as i32)).max(0.0).sqrt(), t],
            Variant::ReinhardtQuartic => {
                let x = quartic_r1_max() * t;
                [x, (1.0 - x * x - x * x * x * x).max(0.0).sqrt()]
            }
            Variant::BurnsShnider => {
                let tau = -PI + PI * t;
                [tau.exp(), (-tau.sin()).max(0.0).sqrt()]
            }
            _ => unreachable!("curve is only used by curved Reinhardt variants"),
        }
    }

    /// Local minima of the radial-plane distance from `a` to the boundary
    /// curve, as `(distance, u)` sorted by distance (undilated units).
    fn curve_minima(&self, a: [f64; 2]) -> Vec<(f64, f64)> {
        const SCAN: usize = 2048;
        let d2 = |u: f64| {
            let c = self.curve(u);
            (c[0] - a[0]).powi(2) + (c[1] - a[1]).powi(2)
        };
        let vals: Vec<f64> = (0..=SCAN).map(|k| d2(k as f64 / SCAN as f64)).collect();
        let mut minima = Vec::new();
        for k in 0..=SCAN {
            let left = if k == 0 { f64::INFINITY } else { vals[k - 1] };
            let right = if k == SCAN { f64::INFINITY } else { vals[k + 1] };
            if vals[k] <= left && vals[k] < right {
                let lo = (k.max(1) - 1) as f64 / SCAN as f64;
                let hi = (k + 1).min(SCAN) as f64 / SCAN as f64;
                let u = golden_min(&d2, lo, hi);
                let (u, v) = if d2(u) <= vals[k] { (u, d2(u)) } else { (k as f64 / SCAN as f64, vals[k]) };
                minima.push((v.max(0.0).sqrt(), u));
            }
        }
        minima.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(core::cmp::Ordering::Equal));
        minima
    }

    /// Euclidean distance to the boundary.
    pub fn boundary_distance(&self, z: &[C64]) -> Result<f64> {
        self.require_inside(z)?;
        let s = self.scale;
        let m: Vec<f64> = z.iter().map(|w| w.norm() / s).collect();
        let d = match self.variant {
            Variant::Disc | Variant::Ball { .. } => 1.0 - m.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Variant::Polydisc { .. } => 1.0 - m.iter().fold(0.0f64, |a, &b| a.max(b)),
            Variant::Annulus { r } => (1.0 - m[0]).min(m[0] - r),
            _ => self.curve_minima([m[0], m[1]])[0].0,
        };
        Ok(s * d.max(0.0))
    }

    /// Nearest boundary point and the tangential/normal projectors there,
    /// using the default near-boundary threshold.
    pub fn boundary_frame(&self, z: &[C64]) -> Result<BoundaryFrame> {
        self.boundary_frame_within(z, self.near_boundary_threshold())
    }

    pub fn boundary_frame_within(&self, z: &[C64], threshold: f64) -> Result<BoundaryFrame> {
        let dist = self.boundary_distance(z)?;
        if dist >= threshold {
            return Err(Error::NotNearBoundary { distance: dist, threshold });
        }
        let s = self.scale;
        let n = self.dim();
        let tie = 1e-10;
        let phase = |w: C64| -> Option<C64> {
            if w.norm() > 0.0 {
                Some(w / w.norm())
            } else {
                None
            }
        };
        let mut foot = vec![C64::new(0.0, 0.0); n];
        let mut normal = vec![C64::new(0.0, 0.0); n];
        match self.variant {
            Variant::Disc | Variant::Ball { .. } => {
                let r = euclidean_norm(z);
                if r == 0.0 {
                    return Err(Error::FootAmbiguity);
                }
                for i in 0..n {
                    foot[i] = z[i] * (s / r);
                    normal[i] = z[i] / r;
                }
            }
            Variant::Polydisc { .. } => {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| z[b].norm().partial_cmp(&z[a].norm()).unwrap());
                let i = order[0];
                if n > 1 && z[i].norm() - z[order[1]].norm() <= tie * s {
                    return Err(Error::FootAmbiguity);
                }
                let ph = phase(z[i]).ok_or(Error::FootAmbiguity)?;
                foot.copy_from_slice(z);
                foot[i] = ph * s;
                normal[i] = ph;
            }
            Variant::Annulus { r } => {
                let m = z[0].norm() / s;
                let ph = phase(z[0]).ok_or(Error::FootAmbiguity)?;
                if ((1.0 - m) - (m - r)).abs() <= tie {
                    return Err(Error::FootAmbiguity);
                }
                if 1.0 - m < m - r {
                    foot[0] = ph * s;
                    normal[0] = ph;
                } else {
                    foot[0] = ph * (s * r);
                    normal[0] = -ph;
                }
            }
            _ => {
                let a = [z[0].norm() / s, z[1].norm() / s];
                let minima = self.curve_minima(a);
                let (d0, u0) = minima[0];
                let b = self.curve(u0);
                for &(d1, u1) in minima.iter().skip(1) {
                    let c = self.curve(u1);
                    let sep = ((c[0] - b[0]).powi(2) + (c[1] - b[1]).powi(2)).sqrt();
                    if d1 - d0 <= tie + 1e-8 * d0 && sep > 1e-6 {
                        return Err(Error::FootAmbiguity);
                    }
                }
                let mut w = [C64::new(0.0, 0.0); 2];
                for i in 0..2 {
                    if b[i] > 1e-12 {
                        let ph = phase(z[i]).ok_or(Error::FootAmbiguity)?;
                        w[i] = ph * b[i];
                    }
                }
                let (s1, s2) = (w[0].norm_sqr(), w[1].norm_sqr());
                let f = match self.variant {
                    Variant::Ellipsoid { p } => [1.0, p as f64 * s2.powi(p as i32 - 1)],
                    Variant::ReinhardtQuartic => [2.0 * s1 + 1.0, 1.0],
                    _ => [(0.5 * s1.ln()).cos() / (2.0 * s1), 1.0],
                };
                for i in 0..2 {
                    foot[i] = w[i] * s;
                    normal[i] = w[i] * f[i];
                }
                let nn = euclidean_norm(&normal);
                for v in normal.iter_mut() {
                    *v /= nn;
                }
            }
        }
        let mut normal_projector = vec![C64::new(0.0, 0.0); n * n];
        let mut tangential = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let p = normal[i] * normal[j].conj();
                normal_projector[i * n + j] = p;
                let id = if i == j { 1.0 } else { 0.0 };
                tangential[i * n + j] = C64::new(id, 0.0) - p;
            }
        }
        Ok(BoundaryFrame { foot: Point(foot), normal, tangential, normal_projector })
    }

    /// Rejection sampling from the bounding box `|Re z_i|, |Im z_i| < scale`.
    pub fn sample_interior(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        if count == 0 {
            return Err(Error::InvalidArgument("count must be at least 1".into()));
        }
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let budget = 100_000usize.saturating_mul(count);
        for _ in 0..budget {
            let z: Vec<C64> = (0..n)
                .map(|_| {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * self.scale
                })
                .collect();
            if self.contains(&z)? {
                out.push(Point(z));
                if out.len() == count {
                    return Ok(out);
                }
            }
        }
        Err(Error::RejectionBudget)
    }

    /// Points on the boundary: radial profile point with independent phases.
    pub fn sample_boundary(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        if count == 0 {
            return Err(Error::InvalidArgument("count must be at least 1".into()));
        }
        let n = self.dim();
        let s = self.scale;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut phases: Vec<C64> =
                (0..n).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))).collect();
            let radii: Vec<f64> = match self.variant {
                Variant::Disc => vec![1.0],
                Variant::Annulus { r } => vec![if rng.gen_bool(0.5) { 1.0 } else { r }],
                Variant::Ball { .. } => {
                    let g: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
                    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    g.iter().map(|x| x.abs() / norm).collect()
                }
                Variant::Polydisc { .. } => {
                    let face = rng.gen_range(0..n);
                    (0..n)
                        .map(|i| if i == face { 1.0 } else { rng.gen_range(0.0f64..1.0).sqrt() })
                        .collect()
                }
                _ => self.curve(rng.gen_range(0.0..=1.0)).to_vec(),
            };
            for i in 0..n {
                phases[i] *= radii[i] * s;
            }
            out.push(Point(phases));
        }
        Ok(out)
    }

    /// Number of charts covering the radial boundary (the set of `(|z_i|)`
    /// for boundary points, excluding coordinate axes interior to it).
    pub fn radial_chart_count(&self) -> usize {
        match self.variant {
            Variant::Annulus { .. } => 2,
            Variant::Polydisc { n } => n,
            _ => 1,
        }
    }

    /// Parameter dimension of each radial boundary chart (`n − 1`).
    pub fn radial_chart_dim(&self) -> usize {
        self.dim() - 1
    }

    /// Radial boundary chart `k` at parameters `u ∈ [0, 1]^{n−1}` (dilated).
    pub fn radial_chart(&self, k: usize, u: &[f64]) -> Vec<f64> {
        let s = self.scale;
        let b: Vec<f64> = match self.variant {
            Variant::Disc => vec![1.0],
            Variant::Annulus { r } => vec![if k == 0 { 1.0 } else { r }],
            Variant::Ball { n } => {
                let mut b = vec![0.0; n];
                let mut sin_prod = 1.0;
                for i in 0..n - 1 {
                    let phi = 0.5 * PI * u[i];
                    b[i] = sin_prod * phi.cos();
                    sin_prod *= phi.sin();
                }
                b[n - 1] = sin_prod;
                b
            }
            Variant::Polydisc { n } => {
                let mut b = Vec::with_capacity(n);
                let mut it = u.iter();
                for i in 0..n {
                    b.push(if i == k { 1.0 } else { *it.next().unwrap() });
                }
                b
            }
            _ => self.curve(u[0]).to_vec(),
        };
        b.into_iter().map(|x| x * s).collect()
    }

    /// Per-coordinate bounds `[lo_i, hi_i]` of `|z_i|` over the closure.
    pub fn modulus_box(&self) -> Vec<(f64, f64)> {
        let s = self.scale;
        let b = match self.variant {
            Variant::Annulus { r } => vec![(r, 1.0)],
            Variant::ReinhardtQuartic => vec![(0.0, quartic_r1_max()), (0.0, 1.0)],
            Variant::BurnsShnider => vec![((-PI).exp(), 1.0), (0.0, 1.0)],
            _ => vec![(0.0, 1.0); self.dim()],
        };
        b.into_iter().map(|(lo, hi)| (lo * s, hi * s)).collect()
    }

    fn check_alpha(&self, alpha: &[i32]) -> Result<()> {
        if !self.allows(alpha) {
            return Err(Error::ExponentNotAllowed(format!("{alpha:?}")));
        }
        Ok(())
    }

    fn dilation_log_factor(&self, alpha: &[i32]) -> f64 {
        let total: i64 = alpha.iter().map(|&a| a as i64).sum();
        (2.0 * total as f64 + 2.0 * self.dim() as f64) * self.scale.ln()
    }

    /// `‖z^α‖²_{L²(Ω)}`.
    pub fn monomial_norm(&self, alpha: &[i32]) -> Result<f64> {
        Ok(self.monomial_log_norm(alpha)?.exp())
    }

    /// `log ‖z^α‖²`, closed form where available.
    pub fn monomial_log_norm(&self, alpha: &[i32]) -> Result<f64> {
        self.check_alpha(alpha)?;
        let base = match self.variant {
            Variant::Disc => PI.ln() - ((alpha[0] + 1) as f64).ln(),
            Variant::Polydisc { .. } => {
                alpha.iter().map(|&a| PI.ln() - ((a + 1) as f64).ln()).sum()
            }
            Variant::Ball { n } => {
                let total: u64 = alpha.iter().map(|&a| a as u64).sum();
                n as f64 * PI.ln() + alpha.iter().map(|&a| ln_factorial(a as u64)).sum::<f64>()
                    - ln_factorial(n as u64 + total)
            }
            Variant::Annulus { r } => annulus_log_norm(r, alpha[0]),
            Variant::BurnsShnider => self.burns_shnider_log_norm(alpha)?,
            _ => self.radial_quadrature(alpha)?.ln(),
        };
        Ok(base + self.dilation_log_factor(alpha))
    }

    /// `‖z^α‖²` by radial quadrature, also for variants with a closed form.
    pub fn monomial_norm_quadrature(&self, alpha: &[i32]) -> Result<f64> {
        self.check_alpha(alpha)?;
        Ok(self.radial_quadrature(alpha)? * self.dilation_log_factor(alpha).exp())
    }

    fn burns_shnider_log_norm(&self, alpha: &[i32]) -> Result<f64> {
        let (a, b) = (alpha[0] as f64, alpha[1] as f64);
        let shift = if a + 1.0 < 0.0 { -(2.0 * a + 2.0) * PI } else { 0.0 };
        let v = Integrator::default().integrate(
            |t| ((2.0 * a + 2.0) * t - shift).exp() * (-t.sin()).max(0.0).powf(b + 1.0),
            -PI + BURNS_SHNIDER_MARGIN,
            -BURNS_SHNIDER_MARGIN,
        )?;
        Ok(v.ln() + shift + 2.0 * (2.0 * PI).ln() - (2.0 * b + 2.0).ln())
    }

    fn radial_quadrature(&self, alpha: &[i32]) -> Result<f64> {
        let quad = Integrator::default();
        let two_pi = 2.0 * PI;
        match self.variant {
            Variant::Disc => {
                let k = alpha[0];
                Ok(two_pi * quad.integrate(|r| r.powi(2 * k + 1), 0.0, 1.0)?)
            }
            Variant::Annulus { r } => {
                let k = alpha[0];
                Ok(two_pi * quad.integrate(|x| x.powi(2 * k + 1), r, 1.0)?)
            }
            Variant::Polydisc { .. } => {
                let mut prod = 1.0;
                for &k in alpha {
                    prod *= two_pi * quad.integrate(|r| r.powi(2 * k + 1), 0.0, 1.0)?;
                }
                Ok(prod)
            }
            Variant::Ball { n } => Ok(two_pi.powi(n as i32) * ball_radial(&quad, alpha, 0, 1.0)?),
            Variant::Ellipsoid { p } => {
                let (a, b) = (alpha[0], alpha[1]);
                let q = 2.0 * (b as f64 + 1.0) / p as f64;
                let v = quad.integrate(
                    |th| th.sin().powi(2 * a + 1) * th.cos().powf(q + 1.0),
                    0.0,
                    0.5 * PI,
                )?;
                Ok(two_pi * two_pi * v / (2.0 * b as f64 + 2.0))
            }
            Variant::ReinhardtQuartic => {
                let (a, b) = (alpha[0], alpha[1]);
                let v = quad.integrate(
                    |x| x.powi(2 * a + 1) * (1.0 - x * x - x * x * x * x).max(0.0).powi(b + 1),
                    0.0,
                    quartic_r1_max(),
                )?;
                Ok(two_pi * two_pi * v / (2.0 * b as f64 + 2.0))
            }
            Variant::BurnsShnider => Ok(self.burns_shnider_log_norm(alpha)?.exp()),
        }
    }
}

fn ball_radial(quad: &Integrator, alpha: &[i32], i: usize, rem: f64) -> Result<f64> {
    let a = alpha[i];
    if i + 1 == alpha.len() {
        return Ok(rem.max(0.0).powi(a + 1) / (2.0 * a as f64 + 2.0));
    }
    let mut failure = None;
    let v = quad.integrate(
        |r| match ball_radial(quad, alpha, i + 1, rem - r * r) {
            Ok(inner) => r.powi(2 * a + 1) * inner,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        rem.max(0.0).sqrt(),
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn annulus_log_norm(r: f64, k: i32) -> f64 {
    let lr = r.ln();
    if k == -1 {
        return (2.0 * PI * -lr).ln();
    }
    let e = 2.0 * k as f64 + 2.0;
    if k > -1 {
        PI.ln() + (-(e * lr).exp()).ln_1p() - (k as f64 + 1.0).ln()
    } else {
        PI.ln() + e * lr + (-(-e * lr).exp()).ln_1p() - (-(k as f64 + 1.0)).ln()
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            Variant::Disc => write!(f, "disc")?,
            Variant::Ball { n } => write!(f, "ball:{n}")?,
            Variant::Polydisc { n } => write!(f, "polydisc:{n}")?,
            Variant::Ellipsoid { p } => write!(f, "ellipsoid:{p}")?,
            Variant::ReinhardtQuartic => write!(f, "reinhardt-quartic")?,
            Variant::Annulus { r } => write!(f, "annulus:{r}")?,
            Variant::BurnsShnider => write!(f, "burns-shnider")?,
        }
        if self.scale != 1.0 {
            write!(f, "@{}", self.scale)?;
        }
        Ok(())
    }
}

impl FromStr for DomainSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidSpec(format!("{msg} in {text:?}"));
        let text = text.trim();
        let (body, scale) = match text.split_once('@') {
            Some((b, s)) => (b, Some(s.parse::<f64>().map_err(|_| bad("bad dilation factor"))?)),
            None => (text, None),
        };
        let (name, param) = match body.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (body, None),
        };
        let int_param = |default: Option<usize>| -> Result<usize> {
            match (param, default) {
                (Some(p), _) => p.parse::<usize>().map_err(|_| bad("expected a positive integer")),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(bad("missing parameter")),
            }
        };
        let no_param = || if param.is_some() { Err(bad("unexpected parameter")) } else { Ok(()) };
        let variant = match name {
            "disc" => {
                no_param()?;
                Variant::Disc
            }
            "ball" => Variant::Ball { n: int_param(None)? },
            "polydisc" => Variant::Polydisc { n: int_param(None)? },
            "ellipsoid" => Variant::Ellipsoid {
                p: u32::try_from(int_param(None)?).map_err(|_| bad("exponent too large"))?,
            },
            "reinhardt-quartic" => {
                no_param()?;
                Variant::ReinhardtQuartic
            }
            "annulus" => Variant::Annulus {
                r: param
                    .ok_or_else(|| bad("missing radius"))?
                    .parse::<f64>()
                    .map_err(|_| bad("bad radius"))?,
            },
            "burns-shnider" => {
                no_param()?;
                Variant::BurnsShnider
            }
            other => return Err(Error::InvalidSpec(format!("unknown domain {other:?}"))),
        };
        let spec = DomainSpec::new(variant)?;
        match scale {
            Some(s) => spec.dilated(s),
            None => Ok(spec),
        }
    }
}

impl Serialize for DomainSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DomainSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn membership_examples() {
        let ball = DomainSpec::ball(2).unwrap();
        assert!(ball.contains(&[c(0.0), c(0.0)]).unwrap());
        assert!(!DomainSpec::annulus(0.5).unwrap().contains(&[c(0.3)]).unwrap());
        assert!(!DomainSpec::ellipsoid(2).unwrap().contains(&[c(0.9), c(0.7)]).unwrap());
        assert!(matches!(ball.contains(&[c(0.0)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn distance_examples() {
        let ball = DomainSpec::ball(2).unwrap();
        assert_eq!(ball.boundary_distance(&[c(0.0), c(0.0)]).unwrap(), 1.0);
        let ann = DomainSpec::annulus(0.5).unwrap();
        assert!((ann.boundary_distance(&[c(0.75)]).unwrap() - 0.25).abs() < 1e-15);
        let e = DomainSpec::ellipsoid(2).unwrap();
        assert!((e.boundary_distance(&[c(0.0), c(0.0)]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(ball.boundary_distance(&[c(1.0), c(0.0)]), Err(Error::OutsideDomain)));
    }

    #[test]
    fn quartic_and_burns_shnider_inradius() {
        let q = DomainSpec::reinhardt_quartic();
        let d = q.boundary_distance(&[c(0.0), c(0.0)]).unwrap();
        assert!((d - q.inradius()).abs() < 1e-10);
        let bs = DomainSpec::burns_shnider();
        let d = bs.boundary_distance(&[c(0.5216069581257433), c(0.0)]).unwrap();
        assert!((d - bs.inradius()).abs() < 1e-9);
        for p in bs.sample_interior(200, 5).unwrap() {
            assert!(bs.boundary_distance(&p).unwrap() <= bs.inradius() + 1e-9);
        }
    }

    #[test]
    fn frame_examples() {
        let ball = DomainSpec::ball(2).unwrap();
        let fr = ball.boundary_frame(&[c(0.9), c(0.0)]).unwrap();
        assert!((fr.foot[0] - c(1.0)).norm() < 1e-15 && fr.foot[1].norm() < 1e-15);
        let v = [C64::new(0.3, 0.1), C64::new(-0.2, 0.7)];
        let t = fr.tangential_part(&v);
        let nrm = fr.normal_part(&v);
        assert!(t[0].norm() < 1e-15 && (t[1] - v[1]).norm() < 1e-15);
        assert!((nrm[0] - v[0]).norm() < 1e-15 && nrm[1].norm() < 1e-15);

        let disc = DomainSpec::disc();
        let fr = disc.boundary_frame(&[c(0.8)]).unwrap();
        assert!((fr.foot[0] - c(1.0)).norm() < 1e-15);
        assert!(fr.tangential[0].norm() < 1e-15 && (fr.normal_projector[0] - c(1.0)).norm() < 1e-15);

        let poly = DomainSpec::polydisc(2).unwrap();
        let fr = poly.boundary_frame(&[c(0.95), c(0.0)]).unwrap();
        assert!((fr.foot[0] - c(1.0)).norm() < 1e-15 && fr.foot[1].norm() < 1e-15);
        let t = fr.tangential_part(&v);
        assert!(t[0].norm() < 1e-15 && (t[1] - v[1]).norm() < 1e-15);

        assert!(matches!(ball.boundary_frame(&[c(0.1), c(0.0)]), Err(Error::NotNearBoundary { .. })));
        let ann = DomainSpec::annulus(0.5).unwrap();
        assert!(matches!(
            ann.boundary_frame_within(&[c(0.75)], 1.0),
            Err(Error::FootAmbiguity)
        ));
    }

    #[test]
    fn ellipsoid_frame_near_pole() {
        let e = DomainSpec::ellipsoid(2).unwrap();
        let fr = e.boundary_frame(&[c(0.0), c(0.85)]).unwrap();
        assert!(fr.foot[0].norm() < 1e-6 && (fr.foot[1] - c(1.0)).norm() < 1e-6);
        assert!((fr.normal[1].norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sampling_contracts() {
        let ball = DomainSpec::ball(2).unwrap();
        let a = ball.sample_interior(10, 7).unwrap();
        assert_eq!(a, ball.sample_interior(10, 7).unwrap());
        assert!(a.iter().all(|p| p.norm() < 1.0));
        let ann = DomainSpec::annulus(0.5).unwrap();
        for p in ann.sample_interior(5, 1).unwrap() {
            assert!(p[0].norm() > 0.5 && p[0].norm() < 1.0);
        }
        for p in DomainSpec::disc().sample_boundary(8, 0).unwrap() {
            assert!((p[0].norm() - 1.0).abs() < 1e-15);
        }
        for p in ann.sample_boundary(8, 0).unwrap() {
            let m = p[0].norm();
            assert!((m - 0.5).abs() < 1e-15 || (m - 1.0).abs() < 1e-15);
        }
        let e = DomainSpec::ellipsoid(2).unwrap();
        for p in e.sample_boundary(16, 3).unwrap() {
            assert!(e.defining(&p).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_examples() {
        assert!((DomainSpec::disc().monomial_norm(&[0]).unwrap() - PI).abs() < 1e-13);
        let ann = DomainSpec::annulus(0.5).unwrap();
        let v = ann.monomial_norm(&[-1]).unwrap();
        assert!((v - 2.0 * PI * 2.0f64.ln()).abs() < 1e-13);
        let poly = DomainSpec::polydisc(2).unwrap();
        assert!((poly.monomial_norm(&[1, 0]).unwrap() - PI * PI / 2.0).abs() < 1e-13);
        assert!(matches!(
            DomainSpec::disc().monomial_norm(&[-1]),
            Err(Error::ExponentNotAllowed(_))
        ));
    }

    #[test]
    fn canonical_text() {
        for t in [
            "disc",
            "ball:2",
            "polydisc:3",
            "ellipsoid:2",
            "reinhardt-quartic",
            "annulus:0.5",
            "burns-shnider",
            "annulus:0.3@0.5",
        ] {
            let s: DomainSpec = t.parse().unwrap();
            assert_eq!(s.to_string(), t);
        }
        assert!("annulus:1.5".parse::<DomainSpec>().is_err());
        assert!("ellipsoid:1".parse::<DomainSpec>().is_err());
        assert!("ball:0".parse::<DomainSpec>().is_err());
        assert!("torus".parse::<DomainSpec>().is_err());
    }
}
