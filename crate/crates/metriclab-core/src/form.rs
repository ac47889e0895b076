use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::C64;

/// A positive definite Hermitian `n × n` matrix `g_{αβ̄}`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianForm {
    n: usize,
    entries: Vec<C64>,
}

impl HermitianForm {
    /// Validates conjugate symmetry (to 1e-12, relative to the largest entry)
    /// and positive definiteness. The stored matrix is symmetrised.
    pub fn new(n: usize, entries: Vec<C64>) -> Result<Self> {
        let form = Self::symmetrised(n, entries)?;
        if form.min_eigenvalue() > 0.0 {
            Ok(form)
        } else {
            Err(Error::IndefiniteMetric)
        }
    }

    /// Like [`HermitianForm::new`] but without the definiteness check. Used
    /// for fitted forms and differences, which need not be positive.
    pub fn symmetrised(n: usize, mut entries: Vec<C64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        let scale = entries.iter().fold(0.0f64, |s, z| s.max(z.norm())).max(1e-300);
        for i in 0..n {
            for j in i..n {
                let a = entries[i * n + j];
                let b = entries[j * n + i].conj();
                if (a - b).norm() > 1e-12 * scale || !a.re.is_finite() || !a.im.is_finite() {
                    return Err(Error::InvalidArgument("matrix is not Hermitian".into()));
                }
                let m = (a + b) * 0.5;
                entries[i * n + j] = m;
                entries[j * n + i] = m.conj();
            }
            entries[i * n + i].im = 0.0;
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = C64::new(s, 0.0);
        }
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// `g(v, v̄) = Σ g_{αβ̄} v_α v̄_β`.
    pub fn quad(&self, v: &[C64]) -> f64 {
        let n = self.n;
        let mut s = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                s += self.entries[a * n + b] * v[a] * v[b].conj();
            }
        }
        s.re
    }

    pub fn inverse(&self) -> Result<Vec<C64>> {
        linalg::complex_inverse(&self.entries, self.n).ok_or(Error::IndefiniteMetric)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.entries, self.n)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::NAN)
    }

    /// Spectral norm of `self - other`.
    pub fn distance(&self, other: &HermitianForm) -> f64 {
        let diff: Vec<C64> =
            self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        linalg::hermitian_eigenvalues(&diff, self.n)
            .into_iter()
            .fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// The form `v ↦ g(Av, Av)`, i.e. the matrix `Aᵀ g Ā`.
    pub fn pullback(&self, a: &[C64]) -> HermitianForm {
        let n = self.n;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for al in 0..n {
            for be in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        s += a[i * n + al] * self.entries[i * n + j] * a[j * n + be].conj();
                    }
                }
                out[al * n + be] = s;
            }
        }
        HermitianForm { n, entries: out }
    }

    pub fn scale(&self, s: f64) -> HermitianForm {
        HermitianForm { n: self.n, entries: self.entries.iter().map(|z| z * s).collect() }
    }
}
