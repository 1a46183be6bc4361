//! Truncated density matrix in the number basis.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::math::ln_factorials;
use crate::C64;

/// ρ_{mn} for m, n ∈ 0..dim, row-major, with the population dropped by truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    dim: usize,
    data: Vec<C64>,
    /// Estimated population beyond the truncation.
    pub leakage: f64,
}

impl FockDensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim], leakage: 0.0 }
    }

    /// Diagonal state with the given populations (not renormalized).
    pub fn from_populations(p: &[f64]) -> Self {
        let mut r = Self::zeros(p.len());
        for (n, &pn) in p.iter().enumerate() {
            r.set(n, n, C64::new(pn, 0.0));
        }
        r
    }

    /// Builds a matrix from a row-major element list.
    pub fn from_elements(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { left: dim * dim, right: data.len() });
        }
        Ok(Self { dim, data, leakage: 0.0 })
    }

    /// Fock state |n⟩⟨n|.
    pub fn number(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::DimensionMismatch { left: n + 1, right: dim });
        }
        let mut r = Self::zeros(dim);
        r.set(n, n, C64::new(1.0, 0.0));
        Ok(r)
    }

    /// Coherent state |α⟩⟨α| truncated and renormalized; the cut weight is the leakage.
    pub fn coherent(alpha: C64, dim: usize) -> Self {
        let lf = ln_factorials(dim);
        let a2 = alpha.norm_sqr();
        let amp: Vec<C64> = (0..dim)
            .map(|n| {
                if a2 == 0.0 {
                    return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                }
                let mag = (-0.5 * a2 + n as f64 * alpha.norm().ln() - 0.5 * lf[n]).exp();
                C64::from_polar(mag, n as f64 * alpha.arg())
            })
            .collect();
        let norm: f64 = amp.iter().map(|c| c.norm_sqr()).sum();
        let mut r = Self::zeros(dim);
        for m in 0..dim {
            for n in 0..dim {
                r.data[m * dim + n] = amp[m] * amp[n].conj() / norm;
            }
        }
        r.leakage = (1.0 - norm).max(0.0);
        r
    }

    /// Geometric state with mean occupation r, renormalized.
    pub fn thermal(r: f64, dim: usize) -> Self {
        let q = r / (1.0 + r);
        let mut p = Vec::with_capacity(dim);
        let mut x = 1.0 / (1.0 + r);
        for _ in 0..dim {
            p.push(x);
            x *= q;
        }
        let total: f64 = p.iter().sum();
        let mut s = Self::from_populations(&p.iter().map(|v| v / total).collect::<Vec<f64>>());
        s.leakage = (1.0 - total).max(0.0);
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.data[m * self.dim + n]
    }

    pub fn set(&mut self, m: usize, n: usize, v: C64) {
        self.data[m * self.dim + n] = v;
    }

    pub fn elements(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|n| self.get(n, n).re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|n| self.get(n, n).re).collect()
    }

    /// ⟨a†a⟩.
    pub fn mean_number(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.get(n, n).re).sum()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        // Σ_{mn} ρ_{mn} ρ_{nm} = Σ |ρ_{mn}|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// max |ρ_{mn} − conj(ρ_{nm})|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut e = 0.0f64;
        for m in 0..self.dim {
            for n in m..self.dim {
                e = e.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        e
    }

    /// True when every off-diagonal element is below `tol` in magnitude.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.dim).all(|m| (0..self.dim).all(|n| m == n || self.get(m, n).norm() <= tol))
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.is_diagonal(0.0) {
            let mut p = self.populations();
            p.sort_by(|a, b| a.total_cmp(b));
            return p;
        }
        let d = self.dim;
        let scale = self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        // normalized, with entries far below working precision flushed to zero
        let m = nalgebra::DMatrix::<C64>::from_fn(d, d, |i, j| {
            let z = (self.get(i, j) + self.get(j, i).conj()) * (0.5 / scale);
            if z.norm() < 1e-30 {
                C64::new(0.0, 0.0)
            } else {
                z
            }
        });
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().map(|x| x * scale).collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().cloned().unwrap_or(0.0)
    }

    /// Geometric extrapolation of the population tail beyond the last level.
    pub fn tail_estimate(&self) -> f64 {
        let p = self.populations();
        let d = p.len();
        if d < 2 {
            return 0.0;
        }
        let (a, b) = (p[d - 2].max(0.0), p[d - 1].max(0.0));
        if b == 0.0 {
            return 0.0;
        }
        let q = if a > 0.0 { (b / a).min(0.999_999) } else { 0.5 };
        b * q / (1.0 - q)
    }

    /// Element-wise difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(), leakage: 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_state_statistics() {
        let r = FockDensityMatrix::coherent(C64::new(1.2, -0.5), 40);
        assert!((r.trace() - 1.0).abs() < 1e-14);
        assert!((r.mean_number() - 1.69).abs() < 1e-10);
        assert!((r.purity() - 1.0).abs() < 1e-12);
        assert!(r.hermiticity_error() < 1e-15);
        assert!(r.min_eigenvalue() > -1e-12);
        assert!(r.leakage < 1e-20);
    }

    #[test]
    fn thermal_state_and_tail() {
        let r = FockDensityMatrix::thermal(2.0, 60);
        let q: f64 = 2.0 / 3.0;
        assert!((r.leakage - q.powi(60)).abs() < 1e-15);
        let tail = r.tail_estimate();
        assert!((tail - q.powi(60) / (1.0 - r.leakage)).abs() < 1e-12);
        assert!(r.is_diagonal(0.0));
    }

    #[test]
    fn number_state_bounds() {
        assert!(FockDensityMatrix::number(3, 3).is_err());
        let r = FockDensityMatrix::number(2, 4).unwrap();
        assert_eq!(r.mean_number(), 2.0);
    }
}
