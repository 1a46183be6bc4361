//! Exact single-excitation dynamics of a finite bath.
//!
//! The single-excitation Hamiltonian is an arrowhead matrix (oscillator in
//! row/column 0, bath modes on the diagonal). Its eigenvalues are the roots of
//! the secular function f(λ) = λ − ω₀ − Σ_k g_k²/(λ − ω_k), one per interval
//! between consecutive poles plus one on either side, and the oscillator
//! weight of eigenvector j is w_j = 1/f′(λ_j). Each root is stored relative
//! to its nearest pole to keep λ_j − ω_k accurate.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::reservoir::{Beta, ReservoirKind, ReservoirModel};
use crate::{C64, OMEGA_0};

/// Origin of a discrete bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    NativeDiscrete,
    DiscretizedContinuum,
}

/// Finite set of bath modes with couplings |g_k|².
#[derive(Debug, Clone)]
pub struct DiscreteBath {
    pub frequencies: Vec<f64>,
    pub couplings_sq: Vec<f64>,
    pub provenance: Provenance,
    pub recurrence_time: f64,
}

impl DiscreteBath {
    /// Midpoint discretization of J(ω) on K uniform bins over [0, ω_max].
    pub fn discretize(model: &ReservoirModel, k: usize, omega_max: f64) -> Result<Self> {
        let omega_c = match model.kind {
            ReservoirKind::OhmicFamily { omega_c, .. } => omega_c,
            ReservoirKind::CavityArray { .. } => return Err(Error::WrongKind("continuum (OhmicFamily)")),
        };
        if k < 100 {
            return Err(Error::InvalidParameter { name: "K", reason: "at least 100 modes required" });
        }
        if !(omega_max >= 20.0 * omega_c) {
            return Err(Error::InvalidParameter { name: "omega_max", reason: "must be at least 20 omega_c" });
        }
        let dw = omega_max / k as f64;
        let frequencies: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) * dw).collect();
        let couplings_sq = frequencies.iter().map(|&w| model.spectral_density(w).map(|j| j * dw)).collect::<Result<Vec<f64>>>()?;
        Ok(Self { frequencies, couplings_sq, provenance: Provenance::DiscretizedContinuum, recurrence_time: 2.0 * PI / dw })
    }

    /// The cavity array's own modes. The recurrence time uses the mean level spacing.
    pub fn from_cavity(model: &ReservoirModel) -> Result<Self> {
        let modes = model.cavity_modes()?;
        let (xi, n) = match model.kind {
            ReservoirKind::CavityArray { xi, n_modes, .. } => (xi, n_modes),
            ReservoirKind::OhmicFamily { .. } => unreachable!(),
        };
        let spacing = if xi > 0.0 { 8.0 * xi / n as f64 } else { 0.0 };
        let recurrence_time = if spacing > 0.0 { 2.0 * PI / spacing } else { f64::INFINITY };
        Ok(Self {
            frequencies: modes.iter().map(|m| m.0).collect(),
            couplings_sq: modes.iter().map(|m| m.1).collect(),
            provenance: Provenance::NativeDiscrete,
            recurrence_time,
        })
    }

    pub fn total_coupling(&self) -> f64 {
        self.couplings_sq.iter().sum()
    }

    /// Rejects horizons beyond 0.8 of the recurrence time.
    pub fn check_horizon(&self, t_max: f64) -> Result<()> {
        if t_max > 0.8 * self.recurrence_time {
            Err(Error::Recurrence { t_max, t_rec: self.recurrence_time })
        } else {
            Ok(())
        }
    }
}

/// Eigen-decomposition of the single-excitation Hamiltonian.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Distinct coupled pole frequencies (ascending) and their summed |g|².
    pub poles: Vec<f64>,
    pub couplings_sq: Vec<f64>,
    /// Eigenvalue j equals poles[origin[j]] + delta[j] (origin is usize::MAX when there are no poles).
    pub origin: Vec<usize>,
    pub delta: Vec<f64>,
    /// Oscillator weights |⟨1_s|φ_j⟩|².
    pub weights: Vec<f64>,
}

struct Secular<'a> {
    poles: &'a [f64],
    g2: &'a [f64],
}

impl Secular<'_> {
    /// f and f′ at λ = poles[o] + δ.
    fn eval(&self, o: usize, d: f64) -> (f64, f64) {
        let po = self.poles[o];
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (&p, &g2) in self.poles.iter().zip(self.g2) {
            let r = 1.0 / ((po - p) + d);
            let t = g2 * r;
            s1 += t;
            s2 += t * r;
        }
        ((po - OMEGA_0) + d - s1, 1.0 + s2)
    }

    /// Root in the open bracket (lo, hi) of δ around pole `o`; f(lo) < 0 < f(hi).
    /// `poles_at` lists the bracket ends that are poles, for the deflated Newton map.
    fn solve(&self, o: usize, mut lo: f64, mut hi: f64, left_pole: Option<f64>, right_pole: Option<f64>) -> (f64, f64) {
        let mut d = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (f, fp) = self.eval(o, d);
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                lo = d;
            } else {
                hi = d;
            }
            // Newton on F = f·(δ − a)(δ − b), smooth across the bracketing poles
            let mut q = 1.0;
            let mut qp = 0.0;
            for pole in [left_pole, right_pole].into_iter().flatten() {
                qp = qp * (d - pole) + q;
                q *= d - pole;
            }
            let big_f = f * q;
            let big_fp = fp * q + f * qp;
            let mut next = d - big_f / big_fp;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let tol = 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE);
            if (next - d).abs() <= tol || (hi - lo) <= tol {
                d = next;
                break;
            }
            d = next;
        }
        let (_, fp) = self.eval(o, d);
        (d, 1.0 / fp)
    }
}

impl Eigensystem {
    /// Diagonalizes the single-excitation sector of `bath`.
    pub fn new(bath: &DiscreteBath) -> Result<Self> {
        if bath.frequencies.len() != bath.couplings_sq.len() {
            return Err(Error::DimensionMismatch { left: bath.frequencies.len(), right: bath.couplings_sq.len() });
        }
        let mut modes: Vec<(f64, f64)> = bath
            .frequencies
            .iter()
            .zip(&bath.couplings_sq)
            .filter(|(_, &g2)| g2 > 0.0)
            .map(|(&w, &g2)| (w, g2))
            .collect();
        modes.sort_by(|a, b| a.0.total_cmp(&b.0));
        // degenerate modes: one bright combination carries the summed coupling
        let mut poles: Vec<f64> = Vec::with_capacity(modes.len());
        let mut couplings_sq: Vec<f64> = Vec::with_capacity(modes.len());
        for (w, g2) in modes {
            match poles.last() {
                Some(&p) if (w - p).abs() <= 1e-13 * w.abs().max(1.0) => *couplings_sq.last_mut().unwrap() += g2,
                _ => {
                    poles.push(w);
                    couplings_sq.push(g2);
                }
            }
        }
        let k = poles.len();
        if k == 0 {
            return Ok(Self { poles, couplings_sq, origin: vec![usize::MAX], delta: vec![OMEGA_0], weights: vec![1.0] });
        }
        let sec = Secular { poles: &poles, g2: &couplings_sq };
        let mut origin = Vec::with_capacity(k + 1);
        let mut delta = Vec::with_capacity(k + 1);
        let mut weights = Vec::with_capacity(k + 1);

        // below the lowest pole
        let mut lo = -1.0;
        while sec.eval(0, lo).0 >= 0.0 {
            lo *= 2.0;
            if lo < -1e300 {
                return Err(Error::Bracket { what: "lowest eigenvalue" });
            }
        }
        let (d, w) = sec.solve(0, lo, 0.0, None, Some(0.0));
        origin.push(0);
        delta.push(d);
        weights.push(w);

        for j in 1..k {
            let gap = poles[j] - poles[j - 1];
            let (fm, _) = sec.eval(j - 1, 0.5 * gap);
            let (o, lo, hi) = if fm >= 0.0 { (j - 1, 0.0, 0.5 * gap) } else { (j, -0.5 * gap, 0.0) };
            let (left, right) = if o == j - 1 { (0.0, gap) } else { (-gap, 0.0) };
            let (d, w) = sec.solve(o, lo, hi, Some(left), Some(right));
            origin.push(o);
            delta.push(d);
            weights.push(w);
        }

        let mut hi = 1.0;
        while sec.eval(k - 1, hi).0 <= 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Bracket { what: "highest eigenvalue" });
            }
        }
        let (d, w) = sec.solve(k - 1, 0.0, hi, Some(0.0), None);
        origin.push(k - 1);
        delta.push(d);
        weights.push(w);
        Ok(Self { poles, couplings_sq, origin, delta, weights })
    }

    pub fn eigenvalue(&self, j: usize) -> f64 {
        match self.origin[j] {
            usize::MAX => self.delta[j],
            o => self.poles[o] + self.delta[j],
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.weights.len()).map(|j| self.eigenvalue(j)).collect()
    }

    /// λ_j − ω_k computed from the stored offsets.
    fn gap(&self, j: usize, k: usize) -> f64 {
        match self.origin[j] {
            usize::MAX => self.delta[j] - self.poles[k],
            o => (self.poles[o] - self.poles[k]) + self.delta[j],
        }
    }

    /// Survival amplitude u(t) = Σ_j w_j e^{−iλ_j t}.
    pub fn u(&self, t: f64) -> C64 {
        (0..self.weights.len()).map(|j| C64::new(0.0, -self.eigenvalue(j) * t).exp() * self.weights[j]).sum()
    }

    /// f_k(t) = ⟨1_k|e^{−iHt}|1_s⟩ for each distinct pole, using Σ_j w_j/(λ_j − ω_k) = 0:
    /// f_k = g_k Σ_j w_j (e^{−iλ_j t} − e^{−iω_k t})/(λ_j − ω_k).
    pub fn amplitudes(&self, t: f64) -> Vec<C64> {
        let nj = self.weights.len();
        let er: Vec<f64> = (0..nj).map(|j| (self.eigenvalue(j) * t).cos() * self.weights[j]).collect();
        let ei: Vec<f64> = (0..nj).map(|j| -(self.eigenvalue(j) * t).sin() * self.weights[j]).collect();
        (0..self.poles.len())
            .map(|k| {
                let b = C64::new(0.0, -self.poles[k] * t).exp();
                let mut sr = 0.0;
                let mut si = 0.0;
                for j in 0..nj {
                    let inv = 1.0 / self.gap(j, k);
                    sr += (er[j] - self.weights[j] * b.re) * inv;
                    si += (ei[j] - self.weights[j] * b.im) * inv;
                }
                C64::new(sr, si) * self.couplings_sq[k].sqrt()
            })
            .collect()
    }

    /// v(t) = Σ_k n̄(ω_k)|f_k(t)|².
    pub fn v(&self, beta: Beta, t: f64) -> f64 {
        if beta.is_zero_temperature() {
            return 0.0;
        }
        self.amplitudes(t).iter().zip(&self.poles).map(|(f, &w)| beta.bose(w) * f.norm_sqr()).sum()
    }
}

/// Reference u(t) at the given times.
pub fn oracle_u(bath: &DiscreteBath, times: &[f64]) -> Result<Vec<C64>> {
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    bath.check_horizon(t_max)?;
    let eig = Eigensystem::new(bath)?;
    Ok(times.iter().map(|&t| eig.u(t)).collect())
}

/// Reference v(t) at the given times.
pub fn oracle_v(bath: &DiscreteBath, times: &[f64], beta: Beta) -> Result<Vec<f64>> {
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    bath.check_horizon(t_max)?;
    let eig = Eigensystem::new(bath)?;
    Ok(times.iter().map(|&t| eig.v(beta, t)).collect())
}

/// Brute-force discrete fluctuation function: Σ_k n̄_k g_k² |∫₀^t u(t−τ)e^{−iω_kτ}dτ|²
/// with the convolution integrated by composite Gauss–Legendre on `panels` panels.
pub fn oracle_v_direct(eig: &Eigensystem, beta: Beta, t: f64, panels: usize) -> f64 {
    if beta.is_zero_temperature() || t == 0.0 {
        return 0.0;
    }
    let h = t / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        for &(x, w) in crate::math::GL8.iter() {
            let tau = (p as f64 + 0.5 * (x + 1.0)) * h;
            nodes.push((tau, eig.u(t - tau) * (0.5 * h * w)));
        }
    }
    eig.poles
        .iter()
        .zip(&eig.couplings_sq)
        .map(|(&w, &g2)| {
            let f: C64 = nodes.iter().map(|&(tau, uw)| uw * C64::new(0.0, -w * tau).exp()).sum();
            beta.bose(w) * g2 * f.norm_sqr()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::gamma;

    fn ohmic8(eta: f64) -> ReservoirModel {
        ReservoirModel::ohmic(eta, 1.0, 8.0, Beta::Finite(0.1)).unwrap()
    }

    #[test]
    fn discretized_moment() {
        let bath = DiscreteBath::discretize(&ohmic8(0.1), 4000, 200.0).unwrap();
        let exact = 0.1 * gamma(2.0) * 64.0;
        assert!((bath.total_coupling() - exact).abs() < 1e-3 * exact);
        assert!((bath.recurrence_time - 2.0 * PI / 0.05).abs() < 1e-9);
        assert!(DiscreteBath::discretize(&ohmic8(0.1), 50, 200.0).is_err());
        assert!(DiscreteBath::discretize(&ohmic8(0.1), 4000, 100.0).is_err());
        let zero = DiscreteBath::discretize(&ohmic8(0.0), 200, 200.0).unwrap();
        assert!(zero.couplings_sq.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn decoupled_bath_gives_free_rotation() {
        let bath = DiscreteBath::discretize(&ohmic8(0.0), 200, 200.0).unwrap();
        let u = oracle_u(&bath, &[0.0, 1.0, 3.0]).unwrap();
        assert!((u[2] - C64::new(0.0, -3.0).exp()).norm() < 1e-15);
    }

    #[test]
    fn weights_sum_to_one_and_u0() {
        let bath = DiscreteBath::discretize(&ohmic8(0.2), 800, 200.0).unwrap();
        let eig = Eigensystem::new(&bath).unwrap();
        assert_eq!(eig.weights.len(), 801);
        let total: f64 = eig.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((eig.u(0.0) - C64::new(1.0, 0.0)).norm() < 1e-12);
        let ev = eig.eigenvalues();
        assert!(ev.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn matches_dense_diagonalization_and_is_orthonormal() {
        let bath = DiscreteBath::discretize(&ohmic8(0.15), 300, 200.0).unwrap();
        let eig = Eigensystem::new(&bath).unwrap();
        let k = bath.frequencies.len();
        let mut h = nalgebra::DMatrix::<f64>::zeros(k + 1, k + 1);
        h[(0, 0)] = OMEGA_0;
        for i in 0..k {
            h[(i + 1, i + 1)] = bath.frequencies[i];
            h[(0, i + 1)] = bath.couplings_sq[i].sqrt();
            h[(i + 1, 0)] = bath.couplings_sq[i].sqrt();
        }
        let mut dense: Vec<f64> = nalgebra::SymmetricEigen::new(h).eigenvalues.iter().cloned().collect();
        dense.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in dense.iter().zip(eig.eigenvalues()) {
            assert!((a - b).abs() < 1e-10);
        }
        // eigenvectors (c₀, g_k c₀/(λ − ω_k)) are orthonormal
        let vecs: Vec<Vec<f64>> = (0..=k)
            .map(|j| {
                let c0 = eig.weights[j].sqrt();
                let mut v = vec![c0];
                v.extend((0..k).map(|i| eig.couplings_sq[i].sqrt() * c0 / eig.gap(j, i)));
                v
            })
            .collect();
        for a in 0..=k {
            for b in a..=k {
                let dot: f64 = vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "({a},{b}) = {dot}");
            }
        }
    }

    #[test]
    fn unitarity_of_amplitudes() {
        let bath = DiscreteBath::discretize(&ohmic8(0.1), 1000, 200.0).unwrap();
        let eig = Eigensystem::new(&bath).unwrap();
        for &t in &[0.0, 0.7, 5.0, 20.0] {
            let f = eig.amplitudes(t);
            let total = eig.u(t).norm_sqr() + f.iter().map(|z| z.norm_sqr()).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-10, "t = {t}: {total}");
        }
    }

    #[test]
    fn closed_form_v_matches_brute_force() {
        let bath = DiscreteBath::discretize(&ohmic8(0.1), 200, 200.0).unwrap();
        let eig = Eigensystem::new(&bath).unwrap();
        let beta = Beta::Finite(0.1);
        for &t in &[0.5, 1.0, 2.0, 3.5, 5.0] {
            let a = eig.v(beta, t);
            let b = oracle_v_direct(&eig, beta, t, 400);
            assert!((a - b).abs() < 1e-6, "t = {t}: {a} vs {b}");
            assert!(a >= 0.0);
        }
        assert_eq!(eig.v(Beta::Infinite, 3.0), 0.0);
    }

    #[test]
    fn recurrence_horizon_enforced() {
        let bath = DiscreteBath::discretize(&ohmic8(0.1), 400, 200.0).unwrap();
        assert!(matches!(oracle_u(&bath, &[0.0, 20.0]), Err(Error::Recurrence { .. })));
    }

    #[test]
    fn degenerate_cavity_modes_are_merged() {
        let wc = 1.0 / 0.85;
        let m = ReservoirModel::cavity(wc, 0.05 * wc, 0.02 * wc, 20, Beta::Infinite).unwrap();
        let bath = DiscreteBath::from_cavity(&m).unwrap();
        let eig = Eigensystem::new(&bath).unwrap();
        assert_eq!(eig.poles.len(), 11);
        let dense = crate::spectrum::single_excitation_spectrum(&m).unwrap();
        for &t in &[0.0, 3.0, 40.0] {
            let ud: C64 = dense
                .eigenvalues
                .iter()
                .zip(&dense.weights)
                .map(|(&e, &w)| C64::new(0.0, -e * t).exp() * w)
                .sum();
            assert!((ud - eig.u(t)).norm() < 1e-10);
        }
    }
}
