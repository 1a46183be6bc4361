//! Reservoir models: spectral density and the memory kernels μ(x), ν(x).
//!
//! μ(x) = ∫₀^∞ J(ω) e^{−iωx} dω and ν(x) = ∫₀^∞ J(ω) n̄(ω) e^{−iωx} dω with
//! n̄(ω) = 1/(e^{βω} − 1).

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::math::gamma;
use crate::quad::{integrate, integrate_pieces, QuadOptions, QuadResult};
use crate::C64;

/// Inverse temperature; zero temperature is a distinct value, not a large number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    /// Maps `f64::INFINITY` to [`Beta::Infinite`].
    pub fn new(beta: f64) -> Result<Self> {
        if beta == f64::INFINITY {
            Ok(Beta::Infinite)
        } else if beta.is_finite() && beta > 0.0 {
            Ok(Beta::Finite(beta))
        } else {
            Err(Error::Domain { what: "beta", value: beta })
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }

    pub fn temperature(self) -> f64 {
        match self {
            Beta::Finite(b) => 1.0 / b,
            Beta::Infinite => 0.0,
        }
    }

    /// Bose–Einstein occupation n̄(ω).
    pub fn bose(self, omega: f64) -> f64 {
        match self {
            Beta::Finite(b) => 1.0 / (b * omega).exp_m1(),
            Beta::Infinite => 0.0,
        }
    }

    pub fn is_zero_temperature(self) -> bool {
        matches!(self, Beta::Infinite)
    }
}

/// Spectral family of the reservoir.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReservoirKind {
    /// J(ω) = η ω (ω/ω_c)^{s−1} e^{−ω/ω_c}.
    OhmicFamily { eta: f64, s: f64, omega_c: f64 },
    /// Coupled-resonator array with ε_k = ω_C + 2ξ cos(2πj/N), |g_k|² = g²/N.
    CavityArray { omega_cav: f64, xi: f64, g: f64, n_modes: usize },
}

/// Reservoir kind plus temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirModel {
    pub kind: ReservoirKind,
    pub beta: Beta,
}

const NU_DIRECT_TERMS: usize = 20;
const BERNOULLI_2K: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

impl ReservoirModel {
    pub fn ohmic(eta: f64, s: f64, omega_c: f64, beta: Beta) -> Result<Self> {
        let m = Self { kind: ReservoirKind::OhmicFamily { eta, s, omega_c }, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn cavity(omega_cav: f64, xi: f64, g: f64, n_modes: usize, beta: Beta) -> Result<Self> {
        let m = Self { kind: ReservoirKind::CavityArray { omega_cav, xi, g, n_modes }, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if let Beta::Finite(b) = self.beta {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::Domain { what: "beta", value: b });
            }
        }
        match self.kind {
            ReservoirKind::OhmicFamily { eta, s, omega_c } => {
                if !(eta.is_finite() && eta >= 0.0) {
                    return Err(Error::Domain { what: "eta", value: eta });
                }
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::Domain { what: "s", value: s });
                }
                if !(omega_c.is_finite() && omega_c > 0.0) {
                    return Err(Error::Domain { what: "omega_c", value: omega_c });
                }
            }
            ReservoirKind::CavityArray { omega_cav, xi, g, n_modes } => {
                if !(omega_cav.is_finite() && omega_cav > 0.0) {
                    return Err(Error::Domain { what: "omega_cav", value: omega_cav });
                }
                if !(xi.is_finite() && xi >= 0.0) {
                    return Err(Error::Domain { what: "xi", value: xi });
                }
                if !g.is_finite() {
                    return Err(Error::Domain { what: "g", value: g });
                }
                if n_modes < 2 {
                    return Err(Error::Domain { what: "n_modes", value: n_modes as f64 });
                }
                if omega_cav - 2.0 * xi <= 0.0 {
                    return Err(Error::InvalidParameter { name: "xi", reason: "band must lie at positive frequencies" });
                }
            }
        }
        Ok(())
    }

    /// Largest frequency scale the time grid must resolve.
    pub fn fastest_scale(&self) -> f64 {
        match self.kind {
            ReservoirKind::OhmicFamily { omega_c, .. } => omega_c.max(crate::OMEGA_0),
            ReservoirKind::CavityArray { omega_cav, xi, .. } => (omega_cav + 2.0 * xi).max(crate::OMEGA_0),
        }
    }

    /// J(ω) for the continuum family.
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        match self.kind {
            ReservoirKind::OhmicFamily { eta, s, omega_c } => {
                if !(omega >= 0.0) {
                    return Err(Error::Domain { what: "omega", value: omega });
                }
                Ok(ohmic_j(eta, s, omega_c, omega))
            }
            ReservoirKind::CavityArray { .. } => Err(Error::WrongKind("continuum (OhmicFamily)")),
        }
    }

    /// Discrete modes (ε_k, |g_k|²) of the cavity array.
    pub fn cavity_modes(&self) -> Result<Vec<(f64, f64)>> {
        match self.kind {
            ReservoirKind::CavityArray { omega_cav, xi, g, n_modes } => {
                let g2 = g * g / n_modes as f64;
                Ok((0..n_modes)
                    .map(|j| {
                        let kx = 2.0 * PI * j as f64 / n_modes as f64;
                        (omega_cav + 2.0 * xi * kx.cos(), g2)
                    })
                    .collect())
            }
            ReservoirKind::OhmicFamily { .. } => Err(Error::WrongKind("discrete (CavityArray)")),
        }
    }

    /// ∫J dω, the total coupling strength μ(0).
    pub fn total_coupling(&self) -> f64 {
        match self.kind {
            ReservoirKind::OhmicFamily { eta, s, omega_c } => eta * gamma(s + 1.0) * omega_c * omega_c,
            ReservoirKind::CavityArray { g, .. } => g * g,
        }
    }

    /// Dissipation kernel μ(x).
    pub fn kernel_mu(&self, x: f64) -> C64 {
        match self.kind {
            ReservoirKind::OhmicFamily { eta, s, omega_c } => {
                let z = C64::new(1.0, omega_c * x);
                z.powf(-(s + 1.0)) * (eta * gamma(s + 1.0) * omega_c * omega_c)
            }
            ReservoirKind::CavityArray { .. } => self
                .cavity_modes()
                .unwrap_or_default()
                .iter()
                .map(|&(e, g2)| C64::new(0.0, -e * x).exp() * g2)
                .sum(),
        }
    }

    /// Integrated kernel K(x) = ∫₀^x μ(y) dy.
    pub fn kernel_mu_integral(&self, x: f64) -> C64 {
        match self.kind {
            ReservoirKind::OhmicFamily { eta, s, omega_c } => {
                let z = C64::new(1.0, omega_c * x);
                let one_minus = C64::new(1.0, 0.0) - z.powf(-s);
                C64::new(0.0, -eta * gamma(s) * omega_c) * one_minus
            }
            ReservoirKind::CavityArray { .. } => self
                .cavity_modes()
                .unwrap_or_default()
                .iter()
                .map(|&(e, g2)| {
                    if (e * x).abs() < 1e-8 {
                        C64::new(x, -0.5 * e * x * x) * g2
                    } else {
                        (C64::new(1.0, 0.0) - C64::new(0.0, -e * x).exp()) / C64::new(0.0, e) * g2
                    }
                })
                .sum(),
        }
    }

    /// Fluctuation kernel ν(x).
    ///
    /// For the continuum family this is the Bose series
    /// ν(x) = η ω_c^{1−s} Γ(s+1) Σ_{m≥1} (1/ω_c + mβ + ix)^{−(s+1)},
    /// summed directly for m < 20 with an Euler–Maclaurin tail.
    pub fn kernel_nu(&self, x: f64) -> C64 {
        let beta = match self.beta {
            Beta::Infinite => return C64::new(0.0, 0.0),
            Beta::Finite(b) => b,
        };
        match self.kind {
            ReservoirKind::OhmicFamily { eta, s, omega_c } => {
                if eta == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let p = s + 1.0;
                let z0 = C64::new(1.0 / omega_c, x);
                let mut sum = C64::new(0.0, 0.0);
                for m in 1..NU_DIRECT_TERMS {
                    sum += (z0 + beta * m as f64).powf(-p);
                }
                let zm = z0 + beta * NU_DIRECT_TERMS as f64;
                let mut tail = zm.powf(1.0 - p) / (beta * (p - 1.0));
                tail += zm.powf(-p) * 0.5;
                // derivatives f^{(j)}(M) = (−p)(−p−1)…(−p−j+1) β^j z^{−p−j}
                let mut coef = 1.0;
                let mut fact = 1.0;
                let mut j = 0usize;
                for (k, &b2k) in BERNOULLI_2K.iter().enumerate() {
                    let order = 2 * k + 1;
                    while j < order {
                        coef *= (-p - j as f64) * beta;
                        j += 1;
                        fact *= j as f64;
                    }
                    let fact_2k = fact * (order + 1) as f64;
                    tail -= zm.powf(-p - order as f64) * (b2k / fact_2k * coef);
                }
                (sum + tail) * (eta * omega_c.powf(1.0 - s) * gamma(p))
            }
            ReservoirKind::CavityArray { .. } => self
                .cavity_modes()
                .unwrap_or_default()
                .iter()
                .map(|&(e, g2)| C64::new(0.0, -e * x).exp() * (g2 * self.beta.bose(e)))
                .sum(),
        }
    }

    /// μ(x) by direct adaptive quadrature of the Fourier integral.
    pub fn kernel_mu_quadrature(&self, x: f64) -> Result<QuadResult> {
        self.fourier_quadrature(x, false)
    }

    /// ν(x) by direct adaptive quadrature, with the ω → 0 region handled by
    /// the substitution ω = ε t^{1/s} that absorbs the ω^{s−1} singularity.
    pub fn kernel_nu_quadrature(&self, x: f64) -> Result<QuadResult> {
        if self.beta.is_zero_temperature() {
            return Ok(QuadResult { value: C64::new(0.0, 0.0), error: 0.0 });
        }
        self.fourier_quadrature(x, true)
    }

    fn fourier_quadrature(&self, x: f64, thermal: bool) -> Result<QuadResult> {
        let (eta, s, omega_c) = match self.kind {
            ReservoirKind::OhmicFamily { eta, s, omega_c } => (eta, s, omega_c),
            ReservoirKind::CavityArray { .. } => return Err(Error::WrongKind("continuum (OhmicFamily)")),
        };
        let beta = self.beta;
        let temp = beta.temperature();
        let omega_max = (40.0 * omega_c).max(40.0 * temp);
        // smooth factor g(ω) with J n̄ e^{−iωx} = ω^{s−1} g(ω) (thermal) or ω^s g(ω)
        let smooth = move |w: f64| -> C64 {
            let base = eta * omega_c.powf(1.0 - s) * (-w / omega_c).exp();
            let occ = if thermal {
                match beta {
                    Beta::Finite(b) => {
                        if w == 0.0 {
                            1.0 / b
                        } else {
                            w / (b * w).exp_m1()
                        }
                    }
                    Beta::Infinite => 0.0,
                }
            } else {
                w
            };
            C64::new(0.0, -w * x).exp() * (base * occ)
        };
        let eps = 0.05 * omega_c.min(if temp > 0.0 { temp } else { omega_c }).min(1.0);
        let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 20_000 };
        let head = integrate(|t: f64| if t <= 0.0 { smooth(0.0) } else { smooth(eps * t.powf(1.0 / s)) }, 0.0, 1.0, opts)?;
        let head_value = head.value * (eps.powf(s) / s);
        let period = if x.abs() > 0.0 { 2.0 * PI / x.abs() } else { omega_max };
        let width = (8.0 * period).min(omega_max).max(eps);
        let mut breaks = alloc::vec![eps];
        let mut w = eps;
        while w < omega_max {
            w = (w + width).min(omega_max);
            breaks.push(w);
        }
        let body = integrate_pieces(|w: f64| smooth(w) * w.powf(s - 1.0), &breaks, opts)?;
        // tail beyond omega_max bounded by J n̄ e^{−ω/ω_c} decay: ≤ e^{−40} relative
        Ok(QuadResult { value: head_value + body.value, error: head.error * eps.powf(s) / s + body.error })
    }
}

fn ohmic_j(eta: f64, s: f64, omega_c: f64, omega: f64) -> f64 {
    if omega == 0.0 || eta == 0.0 {
        return 0.0;
    }
    eta * omega * (omega / omega_c).powf(s - 1.0) * (-omega / omega_c).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ohmic8(eta: f64) -> ReservoirModel {
        ReservoirModel::ohmic(eta, 1.0, 8.0, Beta::Finite(0.1)).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        let m = ohmic8(0.1);
        assert_eq!(m.spectral_density(0.0).unwrap(), 0.0);
        assert!((m.spectral_density(1.0).unwrap() - 0.1 * (-0.125f64).exp()).abs() < 1e-15);
        assert!((m.spectral_density(1.0).unwrap() - 0.088_249_690_258_459_54).abs() < 1e-12);
        assert_eq!(ohmic8(0.0).spectral_density(3.0).unwrap(), 0.0);
        assert!(matches!(m.spectral_density(-1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn mu_at_origin_and_symmetry() {
        let m = ohmic8(0.1);
        assert!((m.kernel_mu(0.0) - C64::new(6.4, 0.0)).norm() < 1e-12);
        for &x in &[0.1, 1.0, 7.3] {
            assert!((m.kernel_mu(-x) - m.kernel_mu(x).conj()).norm() < 1e-12);
            assert!((m.kernel_nu(-x) - m.kernel_nu(x).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn mu_closed_form_matches_quadrature() {
        let m = ohmic8(0.1);
        let q = m.kernel_mu_quadrature(1.0).unwrap().value;
        assert!((q - m.kernel_mu(1.0)).norm() < 1e-10);
        let q0 = m.kernel_mu_quadrature(0.0).unwrap().value;
        assert!((q0.re - 6.4).abs() < 1e-10);
        let sub = ReservoirModel::ohmic(0.2, 0.5, 3.0, Beta::Finite(1.0)).unwrap();
        for &x in &[0.0, 0.7, 4.0] {
            let q = sub.kernel_mu_quadrature(x).unwrap().value;
            let c = sub.kernel_mu(x);
            assert!((q - c).norm() < 1e-8 * c.norm(), "x = {x}");
        }
    }

    #[test]
    fn nu_series_matches_quadrature() {
        let m = ohmic8(0.1);
        let s0 = m.kernel_nu(0.0);
        let q0 = m.kernel_nu_quadrature(0.0).unwrap().value;
        assert!(s0.im.abs() < 1e-14 && s0.re > 0.0);
        assert!((s0 - q0).norm() < 1e-8 * s0.norm(), "{s0} vs {q0}");
        for &x in &[0.3, 2.0, 10.0] {
            let s = m.kernel_nu(x);
            let q = m.kernel_nu_quadrature(x).unwrap().value;
            assert!((s - q).norm() < 1e-8 * s0.norm(), "x = {x}: {s} vs {q}");
        }
        let sub = ReservoirModel::ohmic(0.1, 0.5, 4.0, Beta::Finite(0.5)).unwrap();
        for &x in &[0.0, 1.5] {
            let s = sub.kernel_nu(x);
            let q = sub.kernel_nu_quadrature(x).unwrap().value;
            assert!((s - q).norm() < 1e-8 * s.norm().max(1.0), "x = {x}: {s} vs {q}");
        }
    }

    #[test]
    fn nu_vanishes_at_zero_temperature() {
        let m = ReservoirModel::ohmic(0.1, 1.0, 8.0, Beta::Infinite).unwrap();
        assert_eq!(m.kernel_nu(2.0), C64::new(0.0, 0.0));
        assert_eq!(m.kernel_nu_quadrature(2.0).unwrap().value, C64::new(0.0, 0.0));
    }

    #[test]
    fn integrated_kernel_matches_quadrature_of_mu() {
        let m = ohmic8(0.1);
        for &x in &[0.05, 0.8, 6.0] {
            let q = integrate(|y| m.kernel_mu(y), 0.0, x, QuadOptions::default()).unwrap().value;
            assert!((q - m.kernel_mu_integral(x)).norm() < 1e-10);
        }
        let c = ReservoirModel::cavity(1.2, 0.06, 0.024, 20, Beta::Finite(0.04)).unwrap();
        let q = integrate(|y| c.kernel_mu(y), 0.0, 3.0, QuadOptions::default()).unwrap().value;
        assert!((q - c.kernel_mu_integral(3.0)).norm() < 1e-12);
    }

    #[test]
    fn cavity_modes_inside_band() {
        let c = ReservoirModel::cavity(1.0, 0.05, 0.02, 200, Beta::Infinite).unwrap();
        let modes = c.cavity_modes().unwrap();
        assert_eq!(modes.len(), 200);
        assert!(modes.iter().all(|&(e, _)| (0.9 - 1e-12..=1.1 + 1e-12).contains(&e)));
        let g2: f64 = modes.iter().map(|m| m.1).sum();
        assert!((g2 - 0.0004).abs() < 1e-15);
        let mu0 = c.kernel_mu(0.0).norm();
        for &x in &[1.0, 17.0, 300.0] {
            assert!(c.kernel_mu(x).norm() <= mu0 + 1e-15);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ReservoirModel::ohmic(-0.1, 1.0, 8.0, Beta::Infinite).is_err());
        assert!(ReservoirModel::ohmic(0.1, 0.0, 8.0, Beta::Infinite).is_err());
        assert!(ReservoirModel::cavity(1.0, 0.05, 0.02, 1, Beta::Infinite).is_err());
        assert!(Beta::new(0.0).is_err());
        assert_eq!(Beta::new(f64::INFINITY).unwrap(), Beta::Infinite);
    }
}
