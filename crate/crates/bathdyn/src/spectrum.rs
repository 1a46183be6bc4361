//! Self-energy, bound-state pole and single-excitation spectrum.
//!
//! y(E) = ω₀ − ∫₀^∞ J(ω)/(ω − E) dω below the continuum; a discrete root of
//! y(E) = E gives a stationary component e^{−iEt} of u(t) with weight
//! Z = (1 + ∫ J/(ω−E)² dω)^{−1}, so |u(∞)|² averages to Z².

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::math::gamma;
use crate::quad::{integrate_pieces, QuadOptions};
use crate::reservoir::{ReservoirKind, ReservoirModel};
use crate::{C64, OMEGA_0};

/// Outcome of the pole analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundStateReport {
    /// Stationarity flag: ω₀ below the lower continuum edge after renormalization
    /// (continuum family) or ω₀ inside the lower band gap (cavity array).
    pub exists: bool,
    /// Root of y(E) = E below the continuum, if any.
    pub energy: Option<f64>,
    /// Weight Z of that root in u(t).
    pub residue: Option<f64>,
    /// ω₀ − η ω_c Γ(s) or ω₀ − (ω_C − 2ξ).
    pub margin: f64,
    /// Root above the band (cavity array only) with its weight.
    pub upper: Option<(f64, f64)>,
    pub note: Option<&'static str>,
}

/// Eigenvalues of the single-excitation Hamiltonian with system weights |c₀|².
#[derive(Debug, Clone)]
pub struct SingleExcitationSpectrum {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

fn continuum_moment(model: &ReservoirModel, e: f64, power: i32) -> Result<f64> {
    let (eta, s, omega_c) = match model.kind {
        ReservoirKind::OhmicFamily { eta, s, omega_c } => (eta, s, omega_c),
        ReservoirKind::CavityArray { .. } => return Err(Error::WrongKind("continuum (OhmicFamily)")),
    };
    if eta == 0.0 {
        return Ok(0.0);
    }
    let d = -e;
    let top = (60.0 + 2.0 * s) * omega_c;
    let mut breaks = alloc::vec![0.0];
    for x in [d, 10.0 * d, omega_c, 10.0 * omega_c] {
        if x > *breaks.last().unwrap_or(&0.0) && x < top {
            breaks.push(x);
        }
    }
    breaks.push(top);
    let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 20_000 };
    let r = integrate_pieces(
        |w| {
            let j = if w == 0.0 { 0.0 } else { eta * w * (w / omega_c).powf(s - 1.0) * (-w / omega_c).exp() };
            C64::new(j / (w + d).powi(power), 0.0)
        },
        &breaks,
        opts,
    )?;
    Ok(r.value.re)
}

fn lower_edge(model: &ReservoirModel) -> f64 {
    match model.kind {
        ReservoirKind::OhmicFamily { .. } => 0.0,
        ReservoirKind::CavityArray { omega_cav, xi, .. } => omega_cav - 2.0 * xi,
    }
}

/// y(E) for E strictly below the continuum support.
pub fn self_energy(model: &ReservoirModel, e: f64) -> Result<f64> {
    model.validate()?;
    let edge = lower_edge(model);
    match model.kind {
        ReservoirKind::OhmicFamily { eta, s, omega_c } => {
            if !(e <= 0.0) {
                return Err(Error::Domain { what: "E", value: e });
            }
            if e == 0.0 {
                return Ok(OMEGA_0 - eta * omega_c * gamma(s));
            }
            Ok(OMEGA_0 - continuum_moment(model, e, 1)?)
        }
        ReservoirKind::CavityArray { .. } => {
            let modes = model.cavity_modes()?;
            if !(e < edge || e > edge + 4.0 * band_half_width(model)) {
                return Err(Error::Domain { what: "E", value: e });
            }
            Ok(discrete_y(&modes, e))
        }
    }
}

fn band_half_width(model: &ReservoirModel) -> f64 {
    match model.kind {
        ReservoirKind::CavityArray { xi, .. } => xi,
        ReservoirKind::OhmicFamily { .. } => f64::INFINITY,
    }
}

fn discrete_y(modes: &[(f64, f64)], e: f64) -> f64 {
    OMEGA_0 + modes.iter().map(|&(w, g2)| g2 / (e - w)).sum::<f64>()
}

fn discrete_slope(modes: &[(f64, f64)], e: f64) -> f64 {
    modes.iter().map(|&(w, g2)| g2 / ((e - w) * (e - w))).sum()
}

/// Residue Z = (1 + ∫J/(ω−E)²dω)^{−1} at a root E below the continuum.
pub fn residue(model: &ReservoirModel, e: f64) -> Result<f64> {
    match model.kind {
        ReservoirKind::OhmicFamily { .. } => {
            if !(e < 0.0) {
                return Ok(0.0);
            }
            Ok(1.0 / (1.0 + continuum_moment(model, e, 2)?))
        }
        ReservoirKind::CavityArray { .. } => Ok(1.0 / (1.0 + discrete_slope(&model.cavity_modes()?, e))),
    }
}

/// Solves y(E) = E on E < edge, written in δ = edge − E > 0.
/// `f` maps δ to y(E) − E and must increase with δ.
fn root_below<F: FnMut(f64) -> Result<f64>>(mut f: F, mut fprime: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let mut hi = 1.0;
    let mut expansions = 0;
    while f(hi)? <= 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Bracket { what: "bound-state root" });
        }
    }
    let mut lo = 0.0;
    // bisection until the bracket is small, then Newton polish inside it
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-6 * hi.max(1e-300) || mid == lo || mid == hi {
            break;
        }
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut d = 0.5 * (lo + hi);
    for _ in 0..50 {
        let fd = f(d)?;
        if fd == 0.0 {
            break;
        }
        if fd > 0.0 {
            hi = d;
        } else {
            lo = d;
        }
        let step = fd / fprime(d)?;
        let mut next = d - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - d).abs() <= 1e-15 * d.abs().max(1e-300) || (hi - lo) <= 1e-13 * hi.max(1.0) * 1e-2 {
            d = next;
            break;
        }
        d = next;
    }
    Ok(d)
}

/// Pole analysis of the model.
pub fn bound_state(model: &ReservoirModel) -> Result<BoundStateReport> {
    model.validate()?;
    match model.kind {
        ReservoirKind::OhmicFamily { eta, s, omega_c } => {
            let margin = OMEGA_0 - eta * omega_c * gamma(s);
            let y_edge = OMEGA_0 - if eta == 0.0 { 0.0 } else { continuum_moment(model, 0.0, 1)? };
            let exists = y_edge <= 0.0;
            if !exists {
                return Ok(BoundStateReport { exists, energy: None, residue: None, margin, upper: None, note: None });
            }
            if margin == 0.0 {
                return Ok(BoundStateReport { exists, energy: Some(0.0), residue: Some(residue(model, 0.0)?), margin, upper: None, note: None });
            }
            // f(δ) = y(−δ) + δ increases with δ
            let d = root_below(
                |d| Ok(OMEGA_0 - continuum_moment(model, -d, 1)? + d),
                |d| Ok(1.0 + continuum_moment(model, -d, 2)?),
            )?;
            let e = -d;
            Ok(BoundStateReport { exists, energy: Some(e), residue: Some(residue(model, e)?), margin, upper: None, note: None })
        }
        ReservoirKind::CavityArray { omega_cav, xi, .. } => {
            let modes = model.cavity_modes()?;
            let lo_edge = omega_cav - 2.0 * xi;
            let lo_min = modes.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
            let hi_max = modes.iter().map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
            let margin = OMEGA_0 - lo_edge;
            let exists = margin < 0.0;
            let d = root_below(
                |d| Ok(discrete_y(&modes, lo_min - d) - (lo_min - d)),
                |d| Ok(1.0 + discrete_slope(&modes, lo_min - d)),
            )?;
            let e = lo_min - d;
            let z = 1.0 / (1.0 + discrete_slope(&modes, e));
            // above the band: g(δ) = E − y(E) with E = hi_max + δ increases with δ
            let du = root_below(
                |d| Ok((hi_max + d) - discrete_y(&modes, hi_max + d)),
                |d| Ok(1.0 + discrete_slope(&modes, hi_max + d)),
            )?;
            let eu = hi_max + du;
            let zu = 1.0 / (1.0 + discrete_slope(&modes, eu));
            let note = if exists {
                Some("split-off root above the band also present")
            } else {
                Some("ω₀ lies in the band; split-off roots below and above the band carry small weight")
            };
            Ok(BoundStateReport { exists, energy: Some(e), residue: Some(z), margin, upper: Some((eu, zu)), note })
        }
    }
}

/// Dense eigen-decomposition of the single-excitation Hamiltonian of a
/// cavity-array reservoir (row/column 0 is the oscillator).
pub fn single_excitation_spectrum(model: &ReservoirModel) -> Result<SingleExcitationSpectrum> {
    let modes = model.cavity_modes()?;
    let n = modes.len() + 1;
    let mut h = nalgebra::DMatrix::<f64>::zeros(n, n);
    h[(0, 0)] = OMEGA_0;
    for (k, &(e, g2)) in modes.iter().enumerate() {
        h[(k + 1, k + 1)] = e;
        let g = g2.sqrt();
        h[(0, k + 1)] = g;
        h[(k + 1, 0)] = g;
    }
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SingleExcitationSpectrum { eigenvalues: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() })
}
