//! Canonical steady state, effective temperature and the weak-coupling
//! (Markovian) reference coefficients.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::dissipation::{coefficients, solve};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad::{integrate_pieces, QuadOptions};
use crate::reservoir::{ReservoirKind, ReservoirModel};
use crate::{C64, OMEGA_0};

/// 2Γ/Γ^β below this is reported as a divergent temperature.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-6;

/// Effective temperature of the geometric steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectiveTemperature {
    Zero,
    Finite(f64),
    Divergent,
}

impl EffectiveTemperature {
    /// Numeric value (+∞ when divergent).
    pub fn value(self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Finite(t) => t,
            Self::Divergent => f64::INFINITY,
        }
    }
}

/// Geometric state ρ = Σ_n r^n/(1+r)^{n+1} |n⟩⟨n|.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub gamma_inf: f64,
    pub gamma_beta_inf: f64,
    /// r = Γ^β(∞)/(2Γ(∞)), also the mean occupation N_con.
    pub ratio: f64,
    pub t_eff: EffectiveTemperature,
    pub beta_eff: f64,
    pub n_con: f64,
    pub populations: Vec<f64>,
}

/// Steady state from the asymptotic coefficients.
pub fn steady_state(gamma_inf: f64, gamma_beta_inf: f64, n_max: usize) -> Result<SteadyStateReport> {
    if !(gamma_inf > 0.0) || !(gamma_beta_inf >= 0.0) || !gamma_inf.is_finite() || !gamma_beta_inf.is_finite() {
        return Err(Error::NoncanonicalRegime { gamma: gamma_inf, gamma_beta: gamma_beta_inf });
    }
    let r = gamma_beta_inf / (2.0 * gamma_inf);
    let t_eff = if gamma_beta_inf == 0.0 {
        EffectiveTemperature::Zero
    } else {
        let x = 2.0 * gamma_inf / gamma_beta_inf;
        if x < DIVERGENCE_THRESHOLD {
            EffectiveTemperature::Divergent
        } else {
            EffectiveTemperature::Finite(OMEGA_0 / x.ln_1p())
        }
    };
    let beta_eff = match t_eff {
        EffectiveTemperature::Zero => f64::INFINITY,
        EffectiveTemperature::Finite(t) => 1.0 / t,
        EffectiveTemperature::Divergent => 0.0,
    };
    let q = r / (1.0 + r);
    let mut populations = Vec::with_capacity(n_max + 1);
    let mut p = 1.0 / (1.0 + r);
    for _ in 0..=n_max {
        populations.push(p);
        p *= q;
    }
    Ok(SteadyStateReport { gamma_inf, gamma_beta_inf, ratio: r, t_eff, beta_eff, n_con: r, populations })
}

/// Second-order perturbative coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovCoefficients {
    /// κ = π J(ω₀).
    pub kappa: f64,
    /// Frequency shift with ω′ = ω₀ + Δω, Δω = −PV∫ J(ω)/(ω − ω₀) dω.
    pub delta_omega: f64,
    pub omega_prime: f64,
    /// Γ^β_M = 2κ n̄(ω₀).
    pub gamma_beta_m: f64,
}

/// PV∫₀^∞ J(ω)/(ω − ω₀) dω by subtraction over the symmetric window [0, 2ω₀].
pub fn principal_value(model: &ReservoirModel) -> Result<f64> {
    let (eta, s, omega_c) = match model.kind {
        ReservoirKind::OhmicFamily { eta, s, omega_c } => (eta, s, omega_c),
        ReservoirKind::CavityArray { .. } => return Err(Error::WrongKind("continuum (OhmicFamily)")),
    };
    if eta == 0.0 {
        return Ok(0.0);
    }
    let j = |w: f64| if w <= 0.0 { 0.0 } else { eta * w * (w / omega_c).powf(s - 1.0) * (-w / omega_c).exp() };
    let j0 = j(OMEGA_0);
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 20_000 };
    // the odd part J(ω₀)/(ω−ω₀) integrates to zero over the symmetric window
    let window = integrate_pieces(
        |w| {
            let d = w - OMEGA_0;
            if d.abs() < 1e-12 {
                let hstep = 1e-6;
                C64::new((j(OMEGA_0 + hstep) - j(OMEGA_0 - hstep)) / (2.0 * hstep), 0.0)
            } else {
                C64::new((j(w) - j0) / d, 0.0)
            }
        },
        &[0.0, 0.5 * OMEGA_0, OMEGA_0, 1.5 * OMEGA_0, 2.0 * OMEGA_0],
        opts,
    )?;
    let top = (60.0 + 2.0 * s) * omega_c;
    let mut breaks = alloc::vec![2.0 * OMEGA_0];
    for x in [omega_c, 10.0 * omega_c] {
        if x > 2.0 * OMEGA_0 {
            breaks.push(x);
        }
    }
    breaks.push(top.max(4.0 * OMEGA_0));
    let tail = integrate_pieces(|w| C64::new(j(w) / (w - OMEGA_0), 0.0), &breaks, opts)?;
    Ok(window.value.re + tail.value.re)
}

/// κ, Lamb shift and Γ^β_M for a continuum reservoir.
pub fn markov_coefficients(model: &ReservoirModel) -> Result<MarkovCoefficients> {
    model.validate()?;
    let kappa = PI * model.spectral_density(OMEGA_0)?;
    let delta_omega = -principal_value(model)?;
    Ok(MarkovCoefficients {
        kappa,
        delta_omega,
        omega_prime: OMEGA_0 + delta_omega,
        gamma_beta_m: 2.0 * kappa * model.beta.bose(OMEGA_0),
    })
}

/// Classification of a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeffMarker {
    Canonical,
    Divergent,
    Noncanonical,
    InvalidCoefficients,
}

impl TeffMarker {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Canonical => "canonical",
            Self::Divergent => "divergent",
            Self::Noncanonical => "noncanonical",
            Self::InvalidCoefficients => "invalid",
        }
    }
}

/// One entry of an effective-temperature sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub gamma_inf: f64,
    pub gamma_beta_inf: f64,
    pub ratio: f64,
    /// T_eff (NaN unless canonical or divergent).
    pub t_eff: f64,
    pub marker: TeffMarker,
}

/// Classifies asymptotic coefficients read at the evaluation time.
pub fn classify(value: f64, gamma_inf: f64, gamma_beta_inf: f64, valid: bool) -> SweepPoint {
    let ratio = gamma_beta_inf / (2.0 * gamma_inf);
    if !valid {
        return SweepPoint { value, gamma_inf, gamma_beta_inf, ratio, t_eff: f64::NAN, marker: TeffMarker::InvalidCoefficients };
    }
    match steady_state(gamma_inf, gamma_beta_inf, 0) {
        Ok(s) => {
            let marker = if s.t_eff == EffectiveTemperature::Divergent { TeffMarker::Divergent } else { TeffMarker::Canonical };
            SweepPoint { value, gamma_inf, gamma_beta_inf, ratio, t_eff: s.t_eff.value(), marker }
        }
        Err(_) => SweepPoint { value, gamma_inf, gamma_beta_inf, ratio, t_eff: f64::NAN, marker: TeffMarker::Noncanonical },
    }
}

/// Coefficients of `model` at `t_eval` (default convention 100/ω₀), classified.
pub fn effective_temperature_point(value: f64, model: &ReservoirModel, t_eval: f64, dt: f64) -> Result<SweepPoint> {
    let grid = TimeGrid::new(t_eval, dt)?;
    let d = solve(model, &grid)?;
    let c = coefficients(&d)?;
    let i = grid.n_steps;
    Ok(classify(value, c.gamma[i], c.gamma_beta[i], c.valid[i]))
}

/// Sequential sweep over (value, model) pairs.
pub fn effective_temperature_sweep<I>(points: I, t_eval: f64, dt: f64) -> Result<Vec<SweepPoint>>
where
    I: IntoIterator<Item = (f64, ReservoirModel)>,
{
    points.into_iter().map(|(v, m)| effective_temperature_point(v, &m, t_eval, dt)).collect()
}
