//! Trace distance and the BLP measure of non-Markovianity.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::dissipation::{self, SolveOptions};
use crate::error::{Error, Result};
use crate::evolution::{evolve_master, EvolveOptions};
use crate::fock::FockDensityMatrix;
use crate::grid::TimeGrid;
use crate::reservoir::ReservoirModel;

/// Horizon used for 𝒩 unless configured otherwise.
pub const DEFAULT_HORIZON: f64 = 1600.0;
/// Rises smaller than this are treated as rounding noise.
pub const DEFAULT_HYSTERESIS: f64 = 1e-10;

/// Normalization of the trace distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceConvention {
    /// Tr|ρ₁ − ρ₂|, ranging over [0, 2].
    #[default]
    SupplementTrNorm,
    /// ½Tr|ρ₁ − ρ₂|, ranging over [0, 1].
    HalfTrNorm,
}

impl TraceConvention {
    pub fn scale(self) -> f64 {
        match self {
            Self::SupplementTrNorm => 1.0,
            Self::HalfTrNorm => 0.5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SupplementTrNorm => "tr_norm",
            Self::HalfTrNorm => "half_tr_norm",
        }
    }
}

pub fn trace_distance(rho1: &FockDensityMatrix, rho2: &FockDensityMatrix, convention: TraceConvention) -> Result<f64> {
    let diff = rho1.sub(rho2)?;
    Ok(convention.scale() * diff.eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
}

/// Rises of a sampled signal, found with a zigzag detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Increases {
    pub total: f64,
    /// (t_start, t_end) of each rise.
    pub intervals: Vec<(f64, f64)>,
    /// The last rise was still open at the final sample.
    pub open_at_end: bool,
}

/// Sums the rises of `signal`. A rise starts once the signal exceeds its
/// running minimum by more than `hysteresis` and ends once it falls the same
/// amount below its running maximum.
pub fn distinguishability_increase(times: &[f64], signal: &[f64], hysteresis: f64) -> Result<Increases> {
    if times.len() != signal.len() {
        return Err(Error::DimensionMismatch { left: times.len(), right: signal.len() });
    }
    let mut out = Increases { total: 0.0, intervals: Vec::new(), open_at_end: false };
    let Some(&first) = signal.first() else {
        return Ok(out);
    };
    let mut rising = false;
    let (mut low, mut low_i) = (first, 0usize);
    let (mut high, mut high_i) = (first, 0usize);
    for (i, &x) in signal.iter().enumerate() {
        if rising {
            if x > high {
                high = x;
                high_i = i;
            } else if high - x > hysteresis {
                out.total += high - low;
                out.intervals.push((times[low_i], times[high_i]));
                rising = false;
                low = x;
                low_i = i;
            }
        } else if x < low {
            low = x;
            low_i = i;
        } else if x - low > hysteresis {
            rising = true;
            high = x;
            high_i = i;
        }
    }
    if rising {
        out.total += high - low;
        out.intervals.push((times[low_i], times[high_i]));
        out.open_at_end = true;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonMarkovReport {
    /// 𝒩 ≥ 0.
    pub value: f64,
    pub horizon: f64,
    pub convention: TraceConvention,
    pub intervals: Vec<(f64, f64)>,
    /// The last increase interval reaches the horizon.
    pub horizon_warning: bool,
}

impl NonMarkovReport {
    fn from_signal(times: &[f64], signal: &[f64], horizon: f64, convention: TraceConvention) -> Result<Self> {
        let inc = distinguishability_increase(times, signal, DEFAULT_HYSTERESIS)?;
        if inc.open_at_end {
            log::warn!("distinguishability still increasing at the horizon t = {horizon}");
        }
        Ok(Self { value: inc.total, horizon, convention, intervals: inc.intervals, horizon_warning: inc.open_at_end })
    }
}

/// 𝒩 for the pair |0⟩⟨0|, |1⟩⟨1| at zero temperature, where the
/// distinguishability reduces to |u(t)|² times the convention factor 2 or 1.
pub fn blp_measure(model: &ReservoirModel, grid: &TimeGrid, convention: TraceConvention) -> Result<NonMarkovReport> {
    if !model.beta.is_zero_temperature() {
        return Err(Error::RequiresZeroTemperature);
    }
    let sol = dissipation::solve_u_with(model, grid, SolveOptions { with_udot: false, ..Default::default() })?;
    let k = 2.0 * convention.scale();
    let signal: Vec<f64> = sol.u.iter().map(|u| k * u.norm_sqr()).collect();
    let times: Vec<f64> = grid.times().collect();
    NonMarkovReport::from_signal(&times, &signal, grid.t_max, convention)
}

/// 𝒩 from trace distances of the pair propagated by the master equation.
pub fn blp_measure_from_master(model: &ReservoirModel, grid: &TimeGrid, convention: TraceConvention) -> Result<NonMarkovReport> {
    if !model.beta.is_zero_temperature() {
        return Err(Error::RequiresZeroTemperature);
    }
    let d = dissipation::solve(model, grid)?;
    let coeffs = dissipation::coefficients(&d)?;
    let opts = EvolveOptions {
        keep_states: true,
        allow_invalid: true,
        leakage_bound: f64::INFINITY,
        check_positivity: false,
        ..Default::default()
    };
    let a = evolve_master(&FockDensityMatrix::number(0, 2)?, &coeffs, opts)?;
    let b = evolve_master(&FockDensityMatrix::number(1, 2)?, &coeffs, opts)?;
    let signal = a.states.iter().zip(&b.states).map(|(x, y)| trace_distance(x, y, convention)).collect::<Result<Vec<f64>>>()?;
    let times: Vec<f64> = a.points.iter().map(|p| p.t).collect();
    NonMarkovReport::from_signal(&times, &signal, grid.t_max, convention)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::Beta;
    use crate::C64;

    #[test]
    fn orthogonal_number_states() {
        let a = FockDensityMatrix::number(0, 3).unwrap();
        let b = FockDensityMatrix::number(1, 3).unwrap();
        assert!((trace_distance(&a, &b, TraceConvention::SupplementTrNorm).unwrap() - 2.0).abs() < 1e-14);
        assert!((trace_distance(&a, &b, TraceConvention::HalfTrNorm).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(trace_distance(&a, &a, TraceConvention::default()).unwrap(), 0.0);
        assert!(trace_distance(&a, &FockDensityMatrix::number(0, 4).unwrap(), TraceConvention::default()).is_err());
    }

    #[test]
    fn pure_state_distance() {
        let a = FockDensityMatrix::coherent(C64::new(0.5, 0.0), 30);
        let b = FockDensityMatrix::coherent(C64::new(-0.5, 0.0), 30);
        let overlap = (-2.0f64 * 0.25 * 2.0).exp();
        let expect = (1.0 - overlap).sqrt();
        assert!((trace_distance(&a, &b, TraceConvention::HalfTrNorm).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn zigzag_detector() {
        let t: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let s = [1.0, 0.5, 0.7, 0.6, 0.6 + 1e-12, 0.2, 0.3];
        let inc = distinguishability_increase(&t, &s, 1e-10).unwrap();
        assert!((inc.total - 0.3).abs() < 1e-14);
        assert_eq!(inc.intervals, vec![(1.0, 2.0), (5.0, 6.0)]);
        assert!(inc.open_at_end);
        let mono = distinguishability_increase(&t, &[6.0, 5.0, 4.0, 3.0, 2.0, 1.0, 0.0], 1e-10).unwrap();
        assert_eq!(mono.total, 0.0);
        assert!(mono.intervals.is_empty());
    }

    #[test]
    fn decoupled_and_weak_coupling_are_markovian() {
        let grid = TimeGrid::new(50.0, 0.0125).unwrap();
        for eta in [0.0, 0.05] {
            let m = ReservoirModel::ohmic(eta, 1.0, 8.0, Beta::Infinite).unwrap();
            assert_eq!(blp_measure(&m, &grid, TraceConvention::default()).unwrap().value, 0.0);
        }
        let hot = ReservoirModel::ohmic(0.05, 1.0, 8.0, Beta::Finite(1.0)).unwrap();
        assert_eq!(blp_measure(&hot, &grid, TraceConvention::default()), Err(Error::RequiresZeroTemperature));
    }

    #[test]
    fn strong_coupling_paths_agree() {
        let grid = TimeGrid::new(60.0, 0.0125).unwrap();
        let m = ReservoirModel::ohmic(0.2, 1.0, 8.0, Beta::Infinite).unwrap();
        let a = blp_measure(&m, &grid, TraceConvention::default()).unwrap();
        let b = blp_measure_from_master(&m, &grid, TraceConvention::default()).unwrap();
        assert!(a.value > 1e-3);
        assert!((a.value - b.value).abs() < 1e-4, "{} vs {}", a.value, b.value);
        let half = blp_measure(&m, &grid, TraceConvention::HalfTrNorm).unwrap();
        assert!((2.0 * half.value - a.value).abs() < 1e-12);
    }
}
