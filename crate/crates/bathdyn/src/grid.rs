//! Uniform time grid.

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::reservoir::ReservoirModel;

/// Uniform grid t_i = i·dt, i = 0..=n_steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    /// `t_max` must be an integer multiple of `dt` (relative slack 1e-9).
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain { what: "dt", value: dt });
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Domain { what: "t_max", value: t_max });
        }
        let n = (t_max / dt).round();
        if n < 1.0 || (n * dt - t_max).abs() > 1e-9 * t_max {
            return Err(Error::InvalidParameter { name: "dt", reason: "t_max must be an integer multiple of dt" });
        }
        Ok(Self { t_max, dt: t_max / n, n_steps: n as usize })
    }

    /// Number of samples (n_steps + 1).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.time(i))
    }

    /// Index of the sample nearest to `t`, clamped to the grid.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.n_steps)
    }

    /// Enforces dt ≤ 0.1/(fastest kernel scale); `allow_coarse` downgrades to a warning.
    pub fn check_resolution(&self, model: &ReservoirModel, allow_coarse: bool) -> Result<()> {
        let limit = 0.1 / model.fastest_scale();
        if self.dt <= limit * (1.0 + 1e-12) {
            return Ok(());
        }
        if allow_coarse {
            log::warn!("dt = {} exceeds the resolution limit {}", self.dt, limit);
            Ok(())
        } else {
            Err(Error::InvalidParameter { name: "dt", reason: "dt exceeds 0.1/(fastest kernel scale)" })
        }
    }
}
