//! Exact reduced dynamics of a harmonic oscillator coupled to a bosonic
//! reservoir in the rotating-wave approximation.
//!
//! Units: ħ = k_B = 1 and frequencies are measured in units of the bare
//! oscillator frequency ω₀, so ω₀ = 1 throughout and times are in 1/ω₀.
//!
//! The crate is `no_std` compatible (with `alloc`); the default `std` feature
//! only switches the float backend from `libm` to the platform library.
//!
//! ```
//! use bathdyn::evolution::{evolve_master, fock_cutoff, EvolveOptions};
//! use bathdyn::{dissipation, equilibrium, Beta, FockDensityMatrix, ReservoirModel, TimeGrid, C64};
//!
//! let model = ReservoirModel::ohmic(0.05, 1.0, 8.0, Beta::Finite(0.1))?;
//! let grid = TimeGrid::new(20.0, 0.01)?;
//! let d = dissipation::solve(&model, &grid)?;
//! let coeffs = dissipation::coefficients(&d)?;
//! let last = grid.n_steps;
//! let steady = equilibrium::steady_state(coeffs.gamma[last], coeffs.gamma_beta[last], 120)?;
//! assert!(steady.n_con > 0.0);
//!
//! let dim = fock_cutoff(1.0, steady.ratio, 1e-6);
//! let rho0 = FockDensityMatrix::coherent(C64::new(1.0, 0.0), dim);
//! let traj = evolve_master(&rho0, &coeffs, EvolveOptions { output_every: 500, ..Default::default() })?;
//! assert!(traj.trace_drift < 1e-8);
//! # Ok::<(), bathdyn::Error>(())
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dissipation;
pub mod equilibrium;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod grid;
pub mod math;
pub mod nonmarkov;
pub mod oracle;
pub mod quad;
pub mod reservoir;
pub mod spectrum;

pub use dissipation::{DissipationFunctions, MasterCoefficients};
pub use error::{Error, Result};
pub use fock::FockDensityMatrix;
pub use grid::TimeGrid;
pub use reservoir::{Beta, ReservoirKind, ReservoirModel};

/// Complex double used for amplitudes and kernels.
pub type C64 = num_complex::Complex64;

/// Bare oscillator frequency in internal units.
pub const OMEGA_0: f64 = 1.0;
