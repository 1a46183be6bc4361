//! Dissipation function u(t), fluctuation function v(t) and the
//! master-equation coefficients Ω(t), Γ(t), Γ^β(t).
//!
//! u solves u̇ + iω₀u + ∫₀^t μ(t−t₁)u(t₁)dt₁ = 0, u(0) = 1. The solver works in
//! the frame rotating at ω₀ on the integrated form of the equation and treats
//! the unknown as piecewise linear between grid nodes (product integration,
//! second order, implicit in the newest node). Kernel moments are integrated
//! with 8-point Gauss–Legendre per step.
//!
//! v is accumulated from v̇(t) = 2 Re[u*(t) ∫₀^t ν(t−τ)u(τ)dτ] with the same
//! product weights for the convolution.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::math::{cubic_interp, cumulative_trapezoid, GL8};
use crate::reservoir::ReservoirModel;
use crate::{C64, OMEGA_0};

/// Default |u| floor below which Γ and Ω are flagged invalid.
pub const U_FLOOR: f64 = 1e-8;

/// u, u̇, v, v̇ sampled on a common grid.
#[derive(Debug, Clone)]
pub struct DissipationFunctions {
    pub grid: TimeGrid,
    pub u: Vec<C64>,
    pub udot: Vec<C64>,
    pub v: Vec<f64>,
    pub vdot: Vec<f64>,
}

/// Ω(t), Γ(t), Γ^β(t) with validity flags.
#[derive(Debug, Clone)]
pub struct MasterCoefficients {
    pub grid: TimeGrid,
    pub omega: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_beta: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Solver controls for [`solve_u_with`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Compute u̇ at every node (otherwise only at defect checkpoints).
    pub with_udot: bool,
    /// Largest accepted per-step defect |Δu − h·(u̇ₖ + u̇ₖ₊₁)/2|.
    pub defect_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { with_udot: true, defect_tol: 1e-4 }
    }
}

/// u samples with u̇ (u̇ empty when not requested).
#[derive(Debug, Clone)]
pub struct USolution {
    pub u: Vec<C64>,
    pub udot: Vec<C64>,
    pub max_defect: f64,
}

/// Product-integration weights a_m = ∫ f(x)λ dx, b_m = ∫ f(x)(1−λ) dx over
/// x ∈ [(m−1)h, mh], λ = (x − (m−1)h)/h, for m = 1..=n (index 0 unused).
fn moments<F: Fn(f64) -> C64>(f: F, h: f64, n: usize) -> (Vec<C64>, Vec<C64>) {
    let mut a = vec![C64::new(0.0, 0.0); n + 1];
    let mut b = vec![C64::new(0.0, 0.0); n + 1];
    for m in 1..=n {
        let left = (m - 1) as f64 * h;
        let mut sa = C64::new(0.0, 0.0);
        let mut sb = C64::new(0.0, 0.0);
        for &(x, w) in GL8.iter() {
            let lam = 0.5 * (x + 1.0);
            let fx = f(left + lam * h) * w;
            sa += fx * lam;
            sb += fx * (1.0 - lam);
        }
        a[m] = sa * (0.5 * h);
        b[m] = sb * (0.5 * h);
    }
    (a, b)
}

/// Combined weights c_m = a_m + b_{m+1} for the interior nodes, split into
/// real and imaginary parts.
fn interior_weights(a: &[C64], b: &[C64]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len() - 1;
    let mut re = vec![0.0; n + 1];
    let mut im = vec![0.0; n + 1];
    for m in 1..n {
        let c = a[m] + b[m + 1];
        re[m] = c.re;
        im[m] = c.im;
    }
    (re, im)
}

/// Complex dot product Σ (ar + i ai)(br + i bi) over equal-length slices.
#[inline]
fn cdot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> C64 {
    let n = ar.len();
    let (ar, ai, br, bi) = (&ar[..n], &ai[..n], &br[..n], &bi[..n]);
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let o = 4 * c;
        for l in 0..4 {
            re[l] += ar[o + l] * br[o + l] - ai[o + l] * bi[o + l];
            im[l] += ar[o + l] * bi[o + l] + ai[o + l] * br[o + l];
        }
    }
    let mut r = (re[0] + re[1]) + (re[2] + re[3]);
    let mut i = (im[0] + im[1]) + (im[2] + im[3]);
    for k in 4 * chunks..n {
        r += ar[k] * br[k] - ai[k] * bi[k];
        i += ar[k] * bi[k] + ai[k] * br[k];
    }
    C64::new(r, i)
}

/// Reversed split storage so that u_{k−1}, …, u_1 is a forward slice.
struct Reversed {
    re: Vec<f64>,
    im: Vec<f64>,
    n: usize,
}

impl Reversed {
    fn new(n: usize) -> Self {
        Self { re: vec![0.0; n + 1], im: vec![0.0; n + 1], n }
    }

    fn set(&mut self, j: usize, z: C64) {
        self.re[self.n - j] = z.re;
        self.im[self.n - j] = z.im;
    }

    /// Σ_{m=1}^{k−1} w_m u_{k−m}.
    fn history(&self, wr: &[f64], wi: &[f64], k: usize) -> C64 {
        if k < 2 {
            return C64::new(0.0, 0.0);
        }
        let lo = self.n - k + 1;
        cdot(&wr[1..k], &wi[1..k], &self.re[lo..self.n], &self.im[lo..self.n])
    }
}

/// Kernels in the frame co-rotating at ω₀: μ̃(x) = μ(x)e^{iω₀x}, ν̃(x) = ν(x)e^{iω₀x}.
enum RotatingKernels {
    Continuum(ReservoirModel),
    Modes(Vec<(f64, f64, f64)>),
}

impl RotatingKernels {
    fn new(model: &ReservoirModel) -> Self {
        match model.cavity_modes() {
            Ok(modes) => Self::Modes(modes.into_iter().map(|(e, g2)| (e - OMEGA_0, g2, model.beta.bose(e))).collect()),
            Err(_) => Self::Continuum(*model),
        }
    }

    fn mu(&self, x: f64) -> C64 {
        match self {
            Self::Continuum(m) => m.kernel_mu(x) * C64::new(0.0, OMEGA_0 * x).exp(),
            Self::Modes(modes) => modes.iter().map(|&(d, g2, _)| C64::new(0.0, -d * x).exp() * g2).sum(),
        }
    }

    fn nu(&self, x: f64) -> C64 {
        match self {
            Self::Continuum(m) => m.kernel_nu(x) * C64::new(0.0, OMEGA_0 * x).exp(),
            Self::Modes(modes) => modes.iter().map(|&(d, g2, nb)| C64::new(0.0, -d * x).exp() * (g2 * nb)).sum(),
        }
    }

    /// Product weights of K̃(x) = ∫₀^x μ̃ on every step.
    fn integrated_moments(&self, h: f64, n: usize) -> (Vec<C64>, Vec<C64>) {
        match self {
            Self::Modes(modes) => moments(
                |x| {
                    modes
                        .iter()
                        .map(|&(d, g2, _)| {
                            if (d * x).abs() < 1e-8 {
                                C64::new(x, -0.5 * d * x * x) * g2
                            } else {
                                (C64::new(1.0, 0.0) - C64::new(0.0, -d * x).exp()) / C64::new(0.0, d) * g2
                            }
                        })
                        .sum()
                },
                h,
                n,
            ),
            Self::Continuum(_) => {
                let mut a = vec![C64::new(0.0, 0.0); n + 1];
                let mut b = vec![C64::new(0.0, 0.0); n + 1];
                let mut k_left = C64::new(0.0, 0.0);
                for m in 1..=n {
                    let left = (m - 1) as f64 * h;
                    let mut sa = C64::new(0.0, 0.0);
                    let mut sb = C64::new(0.0, 0.0);
                    for &(x, w) in GL8.iter() {
                        let lam = 0.5 * (x + 1.0);
                        let span = lam * h;
                        let partial: C64 = GL8
                            .iter()
                            .map(|&(y, wy)| self.mu(left + 0.5 * span * (y + 1.0)) * wy)
                            .sum::<C64>()
                            * (0.5 * span);
                        let kx = (k_left + partial) * w;
                        sa += kx * lam;
                        sb += kx * (1.0 - lam);
                    }
                    a[m] = sa * (0.5 * h);
                    b[m] = sb * (0.5 * h);
                    let full: C64 = GL8.iter().map(|&(y, wy)| self.mu(left + 0.5 * h * (y + 1.0)) * wy).sum::<C64>() * (0.5 * h);
                    k_left += full;
                }
                (a, b)
            }
        }
    }
}

/// Solves for u(t) and u̇(t) on the grid.
pub fn solve_u(model: &ReservoirModel, grid: &TimeGrid) -> Result<(Vec<C64>, Vec<C64>)> {
    let s = solve_u_with(model, grid, SolveOptions::default())?;
    Ok((s.u, s.udot))
}

/// [`solve_u`] with explicit options.
///
/// Internally solves for w(t) = e^{iω₀t}u(t), which obeys
/// w(t) = 1 − ∫₀^t K̃(t−s)w(s)ds, so the free rotation is exact.
pub fn solve_u_with(model: &ReservoirModel, grid: &TimeGrid, opts: SolveOptions) -> Result<USolution> {
    model.validate()?;
    let n = grid.n_steps;
    let h = grid.dt;
    let kern = RotatingKernels::new(model);
    let (ka, kb) = kern.integrated_moments(h, n);
    let (ma, mb) = moments(|x| kern.mu(x), h, n);
    let (kr, ki) = interior_weights(&ka, &kb);
    let (mr, mi) = interior_weights(&ma, &mb);

    let checkpoints = defect_checkpoints(n);
    let mut w = vec![C64::new(0.0, 0.0); n + 1];
    let mut wdot = if opts.with_udot { vec![C64::new(0.0, 0.0); n + 1] } else { Vec::new() };
    let mut rev = Reversed::new(n);
    w[0] = C64::new(1.0, 0.0);
    rev.set(0, w[0]);
    let denom = C64::new(1.0, 0.0) + kb[1];
    let rate = |k: usize, wk: C64, rev: &Reversed| -> C64 { -(ma[k] + mb[1] * wk + rev.history(&mr, &mi, k)) };
    let mut max_defect = 0.0f64;
    let mut pending: Option<(usize, C64)> = Some((0, C64::new(0.0, 0.0)));
    for k in 1..=n {
        let s = ka[k] + rev.history(&kr, &ki, k);
        let wk = (C64::new(1.0, 0.0) - s) / denom;
        if !(wk.re.is_finite() && wk.im.is_finite()) {
            return Err(Error::StepRejected { t: grid.time(k), defect: f64::INFINITY, tol: opts.defect_tol });
        }
        w[k] = wk;
        let need_rate = opts.with_udot || checkpoints.binary_search(&(k - 1)).is_ok() || checkpoints.binary_search(&k).is_ok();
        if need_rate {
            let r = rate(k, wk, &rev);
            if opts.with_udot {
                wdot[k] = r;
            }
            if let Some((j, rj)) = pending {
                if j + 1 == k && checkpoints.binary_search(&j).is_ok() {
                    let d = (wk - w[j] - (rj + r) * (0.5 * h)).norm();
                    max_defect = max_defect.max(d);
                }
            }
            pending = Some((k, r));
        }
        rev.set(k, wk);
    }
    if max_defect > opts.defect_tol {
        return Err(Error::StepRejected { t: grid.t_max, defect: max_defect, tol: opts.defect_tol });
    }
    if let Some(peak) = w.iter().map(|z| z.norm()).reduce(f64::max) {
        if peak > 1.0 + 1e-9 {
            log::warn!("|u| reaches {peak}, above the unitarity bound");
        }
    }
    let iw0 = C64::new(0.0, OMEGA_0);
    let phase: Vec<C64> = (0..=n).map(|k| C64::new(0.0, -OMEGA_0 * grid.time(k)).exp()).collect();
    let udot = if opts.with_udot {
        wdot.iter().zip(&w).zip(&phase).map(|((&wd, &wk), &p)| (wd - iw0 * wk) * p).collect()
    } else {
        Vec::new()
    };
    let u = w.iter().zip(&phase).map(|(&wk, &p)| wk * p).collect();
    Ok(USolution { u, udot, max_defect })
}

/// Steps whose forward defect is checked: the first 32 and 32 spread evenly.
fn defect_checkpoints(n: usize) -> Vec<usize> {
    let mut c: Vec<usize> = (0..n.min(32)).collect();
    let stride = (n / 32).max(1);
    c.extend((0..n).step_by(stride));
    c.sort_unstable();
    c.dedup();
    c
}

/// Solves for v(t) and v̇(t) given u on the same grid.
pub fn solve_v(model: &ReservoirModel, grid: &TimeGrid, u: &[C64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = grid.n_steps;
    if u.len() != n + 1 {
        return Err(Error::GridMismatch { expected: n + 1, found: u.len() });
    }
    if model.beta.is_zero_temperature() {
        return Ok((vec![0.0; n + 1], vec![0.0; n + 1]));
    }
    let h = grid.dt;
    let kern = RotatingKernels::new(model);
    let (na, nb) = moments(|x| kern.nu(x), h, n);
    let (wr, wi) = interior_weights(&na, &nb);
    let w: Vec<C64> = u.iter().enumerate().map(|(k, &uk)| uk * C64::new(0.0, OMEGA_0 * grid.time(k)).exp()).collect();
    let mut rev = Reversed::new(n);
    rev.set(0, w[0]);
    let mut vdot = vec![0.0; n + 1];
    for k in 1..=n {
        let conv = na[k] * w[0] + nb[1] * w[k] + rev.history(&wr, &wi, k);
        vdot[k] = 2.0 * (w[k].conj() * conv).re;
        rev.set(k, w[k]);
    }
    let v = cumulative_trapezoid(&vdot, h);
    for (i, &vi) in v.iter().enumerate() {
        if vi < -1e-9 {
            return Err(Error::NegativeFluctuation { t: grid.time(i), v: vi });
        }
    }
    Ok((v, vdot))
}

/// Solves u, u̇, v, v̇ in one call.
pub fn solve(model: &ReservoirModel, grid: &TimeGrid) -> Result<DissipationFunctions> {
    let (u, udot) = solve_u(model, grid)?;
    let (v, vdot) = solve_v(model, grid, &u)?;
    Ok(DissipationFunctions { grid: *grid, u, udot, v, vdot })
}

/// Master-equation coefficients with the default |u| floor.
pub fn coefficients(d: &DissipationFunctions) -> Result<MasterCoefficients> {
    coefficients_with_floor(d, U_FLOOR)
}

/// Ω = −Im(u̇/u), Γ = −Re(u̇/u), Γ^β = v̇ + 2vΓ. Samples with |u| < floor are
/// flagged invalid and carry the last valid value.
pub fn coefficients_with_floor(d: &DissipationFunctions, u_floor: f64) -> Result<MasterCoefficients> {
    let len = d.grid.len();
    for found in [d.u.len(), d.udot.len(), d.v.len(), d.vdot.len()] {
        if found != len {
            return Err(Error::GridMismatch { expected: len, found });
        }
    }
    let mut omega = Vec::with_capacity(len);
    let mut gamma = Vec::with_capacity(len);
    let mut gamma_beta = Vec::with_capacity(len);
    let mut valid = Vec::with_capacity(len);
    let mut last: Option<(f64, f64, f64)> = None;
    for i in 0..len {
        let ok = d.u[i].norm() >= u_floor;
        let sample = if ok {
            let r = -d.udot[i] / d.u[i];
            let g = r.re;
            Some((r.im, g, d.vdot[i] + 2.0 * d.v[i] * g))
        } else {
            last
        };
        let (o, g, gb) = sample.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        if ok {
            last = sample;
        }
        omega.push(o);
        gamma.push(g);
        gamma_beta.push(gb);
        valid.push(ok);
    }
    if !valid.iter().any(|&v| v) {
        return Err(Error::AllCoefficientsInvalid);
    }
    Ok(MasterCoefficients { grid: d.grid, omega, gamma, gamma_beta, valid })
}

impl MasterCoefficients {
    /// Time-independent coefficients on a grid.
    pub fn constant(grid: TimeGrid, omega: f64, gamma: f64, gamma_beta: f64) -> Self {
        let len = grid.len();
        Self {
            grid,
            omega: vec![omega; len],
            gamma: vec![gamma; len],
            gamma_beta: vec![gamma_beta; len],
            valid: vec![true; len],
        }
    }

    /// (Ω, Γ, Γ^β) at time t by cubic interpolation of the samples.
    pub fn at(&self, t: f64) -> (f64, f64, f64) {
        let x = (t / self.grid.dt).clamp(0.0, self.grid.n_steps as f64);
        (cubic_interp(&self.omega, x), cubic_interp(&self.gamma, x), cubic_interp(&self.gamma_beta, x))
    }

    /// A = Γ^β and B = 2Γ + Γ^β at sample i.
    pub fn ab(&self, i: usize) -> (f64, f64) {
        (self.gamma_beta[i], 2.0 * self.gamma[i] + self.gamma_beta[i])
    }

    /// First sample flagged invalid at or before index `upto`.
    pub fn first_invalid(&self, upto: usize) -> Option<usize> {
        self.valid.iter().take(upto + 1).position(|&v| !v)
    }
}
