//! Fock-space propagation of the exact master equation
//!
//! dρ/dt = −iΩ[a†a, ρ] + A(a†ρa − ½{aa†, ρ}) + B(aρa† − ½{a†a, ρ}),
//! with A = Γ^β and B = 2Γ + Γ^β, plus the closed-form solution built from
//! the su(1,1) similarity transformation and the observable N(t).
//!
//! The truncated ladder operators keep the generator trace preserving. Each
//! diagonal band ρ_{n+k,n} evolves independently, so only bands present in the
//! initial state are propagated and only the lower triangle is stored.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::dissipation::MasterCoefficients;
use crate::error::{Error, Result};
use crate::fock::FockDensityMatrix;
use crate::math::ln_factorials;
use crate::C64;

/// Controls for [`evolve_master`].
#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Coefficient samples between stored outputs.
    pub output_every: usize,
    /// Keep full density matrices at output times.
    pub keep_states: bool,
    /// Integrate through samples flagged invalid.
    pub allow_invalid: bool,
    /// Largest accepted truncation leakage estimate.
    pub leakage_bound: f64,
    /// Abort when the minimum eigenvalue drops below −positivity_tol.
    pub positivity_tol: f64,
    /// Diagonalize at output times to monitor positivity.
    pub check_positivity: bool,
    /// Bands whose initial entries are all below this are not propagated.
    pub band_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            output_every: 1,
            keep_states: false,
            allow_invalid: false,
            leakage_bound: 1e-6,
            positivity_tol: 1e-6,
            check_positivity: true,
            band_threshold: 1e-16,
        }
    }
}

/// Observables at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub populations: Vec<f64>,
    pub mean_number: f64,
    pub purity: f64,
    pub trace: f64,
    /// NaN when positivity checks are disabled.
    pub min_eigenvalue: f64,
    pub leakage: f64,
}

/// Output of a propagation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub states: Vec<FockDensityMatrix>,
    pub final_state: FockDensityMatrix,
    /// Largest |Tr ρ(t) − Tr ρ(0)| seen at outputs (never corrected).
    pub trace_drift: f64,
    pub max_leakage: f64,
}

struct Band {
    k: usize,
    /// ρ_{n+k,n}
    rho: Vec<C64>,
    diag_b: Vec<f64>,
    diag_a: Vec<f64>,
    up: Vec<f64>,
    down: Vec<f64>,
}

impl Band {
    fn new(k: usize, d: usize, rho: Vec<C64>) -> Self {
        let len = d - k;
        let h = |j: usize| if j + 1 < d { (j + 1) as f64 } else { 0.0 };
        let mut diag_b = Vec::with_capacity(len);
        let mut diag_a = Vec::with_capacity(len);
        let mut up = Vec::with_capacity(len);
        let mut down = Vec::with_capacity(len);
        for n in 0..len {
            let m = n + k;
            diag_b.push(0.5 * (m + n) as f64);
            diag_a.push(0.5 * (h(m) + h(n)));
            up.push(if n + 1 < len { (((m + 1) * (n + 1)) as f64).sqrt() } else { 0.0 });
            down.push(((m * n) as f64).sqrt());
        }
        Self { k, rho, diag_b, diag_a, up, down }
    }

    /// out = L(Ω, A, B) x.
    fn apply(&self, x: &[C64], out: &mut [C64], omega: f64, a: f64, b: f64) {
        let len = x.len();
        let rot = C64::new(0.0, -omega * self.k as f64);
        for n in 0..len {
            let mut r = x[n] * (rot - b * self.diag_b[n] - a * self.diag_a[n]);
            if n + 1 < len {
                r += x[n + 1] * (b * self.up[n]);
            }
            if n > 0 {
                r += x[n - 1] * (a * self.down[n]);
            }
            out[n] = r;
        }
    }

    /// One classical RK4 step.
    fn rk4(&mut self, t: f64, dt: f64, coeffs: &MasterCoefficients, work: &mut [Vec<C64>; 5]) {
        let len = self.rho.len();
        let at = |s: f64| {
            let (o, g, gb) = coeffs.at(s);
            (o, gb, 2.0 * g + gb)
        };
        let (o0, a0, b0) = at(t);
        let (o1, a1, b1) = at(t + 0.5 * dt);
        let (o2, a2, b2) = at(t + dt);
        let [k1, k2, k3, k4, tmp] = work;
        self.apply(&self.rho, &mut k1[..len], o0, a0, b0);
        for n in 0..len {
            tmp[n] = self.rho[n] + k1[n] * (0.5 * dt);
        }
        self.apply(&tmp[..len], &mut k2[..len], o1, a1, b1);
        for n in 0..len {
            tmp[n] = self.rho[n] + k2[n] * (0.5 * dt);
        }
        self.apply(&tmp[..len], &mut k3[..len], o1, a1, b1);
        for n in 0..len {
            tmp[n] = self.rho[n] + k3[n] * dt;
        }
        self.apply(&tmp[..len], &mut k4[..len], o2, a2, b2);
        for n in 0..len {
            self.rho[n] += (k1[n] + (k2[n] + k3[n]) * 2.0 + k4[n]) * (dt / 6.0);
        }
    }
}

fn assemble(bands: &[Band], d: usize) -> FockDensityMatrix {
    let mut r = FockDensityMatrix::zeros(d);
    for band in bands {
        for (n, &z) in band.rho.iter().enumerate() {
            let m = n + band.k;
            r.set(m, n, z);
            if band.k > 0 {
                r.set(n, m, z.conj());
            }
        }
    }
    r
}

/// Cutoff n_max for a coherent amplitude |α₀|² and mean thermal occupation r,
/// such that the geometric tail beyond n_max is below `leakage`.
pub fn fock_cutoff(alpha0_sq: f64, r: f64, leakage: f64) -> usize {
    let poisson = alpha0_sq + 8.0 * (alpha0_sq + 1.0).sqrt();
    let thermal = if r > 0.0 { (1.0 / leakage).ln() / (1.0 + 1.0 / r).ln() } else { 0.0 };
    (poisson + thermal + 10.0).ceil() as usize
}

/// Propagates ρ₀ over the coefficient grid with RK4 substeps.
///
/// Substeps are chosen per grid interval from a Gershgorin bound on the
/// generator so that the explicit stepper stays stable.
pub fn evolve_master(rho0: &FockDensityMatrix, coeffs: &MasterCoefficients, opts: EvolveOptions) -> Result<Trajectory> {
    let d = rho0.dim();
    let grid = coeffs.grid;
    if !opts.allow_invalid {
        if let Some(i) = coeffs.first_invalid(grid.n_steps) {
            return Err(Error::InvalidCoefficients { t: grid.time(i) });
        }
    }
    let mut bands: Vec<Band> = Vec::new();
    for k in 0..d {
        let rho: Vec<C64> = (0..d - k).map(|n| rho0.get(n + k, n)).collect();
        if k == 0 || rho.iter().any(|z| z.norm() > opts.band_threshold) {
            bands.push(Band::new(k, d, rho));
        }
    }
    let k_max = bands.iter().map(|b| b.k).max().unwrap_or(0) as f64;
    let mut work: [Vec<C64>; 5] = core::array::from_fn(|_| vec![C64::new(0.0, 0.0); d]);
    let trace0 = rho0.trace();
    let every = opts.output_every.max(1);

    let mut points = Vec::new();
    let mut states = Vec::new();
    let mut trace_drift = 0.0f64;
    let mut max_leakage = rho0.leakage;
    let mut record = |i: usize, bands: &[Band]| -> Result<()> {
        let t = grid.time(i);
        let state = assemble(bands, d);
        let trace = state.trace();
        trace_drift = trace_drift.max((trace - trace0).abs());
        let leakage = state.tail_estimate();
        max_leakage = max_leakage.max(leakage);
        if leakage > opts.leakage_bound {
            return Err(Error::Leakage { leakage, bound: opts.leakage_bound });
        }
        let min_eigenvalue = if opts.check_positivity { state.min_eigenvalue() } else { f64::NAN };
        if min_eigenvalue < -opts.positivity_tol {
            return Err(Error::Positivity { t, min_eig: min_eigenvalue });
        }
        points.push(TrajectoryPoint {
            t,
            populations: state.populations(),
            mean_number: state.mean_number(),
            purity: state.purity(),
            trace,
            min_eigenvalue,
            leakage,
        });
        if opts.keep_states {
            states.push(state);
        }
        Ok(())
    };
    record(0, &bands)?;
    for i in 0..grid.n_steps {
        let t0 = grid.time(i);
        let h = grid.dt;
        let bound = |j: usize| {
            let (a, b) = coeffs.ab(j);
            (a.abs() + b.abs()) * 2.0 * d as f64 + coeffs.omega[j].abs() * k_max
        };
        let spectral = bound(i).max(bound(i + 1));
        let nsub = ((h * spectral / 2.5).ceil() as usize).max(1);
        let dt = h / nsub as f64;
        for s in 0..nsub {
            let t = t0 + s as f64 * dt;
            for band in bands.iter_mut() {
                band.rk4(t, dt, coeffs, &mut work);
            }
        }
        if (i + 1) % every == 0 || i + 1 == grid.n_steps {
            record(i + 1, &bands)?;
        }
    }
    if trace_drift > 1e-10 {
        log::info!("trace drift {trace_drift:e} over t = {}", grid.t_max);
    }
    let mut final_state = assemble(&bands, d);
    final_state.leakage = max_leakage;
    Ok(Trajectory { points, states, final_state, trace_drift, max_leakage })
}

/// Solution of the α± system in bounded variables, sampled on the coefficient grid.
///
/// α₊ obeys α̇₊ = Bα₊² − (A+B)α₊ + A; with γ = 2Bα₊ − (A+B) and G = ∫γ the
/// surrogate y = α₋e^{G} obeys ẏ = Be^{G}. Φ = ∫Ω and P = ∫(Bα₊ − A) is the
/// logarithm of the normalization prefactor.
#[derive(Debug, Clone)]
pub struct AlgebraicSolution {
    pub times: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha_plus: Vec<f64>,
    pub gamma_alg: Vec<f64>,
    pub big_g: Vec<f64>,
    pub y: Vec<f64>,
    pub phi: Vec<f64>,
    pub log_prefactor: Vec<f64>,
}

impl AlgebraicSolution {
    /// α₋ = y e^{−G}; grows without bound when the state relaxes.
    pub fn alpha_minus(&self, i: usize) -> f64 {
        self.y[i] * (-self.big_g[i]).exp()
    }
}

/// Integrates the α± system with RK4 on the coefficient grid.
pub fn solve_alpha_odes(coeffs: &MasterCoefficients) -> AlgebraicSolution {
    let grid = coeffs.grid;
    let rhs = |t: f64, z: &[f64; 5]| -> [f64; 5] {
        let (o, g, gb) = coeffs.at(t);
        let (a, b) = (gb, 2.0 * g + gb);
        let ap = z[0];
        let gam = 2.0 * b * ap - (a + b);
        [b * ap * ap - (a + b) * ap + a, gam, b * z[1].exp(), o, b * ap - a]
    };
    let n = grid.len();
    let mut z = [0.0f64; 5];
    let mut out = AlgebraicSolution {
        times: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        alpha_plus: Vec::with_capacity(n),
        gamma_alg: Vec::with_capacity(n),
        big_g: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        log_prefactor: Vec::with_capacity(n),
    };
    let push = |i: usize, z: &[f64; 5], out: &mut AlgebraicSolution| {
        let (a, b) = coeffs.ab(i);
        out.times.push(grid.time(i));
        out.a.push(a);
        out.b.push(b);
        out.alpha_plus.push(z[0]);
        out.gamma_alg.push(2.0 * b * z[0] - (a + b));
        out.big_g.push(z[1]);
        out.y.push(z[2]);
        out.phi.push(z[3]);
        out.log_prefactor.push(z[4]);
    };
    push(0, &z, &mut out);
    let h = grid.dt;
    for i in 0..grid.n_steps {
        let t = grid.time(i);
        let add = |z: &[f64; 5], k: &[f64; 5], s: f64| -> [f64; 5] { core::array::from_fn(|j| z[j] + s * k[j]) };
        let k1 = rhs(t, &z);
        let k2 = rhs(t + 0.5 * h, &add(&z, &k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, &add(&z, &k2, 0.5 * h));
        let k4 = rhs(t + h, &add(&z, &k3, h));
        for j in 0..5 {
            z[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
        }
        push(i + 1, &z, &mut out);
    }
    out
}

/// ln|x| and sign of x^p for integer p ≥ 0.
fn signed_log_pow(x: f64, p: usize) -> (f64, f64) {
    if p == 0 {
        return (0.0, 1.0);
    }
    if x == 0.0 {
        return (f64::NEG_INFINITY, 1.0);
    }
    let sign = if x < 0.0 && p % 2 == 1 { -1.0 } else { 1.0 };
    (p as f64 * x.abs().ln(), sign)
}

/// Closed-form ρ(t) at sample `i` of the algebraic solution, projected on `dim` levels:
///
/// ρ(t) = e^{P} e^{α₊K₊} Σ_{nk} ρ_{nk} e^{−i(n−k)Φ}
///        Σ_{m≤min(n,k)} (y^m/m!) e^{((n+k)/2 − m)G} √(n!k!/((n−m)!(k−m)!)) |n−m⟩⟨k−m|,
///
/// where e^{α₊K₊}|a⟩⟨b| = Σ_j (α₊^j/j!) √((a+j)!(b+j)!/(a!b!)) |a+j⟩⟨b+j|.
/// The prefactor e^{P} is the exact normalization; no trace rescaling is applied.
pub fn analytic_state(rho0: &FockDensityMatrix, sol: &AlgebraicSolution, i: usize, dim: usize) -> FockDensityMatrix {
    let d0 = rho0.dim();
    let lf = ln_factorials(dim.max(d0) + 1);
    let (ap, g, y, phi, p) = (sol.alpha_plus[i], sol.big_g[i], sol.y[i], sol.phi[i], sol.log_prefactor[i]);
    let mut out = FockDensityMatrix::zeros(dim);
    // intermediate |a⟩⟨b| coefficients after the K₋/K₀ stage
    let mut mid = vec![C64::new(0.0, 0.0); d0 * d0];
    for n in 0..d0 {
        for k in 0..d0 {
            let r = rho0.get(n, k);
            if r.norm() == 0.0 {
                continue;
            }
            let rot = r * C64::new(0.0, -(n as f64 - k as f64) * phi).exp();
            for m in 0..=n.min(k) {
                let (ly, sy) = signed_log_pow(y, m);
                if ly == f64::NEG_INFINITY {
                    continue;
                }
                let lw = ly - lf[m] + (0.5 * (n + k) as f64 - m as f64) * g + 0.5 * (lf[n] + lf[k] - lf[n - m] - lf[k - m]);
                mid[(n - m) * d0 + (k - m)] += rot * (sy * lw.exp());
            }
        }
    }
    for a in 0..d0 {
        for b in 0..d0 {
            let c = mid[a * d0 + b];
            if c.norm() == 0.0 {
                continue;
            }
            let mut j = 0;
            while a + j < dim && b + j < dim {
                let (la, sa) = signed_log_pow(ap, j);
                if la == f64::NEG_INFINITY {
                    break;
                }
                let lw = p + la - lf[j] + 0.5 * (lf[a + j] + lf[b + j] - lf[a] - lf[b]);
                let cur = out.get(a + j, b + j);
                out.set(a + j, b + j, cur + c * (sa * lw.exp()));
                j += 1;
            }
        }
    }
    out
}

/// N(t) = |α₀u(t)|² + v(t).
pub fn coherent_occupation(alpha0: C64, u: &[C64], v: &[f64]) -> Result<Vec<f64>> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { left: u.len(), right: v.len() });
    }
    Ok(u.iter().zip(v).map(|(&uu, &vv)| (alpha0 * uu).norm_sqr() + vv).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    #[test]
    fn free_rotation_when_undamped() {
        let grid = TimeGrid::new(3.0, 0.01).unwrap();
        let c = MasterCoefficients::constant(grid, 1.0, 0.0, 0.0);
        let rho0 = FockDensityMatrix::coherent(C64::new(0.8, 0.3), 12);
        let tr = evolve_master(&rho0, &c, EvolveOptions { output_every: 300, ..Default::default() }).unwrap();
        let f = &tr.final_state;
        for n in 0..12 {
            assert!((f.get(n, n).re - rho0.get(n, n).re).abs() < 1e-12);
        }
        let expect = rho0.get(3, 1) * C64::new(0.0, -2.0 * 3.0).exp();
        assert!((f.get(3, 1) - expect).norm() < 1e-7);
    }

    #[test]
    fn constant_rates_relax_to_geometric_state() {
        let grid = TimeGrid::new(60.0, 0.05).unwrap();
        let (g, gb) = (0.2, 0.3);
        let c = MasterCoefficients::constant(grid, 1.0, g, gb);
        let rho0 = FockDensityMatrix::number(2, 40).unwrap();
        let tr = evolve_master(&rho0, &c, EvolveOptions { output_every: 400, ..Default::default() }).unwrap();
        let r = gb / (2.0 * g);
        let p = tr.final_state.populations();
        for (n, &pn) in p.iter().enumerate().take(10) {
            let expect = r.powi(n as i32) / (1.0 + r).powi(n as i32 + 1);
            assert!((pn - expect).abs() < 1e-9, "n = {n}");
        }
        assert!(tr.trace_drift < 1e-12);
    }

    #[test]
    fn alpha_plus_reaches_fixed_point() {
        let grid = TimeGrid::new(80.0, 0.01).unwrap();
        let c = MasterCoefficients::constant(grid, 1.0, 0.2, 0.3);
        let s = solve_alpha_odes(&c);
        let (a, b) = (0.3, 0.7);
        assert!((s.alpha_plus.last().unwrap() - a / b).abs() < 1e-8);
        assert!(s.alpha_plus.windows(2).all(|w| w[1] >= w[0]));
        let ys = &s.y;
        assert!((ys[ys.len() - 1] - ys[ys.len() - 100]).abs() < 1e-8);
        let zero = solve_alpha_odes(&MasterCoefficients::constant(grid, 1.0, 0.0, 0.0));
        assert!(zero.alpha_plus.iter().all(|&x| x == 0.0) && zero.y.iter().all(|&x| x == 0.0));
        assert_eq!(s.alpha_minus(0), 0.0);
    }

    #[test]
    fn analytic_state_matches_master_with_constant_rates() {
        let grid = TimeGrid::new(4.0, 0.01).unwrap();
        let c = MasterCoefficients::constant(grid, 1.0, 0.15, 0.4);
        let rho0 = FockDensityMatrix::coherent(C64::new(0.7, -0.4), 10);
        let s = solve_alpha_odes(&c);
        let tr = evolve_master(&FockDensityMatrix::from_elements(60, embed(&rho0, 60)).unwrap(), &c, EvolveOptions { output_every: 100, keep_states: true, ..Default::default() }).unwrap();
        for (k, state) in tr.states.iter().enumerate() {
            let i = k * 100;
            let an = analytic_state(&rho0, &s, i, 60);
            let diff = an.sub(state).unwrap();
            let dist: f64 = diff.eigenvalues().iter().map(|x| x.abs()).sum();
            assert!(dist < 1e-8, "t = {}: {dist}", grid.time(i));
        }
    }

    #[test]
    fn vacuum_is_fixed_at_zero_temperature() {
        let grid = TimeGrid::new(5.0, 0.01).unwrap();
        let c = MasterCoefficients::constant(grid, 1.0, 0.3, 0.0);
        let s = solve_alpha_odes(&c);
        let vac = FockDensityMatrix::number(0, 5).unwrap();
        let st = analytic_state(&vac, &s, grid.n_steps, 5);
        assert!((st.get(0, 0).re - 1.0).abs() < 1e-14);
        assert!((st.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_coefficients_abort() {
        let grid = TimeGrid::new(1.0, 0.1).unwrap();
        let mut c = MasterCoefficients::constant(grid, 1.0, 0.1, 0.1);
        c.valid[4] = false;
        let r = evolve_master(&FockDensityMatrix::number(0, 4).unwrap(), &c, EvolveOptions::default());
        assert!(matches!(r, Err(Error::InvalidCoefficients { .. })));
        assert!(evolve_master(&FockDensityMatrix::number(0, 30).unwrap(), &c, EvolveOptions { allow_invalid: true, ..Default::default() }).is_ok());
    }

    #[test]
    fn cutoff_rule() {
        assert_eq!(fock_cutoff(0.0, 0.0, 1e-6), 18);
        let n = fock_cutoff(1.0, 16.0, 1e-6);
        let q: f64 = 16.0 / 17.0;
        assert!(q.powi(n as i32) < 1e-6);
    }

    #[test]
    fn occupation_formula() {
        let u = [C64::new(1.0, 0.0), C64::new(0.0, 0.5)];
        let n = coherent_occupation(C64::new(2.0, 0.0), &u, &[0.0, 0.25]).unwrap();
        assert_eq!(n, vec![4.0, 1.25]);
        assert!(coherent_occupation(C64::new(0.0, 0.0), &u, &[0.0]).is_err());
    }

    fn embed(r: &FockDensityMatrix, d: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for m in 0..r.dim() {
            for n in 0..r.dim() {
                out[m * d + n] = r.get(m, n);
            }
        }
        out
    }
}
