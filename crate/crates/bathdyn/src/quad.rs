//! Adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 4000 }
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
}

fn kronrod<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive integral of `f` over the finite interval [a, b].
pub fn integrate<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: C64::new(0.0, 0.0), error: 0.0 });
    }
    let (v0, e0) = kronrod(&mut f, a, b);
    let mut parts: Vec<(f64, f64, C64, f64)> = alloc::vec![(a, b, v0, e0)];
    let mut total = v0;
    let mut err = e0;
    while err > opts.abs_tol.max(opts.rel_tol * total.norm()) {
        if parts.len() >= opts.max_intervals {
            return Err(Error::Quadrature { value: total.norm(), error: err });
        }
        let (imax, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, v, e) = parts.swap_remove(imax);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature { value: total.norm(), error: err });
        }
        let (vl, el) = kronrod(&mut f, lo, mid);
        let (vr, er) = kronrod(&mut f, mid, hi);
        total += vl + vr - v;
        err += el + er - e;
        parts.push((lo, mid, vl, el));
        parts.push((mid, hi, vr, er));
    }
    // recompute the sums to remove accumulated cancellation
    let value = parts.iter().fold(C64::new(0.0, 0.0), |s, p| s + p.2);
    let error = parts.iter().map(|p| p.3).sum();
    Ok(QuadResult { value, error })
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    integrate(|x| C64::new(f(x), 0.0), a, b, opts).map(|r| r.value.re)
}

/// Integral over consecutive breakpoints, summing the pieces.
pub fn integrate_pieces<F: FnMut(f64) -> C64>(mut f: F, breaks: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let r = integrate(&mut f, w[0], w[1], opts)?;
        value += r.value;
        error += r.error;
    }
    Ok(QuadResult { value, error })
}
