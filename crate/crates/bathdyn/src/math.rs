//! Special functions and small numerical helpers.

#[allow(unused_imports)]
use num_traits::Float as _;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Euler Gamma function Γ(x) (Lanczos, relative accuracy ~1e-15).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = core::f64::consts::PI;
        return pi / ((pi * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    (2.0 * core::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * lanczos_sum(x)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = core::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (x + 0.5) * t.ln() - t + lanczos_sum(x).ln()
}

/// Table of ln n! for n = 0..len.
pub fn ln_factorials(len: usize) -> alloc::vec::Vec<f64> {
    let mut out = alloc::vec::Vec::with_capacity(len);
    let mut acc = 0.0;
    for n in 0..len {
        if n > 0 {
            acc += (n as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// 8-point Gauss–Legendre nodes and weights on [-1, 1].
pub const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Cumulative trapezoid of uniformly spaced samples, starting from zero.
pub fn cumulative_trapezoid(y: &[f64], h: f64) -> alloc::vec::Vec<f64> {
    let mut out = alloc::vec::Vec::with_capacity(y.len());
    let mut acc = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (y[i - 1] + yi);
        }
        out.push(acc);
    }
    out
}

/// Cubic Lagrange interpolation on uniform samples at fractional index `x`.
pub fn cubic_interp(y: &[f64], x: f64) -> f64 {
    let n = y.len();
    if n == 1 {
        return y[0];
    }
    if n < 4 {
        let i = (x.floor() as usize).min(n - 2);
        let f = x - i as f64;
        return y[i] * (1.0 - f) + y[i + 1] * f;
    }
    let i = (x.floor().max(0.0) as usize).clamp(1, n - 3);
    let f = x - i as f64;
    let (p0, p1, p2, p3) = (y[i - 1], y[i], y[i + 1], y[i + 2]);
    let w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
    let w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
    let w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
    let w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
    w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_integers_and_half() {
        assert!((gamma(1.0) - 1.0).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - core::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((gamma(2.5) - 1.329_340_388_179_137).abs() < 1e-13);
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &x in &[0.3, 1.0, 2.7, 7.5, 15.0] {
            assert!((ln_gamma(x) - gamma(x).ln()).abs() < 1e-12, "x = {x}");
        }
        assert!((ln_gamma(101.0) - 363.739_375_555_563_5).abs() < 1e-9);
    }

    #[test]
    fn ln_factorial_table() {
        let t = ln_factorials(6);
        assert_eq!(t[0], 0.0);
        assert!((t[5] - 120f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_degree_fifteen() {
        let s: f64 = GL8.iter().map(|&(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_interp_is_exact_for_cubics() {
        let y: alloc::vec::Vec<f64> = (0..10).map(|i| { let x = i as f64; x * x * x - 2.0 * x }).collect();
        let x = 4.3;
        assert!((cubic_interp(&y, x) - (x * x * x - 2.0 * x)).abs() < 1e-10);
        let x = 0.4;
        assert!((cubic_interp(&y, x) - (x * x * x - 2.0 * x)).abs() < 1e-10);
        let x = 8.7;
        assert!((cubic_interp(&y, x) - (x * x * x - 2.0 * x)).abs() < 1e-10);
    }
}
