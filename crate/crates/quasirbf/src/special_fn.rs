//! Gamma, digamma, harmonic numbers and the modified Bessel function K_nu.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexValue = Complex64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFnResult {
    pub value: ComplexValue,
    pub is_pole: bool,
}

impl SpecialFnResult {
    fn pole() -> Self {
        SpecialFnResult {
            value: Complex64::new(f64::INFINITY, 0.0),
            is_pole: true,
        }
    }

    fn finite(value: Complex64) -> Self {
        SpecialFnResult { value, is_pole: false }
    }
}

/// Non-positive integer test used for pole detection.
pub fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn is_pole_point(z: Complex64) -> bool {
    z.im == 0.0 && is_nonpositive_integer(z.re)
}

/// sin(pi x) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    if x == x.round() {
        return 0.0;
    }
    let r = x - 2.0 * (x / 2.0).round();
    if r.abs() <= 0.25 {
        (PI * r).sin()
    } else if r > 0.75 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.75 {
        -(PI * (1.0 + r)).sin()
    } else if r > 0.0 {
        (PI * (0.5 - r)).cos()
    } else {
        -(PI * (0.5 + r)).cos()
    }
}

fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

fn lanczos_sum_real(x: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

fn lanczos_sum(z: Complex64) -> Complex64 {
    let mut a = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    a
}

/// ln|Gamma(x)| and the sign of Gamma(x) for real x. Poles give (+inf, 0).
pub fn ln_gamma_real(x: f64) -> (f64, f64) {
    if is_nonpositive_integer(x) {
        return (f64::INFINITY, 0.0);
    }
    if x < 0.5 {
        let s = sin_pi(x);
        let (lg, _) = ln_gamma_real(1.0 - x);
        return (PI.ln() - s.abs().ln() - lg, s.signum());
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    (LN_SQRT_2PI + (xm + 0.5) * t.ln() - t + lanczos_sum_real(xm).ln(), 1.0)
}

/// Gamma(x) for real x; infinite at poles.
pub fn gamma_real(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::INFINITY;
    }
    if x == x.round() && x <= 171.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma_real(1.0 - x));
    }
    let (lg, sg) = ln_gamma_real(x);
    sg * lg.exp()
}

/// 1/Gamma(x) for real x; zero at the poles of Gamma.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x < 0.5 {
        return sin_pi(x) * gamma_real(1.0 - x) / PI;
    }
    let (lg, sg) = ln_gamma_real(x);
    sg * (-lg).exp()
}

/// Digamma for real x; infinite at poles.
pub fn digamma_real(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return digamma_real(1.0 - x) - PI * cos_pi(x) / sin_pi(x);
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    acc + digamma_asymptotic(Complex64::new(x, 0.0)).re
}

fn digamma_asymptotic(z: Complex64) -> Complex64 {
    const B: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let w = z.inv();
    let w2 = w * w;
    let mut p = w2;
    let mut tail = Complex64::new(0.0, 0.0);
    for (k, b) in B.iter().enumerate() {
        tail += p * (b / (2.0 * (k + 1) as f64));
        p *= w2;
    }
    z.ln() - w * 0.5 - tail
}

/// ln sin(pi z), stable for large |Im z|. The imaginary part is defined modulo 2 pi.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im.abs() < 8.0 {
        return (z * PI).sin().ln();
    }
    let flip = z.im < 0.0;
    let w = if flip { z.conj() } else { z };
    // sin(pi w) = e^{-i pi w} (e^{2 i pi w} - 1) / (2i), with |e^{2 i pi w}| tiny
    let i = Complex64::new(0.0, 1.0);
    let e2 = (i * w * (2.0 * PI)).exp();
    let r = -i * w * PI + ((e2 - 1.0) / (i * 2.0)).ln();
    if flip {
        r.conj()
    } else {
        r
    }
}

/// Principal-branch-free ln Gamma(z): exp of the result is Gamma(z). Poles give +inf.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if is_pole_point(z) {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    if z.re < 0.5 {
        return Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let zm = z - 1.0;
    let t = zm + LANCZOS_G + 0.5;
    (zm + 0.5) * t.ln() - t + LN_SQRT_2PI + lanczos_sum(zm).ln()
}

pub fn gamma(z: ComplexValue) -> SpecialFnResult {
    if is_pole_point(z) {
        return SpecialFnResult::pole();
    }
    if z.im == 0.0 {
        return SpecialFnResult::finite(Complex64::new(gamma_real(z.re), 0.0));
    }
    if z.re < 0.5 {
        let g = gamma(Complex64::new(1.0, 0.0) - z).value;
        return SpecialFnResult::finite(PI / ((z * PI).sin() * g));
    }
    SpecialFnResult::finite(ln_gamma(z).exp())
}

/// cot(pi z) evaluated without overflow for large |Im z|.
fn cot_pi(z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if z.im.abs() < 1.0 {
        let w = z * PI;
        return w.cos() / w.sin();
    }
    let flip = z.im < 0.0;
    let w = if flip { z.conj() } else { z };
    let e = (i * w * (2.0 * PI)).exp();
    let r = i * (e + 1.0) / (e - 1.0);
    if flip {
        r.conj()
    } else {
        r
    }
}

pub fn digamma(z: ComplexValue) -> SpecialFnResult {
    if is_pole_point(z) {
        return SpecialFnResult::pole();
    }
    if z.im == 0.0 {
        return SpecialFnResult::finite(Complex64::new(digamma_real(z.re), 0.0));
    }
    if z.re < 0.5 {
        let r = digamma(Complex64::new(1.0, 0.0) - z).value - cot_pi(z) * PI;
        return SpecialFnResult::finite(r);
    }
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while w.norm() < 12.0 {
        acc -= w.inv();
        w += 1.0;
    }
    SpecialFnResult::finite(acc + digamma_asymptotic(w))
}

/// H_m = 1 + 1/2 + ... + 1/m, with H_0 = 0.
pub fn harmonic(m: u64) -> f64 {
    (1..=m).map(|k| 1.0 / k as f64).sum()
}

/// Taylor coefficients of 1/Gamma(1+x) about x = 0.
const RGAMMA1P: [f64; 27] = [
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
    -1.181_259_301_697_458_769_5e-16,
    1.186_692_254_751_600_332_6e-18,
];

/// Temme's auxiliary values (gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)) for |mu| <= 1/2.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut even = 0.0;
    let mut odd_over_mu = 0.0;
    let mut p = 1.0;
    for pair in RGAMMA1P.chunks(2) {
        even += pair[0] * p;
        if let Some(c) = pair.get(1) {
            odd_over_mu += c * p;
        }
        p *= mu * mu;
    }
    let gampl = even + mu * odd_over_mu;
    let gammi = even - mu * odd_over_mu;
    (-odd_over_mu, even, gampl, gammi)
}

/// K_nu(x) and K_{nu+1}(x) for nu >= 0 (Temme series for small x, Steed's continued fraction otherwise).
fn bessel_k_pair(nu: f64, x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-16;
    let nl = (nu + 0.5).floor() as i64;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let (mut rkmu, mut rk1);
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mut i = 1.0;
        loop {
            ff = (i * ff + p + q) / (i * i - xmu2);
            c *= dd / i;
            p /= i - xmu;
            q /= i + xmu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - i * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS || i > 500.0 {
                break;
            }
            i += 1.0;
        }
        rkmu = sum;
        rk1 = sum1 * xi2;
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut i = 2.0;
        loop {
            a -= 2.0 * (i - 1.0);
            c = -a * c / i;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS || i > 10_000.0 {
                break;
            }
            i += 1.0;
        }
        h *= a1;
        rkmu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
        rk1 = rkmu * (xmu + x + 0.5 - h) * xi;
    }
    for i in 1..=nl {
        let next = (xmu + i as f64) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = next;
    }
    (rkmu, rk1)
}

/// Modified Bessel function of the second kind K_nu(x), x > 0.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_k requires x > 0, got {x}")));
    }
    if !nu.is_finite() {
        return Err(Error::param("nu", "must be finite"));
    }
    Ok(bessel_k_pair(nu.abs(), x).0)
}
