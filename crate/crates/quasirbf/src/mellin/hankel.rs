//! Gaussian-damped Hankel integrals extrapolated to zero damping.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::rbf_model::{eval_rbf, RbfSpec};
use crate::special_fn::gamma_real;

const GL_POINTS: usize = 20;

fn gauss_legendre() -> &'static [(f64, f64); GL_POINTS] {
    static NODES: OnceLock<[(f64, f64); GL_POINTS]> = OnceLock::new();
    NODES.get_or_init(|| {
        let m = GL_POINTS;
        let mut out = [(0.0, 0.0); GL_POINTS];
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

fn gl_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    gauss_legendre().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

fn j_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = (0.5 * x).powf(nu) / gamma_real(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k as f64 + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn j_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (0.0, 0.0);
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a == 0.0 {
            break;
        }
        if a.abs() > prev {
            break;
        }
        prev = a.abs();
        let sgn = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sgn * a;
        } else {
            q += sgn * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn j_miller(m: usize, x: f64) -> f64 {
    let start = 2 * ((m.max(x as usize) + 20 + (40.0 * x).sqrt() as usize) / 2);
    let (mut jp1, mut j) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    let mut want = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if k - 1 == m {
            want = j;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            want *= 1e-250;
        }
    }
    norm += j;
    want / norm
}

/// Bessel function of the first kind for integer or half-integer order.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else if nu > 0.0 { 0.0 } else { f64::INFINITY };
    }
    let half = (nu - 0.5).rem_euclid(1.0) == 0.0;
    if half {
        // the asymptotic series terminates for half-integer order
        if x < 1.0 && nu > -1.0 {
            j_series(nu, x)
        } else {
            j_asymptotic(nu, x)
        }
    } else if nu >= 0.0 && nu == nu.round() {
        if x < 1.0 {
            j_series(nu, x)
        } else if x < 25.0 {
            j_miller(nu as usize, x)
        } else {
            j_asymptotic(nu, x)
        }
    } else if x < 20.0 {
        j_series(nu, x)
    } else {
        j_asymptotic(nu, x)
    }
}

/// `8e-3 s^2 2^{-k}`, k = 0..6.
pub fn default_eps_list(s: f64) -> Vec<f64> {
    (0..7).map(|k| 8e-3 * s * s / f64::powi(2.0, k)).collect()
}

/// Damped integral and the sum of |panel| values (a roundoff scale).
fn damped_integral(n: u32, phi: &dyn Fn(f64) -> f64, s: f64, c: f64, eps: f64) -> (f64, f64) {
    let nu = n as f64 / 2.0 - 1.0;
    let integrand = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        r.powf(n as f64 / 2.0) * phi(r) * bessel_j(nu, s * r) * (-eps * r * r).exp()
    };
    // far enough out that r^{n/2 + growth} e^{-eps r^2} is negligible
    let growth = {
        let (a, b) = (phi(1e3).abs(), phi(1e4).abs());
        if a > 0.0 && b > 0.0 { (b / a).log10().max(0.0) } else { 0.0 }
    };
    let p = n as f64 / 2.0 + growth;
    let mut rmax = (45.0 / eps).sqrt();
    for _ in 0..6 {
        rmax = ((45.0 + p * rmax.ln().max(0.0)) / eps).sqrt();
    }
    let lead = (PI / s).min(c).min(rmax);
    let mut total = 0.0;
    let mut l1 = 0.0;
    // geometric panels towards the origin
    let mut b = lead;
    for _ in 0..60 {
        let a = 0.5 * b;
        let v = gl_panel(&integrand, a, b);
        total += v;
        l1 += v.abs();
        b = a;
    }
    let mut a = lead;
    while a < rmax {
        let w = (PI / (2.0 * s)).min((0.5 * c).max(0.25 * a));
        let b = (a + w).min(rmax);
        let v = gl_panel(&integrand, a, b);
        total += v;
        l1 += v.abs();
        a = b;
    }
    let pref = (2.0 * PI).powf(n as f64 / 2.0) * s.powf(1.0 - n as f64 / 2.0);
    (pref * total, pref * l1)
}

/// Polynomial extrapolation of the damped values to eps = 0 (Neville).
fn extrapolate(eps: &[f64], vals: &[f64]) -> (f64, f64) {
    let m = eps.len();
    let mut p = vals.to_vec();
    let mut prev_top = p[m - 1];
    let mut top = p[m - 1];
    for k in 1..m {
        for i in (k..m).rev() {
            p[i] = (eps[i - k] * p[i] - eps[i] * p[i - 1]) / (eps[i - k] - eps[i]);
        }
        prev_top = top;
        top = p[m - 1];
    }
    (top, (top - prev_top).abs())
}

/// Radial Fourier transform of an arbitrary radial function by damped Hankel quadrature.
pub fn oracle_hankel_fn(n: u32, phi: &dyn Fn(f64) -> f64, s: f64, c: f64, eps_list: &[f64]) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::param("s", "must be positive"));
    }
    if eps_list.len() < 3 {
        return Err(Error::param("eps_list", "needs at least 3 entries"));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::param("eps_list", "must be positive and strictly decreasing"));
    }
    let runs: Vec<(f64, f64)> = eps_list.iter().map(|&e| damped_integral(n, phi, s, c, e)).collect();
    let vals: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let l1 = runs.iter().fold(0.0f64, |m, r| m.max(r.1));
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Quadrature("non-finite damped integral".into()));
    }
    // Small eps suffers cancellation, large eps a slowly converging expansion:
    // keep the window of consecutive levels whose extrapolants agree best.
    let m = eps_list.len();
    let mut best = (f64::INFINITY, f64::INFINITY);
    for len in 3.min(m)..=5.min(m) {
        for start in 0..=(m - len) {
            let (v, e) = extrapolate(&eps_list[start..start + len], &vals[start..start + len]);
            if e < best.1 {
                best = (v, e);
            }
        }
    }
    let (value, err) = best;
    let scale = value.abs().max(l1 * 1e-12);
    if err > 1e-3 * scale {
        return Err(Error::Quadrature(format!(
            "extrapolation in eps did not settle: {value:.6e} +- {err:.1e}"
        )));
    }
    Ok(value)
}

/// Brute-force transform of `spec` at s > 0.
pub fn oracle_hankel(spec: &RbfSpec, s: f64, eps_list: &[f64]) -> Result<f64> {
    spec.validate()?;
    let phi = |r: f64| eval_rbf(spec, r).unwrap_or(0.0);
    oracle_hankel_fn(spec.n(), &phi, s, spec.c(), eps_list)
}
