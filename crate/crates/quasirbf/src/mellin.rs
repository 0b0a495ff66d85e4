//! Mellin-Barnes representations of the transforms: pole bookkeeping, residue
//! series, vertical-contour quadrature, the d = 1 Bessel closed form and a
//! brute-force Hankel-integral oracle.
//!
//! Every integrand has the shape
//! `A s^{-q} (1/2 pi i) \int prod Gamma(a_j + b_j t) / prod Gamma(a_k + b_k t) z^t dt`
//! with `z = (2/(c s))^kappa`. A numerator factor with `b > 0` contributes poles
//! running to the left, `b < 0` poles running to the right; the contour keeps
//! the first kind on its left.

mod hankel;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rbf_model::RbfSpec;
use crate::special_fn::{bessel_k, digamma_real, ln_gamma, ln_gamma_real};

pub use hankel::{bessel_j, oracle_hankel, oracle_hankel_fn, default_eps_list};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    TpsIII,
    TpsIV,
    TpsSum,
    PowerFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbIntegrand {
    pub which: Which,
    pub spec: RbfSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleSource {
    GammaNumA,
    GammaNumB,
    GammaDim,
    Merged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfPlane {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleDatum {
    pub location: f64,
    /// Net order for live poles; number of numerator poles removed for cancelled ones.
    pub order: u32,
    pub source: PoleSource,
    pub cancelled: bool,
    /// Side of the contour the pole belongs to.
    pub side: HalfPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ResidueLeft,
    ResidueRight,
    Contour,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtValue {
    pub value: f64,
    pub series_terms_used: usize,
    pub truncation_estimate: f64,
    pub method: Method,
}

/// Contribution of one pole to the transform:
/// `s^power (coeff + coeff_of_log log(c s / 2))`, signed for the side it is closed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidueTerm {
    pub location: f64,
    pub power: f64,
    pub coeff: f64,
    pub coeff_of_log: f64,
    pub order: u32,
    ln_mag: f64,
    sign: f64,
    g: f64,
    kappa: f64,
}

impl ResidueTerm {
    pub fn value_at(&self, s: f64, c: f64) -> f64 {
        if self.sign == 0.0 {
            return 0.0;
        }
        let m = self.sign * (self.ln_mag + self.power * s.ln()).exp();
        match self.order {
            1 => m,
            _ => m * (self.g - self.kappa * (c * s / 2.0).ln()),
        }
    }

    pub fn has_log(&self) -> bool {
        self.coeff_of_log != 0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Factor {
    a: f64,
    b: f64,
    src: PoleSource,
}

#[derive(Debug, Clone)]
struct Shape {
    num: Vec<Factor>,
    den: Vec<Factor>,
    q: f64,
    kappa: f64,
    ln_pref: f64,
    sign_pref: f64,
    c: f64,
}

const COLLISION_TOL: f64 = 1e-12;

fn f(a: f64, b: f64, src: PoleSource) -> Factor {
    Factor { a, b, src }
}

impl MbIntegrand {
    pub fn new(which: Which, spec: RbfSpec) -> Result<Self> {
        spec.validate()?;
        let ok = match which {
            Which::PowerFamily => matches!(spec, RbfSpec::PowerFamily { .. }),
            _ => matches!(spec, RbfSpec::GeneralizedTps { .. }),
        };
        if !ok {
            return Err(Error::WrongFamily(format!("{which:?} does not match the spec family")));
        }
        Ok(MbIntegrand { which, spec })
    }

    /// The integrand of the full transform of `spec`.
    pub fn full(spec: RbfSpec) -> Result<Self> {
        match spec {
            RbfSpec::GeneralizedTps { .. } => MbIntegrand::new(Which::TpsSum, spec),
            RbfSpec::PowerFamily { .. } => MbIntegrand::new(Which::PowerFamily, spec),
        }
    }

    fn shape(&self) -> Shape {
        use PoleSource::*;
        let n = self.spec.n() as f64;
        let c = self.spec.c();
        let ln2 = 2f64.ln();
        let lnpi = PI.ln();
        match (self.which, self.spec) {
            (Which::TpsIII, RbfSpec::GeneralizedTps { d, .. }) => Shape {
                num: vec![f(1.0, -1.0, GammaNumB), f(0.0, 1.0, GammaNumA), f(0.0, 1.0, GammaNumA), f(n / 2.0 + d, d, GammaDim)],
                den: vec![f(1.0, 1.0, GammaNumA), f(-d, -d, GammaDim)],
                q: n + 2.0 * d,
                kappa: 2.0 * d,
                ln_pref: (n + 2.0 * d) * ln2 + 0.5 * n * lnpi,
                sign_pref: 1.0,
                c,
            },
            (Which::TpsIV, RbfSpec::GeneralizedTps { d, .. }) => Shape {
                num: vec![f(1.0, -1.0, GammaNumB), f(0.0, 1.0, GammaNumA), f(0.0, 1.0, GammaNumA), f(n / 2.0, d, GammaDim)],
                den: vec![f(1.0, 1.0, GammaNumA), f(0.0, -d, GammaDim)],
                q: n,
                kappa: 2.0 * d,
                ln_pref: n * ln2 + 0.5 * n * lnpi + 2.0 * d * c.ln(),
                sign_pref: 1.0,
                c,
            },
            (Which::TpsSum, RbfSpec::GeneralizedTps { d, .. }) => Shape {
                num: vec![f(0.0, -1.0, GammaNumB), f(-1.0, 1.0, GammaNumA), f(n / 2.0, d, GammaDim)],
                den: vec![f(0.0, -d, GammaDim)],
                q: n,
                kappa: 2.0 * d,
                ln_pref: n * ln2 + 0.5 * n * lnpi + 2.0 * d * c.ln(),
                sign_pref: 1.0,
                c,
            },
            (Which::PowerFamily, RbfSpec::PowerFamily { lambda, beta, .. }) => {
                let (lg, sg) = ln_gamma_real(-beta);
                let (ln_pref, sign_pref) = if sg == 0.0 {
                    (0.0, 0.0)
                } else {
                    (n * ln2 + 0.5 * n * lnpi + lambda * beta * c.ln() - lg, sg)
                };
                Shape {
                    num: vec![f(0.0, -1.0, GammaNumB), f(-beta, 1.0, GammaNumA), f(n / 2.0, lambda / 2.0, GammaDim)],
                    den: vec![f(0.0, -lambda / 2.0, GammaDim)],
                    q: n,
                    kappa: lambda,
                    ln_pref,
                    sign_pref,
                    c,
                }
            }
            _ => unreachable!("family checked at construction"),
        }
    }

    /// Balance `sum b_num - sum b_den`; positive means the left residue series converges.
    pub fn balance(&self) -> f64 {
        let sh = self.shape();
        sh.num.iter().map(|f| f.b).sum::<f64>() - sh.den.iter().map(|f| f.b).sum::<f64>()
    }

    /// Half-plane whose residue series is the small-s expansion.
    pub fn expansion_side(&self) -> HalfPlane {
        if self.shape().kappa > 0.0 {
            HalfPlane::Left
        } else {
            HalfPlane::Right
        }
    }

    /// The full integrand `A s^{-q} G(t) z^t` at complex t.
    pub fn eval_complex(&self, t: Complex64, s: f64) -> Complex64 {
        eval_integrand(&self.shape(), t, s)
    }
}

fn eval_integrand(sh: &Shape, t: Complex64, s: f64) -> Complex64 {
    if sh.sign_pref == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let lnz = sh.kappa * (2.0 / (sh.c * s)).ln();
    let mut acc = Complex64::new(sh.ln_pref - sh.q * s.ln(), 0.0) + t * lnz;
    for fa in &sh.num {
        acc += ln_gamma(Complex64::new(fa.a, 0.0) + t * fa.b);
    }
    for fa in &sh.den {
        let arg = Complex64::new(fa.a, 0.0) + t * fa.b;
        if arg.im == 0.0 && crate::special_fn::is_nonpositive_integer(arg.re) {
            return Complex64::new(0.0, 0.0);
        }
        acc -= ln_gamma(arg);
    }
    acc.exp() * sh.sign_pref
}

/// If `x` is within tolerance of a non-positive integer, return it as k = -x.
fn nonpos_int(x: f64) -> Option<u64> {
    let k = (-x).round();
    if k >= 0.0 && (x + k).abs() <= COLLISION_TOL * k.max(1.0) {
        Some(k as u64)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy)]
struct PointClass {
    left: i32,
    right: i32,
    num_hits: u32,
    source: PoleSource,
}

fn classify_point(sh: &Shape, p: f64) -> PointClass {
    let (mut nl, mut nr, mut dl, mut dr) = (0i32, 0i32, 0i32, 0i32);
    let mut source: Option<PoleSource> = None;
    let mut merged = false;
    for fa in &sh.num {
        if nonpos_int(fa.a + fa.b * p).is_some() {
            if fa.b > 0.0 {
                nl += 1;
            } else {
                nr += 1;
            }
            match source {
                None => source = Some(fa.src),
                Some(s) if s != fa.src => merged = true,
                _ => {}
            }
        }
    }
    for fa in &sh.den {
        if nonpos_int(fa.a + fa.b * p).is_some() {
            if fa.b > 0.0 {
                dl += 1;
            } else {
                dr += 1;
            }
        }
    }
    let mut l = nl - dl;
    let mut r = nr - dr;
    if l > 0 && r < 0 {
        let m = l.min(-r);
        l -= m;
        r += m;
    }
    if r > 0 && l < 0 {
        let m = r.min(-l);
        r -= m;
        l += m;
    }
    PointClass {
        left: l,
        right: r,
        num_hits: (nl + nr) as u32,
        source: if merged {
            PoleSource::Merged
        } else {
            source.unwrap_or(PoleSource::GammaNumA)
        },
    }
}

/// First `count` poles on one side, ordered by distance from the contour.
pub fn enumerate_poles(integrand: &MbIntegrand, half_plane: HalfPlane, count: usize) -> Result<Vec<PoleDatum>> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    enumerate_shape(&integrand.shape(), half_plane, count)
}

fn enumerate_shape(sh: &Shape, half_plane: HalfPlane, count: usize) -> Result<Vec<PoleDatum>> {
    let left = half_plane == HalfPlane::Left;
    let gens: Vec<&Factor> = sh.num.iter().filter(|fa| (fa.b > 0.0) == left).collect();
    if gens.is_empty() {
        return Ok(Vec::new());
    }
    let mut per = count + 4;
    loop {
        let mut cands: Vec<f64> = Vec::with_capacity(per * gens.len());
        let mut cutoff = if left { f64::NEG_INFINITY } else { f64::INFINITY };
        for fa in &gens {
            for k in 0..per {
                cands.push((-fa.a - k as f64) / fa.b);
            }
            let last = (-fa.a - (per - 1) as f64) / fa.b;
            cutoff = if left { cutoff.max(last) } else { cutoff.min(last) };
        }
        if left {
            cands.sort_by(|a, b| b.partial_cmp(a).unwrap());
        } else {
            cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let mut merged: Vec<f64> = Vec::new();
        for x in cands {
            let within = if left { x >= cutoff } else { x <= cutoff };
            if !within {
                continue;
            }
            match merged.last() {
                Some(&y) if (x - y).abs() <= COLLISION_TOL * y.abs().max(1.0) => {}
                _ => merged.push(x),
            }
        }
        let mut out = Vec::new();
        for p in merged {
            let pc = classify_point(sh, p);
            if pc.left > 0 && pc.right > 0 {
                return Err(Error::Unsupported(format!(
                    "poles from both sides coincide at t = {p}; perturb the parameters"
                )));
            }
            let ord = pc.left.max(pc.right);
            if ord >= 3 {
                return Err(Error::Degenerate(format!("pole of order {ord} at t = {p}")));
            }
            if ord > 0 {
                let side = if pc.left > 0 { HalfPlane::Left } else { HalfPlane::Right };
                if side == half_plane {
                    out.push(PoleDatum { location: p, order: ord as u32, source: pc.source, cancelled: false, side });
                }
            } else if pc.num_hits > 0 {
                out.push(PoleDatum {
                    location: p,
                    order: pc.num_hits.min(2),
                    source: pc.source,
                    cancelled: true,
                    side: half_plane,
                });
            }
            if out.len() == count {
                return Ok(out);
            }
        }
        if per > 1 << 20 {
            return Ok(out);
        }
        per *= 2;
    }
}

fn residue_shape(sh: &Shape, pole: &PoleDatum) -> Result<ResidueTerm> {
    let p = pole.location;
    let power = -sh.q - sh.kappa * p;
    let zero = ResidueTerm {
        location: p,
        power,
        coeff: 0.0,
        coeff_of_log: 0.0,
        order: pole.order.max(1),
        ln_mag: f64::NEG_INFINITY,
        sign: 0.0,
        g: 0.0,
        kappa: sh.kappa,
    };
    if pole.cancelled || sh.sign_pref == 0.0 {
        return Ok(zero);
    }
    let mut ln_mag = sh.ln_pref + sh.kappa * p * (2.0 / sh.c).ln();
    let mut sign = sh.sign_pref;
    let mut ord: i32 = 0;
    let mut g = 0.0;
    let lnfact = |k: u64| ln_gamma_real(k as f64 + 1.0).0;
    for fa in &sh.num {
        let arg = fa.a + fa.b * p;
        if let Some(k) = nonpos_int(arg) {
            ln_mag += -lnfact(k) - fa.b.abs().ln();
            sign *= if k % 2 == 0 { 1.0 } else { -1.0 } * fa.b.signum();
            ord -= 1;
            g += fa.b * digamma_real(k as f64 + 1.0);
        } else {
            let (lg, sg) = ln_gamma_real(arg);
            ln_mag += lg;
            sign *= sg;
            g += fa.b * digamma_real(arg);
        }
    }
    for fa in &sh.den {
        let arg = fa.a + fa.b * p;
        if let Some(k) = nonpos_int(arg) {
            ln_mag += lnfact(k) + fa.b.abs().ln();
            sign *= if k % 2 == 0 { 1.0 } else { -1.0 } * fa.b.signum();
            ord += 1;
            g -= fa.b * digamma_real(k as f64 + 1.0);
        } else {
            let (lg, sg) = ln_gamma_real(arg);
            ln_mag -= lg;
            sign *= sg;
            g -= fa.b * digamma_real(arg);
        }
    }
    if pole.side == HalfPlane::Right {
        sign = -sign;
    }
    let mag = sign * ln_mag.exp();
    match ord {
        0.. => Ok(zero),
        -1 => Ok(ResidueTerm { location: p, power, coeff: mag, coeff_of_log: 0.0, order: 1, ln_mag, sign, g: 0.0, kappa: sh.kappa }),
        -2 => Ok(ResidueTerm {
            location: p,
            power,
            coeff: mag * g,
            coeff_of_log: -sh.kappa * mag,
            order: 2,
            ln_mag,
            sign,
            g,
            kappa: sh.kappa,
        }),
        _ => Err(Error::Degenerate(format!("pole of order {} at t = {p}", -ord))),
    }
}

/// Signed residue contribution of `pole` at `s` (negated for poles closed on the right).
pub fn residue_at(integrand: &MbIntegrand, pole: &PoleDatum, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::param("s", "must be positive"));
    }
    Ok(residue_shape(&integrand.shape(), pole)?.value_at(s, integrand.spec.c()))
}

/// Symbolic residue contribution of `pole`.
pub fn residue_term(integrand: &MbIntegrand, pole: &PoleDatum) -> Result<ResidueTerm> {
    residue_shape(&integrand.shape(), pole)
}

/// Residue terms on the small-s side with power below `up_to_power`, in increasing power.
pub fn residue_expansion(integrand: &MbIntegrand, up_to_power: f64) -> Result<Vec<ResidueTerm>> {
    let sh = integrand.shape();
    let side = integrand.expansion_side();
    let mut count = 16;
    loop {
        let poles = enumerate_shape(&sh, side, count)?;
        let exhausted = poles.len() < count;
        let mut out = Vec::new();
        let mut done = exhausted;
        for p in &poles {
            let t = residue_shape(&sh, p)?;
            if t.power >= up_to_power {
                done = true;
                break;
            }
            if t.sign != 0.0 {
                out.push(t);
            }
        }
        if done {
            return Ok(out);
        }
        if count >= 1 << 16 {
            return Err(Error::NoConvergence(format!("no residue reaches power {up_to_power}")));
        }
        count *= 4;
    }
}

const MAX_SERIES_TERMS: usize = 4096;

struct SeriesOutcome {
    value: f64,
    terms: usize,
    truncation: f64,
    conditioning: f64,
}

fn residue_series(sh: &Shape, side: HalfPlane, s: f64, tol: f64) -> Result<Option<SeriesOutcome>> {
    let mut count = 64;
    while count <= MAX_SERIES_TERMS {
        let poles = enumerate_shape(sh, side, count)?;
        let exhausted = poles.len() < count;
        let mut sum = 0.0;
        let mut max_abs: f64 = 0.0;
        let mut small_run = 0;
        let mut prev = f64::INFINITY;
        let mut used = 0;
        for p in &poles {
            let t = residue_shape(sh, p)?;
            if t.sign == 0.0 {
                continue;
            }
            let v = t.value_at(s, sh.c);
            if !v.is_finite() {
                return Ok(None);
            }
            used += 1;
            sum += v;
            max_abs = max_abs.max(v.abs());
            if v.abs() <= 0.1 * tol * sum.abs() && v.abs() <= prev {
                small_run += 1;
            } else {
                small_run = 0;
            }
            prev = v.abs();
            if small_run >= 3 {
                let cond = if sum != 0.0 { max_abs * 1e-15 / sum.abs() } else { f64::INFINITY };
                return Ok(Some(SeriesOutcome { value: sum, terms: used, truncation: v.abs() / sum.abs(), conditioning: cond }));
            }
        }
        if exhausted {
            let cond = if sum != 0.0 { max_abs * 1e-15 / sum.abs() } else { 0.0 };
            return Ok(Some(SeriesOutcome { value: sum, terms: used, truncation: 0.0, conditioning: cond }));
        }
        count *= 4;
    }
    Ok(None)
}

/// Real positions where any factor is singular (poles of numerator Gammas, zeros of denominators).
fn singular_points(sh: &Shape, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    for fa in sh.num.iter().chain(sh.den.iter()) {
        // a + b t = -k  =>  t = (-a - k)/b
        let (k_lo, k_hi) = {
            let k1 = -fa.a - fa.b * lo;
            let k2 = -fa.a - fa.b * hi;
            (k1.min(k2).floor().max(0.0), k1.max(k2).ceil())
        };
        let mut k = k_lo;
        while k <= k_hi {
            pts.push((-fa.a - k) / fa.b);
            k += 1.0;
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts
}

fn distance_to(pts: &[f64], r: f64) -> f64 {
    pts.iter().map(|p| (p - r).abs()).fold(f64::INFINITY, f64::min)
}

fn l1_proxy(sh: &Shape, r: f64, s: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..16 {
        let y = 0.5 * i as f64;
        let v = eval_integrand(sh, Complex64::new(r, y), s).norm();
        acc += if i == 0 { 0.5 * v } else { v };
    }
    acc
}

/// Live poles within `bound` of the origin on one side, with |contribution| at s.
fn live_poles_within(sh: &Shape, side: HalfPlane, bound: f64, s: f64) -> Result<Vec<(f64, f64)>> {
    let mut count = 32;
    loop {
        let poles = enumerate_shape(sh, side, count)?;
        let beyond = poles.last().map_or(true, |p| p.location.abs() > bound);
        if beyond || poles.len() < count {
            let mut out = Vec::new();
            for p in poles.iter().filter(|p| !p.cancelled && p.location.abs() <= bound) {
                let v = residue_shape(sh, p)?.value_at(s, sh.c).abs();
                out.push((p.location, if v.is_finite() { v } else { f64::MAX }));
            }
            return Ok(out);
        }
        count *= 4;
    }
}

/// Abscissa minimizing a crude L1 estimate of the line integral plus the size
/// of the residues that placing the line there would have to add back.
fn choose_abscissa(sh: &Shape, s: f64) -> Result<f64> {
    let cs = sh.c * s;
    let w = 12.0 + 3.0 * cs.max(1.0) + 3.0 * (2.0 / cs).ln().abs();
    let pts = singular_points(sh, -w - 2.0, w + 2.0);
    let left = live_poles_within(sh, HalfPlane::Left, w + 2.0, s)?;
    let right = live_poles_within(sh, HalfPlane::Right, w + 2.0, s)?;
    let crossing = |r: f64| -> f64 {
        left.iter().filter(|p| p.0 > r).map(|p| p.1).sum::<f64>()
            + right.iter().filter(|p| p.0 < r).map(|p| p.1).sum::<f64>()
    };
    let mut best = (f64::INFINITY, 0.5);
    let consider = |r: f64, best: &mut (f64, f64)| {
        if distance_to(&pts, r) < 0.25 {
            return;
        }
        let v = l1_proxy(sh, r, s) + crossing(r);
        if v.is_finite() && v < best.0 {
            *best = (v, r);
        }
    };
    let mut r = -w;
    while r <= w {
        consider(r, &mut best);
        r += 0.5;
    }
    let centre = best.1;
    let mut r = centre - 0.5;
    while r <= centre + 0.5 {
        consider(r, &mut best);
        r += 0.0625;
    }
    Ok(best.1)
}

fn contour_value(sh: &Shape, s: f64, tol: f64) -> Result<(f64, f64)> {
    let r = choose_abscissa(sh, s)?;
    line_value(sh, r, s, tol, true)
}

/// Line integral on Re t = r plus the residues the line leaves on the wrong side;
/// left poles to the right of the line are skipped unless `add_left`.
fn line_value(sh: &Shape, r: f64, s: f64, tol: f64, add_left: bool) -> Result<(f64, f64)> {
    let f = |y: f64| eval_integrand(sh, Complex64::new(r, y), s);
    // trapezoid on [0, Y] for (1/pi) int Re F dy
    let f0 = f(0.0).re;
    let mut h = 0.25;
    let mut ys: Vec<f64> = Vec::new();
    let mut vals: Vec<Complex64> = Vec::new();
    let mut peak: f64 = f0.abs();
    let mut y = h;
    loop {
        let v = f(y);
        peak = peak.max(v.norm());
        ys.push(y);
        vals.push(v);
        if (v.norm() < 1e-30 * peak && y > 4.0) || y > 400.0 {
            break;
        }
        y += h;
    }
    let sum_re = |vals: &[Complex64]| vals.iter().map(|v| v.re).sum::<f64>();
    let mut integral = h * (0.5 * f0 + sum_re(&vals)) / PI;
    let ymax = y;
    let mut est = f64::INFINITY;
    for _ in 0..8 {
        let hn = h / 2.0;
        let mut mids = Vec::new();
        let mut yy = hn;
        while yy < ymax {
            mids.push(f(yy));
            yy += h;
        }
        let total = sum_re(&vals) + sum_re(&mids);
        let next = hn * (0.5 * f0 + total) / PI;
        est = (next - integral).abs();
        vals.extend(mids);
        h = hn;
        integral = next;
        if est <= 0.01 * tol * integral.abs() {
            break;
        }
    }
    // poles on the wrong side of the vertical line
    let mut corr = 0.0;
    let sides: &[HalfPlane] = if add_left { &[HalfPlane::Left, HalfPlane::Right] } else { &[HalfPlane::Right] };
    for &side in sides {
        let mut count = 8;
        loop {
            let poles = enumerate_shape(sh, side, count)?;
            let crossed: Vec<&PoleDatum> = poles
                .iter()
                .take_while(|p| match side {
                    HalfPlane::Left => p.location > r,
                    HalfPlane::Right => p.location < r,
                })
                .collect();
            if crossed.len() < poles.len() || poles.len() < count {
                for p in crossed {
                    corr += residue_shape(sh, p)?.value_at(s, sh.c);
                }
                break;
            }
            count *= 4;
        }
    }
    let value = integral + corr;
    let scale = value.abs().max(f64::MIN_POSITIVE);
    let l1 = h * vals.iter().map(|v| v.norm()).sum::<f64>() / PI;
    let truncation = (est + l1 * 1e-15) / scale;
    Ok((value, truncation))
}

/// Transform value at s > 0 by residue series on the convergent side, or by a
/// vertical-contour quadrature when the series is badly conditioned.
pub fn eval_ft(integrand: &MbIntegrand, s: f64, tol: f64) -> Result<FtValue> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::param("s", format!("must be positive, got {s}")));
    }
    if !(tol >= 1e-12) {
        return Err(Error::param("tol", "must be at least 1e-12"));
    }
    let sh = integrand.shape();
    if sh.sign_pref == 0.0 {
        return Ok(FtValue { value: 0.0, series_terms_used: 0, truncation_estimate: 0.0, method: Method::ResidueLeft });
    }
    let side = if integrand.balance() > 0.0 { HalfPlane::Left } else { HalfPlane::Right };
    if let Some(out) = residue_series(&sh, side, s, tol)? {
        if out.conditioning <= 0.1 * tol && out.truncation <= tol {
            return Ok(FtValue {
                value: out.value,
                series_terms_used: out.terms,
                truncation_estimate: out.truncation.max(out.conditioning),
                method: if side == HalfPlane::Left { Method::ResidueLeft } else { Method::ResidueRight },
            });
        }
    }
    let (value, est) = contour_value(&sh, s, tol)?;
    if !(est <= tol) {
        return Err(Error::NoConvergence(format!(
            "contour quadrature reached relative error {est:.3e} > tol {tol:.1e} at s = {s}"
        )));
    }
    Ok(FtValue { value, series_terms_used: 0, truncation_estimate: est, method: Method::Contour })
}

/// Contour quadrature only; exposed for cross-checking the residue series.
pub fn eval_ft_contour(integrand: &MbIntegrand, s: f64, tol: f64) -> Result<FtValue> {
    if !(s > 0.0) {
        return Err(Error::param("s", "must be positive"));
    }
    let (value, est) = contour_value(&integrand.shape(), s, tol)?;
    Ok(FtValue { value, series_terms_used: 0, truncation_estimate: est, method: Method::Contour })
}

/// Transform minus the residues of all left-side poles with location > `abscissa`,
/// from the line integral on Re t = `abscissa` (no cancellation against the
/// subtracted terms).
pub fn eval_ft_beyond(integrand: &MbIntegrand, s: f64, abscissa: f64, tol: f64) -> Result<FtValue> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::param("s", "must be positive"));
    }
    let sh = integrand.shape();
    if distance_to(&singular_points(&sh, abscissa - 1.0, abscissa + 1.0), abscissa) < 1e-3 {
        return Err(Error::param("abscissa", "too close to a singular point"));
    }
    let (value, est) = line_value(&sh, abscissa, s, tol, false)?;
    Ok(FtValue { value, series_terms_used: 0, truncation_estimate: est, method: Method::Contour })
}

/// Residue series only (on the convergent side), regardless of conditioning.
pub fn eval_ft_series(integrand: &MbIntegrand, s: f64, tol: f64) -> Result<FtValue> {
    let sh = integrand.shape();
    let side = if integrand.balance() > 0.0 { HalfPlane::Left } else { HalfPlane::Right };
    let out = residue_series(&sh, side, s, tol)?
        .ok_or_else(|| Error::NoConvergence(format!("residue series did not settle at s = {s}")))?;
    Ok(FtValue {
        value: out.value,
        series_terms_used: out.terms,
        truncation_estimate: out.truncation.max(out.conditioning),
        method: if side == HalfPlane::Left { Method::ResidueLeft } else { Method::ResidueRight },
    })
}

/// `4 (2 pi)^{n/2} (c/s)^{n/2+1} K_{n/2+1}(c s)` for the tps family with d = 1.
pub fn eval_ft_closed_form_d1(spec: &RbfSpec, s: f64) -> Result<f64> {
    let (n, c) = match *spec {
        RbfSpec::GeneralizedTps { n, c, d } if d == 1.0 => (n as f64, c),
        RbfSpec::GeneralizedTps { .. } => return Err(Error::param("d", "closed form requires d = 1")),
        RbfSpec::PowerFamily { .. } => return Err(Error::WrongFamily("closed form is for the tps family".into())),
    };
    if !(s > 0.0) {
        return Err(Error::param("s", "must be positive"));
    }
    let nu = n / 2.0 + 1.0;
    Ok(4.0 * (2.0 * PI).powf(n / 2.0) * (c / s).powf(nu) * bessel_k(nu, c * s)?)
}

#[cfg(test)]
mod tests;
