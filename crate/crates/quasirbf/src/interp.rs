//! The quasi-Lagrange function, scaled quasi-interpolants on h Z^n, polynomial
//! reproduction and convergence-order measurement.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::expansion;
use crate::error::{Error, Result};
use crate::lagrange::{ray_directions, stencil_decay_bound, Stencil};
use crate::rbf_model::{eval_rbf, RbfSpec};

/// Samples f(j h) on the integer box lo..=hi (row-major, last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub h: f64,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub samples: Vec<f64>,
}

fn box_len(lo: &[i64], hi: &[i64]) -> usize {
    lo.iter().zip(hi).map(|(a, b)| (b - a + 1) as usize).product()
}

impl GridFunction {
    pub fn new(h: f64, lo: Vec<i64>, hi: Vec<i64>, samples: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", "must be positive"));
        }
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::param("box", "bounds must be non-empty with lo <= hi"));
        }
        if samples.len() != box_len(&lo, &hi) {
            return Err(Error::param("samples", "must cover the box exactly"));
        }
        Ok(GridFunction { h, lo, hi, samples })
    }

    pub fn from_fn(h: f64, lo: Vec<i64>, hi: Vec<i64>, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::param("box", "bounds must be non-empty with lo <= hi"));
        }
        let len = box_len(&lo, &hi);
        let proto = GridFunction { h, lo: lo.clone(), hi: hi.clone(), samples: Vec::new() };
        let samples: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|i| {
                let x: Vec<f64> = proto.point(i).iter().map(|&j| j as f64 * h).collect();
                f(&x)
            })
            .collect();
        GridFunction::new(h, lo, hi, samples)
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }

    /// Lattice point of flat index `i`.
    pub fn point(&self, mut i: usize) -> Vec<i64> {
        let n = self.n();
        let mut out = vec![0; n];
        for ax in (0..n).rev() {
            let w = (self.hi[ax] - self.lo[ax] + 1) as usize;
            out[ax] = self.lo[ax] + (i % w) as i64;
            i /= w;
        }
        out
    }

    pub fn index(&self, j: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for ax in 0..self.n() {
            if j[ax] < self.lo[ax] || j[ax] > self.hi[ax] {
                return None;
            }
            idx = idx * (self.hi[ax] - self.lo[ax] + 1) as usize + (j[ax] - self.lo[ax]) as usize;
        }
        Some(idx)
    }

    pub fn get(&self, j: &[i64]) -> Option<f64> {
        self.index(j).map(|i| self.samples[i])
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |f| on the outermost layer of the box.
    pub fn shell_sup(&self) -> f64 {
        (0..self.samples.len())
            .filter(|&i| {
                let p = self.point(i);
                p.iter().enumerate().any(|(ax, &v)| v == self.lo[ax] || v == self.hi[ax])
            })
            .fold(0.0, |m, i| m.max(self.samples[i].abs()))
    }
}

fn dist(a: &[f64], b: &[i64]) -> f64 {
    a.iter().zip(b).map(|(x, &y)| (x - y as f64).powi(2)).sum::<f64>().sqrt()
}

fn phi(spec: &RbfSpec, r: f64) -> Result<f64> {
    eval_rbf(spec, r).map_err(|e| match e {
        Error::Domain(m) => Error::SingularEvaluation(m),
        other => other,
    })
}

/// Psi(x) = sum mu_a phi(|x - a|).
pub fn eval_psi(stencil: &Stencil, spec: &RbfSpec, x: &[f64]) -> Result<f64> {
    if x.len() != stencil.n as usize || spec.n() != stencil.n {
        return Err(Error::param("x", "dimension differs from the stencil"));
    }
    let mut acc = 0.0;
    for e in &stencil.entries {
        acc += e.mu * phi(spec, dist(x, &e.offset))?;
    }
    Ok(acc)
}

fn sphere_area(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * PI.powf(nf / 2.0) / crate::special_fn::gamma_real(nf / 2.0)
}

/// Algebraic tail model |Psi(x)| <= C |x|^-decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub exponent: f64,
    pub constant: f64,
}

impl DecayModel {
    /// C from samples of Psi at radii 8 and 16 along axes and diagonals.
    pub fn estimate(stencil: &Stencil, spec: &RbfSpec) -> Result<Self> {
        let exp = expansion(spec, None)?;
        let exponent = stencil_decay_bound(spec, &exp);
        let n = stencil.n as usize;
        let mut constant: f64 = 0.0;
        for u in ray_directions(n) {
            for r in [8.0, 16.0] {
                let x: Vec<f64> = u.iter().map(|v| v * (r + 0.37)).collect();
                constant = constant.max(eval_psi(stencil, spec, &x)?.abs() * (r + 0.37f64).powf(exponent));
            }
        }
        Ok(DecayModel { exponent, constant })
    }

    /// Bound on sum_{|j - y| > r} |Psi(y - j)| per unit sample size.
    pub fn tail(&self, n: usize, r: f64) -> f64 {
        let q = self.exponent - n as f64;
        if q <= 0.0 {
            return f64::INFINITY;
        }
        self.constant * sphere_area(n) * r.max(1.0).powf(-q) / q
    }

    /// Radius at which `tail` drops to `tol`.
    pub fn radius_for(&self, n: usize, tol: f64) -> f64 {
        let q = self.exponent - n as f64;
        if q <= 0.0 {
            return f64::INFINITY;
        }
        (self.constant * sphere_area(n) / (q * tol)).powf(1.0 / q)
    }
}

/// Q_h f for fixed data: the coefficients c = mu * f are formed once, so that
/// Q_h f(x) = sum_i c_i phi(|x/h - i|) over the box dilated by the stencil.
pub struct QuasiInterpolant<'a> {
    spec: RbfSpec,
    data: &'a GridFunction,
    /// (lattice point, c_i, sum |mu||f| behind c_i)
    coeffs: Vec<(Vec<i64>, f64, f64)>,
    decay: DecayModel,
    fsup: f64,
    shell: f64,
}

impl<'a> QuasiInterpolant<'a> {
    pub fn new(stencil: &Stencil, spec: &RbfSpec, data: &'a GridFunction) -> Result<Self> {
        stencil.validate()?;
        spec.validate()?;
        if data.n() != stencil.n as usize || spec.n() != stencil.n {
            return Err(Error::param("data", "dimension differs from the stencil"));
        }
        let ext = stencil.extent();
        let lo: Vec<i64> = data.lo.iter().map(|v| v - ext).collect();
        let hi: Vec<i64> = data.hi.iter().map(|v| v + ext).collect();
        let dil = GridFunction { h: data.h, lo, hi, samples: Vec::new() };
        let len = box_len(&dil.lo, &dil.hi);
        let raw: Vec<(f64, f64)> = (0..len)
            .into_par_iter()
            .map(|i| {
                let p = dil.point(i);
                let (mut acc, mut mag) = (0.0, 0.0);
                let mut q = p.clone();
                for e in &stencil.entries {
                    for ax in 0..p.len() {
                        q[ax] = p[ax] - e.offset[ax];
                    }
                    if let Some(v) = data.get(&q) {
                        acc += e.mu * v;
                        mag += (e.mu * v).abs();
                    }
                }
                (acc, mag)
            })
            .collect();
        let cmax = raw.iter().fold(0.0f64, |m, v| m.max(v.0.abs()));
        // coefficients below roundoff of the largest one are dropped
        let coeffs: Vec<(Vec<i64>, f64, f64)> = raw
            .into_iter()
            .enumerate()
            .filter(|(_, v)| v.0.abs() > 1e-17 * cmax)
            .map(|(i, v)| (dil.point(i), v.0, v.1))
            .collect();
        Ok(QuasiInterpolant {
            spec: *spec,
            data,
            coeffs,
            decay: DecayModel::estimate(stencil, spec)?,
            fsup: data.sup_norm(),
            shell: data.shell_sup(),
        })
    }

    /// Lattice distance from x/h to the outside of the data box.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let h = self.data.h;
        x.iter()
            .enumerate()
            .map(|(ax, &xi)| (xi / h - self.data.lo[ax] as f64).min(self.data.hi[ax] as f64 - xi / h))
            .fold(f64::INFINITY, f64::min)
    }

    /// Estimated size of the omitted tail at x, from the outer-shell values and the decay model.
    pub fn tail_estimate(&self, x: &[f64]) -> f64 {
        let m = self.margin(x);
        if m <= 0.0 {
            return f64::INFINITY;
        }
        self.shell * self.decay.tail(self.data.n(), m)
    }

    pub fn eval(&self, x: &[f64], tail_tol: f64) -> Result<f64> {
        self.eval_with_floor(x, tail_tol).map(|v| v.0)
    }

    /// Value and a roundoff estimate eps * sum |mu f| |phi|: the stencil moments
    /// vanish only to rounding, and phi may grow, so this floor can dominate at small h.
    pub fn eval_with_floor(&self, x: &[f64], tail_tol: f64) -> Result<(f64, f64)> {
        if x.len() != self.data.n() {
            return Err(Error::param("x", "dimension differs from the data"));
        }
        let tail = self.tail_estimate(x);
        if !(tail <= tail_tol * self.fsup.max(f64::MIN_POSITIVE)) {
            return Err(Error::InsufficientMargin(format!(
                "estimated tail {tail:.2e} exceeds {tail_tol:.1e} x sup|f| at margin {:.1} grid units",
                self.margin(x)
            )));
        }
        let y: Vec<f64> = x.iter().map(|v| v / self.data.h).collect();
        let (mut acc, mut mag) = (0.0, 0.0);
        for (p, c, m) in &self.coeffs {
            let v = phi(&self.spec, dist(&y, p))?;
            acc += c * v;
            mag += m * v.abs();
        }
        Ok((acc, f64::EPSILON * mag))
    }
}

/// Q_h f(x) = sum_j f(j h) Psi(x/h - j) over the data box.
pub fn quasi_interpolate(
    stencil: &Stencil,
    spec: &RbfSpec,
    data: &GridFunction,
    x: &[f64],
    tail_tol: f64,
) -> Result<f64> {
    QuasiInterpolant::new(stencil, spec, data)?.eval(x, tail_tol)
}

/// Low-discrepancy points in [-a, a]^n (Halton, bases 2, 3, 5, ...).
pub fn halton_points(n: usize, count: usize, a: f64) -> Vec<Vec<f64>> {
    const BASES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    (1..=count as u64)
        .map(|i| {
            (0..n)
                .map(|ax| {
                    let b = BASES[ax % BASES.len()];
                    let (mut f, mut r, mut k) = (1.0, 0.0, i);
                    while k > 0 {
                        f /= b as f64;
                        r += f * (k % b) as f64;
                        k /= b;
                    }
                    a * (2.0 * r - 1.0)
                })
                .collect()
        })
        .collect()
}

fn monomial(x: &[f64], e: &[u32]) -> f64 {
    x.iter().zip(e).map(|(v, &k)| v.powi(k as i32)).product()
}

/// Exponent vectors of total degree <= `degree`.
pub fn monomials(n: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, degree, &mut Vec::new(), &mut out);
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

/// C-infinity cutoff: 1 on [0, 1/2], 0 from 1 on.
fn window(t: f64) -> f64 {
    if t <= 0.5 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let s = 2.0 * (t - 0.5);
    let g = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    let a = g(1.0 - s);
    a / (a + g(s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialResidual {
    pub exponents: Vec<u32>,
    pub max_residual: f64,
    /// sup |p| over the test points
    pub scale: f64,
    /// spread of the windowed sums across radii (a truncation error indicator)
    pub truncation_estimate: f64,
}

/// Windowed sums sum_j p(jh) Psi(x/h - j) w(|x/h - j| / r) for r = R/4, R/2, R,
/// combined by Richardson extrapolation in r^-2 (the tail of a symmetric window
/// against an algebraically decaying Psi is a series in even powers of 1/r).
fn windowed_reproduction(
    stencil: &Stencil,
    spec: &RbfSpec,
    monos: &[Vec<u32>],
    x: &[f64],
    h: f64,
    radius: f64,
) -> Result<Vec<(f64, f64)>> {
    let y: Vec<f64> = x.iter().map(|v| v / h).collect();
    let lo: Vec<i64> = y.iter().map(|v| (v - radius).floor() as i64).collect();
    let hi: Vec<i64> = y.iter().map(|v| (v + radius).ceil() as i64).collect();
    let boxg = GridFunction { h, lo, hi, samples: Vec::new() };
    let len = box_len(&boxg.lo, &boxg.hi);
    let radii = [radius / 4.0, radius / 2.0, radius];
    let partial: Vec<Vec<[f64; 3]>> = (0..len)
        .into_par_iter()
        .filter_map(|i| {
            let j = boxg.point(i);
            let d = dist(&y, &j);
            if d >= radius {
                return None;
            }
            let z: Vec<f64> = y.iter().zip(&j).map(|(a, &b)| a - b as f64).collect();
            Some(eval_psi(stencil, spec, &z).map(|psi| {
                let xj: Vec<f64> = j.iter().map(|&v| v as f64 * h).collect();
                let w = [window(d / radii[0]), window(d / radii[1]), window(d / radii[2])];
                monos
                    .iter()
                    .map(|e| {
                        let v = monomial(&xj, e) * psi;
                        [v * w[0], v * w[1], v * w[2]]
                    })
                    .collect::<Vec<_>>()
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(monos.len());
    for (m, _) in monos.iter().enumerate() {
        let mut s = [0.0; 3];
        for row in &partial {
            for k in 0..3 {
                s[k] += row[m][k];
            }
        }
        let e1 = (4.0 * s[1] - s[0]) / 3.0;
        let e2 = (4.0 * s[2] - s[1]) / 3.0;
        let best = (16.0 * e2 - e1) / 15.0;
        out.push((best, (best - e2).abs()));
    }
    Ok(out)
}

/// Sup over interior test points of |Q_h p - p| for every monomial of degree <= `degree`.
/// `box_margin` is the truncation radius in grid units around each test point.
pub fn reproduction_test(
    stencil: &Stencil,
    spec: &RbfSpec,
    degree: u32,
    h: f64,
    box_margin: u32,
) -> Result<Vec<MonomialResidual>> {
    stencil.validate()?;
    spec.validate()?;
    if !(h > 0.0) {
        return Err(Error::param("h", "must be positive"));
    }
    if box_margin < 16 {
        return Err(Error::param("box_margin", "must be at least 16 grid units"));
    }
    let n = stencil.n as usize;
    let monos = monomials(n, degree);
    let pts = halton_points(n, if n <= 2 { 12 } else { 4 }, 0.5);
    let mut res: Vec<MonomialResidual> = monos
        .iter()
        .map(|e| MonomialResidual { exponents: e.clone(), max_residual: 0.0, scale: 0.0, truncation_estimate: 0.0 })
        .collect();
    for x in &pts {
        let vals = windowed_reproduction(stencil, spec, &monos, x, h, box_margin as f64)?;
        for (r, (e, (q, est))) in res.iter_mut().zip(monos.iter().zip(vals)) {
            let p = monomial(x, e);
            r.max_residual = r.max_residual.max((q - p).abs());
            r.scale = r.scale.max(p.abs());
            r.truncation_estimate = r.truncation_estimate.max(est);
        }
    }
    Ok(res)
}

/// Smooth test functions for convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// exp(-|x|^2 / w^2)
    GaussianBump { width: f64 },
    /// prod cos(x_i)
    TrigProduct,
    /// 1 / (1 + 25 |x|^2)
    Runge,
}

pub const CATALOG: [&str; 3] = ["gaussian-bump", "trig-product", "runge"];

impl TestFunction {
    /// Parse `gaussian-bump`, `gaussian-bump:<width>`, `trig-product` or `runge`.
    pub fn from_name(name: &str) -> Result<Self> {
        let (base, arg) = match name.split_once(':') {
            Some((b, a)) => (b, Some(a)),
            None => (name, None),
        };
        match (base, arg) {
            ("gaussian-bump", None) => Ok(TestFunction::GaussianBump { width: 1.0 }),
            ("gaussian-bump", Some(a)) => {
                let width: f64 = a.parse().map_err(|_| Error::param("function", format!("bad width `{a}`")))?;
                if !(width > 0.0) || !width.is_finite() {
                    return Err(Error::param("function", "width must be positive"));
                }
                Ok(TestFunction::GaussianBump { width })
            }
            ("trig-product", None) => Ok(TestFunction::TrigProduct),
            ("runge", None) => Ok(TestFunction::Runge),
            _ => Err(Error::param("function", format!("unknown test function `{name}`; choose from {CATALOG:?}"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::GaussianBump { width } if *width == 1.0 => "gaussian-bump".into(),
            TestFunction::GaussianBump { width } => format!("gaussian-bump:{width}"),
            TestFunction::TrigProduct => "trig-product".into(),
            TestFunction::Runge => "runge".into(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            TestFunction::GaussianBump { width } => (-r2 / (width * width)).exp(),
            TestFunction::TrigProduct => x.iter().map(|v| v.cos()).product(),
            TestFunction::Runge => 1.0 / (1.0 + 25.0 * r2),
        }
    }

    /// Radius beyond which |f| < tol, if f decays fast enough to make that useful.
    pub fn decay_radius(&self, tol: f64) -> Option<f64> {
        match self {
            TestFunction::GaussianBump { width } => Some(width * (1.0 / tol).ln().max(0.0).sqrt()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub h_values: Vec<f64>,
    pub sup_errors: Vec<f64>,
    /// Estimated rounding level of each sup error.
    pub roundoff_floors: Vec<f64>,
    /// Errors at least `RESOLVED_FACTOR` times their floor; only these enter the fits.
    pub resolved: Vec<bool>,
    pub fitted_slope: f64,
    pub log_corrected_slope: f64,
    pub target_order: f64,
    pub target_has_log: bool,
    /// Number of h values used in the fits (finest resolved ones).
    pub fit_points: usize,
    /// RMS log-residual of e = C h^p log(1/h) with p = target_order, C fitted.
    pub log_model_residual: f64,
    /// RMS log-residual of e = C h^p with p = target_order, C fitted.
    pub pure_model_residual: f64,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>() / m).sqrt();
    (slope, icpt, rms)
}

/// RMS residual of y = const + offset.
fn fixed_slope_residual(y: &[f64]) -> f64 {
    let m = y.len() as f64;
    let my = y.iter().sum::<f64>() / m;
    (y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / m).sqrt()
}

/// Options for `convergence_study`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    /// Test points are drawn from [-a, a]^n.
    pub half_width: f64,
    pub test_points: usize,
    pub tail_tol: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions { half_width: 0.5, test_points: 16, tail_tol: 1e-10 }
    }
}

/// Expected order and log flag: the singularity order, with a log factor
/// when the first logarithmic term of the transform meets it. An odd power
/// below the singularity order (odd-dimensional inverse multiquadrics) caps
/// it at one less than the product order.
pub fn target_order(stencil: &Stencil) -> (f64, bool) {
    let k = stencil.singularity_order as f64;
    let p = stencil.product_order;
    if p < k && (p - k) % 2.0 != 0.0 {
        return (p - 1.0, false);
    }
    (k, p <= k)
}

/// Data box (grid units) around the test region for one h.
fn study_box(n: usize, h: f64, f: &TestFunction, decay: &DecayModel, opts: &StudyOptions) -> Result<(Vec<i64>, Vec<i64>)> {
    let reach = match f.decay_radius(opts.tail_tol) {
        Some(r) => r,
        None => opts.half_width + decay.radius_for(n, opts.tail_tol) * h,
    };
    if !reach.is_finite() {
        return Err(Error::InsufficientMargin("Psi decays too slowly for a bounded data box".into()));
    }
    let half = ((opts.half_width + reach) / h).ceil() as i64;
    Ok((vec![-half; n], vec![half; n]))
}

/// Sup error of Q_h f on a fixed interior point set, for each h.
pub fn convergence_study(
    stencil: &Stencil,
    spec: &RbfSpec,
    f: &TestFunction,
    h_values: &[f64],
    opts: &StudyOptions,
) -> Result<ConvergenceReport> {
    if h_values.len() < 3 {
        return Err(Error::param("h_values", "need at least 3 values"));
    }
    if h_values.windows(2).any(|w| !(w[1] < w[0])) || h_values.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::param("h_values", "must be positive and strictly decreasing"));
    }
    let n = stencil.n as usize;
    let decay = DecayModel::estimate(stencil, spec)?;
    let pts = halton_points(n, opts.test_points, opts.half_width);
    let mut errors = Vec::with_capacity(h_values.len());
    let mut floors = Vec::with_capacity(h_values.len());
    for &h in h_values {
        let (lo, hi) = study_box(n, h, f, &decay, opts)?;
        let data = GridFunction::from_fn(h, lo, hi, &|x| f.eval(x))?;
        let qi = QuasiInterpolant::new(stencil, spec, &data)?;
        let errs = pts
            .par_iter()
            .map(|x| qi.eval_with_floor(x, opts.tail_tol).map(|(q, fl)| ((q - f.eval(x)).abs(), fl)))
            .collect::<Result<Vec<(f64, f64)>>>()?;
        errors.push(errs.iter().fold(0.0f64, |m, e| m.max(e.0)));
        floors.push(errs.iter().fold(0.0f64, |m, e| m.max(e.1)));
    }
    fit_report(stencil, h_values, &errors, &floors)
}

pub const RESOLVED_FACTOR: f64 = 10.0;

/// Slope fits for an error table, over the h values whose error clears the rounding floor.
pub fn fit_report(stencil: &Stencil, h_values: &[f64], errors: &[f64], floors: &[f64]) -> Result<ConvergenceReport> {
    let (target, has_log) = target_order(stencil);
    let resolved: Vec<bool> = errors.iter().zip(floors).map(|(e, f)| *e >= RESOLVED_FACTOR * f).collect();
    let keep: Vec<usize> = (0..h_values.len()).filter(|&i| resolved[i]).collect();
    if keep.len() < 2 {
        return Err(Error::NoConvergence("fewer than two h values clear the rounding floor".into()));
    }
    let hs: Vec<f64> = keep.iter().map(|&i| h_values[i]).collect();
    let lh: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let le: Vec<f64> = keep.iter().map(|&i| errors[i].max(f64::MIN_POSITIVE).ln()).collect();
    let (mut slope, _, rms) = linear_fit(&lh, &le);
    let mut from = 0;
    // pre-asymptotic coarse h: refit on the finest half
    if rms > 0.05 && hs.len() >= 4 {
        from = hs.len() / 2;
        slope = linear_fit(&lh[from..], &le[from..]).0;
    }
    let ll: Vec<f64> = le[from..]
        .iter()
        .zip(&hs[from..])
        .map(|(e, h)| e - (1.0 / h).ln().ln())
        .collect();
    let log_slope = linear_fit(&lh[from..], &ll).0;
    let pure: Vec<f64> = le[from..].iter().zip(&lh[from..]).map(|(e, l)| e - target * l).collect();
    let logm: Vec<f64> = ll.iter().zip(&lh[from..]).map(|(e, l)| e - target * l).collect();
    Ok(ConvergenceReport {
        h_values: h_values.to_vec(),
        sup_errors: errors.to_vec(),
        roundoff_floors: floors.to_vec(),
        resolved,
        fitted_slope: slope,
        log_corrected_slope: log_slope,
        target_order: target,
        target_has_log: has_log,
        fit_points: hs.len() - from,
        log_model_residual: fixed_slope_residual(&logm),
        pure_model_residual: fixed_slope_residual(&pure),
    })
}

#[cfg(test)]
mod tests;
