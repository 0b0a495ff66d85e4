//! Finite quasi-Lagrange stencils on the integer lattice.
//!
//! A stencil is built in Fourier space: the symbol P(xi) = sum mu_a cos(a.xi)
//! must agree with 1 / phi_hat(xi) in its Taylor expansion up to the first
//! logarithmic (or otherwise non-polynomial) term of phi_hat. With hypercubic
//! symmetry imposed, the unknowns are one coefficient per orbit of offsets and
//! the conditions are moment identities indexed by sorted even multi-indices.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{expansion, m0, AsymptoticExpansion};
use crate::error::{Error, Result};
use crate::mellin::{eval_ft, MbIntegrand};
use crate::rbf_model::RbfSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    Hypercubic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilEntry {
    pub offset: Vec<i64>,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stencil {
    pub n: u32,
    pub support_radius: u32,
    pub entries: Vec<StencilEntry>,
    pub singularity_order: u32,
    pub reproduction_degree: u32,
    #[serde(default = "default_symmetry")]
    pub symmetry: Symmetry,
    /// P phi_hat - 1 vanishes to this order at the origin (up to a log factor).
    #[serde(default)]
    pub product_order: f64,
}

fn default_symmetry() -> Symmetry {
    Symmetry::Hypercubic
}

impl Stencil {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Stencil =
            serde_json::from_str(text).map_err(|e| Error::param("stencil", format!("malformed stencil JSON: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stencil serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if self.entries.is_empty() {
            return Err(Error::param("entries", "stencil has no entries"));
        }
        for e in &self.entries {
            if e.offset.len() != self.n as usize {
                return Err(Error::param("entries", "offset length differs from n"));
            }
            if !e.mu.is_finite() {
                return Err(Error::param("entries", "non-finite coefficient"));
            }
        }
        Ok(())
    }

    /// Max-norm of the offsets actually used.
    pub fn extent(&self) -> i64 {
        self.entries.iter().flat_map(|e| e.offset.iter().map(|a| a.abs())).max().unwrap_or(0)
    }

    pub fn moment(&self, gamma: &[u32]) -> f64 {
        self.entries
            .iter()
            .map(|e| e.mu * e.offset.iter().zip(gamma).map(|(&a, &g)| (a as f64).powi(g as i32)).product::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoeff {
    pub index: Vec<u32>,
    pub value: f64,
}

/// Taylor coefficients of P at the origin, even multi-indices only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTaylor {
    pub order: u32,
    pub coefficients: Vec<TaylorCoeff>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrangFixReport {
    pub degree_verified: i64,
    pub max_origin_residual: f64,
    pub max_lattice_residual: f64,
    pub checked_lattice_points: Vec<Vec<i64>>,
}

/// Nonnegative sorted tuples with entries at most `radius`.
fn orbit_representatives(n: usize, radius: u32) -> Vec<Vec<i64>> {
    fn rec(n: usize, lo: i64, hi: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in lo..=hi {
            cur.push(v);
            rec(n, v, hi, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, radius as i64, &mut Vec::new(), &mut out);
    out
}

fn permutations(v: &[i64]) -> Vec<Vec<i64>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// All distinct images of `rep` under coordinate permutations and sign flips.
pub fn orbit(rep: &[i64]) -> Vec<Vec<i64>> {
    let n = rep.len();
    let mut set = BTreeSet::new();
    for p in permutations(rep) {
        for mask in 0..(1u32 << n) {
            let q: Vec<i64> = p.iter().enumerate().map(|(i, &a)| if mask >> i & 1 == 1 { -a } else { a }).collect();
            set.insert(q);
        }
    }
    set.into_iter().collect()
}

/// Partitions of `m` into at most `n` parts, padded with zeros, non-increasing.
fn partitions(m: u32, n: usize) -> Vec<Vec<u32>> {
    fn rec(m: u32, max: u32, n: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            if m == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for v in (0..=m.min(max)).rev() {
            cur.push(v);
            rec(m - v, v, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, m, n, &mut Vec::new(), &mut out);
    out
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn is_even_integer(x: f64) -> bool {
    x == x.round() && (x.round() as i64) % 2 == 0
}

/// Leading order k, the stop power and the pure coefficients a_i of s^{-k+2i}
/// below it.
fn laurent_block(exp: &AsymptoticExpansion) -> Result<(u32, f64, Vec<f64>)> {
    let lead = exp
        .leading()
        .ok_or_else(|| Error::Infeasible("expansion has no nonzero term".into()))?;
    if lead.has_log {
        return Err(Error::Infeasible("leading term is logarithmic; no finite stencil exists".into()));
    }
    if lead.power >= 0.0 {
        return Err(Error::Infeasible("transform is bounded at the origin; no singularity to cancel".into()));
    }
    if !is_even_integer(lead.power) {
        return Err(Error::Parity(format!("leading power {} is not an even integer", lead.power)));
    }
    let k = (-lead.power) as u32;
    let mut stop = exp.truncated_at_power;
    for t in exp.terms.iter().filter(|t| !t.is_zero() && t.power > lead.power) {
        if t.has_log {
            stop = stop.min(t.power);
            break;
        }
        // an odd or fractional power past an even leading one caps the order like a log term
        if !is_even_integer(t.power) {
            stop = stop.min(t.power);
            break;
        }
    }
    let count = ((stop + k as f64) / 2.0).ceil().max(1.0) as usize;
    let mut a = vec![0.0; count];
    for t in exp.terms.iter().filter(|t| !t.has_log && t.power < stop) {
        let i = ((t.power + k as f64) / 2.0).round() as usize;
        if i < count {
            a[i] += t.coeff;
        }
    }
    Ok((k, stop, a))
}

/// Power-series reciprocal of sum a_i u^i.
fn reciprocal(a: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; a.len()];
    b[0] = 1.0 / a[0];
    for i in 1..a.len() {
        let acc: f64 = (1..=i).map(|j| a[j] * b[i - j]).sum();
        b[i] = -acc / a[0];
    }
    b
}

/// Stencil whose symbol matches 1 / phi_hat through the pure-power part of
/// `expansion`, with hypercubic symmetry and minimum Euclidean norm.
pub fn build_stencil(expansion: &AsymptoticExpansion, n: u32, support_radius: u32) -> Result<Stencil> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if support_radius == 0 {
        return Err(Error::param("support_radius", "must be at least 1"));
    }
    let (k, stop, a) = laurent_block(expansion)?;
    let b = reciprocal(&a);
    let nu = n as usize;
    let reps = orbit_representatives(nu, support_radius);
    let orbits: Vec<Vec<Vec<i64>>> = reps.iter().map(|r| orbit(r)).collect();

    // rows: sorted half multi-indices delta, |delta| = m, for P's degree 2m < 2k + stop
    let mut rows: Vec<(Vec<u32>, f64)> = Vec::new();
    let mut m = 0u32;
    while ((2 * m) as f64) < 2.0 * k as f64 + stop {
        let target = if 2 * m >= k { b.get(((2 * m - k) / 2) as usize).copied().unwrap_or(0.0) } else { 0.0 };
        for delta in partitions(m, nu) {
            let rhs = target * factorial(m) / delta.iter().map(|&d| factorial(d)).product::<f64>();
            rows.push((delta, rhs));
        }
        m += 1;
    }
    let unknowns = orbits.len();
    if unknowns < rows.len() {
        return Err(Error::Infeasible(format!(
            "{} orbit unknowns for {} moment conditions at radius {support_radius}",
            unknowns,
            rows.len()
        )));
    }
    let mut mat = DMatrix::<f64>::zeros(rows.len(), unknowns);
    let mut rhs = DVector::<f64>::zeros(rows.len());
    for (r, (delta, value)) in rows.iter().enumerate() {
        let gamma: Vec<u32> = delta.iter().map(|d| 2 * d).collect();
        let mdeg: u32 = delta.iter().sum();
        let sign = if mdeg % 2 == 0 { 1.0 } else { -1.0 };
        let gfact: f64 = gamma.iter().map(|&g| factorial(g)).product();
        for (o, pts) in orbits.iter().enumerate() {
            let mom: f64 = pts
                .iter()
                .map(|p| p.iter().zip(&gamma).map(|(&x, &g)| (x as f64).powi(g as i32)).product::<f64>())
                .sum();
            // least norm over all lattice coefficients: mu_o = x_o / sqrt(|orbit|)
            mat[(r, o)] = sign * mom / gfact / (pts.len() as f64).sqrt();
        }
        rhs[r] = *value;
    }
    // row scaling
    for r in 0..rows.len() {
        let scale = mat.row(r).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            mat.row_mut(r).scale_mut(1.0 / scale);
            rhs[r] /= scale;
        }
    }
    let svd = mat.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let x = svd
        .solve(&rhs, 1e-12 * smax)
        .map_err(|e| Error::Infeasible(format!("least-norm solve failed: {e}")))?;
    let resid = (&mat * &x - &rhs).norm();
    if !(resid <= 1e-9 * rhs.norm().max(1e-300)) {
        return Err(Error::Infeasible(format!(
            "moment system inconsistent at radius {support_radius} (residual {resid:.2e}); enlarge the support"
        )));
    }
    let mut entries = Vec::new();
    for (o, pts) in orbits.iter().enumerate() {
        let mu = x[o] / (pts.len() as f64).sqrt();
        if mu == 0.0 {
            continue;
        }
        for p in pts {
            entries.push(StencilEntry { offset: p.clone(), mu });
        }
    }
    entries.sort_by(|a, b| a.offset.cmp(&b.offset));
    Ok(Stencil {
        n,
        support_radius,
        entries,
        singularity_order: k,
        reproduction_degree: ((k as f64 + stop).ceil() as u32).min(k).saturating_sub(1),
        symmetry: Symmetry::Hypercubic,
        product_order: k as f64 + stop,
    })
}

/// Smallest radius (up to `max_radius`) at which the moment system is consistent.
pub fn build_minimal_stencil(expansion: &AsymptoticExpansion, n: u32, max_radius: u32) -> Result<Stencil> {
    let mut last = Error::param("max_radius", "must be at least 1");
    for r in 1..=max_radius {
        match build_stencil(expansion, n, r) {
            Ok(s) => return Ok(s),
            Err(e @ Error::Infeasible(_)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Stencil for `spec` built from its default expansion at the minimal radius.
pub fn stencil_for(spec: &RbfSpec, support_radius: Option<u32>) -> Result<Stencil> {
    let exp = expansion(spec, None)?;
    match support_radius {
        Some(r) => build_stencil(&exp, spec.n(), r),
        None => build_minimal_stencil(&exp, spec.n(), 8),
    }
}

fn dot(a: &[i64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(&ai, &xi)| ai as f64 * xi).sum()
}

/// cos(x) minus its Taylor polynomial of degree below `k`, for |x| <= 1.
fn cos_tail(x: f64, k: u32) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 0.0f64;
    let mut j = 0u32;
    while j < k + 60 {
        if j >= k {
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        term *= -x * x / (((j + 1) * (j + 2)) as f64);
        j += 2;
    }
    sum
}

/// P(xi) = sum mu cos(a.xi). Near the origin the cosines are split at the
/// singularity order: the low-degree moments, which vanish by construction, are summed separately
/// and dropped when they are at roundoff level, so that small xi keeps full
/// relative accuracy.
pub fn symbol_eval(stencil: &Stencil, xi: &[f64]) -> f64 {
    if stencil.entries.iter().any(|e| dot(&e.offset, xi).abs() > 1.0) {
        return stencil.entries.iter().map(|e| e.mu * dot(&e.offset, xi).cos()).sum();
    }
    let k = stencil.singularity_order;
    let mut low = 0.0;
    let mut j = 0u32;
    let mut fact = 1.0;
    while j < k {
        let (mut m, mut scale) = (0.0, 0.0f64);
        for e in &stencil.entries {
            let v = e.mu * dot(&e.offset, xi).powi(j as i32);
            m += v;
            scale += v.abs();
        }
        if m.abs() > 1e-13 * scale {
            let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
            low += sign * m / fact;
        }
        fact *= ((j + 1) * (j + 2)) as f64;
        j += 2;
    }
    low + stencil.entries.iter().map(|e| e.mu * cos_tail(dot(&e.offset, xi), k)).sum::<f64>()
}

/// m-th derivative of P along the unit direction `u` at `xi`.
pub fn symbol_directional_derivative(stencil: &Stencil, xi: &[f64], u: &[f64], m: u32) -> f64 {
    stencil
        .entries
        .iter()
        .map(|e| {
            let au = dot(&e.offset, u);
            e.mu * au.powi(m as i32) * (dot(&e.offset, xi) + 0.5 * PI * m as f64).cos()
        })
        .sum()
}

fn multi_indices(n: usize, total: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in multi_indices(n - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Taylor coefficients of P at 0 through total degree `order`.
pub fn symbol_taylor(stencil: &Stencil, order: u32) -> SymbolTaylor {
    let n = stencil.n as usize;
    let mut coefficients = Vec::new();
    for deg in (0..=order).step_by(2) {
        for g in multi_indices(n, deg) {
            if g.iter().any(|x| x % 2 == 1) {
                continue;
            }
            let sign = if (deg / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let gf: f64 = g.iter().map(|&x| factorial(x)).product();
            coefficients.push(TaylorCoeff { value: sign * stencil.moment(&g) / gf, index: g });
        }
    }
    SymbolTaylor { order, coefficients }
}

/// Axes and the main diagonal, both signs: at least 2n directions.
pub fn ray_directions(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for sgn in [1.0, -1.0] {
            let mut u = vec![0.0; n];
            u[i] = sgn;
            out.push(u);
        }
    }
    if n > 1 {
        let v = 1.0 / (n as f64).sqrt();
        out.push(vec![v; n]);
        out.push(vec![-v; n]);
        let mut w = vec![v; n];
        w[0] = -v;
        out.push(w);
    }
    out
}

pub(crate) fn ft(spec: &RbfSpec, s: f64) -> Result<f64> {
    Ok(eval_ft(&MbIntegrand::full(*spec)?, s, 1e-12)?.value)
}

const ORIGIN_TOL: f64 = 1e-8;
const LATTICE_TOL: f64 = 1e-10;

/// Numerical Strang-Fix check: behaviour at the origin through the product of
/// P's Taylor series with the expansion of phi_hat, and P's derivatives at the
/// nonzero lattice points `2 pi j`.
pub fn check_strang_fix(
    stencil: &Stencil,
    spec: &RbfSpec,
    degree: u32,
    lattice_points: &[Vec<i64>],
) -> Result<StrangFixReport> {
    stencil.validate()?;
    spec.validate()?;
    let n = stencil.n as usize;
    if spec.n() != stencil.n {
        return Err(Error::param("spec", "dimension differs from the stencil"));
    }
    for j in lattice_points {
        if j.len() != n || j.iter().all(|&x| x == 0) {
            return Err(Error::param("lattice_points", "need nonzero integer vectors of length n"));
        }
    }
    let exp = expansion(spec, None)?;
    let dirs = ray_directions(n);
    let cap = degree.min(stencil.singularity_order.saturating_sub(1));

    // (i) Psi_hat -> 1 along rays
    let probe = 1e-3;
    let phat = ft(spec, probe)?;
    let mut max_origin_residual: f64 = 0.0;
    for u in &dirs {
        let xi: Vec<f64> = u.iter().map(|v| v * probe).collect();
        max_origin_residual = max_origin_residual.max((symbol_eval(stencil, &xi) * phat - 1.0).abs());
    }

    // (ii) product series coefficients along each ray
    let top = degree as f64 + stencil.singularity_order as f64 + 1.0;
    let mut origin_ok_to: i64 = cap as i64;
    for u in &dirs {
        let pj: Vec<f64> = (0..=top.ceil() as u32 + 2)
            .map(|j| {
                if j % 2 == 1 {
                    return 0.0;
                }
                let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
                sign / factorial(j) * stencil.entries.iter().map(|e| e.mu * dot(&e.offset, u).powi(j as i32)).sum::<f64>()
            })
            .collect();
        let pscale: f64 = stencil.entries.iter().map(|e| e.mu.abs()).sum();
        for q in 0..=cap {
            let mut coef = 0.0;
            let mut scale: f64 = 0.0;
            let mut log_hit = false;
            for t in exp.terms.iter().filter(|t| !t.is_zero()) {
                let j = q as f64 - t.power;
                if j < 0.0 || j != j.round() || (j as usize) >= pj.len() {
                    continue;
                }
                let pjv = pj[j as usize];
                if t.has_log && pjv.abs() > LATTICE_TOL * pscale {
                    log_hit = true;
                }
                coef += pjv * t.coeff;
                scale += (pjv * t.coeff).abs();
            }
            let want = if q == 0 { 1.0 } else { 0.0 };
            let bad = log_hit || (coef - want).abs() > ORIGIN_TOL * scale.max(1.0);
            if bad {
                origin_ok_to = origin_ok_to.min(q as i64 - 1);
                break;
            }
        }
    }

    // (iii) derivatives of P at 2 pi j, weighted by |phi_hat(2 pi |j|)|
    let mut max_lattice_residual: f64 = 0.0;
    let mut lattice_ok_to: i64 = cap as i64;
    for j in lattice_points {
        let xi: Vec<f64> = j.iter().map(|&x| 2.0 * PI * x as f64).collect();
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let weight = ft(spec, norm)?.abs();
        for u in &dirs {
            for m in 0..=degree {
                let d = symbol_directional_derivative(stencil, &xi, u, m);
                let scale: f64 = stencil.entries.iter().map(|e| e.mu.abs() * dot(&e.offset, u).abs().powi(m as i32)).sum();
                if m <= cap {
                    max_lattice_residual = max_lattice_residual.max(d.abs() * weight);
                }
                if d.abs() > LATTICE_TOL * scale.max(1e-300) {
                    lattice_ok_to = lattice_ok_to.min(m as i64 - 1);
                }
            }
        }
    }
    Ok(StrangFixReport {
        degree_verified: origin_ok_to.min(lattice_ok_to),
        max_origin_residual,
        max_lattice_residual,
        checked_lattice_points: lattice_points.to_vec(),
    })
}

/// Exponent of the guaranteed algebraic decay of Psi.
pub fn stencil_decay_bound(spec: &RbfSpec, expansion: &AsymptoticExpansion) -> f64 {
    let nf = spec.n() as f64;
    match *spec {
        RbfSpec::GeneralizedTps { n, d, .. } if n % 2 == 0 && d == d.round() => {
            let m = expansion.m0.unwrap_or_else(|| m0(n, d as u32)) as f64;
            2.0 * nf + 2.0 * d + 2.0 * m
        }
        RbfSpec::PowerFamily { n, lambda, beta, .. } if lambda < 0.0 && beta < 0.0 => {
            if n % 2 == 0 {
                2.0 * nf - 2.0
            } else {
                2.0 * nf - 1.0
            }
        }
        _ => match laurent_block(expansion) {
            Ok((k, stop, _)) => nf + k as f64 + stop,
            Err(_) => nf,
        },
    }
}
