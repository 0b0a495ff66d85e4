//! Approximation-order ladder: the limits c_beta = lim |Psi_hat(xi + beta)| / |xi|^k
//! at the nonzero points of 2 pi Z^n, and the weighted sum of c_beta^2 |beta|^(2s).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrange::{ft, ray_directions, symbol_eval, Stencil};
use crate::rbf_model::RbfSpec;

const FIRST_PROBE: f64 = 0.2;
const PROBES: usize = 7;

/// Behaviour of |P(t u)| / t^k as t -> 0 along one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RayLimit {
    Finite(f64),
    Zero,
    Divergent,
}

/// Limit along u, Richardson-extrapolated in t^2 (P is even and analytic at 0).
fn ray_limit(stencil: &Stencil, u: &[f64], k: f64, first: f64) -> RayLimit {
    let r: Vec<f64> = (0..PROBES)
        .map(|i| {
            let t = first * 0.5f64.powi(i as i32);
            let xi: Vec<f64> = u.iter().map(|v| v * t).collect();
            symbol_eval(stencil, &xi).abs() / t.powf(k)
        })
        .collect();
    let last = PROBES - 1;
    if r[last] == 0.0 {
        return RayLimit::Zero;
    }
    // local power of t over the finest halvings
    let slope = |i: usize| (r[i] / r[i + 1]).ln() / 2f64.ln();
    let (a, b) = (slope(last - 2), slope(last - 1));
    if a < -0.5 && b < -0.5 {
        return RayLimit::Divergent;
    }
    if a > 0.5 && b > 0.5 {
        return RayLimit::Zero;
    }
    let e1 = (4.0 * r[last - 1] - r[last - 2]) / 3.0;
    let e2 = (4.0 * r[last] - r[last - 1]) / 3.0;
    RayLimit::Finite((16.0 * e2 - e1) / 15.0)
}

/// max over rays of lim |P(t u)| / t^k; 0 below the singularity order.
pub fn symbol_limit(stencil: &Stencil, k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::param("k", "must be positive"));
    }
    let mut best: f64 = 0.0;
    for u in ray_directions(stencil.n as usize) {
        match ray_limit(stencil, &u, k, FIRST_PROBE) {
            RayLimit::Divergent => {
                return Err(Error::NoConvergence(format!(
                    "|P(xi)| / |xi|^{k} grows as xi -> 0; k is above the singularity order {}",
                    stencil.singularity_order
                )))
            }
            RayLimit::Zero => {}
            RayLimit::Finite(v) => best = best.max(v.abs()),
        }
    }
    Ok(best)
}

fn beta_point(beta: &[i64], n: u32) -> Result<f64> {
    if beta.len() != n as usize {
        return Err(Error::param("beta", "dimension differs from the stencil"));
    }
    if beta.iter().all(|&b| b == 0) {
        return Err(Error::param("beta", "must be a nonzero lattice point"));
    }
    Ok(2.0 * PI * beta.iter().map(|&b| (b * b) as f64).sum::<f64>().sqrt())
}

/// c_beta for beta = 2 pi `beta`.
pub fn estimate_c_beta(stencil: &Stencil, spec: &RbfSpec, beta: &[i64], k: f64) -> Result<f64> {
    let norm = beta_point(beta, stencil.n)?;
    let lim = symbol_limit(stencil, k)?;
    if lim == 0.0 {
        return Ok(0.0);
    }
    Ok(lim * ft(spec, norm)?.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CBetaEntry {
    /// beta / (2 pi)
    pub index: Vec<i64>,
    pub norm: f64,
    pub c_beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IncrementDecay {
    /// every c_beta vanished
    Trivial,
    SuperPolynomial,
    /// increments ~ r^exponent
    Algebraic { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderCheck {
    pub k: f64,
    pub s_smooth: f64,
    pub symbol_limit: f64,
    pub c_beta_table: Vec<CBetaEntry>,
    /// partial sums of c_beta^2 |beta|^(2s) over max-norm shells 1..=radius
    pub partial_sums: Vec<f64>,
    pub partial_sum: f64,
    pub decay: IncrementDecay,
    pub converged: bool,
}

fn lattice_shell(n: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut pts = vec![vec![]];
    for _ in 0..n {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                (-radius..=radius).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    pts.retain(|p| p.iter().any(|&v| v != 0));
    pts
}

/// Classify the shell increments: super-polynomial when the log-log slopes keep
/// steepening well past any algebraic rate, otherwise the fitted algebraic exponent.
fn classify_increments(incs: &[f64]) -> IncrementDecay {
    let pos: Vec<(f64, f64)> = incs
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| (((i + 1) as f64).ln(), v.ln()))
        .collect();
    if pos.is_empty() {
        return IncrementDecay::Trivial;
    }
    if pos.len() < 3 {
        return IncrementDecay::Algebraic { exponent: f64::NAN };
    }
    let slopes: Vec<f64> = pos.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let steepening = slopes.windows(2).all(|w| w[1] < w[0] - 1.0);
    if steepening && *slopes.last().unwrap() < -20.0 {
        return IncrementDecay::SuperPolynomial;
    }
    let tail = &pos[pos.len() - 3..];
    let exponent = (tail[2].1 - tail[0].1) / (tail[2].0 - tail[0].0);
    IncrementDecay::Algebraic { exponent }
}

pub fn ladder_check(stencil: &Stencil, spec: &RbfSpec, k: f64, s_smooth: f64, radius: u32) -> Result<LadderCheck> {
    stencil.validate()?;
    spec.validate()?;
    if !(s_smooth < k) {
        return Err(Error::param("s_smooth", "must be below k"));
    }
    if radius < 2 {
        return Err(Error::param("radius", "must be at least 2"));
    }
    let n = stencil.n as usize;
    let lim = symbol_limit(stencil, k)?;
    let pts = lattice_shell(n, radius as i64);
    // phi_hat is radial: one transform per distinct |beta|^2
    let mut sq: Vec<i64> = pts.iter().map(|p| p.iter().map(|v| v * v).sum()).collect();
    sq.sort_unstable();
    sq.dedup();
    let table: BTreeMap<i64, f64> = if lim == 0.0 {
        sq.iter().map(|&q| (q, 0.0)).collect()
    } else {
        sq.par_iter()
            .map(|&q| ft(spec, 2.0 * PI * (q as f64).sqrt()).map(|v| (q, lim * v.abs())))
            .collect::<Result<_>>()?
    };
    let mut shells = vec![0.0; radius as usize];
    let mut entries = Vec::with_capacity(pts.len());
    for p in pts {
        let q: i64 = p.iter().map(|v| v * v).sum();
        let norm = 2.0 * PI * (q as f64).sqrt();
        let c = table[&q];
        let shell = p.iter().map(|v| v.abs()).max().unwrap() as usize;
        shells[shell - 1] += c * c * norm.powf(2.0 * s_smooth);
        entries.push(CBetaEntry { index: p, norm, c_beta: c });
    }
    let mut partial_sums = Vec::with_capacity(shells.len());
    let mut acc = 0.0;
    for v in &shells {
        acc += v;
        partial_sums.push(acc);
    }
    let decay = classify_increments(&shells);
    let converged = match decay {
        IncrementDecay::Trivial | IncrementDecay::SuperPolynomial => true,
        IncrementDecay::Algebraic { exponent } => exponent < -1.0,
    };
    Ok(LadderCheck {
        k,
        s_smooth,
        symbol_limit: lim,
        c_beta_table: entries,
        partial_sum: acc,
        partial_sums,
        decay,
        converged,
    })
}

#[cfg(test)]
mod tests;
