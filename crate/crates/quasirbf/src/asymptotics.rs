//! Expansions of the transforms as s -> 0+ and the (lambda, beta) regime classifier.
//!
//! The thin-plate-spline expansions are assembled from closed-form constants up
//! to and including the first logarithmic term; anything past that comes from
//! residues. The power family is expanded purely by residues.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mellin::{enumerate_poles, residue_expansion, residue_term, MbIntegrand, ResidueTerm, Which};
use crate::rbf_model::{Quadrant, RbfSpec};
use crate::special_fn::{digamma_real, gamma_real, harmonic, rgamma, EULER_GAMMA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub power: f64,
    pub has_log: bool,
    /// Coefficient of `s^power`.
    pub coeff: f64,
    /// Coefficient of `s^power log(c s / 2)`.
    pub coeff_of_log: f64,
}

impl ExpansionTerm {
    pub fn pure(power: f64, coeff: f64) -> Self {
        ExpansionTerm { power, has_log: false, coeff, coeff_of_log: 0.0 }
    }

    pub fn with_log(power: f64, coeff: f64, coeff_of_log: f64) -> Self {
        ExpansionTerm { power, has_log: true, coeff, coeff_of_log }
    }

    pub fn eval(&self, s: f64, c: f64) -> f64 {
        let p = s.powf(self.power);
        if self.has_log {
            p * (self.coeff + self.coeff_of_log * (c * s / 2.0).ln())
        } else {
            p * self.coeff
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff == 0.0 && self.coeff_of_log == 0.0
    }
}

impl From<ResidueTerm> for ExpansionTerm {
    fn from(t: ResidueTerm) -> Self {
        ExpansionTerm { power: t.power, has_log: t.has_log(), coeff: t.coeff, coeff_of_log: t.coeff_of_log }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticExpansion {
    pub terms: Vec<ExpansionTerm>,
    pub m0: Option<u32>,
    pub t0: Option<i64>,
    /// All terms with power below this are included.
    pub truncated_at_power: f64,
    /// The series is used for s below this (where `c s / 2 < 1`).
    pub validity_radius: f64,
}

impl AsymptoticExpansion {
    pub fn eval(&self, s: f64, c: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(s, c)).sum()
    }

    /// First term with a nonzero coefficient.
    pub fn leading(&self) -> Option<&ExpansionTerm> {
        self.terms.iter().find(|t| !t.is_zero())
    }

    fn sort(&mut self) {
        self.terms.sort_by(|a, b| a.power.partial_cmp(&b.power).unwrap());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QiFeasibility {
    FiniteStencil,
    InfiniteOnly,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub quadrant: Quadrant,
    pub leading: Option<ExpansionTerm>,
    pub qi_feasible: QiFeasibility,
    pub singularity_order: f64,
    pub notes: String,
}

fn tps_params(spec: &RbfSpec) -> Result<(u32, f64, u32)> {
    match *spec {
        RbfSpec::GeneralizedTps { n, c, d } => {
            spec.validate()?;
            Ok((n, c, d as u32))
        }
        RbfSpec::PowerFamily { .. } => Err(Error::WrongFamily("expected the tps family".into())),
    }
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn factorial(k: u32) -> f64 {
    gamma_real(k as f64 + 1.0)
}

/// `n/2 mod d` with representatives in {1, ..., d}.
fn half_n_mod_d(n: u32, d: u32) -> u32 {
    (n / 2 + d - 1) % d + 1
}

/// `m0 = d - (n/2 mod d)` (with the residue taken in {1..d}): the power 2 m0
/// of the first logarithmic term. Requires n even.
pub fn m0(n: u32, d: u32) -> u32 {
    d - half_n_mod_d(n, d)
}

/// `d - (n/2 mod d)` with the residue taken in {0..d-1}; differs from [`m0`] by d when d divides n/2.
pub fn m0_standard_mod(n: u32, d: u32) -> u32 {
    d - (n / 2) % d
}

/// Location of the first double pole of the integrand for the given piece.
pub fn t0(which: Which, n: u32, d: u32) -> Result<i64> {
    let ceil = (n as i64 + 2 * d as i64 - 1) / (2 * d as i64);
    match which {
        Which::TpsIII => Ok(-1 - ceil),
        Which::TpsIV => Ok(-ceil),
        _ => Err(Error::param("which", "t0 is defined for the tps pieces III and IV")),
    }
}

/// Leading term of the tps transform as s -> 0+ for integer d.
pub fn tps_leading(spec: &RbfSpec) -> Result<ExpansionTerm> {
    let (n, _, d) = tps_params(spec)?;
    tps_leading_general(n, d as f64)
}

/// Leading term for any real d > 0; non-integer d produces a logarithm.
pub fn tps_leading_general(n: u32, d: f64) -> Result<ExpansionTerm> {
    if n < 1 || !(d > 0.0) || !d.is_finite() {
        return Err(Error::param("d", "need n >= 1 and d > 0"));
    }
    let nh = n as f64 / 2.0;
    let power = -(n as f64) - 2.0 * d;
    let base = 2f64.powf(n as f64 + 2.0 * d) * PI.powf(nh) * d * gamma_real(d + nh);
    if d == d.round() {
        let coeff = sign(d as i64 + 1) * base * gamma_real(d + 1.0);
        Ok(ExpansionTerm::pure(power, coeff))
    } else {
        let k = base * rgamma(-d);
        Ok(ExpansionTerm::with_log(power, k * (digamma_real(-d) + digamma_real(d + nh)), -2.0 * k))
    }
}

fn require_even(n: u32) -> Result<()> {
    if n % 2 != 0 {
        return Err(Error::param("n", format!("closed-form expansion needs even dimension, got {n}")));
    }
    Ok(())
}

/// Terms of the III piece from the closed-form constants, through power 2 m0.
pub fn phi3_closed_form(n: u32, c: f64, d: u32) -> Result<Vec<ExpansionTerm>> {
    require_even(n)?;
    let (nf, df) = (n as f64, d as f64);
    let nh = nf / 2.0;
    let m0 = m0(n, d);
    let t0 = t0(Which::TpsIII, n, d)?;
    let mut out = Vec::new();
    for j in 0..(-t0) as u32 {
        let jf = j as f64;
        let power = -nf + 2.0 * df * (jf - 1.0);
        let coeff = if j == 0 {
            sign(d as i64 + 1) * PI.powf(nh) * df * factorial(d) * 2f64.powf(2.0 * df + nf) * gamma_real(df + nh)
        } else {
            sign(j as i64 + 1) * PI.powf(nh) * 2f64.powf(2.0 * df * (1.0 - jf) + nf) * c.powf(2.0 * df * jf)
                * gamma_real(-jf * df + df + nh)
                * rgamma(jf * df - df)
                / jf
        };
        out.push(ExpansionTerm::pure(power, coeff));
    }
    for j in 0..m0 {
        let jf = j as f64;
        let a = -(nf + 2.0 * jf) / (2.0 * df) - 1.0;
        let sin = (PI * a).sin();
        if a == a.round() {
            // collides with an integer pole: served by the logarithmic term
            continue;
        }
        let coeff = sign(j as i64) * PI.powf(nh + 1.0) * 2f64.powf(-2.0 * jf) * c.powf(2.0 * df + 2.0 * jf + nf)
            / (factorial(j) * df * a * gamma_real(jf + nh) * sin);
        out.push(ExpansionTerm::pure(2.0 * jf, coeff));
    }
    let m = m0 as f64;
    let c1 = sign(t0 + m0 as i64) * 2f64.powf(1.0 - 2.0 * m) * PI.powf(nh) * df * c.powf(2.0 * df + 2.0 * m + nf)
        / (factorial(m0) * (df + m + nh) * gamma_real(m + nh));
    let c2 = 0.5 * (-2.0 / (2.0 * df + 2.0 * m + nf) - harmonic(m0 as u64) - digamma_real(m + nh) + EULER_GAMMA);
    out.push(ExpansionTerm::with_log(2.0 * m, c1 * c2, c1));
    Ok(out)
}

/// Terms of the IV piece from the closed-form constants, through power 2 m0.
pub fn phi4_closed_form(n: u32, c: f64, d: u32) -> Result<Vec<ExpansionTerm>> {
    require_even(n)?;
    let (nf, df) = (n as f64, d as f64);
    let nh = nf / 2.0;
    let m0 = m0(n, d);
    let t0 = t0(Which::TpsIV, n, d)?;
    let pre = 2f64.powf(nf) * PI.powf(nh) * c.powf(2.0 * df);
    let half_c = c / 2.0;
    let mut out = Vec::new();
    for j in 0..(-t0) as u32 {
        let jf = j as f64;
        let coeff = if j == 0 {
            -df * gamma_real(nh)
        } else {
            sign(j as i64 + 1) * gamma_real(nh - df * jf) / (jf * gamma_real(df * jf)) * half_c.powf(2.0 * df * jf)
        };
        out.push(ExpansionTerm::pure(-nf + 2.0 * df * jf, pre * coeff));
    }
    for j in 0..m0 {
        let jf = j as f64;
        let x = (nh + jf) / df;
        if x == x.round() {
            continue;
        }
        let coeff = sign(j as i64) * PI / (factorial(j) * (nh + jf) * gamma_real(nh + jf) * (PI * x).sin())
            * half_c.powf(2.0 * jf + nf);
        out.push(ExpansionTerm::pure(2.0 * jf, pre * coeff));
    }
    let m = m0 as f64;
    let c1 = 2.0 * df * sign(t0 + m0 as i64) / (factorial(m0) * gamma_real(1.0 + m + nh)) * half_c.powf(nf + 2.0 * m);
    let c2 = 0.5 * (-1.0 / (nh + m) - harmonic(m0 as u64) - digamma_real(m + nh) + EULER_GAMMA);
    out.push(ExpansionTerm::with_log(2.0 * m, pre * c1 * c2, pre * c1));
    Ok(out)
}

fn validity_radius(c: f64) -> f64 {
    2.0 / c
}

fn tps_part_expansion(which: Which, spec: &RbfSpec, up_to_power: Option<f64>) -> Result<AsymptoticExpansion> {
    let (n, c, d) = tps_params(spec)?;
    let m0v = m0(n, d);
    let up = up_to_power.unwrap_or(2.0 * m0v as f64 + 1.0);
    if !up.is_finite() {
        return Err(Error::param("up_to_power", "must be finite"));
    }
    let closed = match which {
        Which::TpsIII => phi3_closed_form(n, c, d)?,
        _ => phi4_closed_form(n, c, d)?,
    };
    let last = 2.0 * m0v as f64;
    let mut terms: Vec<ExpansionTerm> =
        closed.into_iter().filter(|t| t.power < up && !t.is_zero()).collect();
    if up > last {
        let ig = MbIntegrand::new(which, *spec)?;
        for t in residue_expansion(&ig, up)? {
            if t.power > last {
                terms.push(t.into());
            }
        }
    }
    let mut e = AsymptoticExpansion {
        terms,
        m0: Some(m0v),
        t0: Some(t0(which, n, d)?),
        truncated_at_power: up,
        validity_radius: validity_radius(c),
    };
    e.sort();
    Ok(e)
}

/// Expansion of the III piece (n even); defaults to just past the first log term.
pub fn tps_expansion_phi3(spec: &RbfSpec, up_to_power: Option<f64>) -> Result<AsymptoticExpansion> {
    tps_part_expansion(Which::TpsIII, spec, up_to_power)
}

/// Expansion of the IV piece (n even); defaults to just past the first log term.
pub fn tps_expansion_phi4(spec: &RbfSpec, up_to_power: Option<f64>) -> Result<AsymptoticExpansion> {
    tps_part_expansion(Which::TpsIV, spec, up_to_power)
}

/// Merge terms of equal power (and equal log flag) by adding coefficients.
pub fn merge_terms(mut terms: Vec<ExpansionTerm>) -> Vec<ExpansionTerm> {
    terms.sort_by(|a, b| a.power.partial_cmp(&b.power).unwrap());
    let mut out: Vec<ExpansionTerm> = Vec::new();
    for t in terms {
        match out.last_mut() {
            Some(last) if (last.power - t.power).abs() <= 1e-12 * t.power.abs().max(1.0) => {
                last.coeff += t.coeff;
                last.coeff_of_log += t.coeff_of_log;
                last.has_log = last.has_log || t.has_log;
            }
            _ => out.push(t),
        }
    }
    out.retain(|t| !t.is_zero());
    out
}

/// Expansion of the full tps transform: the III and IV pieces combined.
/// Odd n is served from residues alone.
pub fn tps_expansion(spec: &RbfSpec, up_to_power: Option<f64>) -> Result<AsymptoticExpansion> {
    let (n, c, d) = tps_params(spec)?;
    if n % 2 == 0 {
        let a = tps_expansion_phi3(spec, up_to_power)?;
        let b = tps_expansion_phi4(spec, up_to_power)?;
        let mut terms = a.terms;
        terms.extend(b.terms);
        return Ok(AsymptoticExpansion { terms: merge_terms(terms), ..b });
    }
    let up = up_to_power.unwrap_or(2.0 * d as f64 + 1.0);
    let ig = MbIntegrand::new(Which::TpsSum, *spec)?;
    let terms = residue_expansion(&ig, up)?.into_iter().map(ExpansionTerm::from).collect();
    Ok(AsymptoticExpansion {
        terms: merge_terms(terms),
        m0: None,
        t0: None,
        truncated_at_power: up,
        validity_radius: validity_radius(c),
    })
}

/// Expansion of the power-family transform by residue enumeration. The default
/// cut keeps six units of power past the leading term.
pub fn power_expansion(spec: &RbfSpec, up_to_power: Option<f64>) -> Result<AsymptoticExpansion> {
    if !matches!(spec, RbfSpec::PowerFamily { .. }) {
        return Err(Error::WrongFamily("expected the power family".into()));
    }
    let ig = MbIntegrand::new(Which::PowerFamily, *spec)?;
    let up = match up_to_power {
        Some(p) => p,
        None => {
            let mut first = None;
            for p in enumerate_poles(&ig, ig.expansion_side(), 64)? {
                let t = ExpansionTerm::from(residue_term(&ig, &p)?);
                if !t.is_zero() {
                    first = Some(t.power);
                    break;
                }
            }
            first.map_or(6.0, |p| p + 6.0)
        }
    };
    let terms: Vec<ExpansionTerm> = residue_expansion(&ig, up)?.into_iter().map(ExpansionTerm::from).collect();
    Ok(AsymptoticExpansion {
        terms: merge_terms(terms),
        m0: None,
        t0: None,
        truncated_at_power: up,
        validity_radius: validity_radius(spec.c()),
    })
}

/// Expansion for either family with the module defaults.
pub fn expansion(spec: &RbfSpec, up_to_power: Option<f64>) -> Result<AsymptoticExpansion> {
    match spec {
        RbfSpec::GeneralizedTps { .. } => tps_expansion(spec, up_to_power),
        RbfSpec::PowerFamily { .. } => power_expansion(spec, up_to_power),
    }
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() <= 1e-12 * x.abs().max(1.0)
}

/// Verdict from the first nonzero term of an expansion.
pub fn feasibility_of(leading: &ExpansionTerm) -> (QiFeasibility, f64) {
    let p = leading.power;
    let order = if p < 0.0 { -p } else { 0.0 };
    if leading.has_log {
        return (QiFeasibility::InfiniteOnly, order);
    }
    if p >= 0.0 {
        return (QiFeasibility::Infeasible, order);
    }
    if is_integer(p) && (p.round() as i64) % 2 == 0 {
        (QiFeasibility::FiniteStencil, order)
    } else {
        (QiFeasibility::InfiniteOnly, order)
    }
}

/// Quadrant and quasi-interpolation verdict for a power-family RBF.
pub fn classify_regime(spec: &RbfSpec) -> Result<RegimeReport> {
    let quadrant = match spec.quadrant() {
        Some(q) => q,
        None => return Err(Error::WrongFamily("classification is for the power family".into())),
    };
    spec.validate()?;
    let (n, lambda, beta) = match *spec {
        RbfSpec::PowerFamily { n, lambda, beta, .. } => (n as f64, lambda, beta),
        _ => unreachable!(),
    };
    let mut notes = Vec::new();
    if spec.metadata().negative_integer_beta {
        notes.push("beta is a negative integer".to_string());
    }
    if beta == 0.0 {
        notes.push("beta = 0: the RBF is constant and its transform vanishes for s > 0".to_string());
        return Ok(RegimeReport {
            quadrant,
            leading: None,
            qi_feasible: QiFeasibility::Infeasible,
            singularity_order: 0.0,
            notes: notes.join("; "),
        });
    }
    let exp = match power_expansion(spec, None) {
        Ok(e) => e,
        Err(Error::Degenerate(msg)) | Err(Error::Unsupported(msg)) => {
            notes.push(format!("pole collision not covered: {msg}"));
            return Ok(RegimeReport {
                quadrant,
                leading: None,
                qi_feasible: QiFeasibility::Infeasible,
                singularity_order: f64::NAN,
                notes: notes.join("; "),
            });
        }
        Err(e) => return Err(e),
    };
    let leading = exp.leading().copied();
    let (mut verdict, order) = match &leading {
        Some(t) => feasibility_of(t),
        None => (QiFeasibility::Infeasible, 0.0),
    };
    match quadrant {
        Quadrant::MQ_pos_pos => {
            notes.push(format!("leading power -(n + lambda beta) = {}", -(n + lambda * beta)));
        }
        Quadrant::IMQ_pos_neg => {
            let bt = -beta;
            let ratio = n / lambda;
            if (bt - ratio).abs() <= 1e-12 {
                notes.push("beta~ = n/lambda: logarithmic leading term".into());
            } else if bt > ratio {
                notes.push("beta~ > n/lambda: the transform is bounded at the origin".into());
            } else {
                notes.push(format!("beta~ < n/lambda: singularity of order n - lambda beta~ = {}", n - lambda * bt));
            }
        }
        Quadrant::Singular_neg_pos => {
            verdict = QiFeasibility::Infeasible;
            notes.push(
                "the RBF is singular at the origin; a combination over several shape parameters is required"
                    .into(),
            );
        }
        Quadrant::IMQ_neg_neg => {
            let lt = -lambda;
            if n > lt {
                notes.push(format!("n > lambda~: singularity of order n - lambda~ = {}", n - lt));
            } else {
                notes.push("n <= lambda~: no algebraic singularity at the origin".into());
            }
        }
    }
    if verdict == QiFeasibility::InfiniteOnly {
        notes.push("only an infinite trigonometric symbol can cancel the leading term".into());
    }
    Ok(RegimeReport { quadrant, leading, qi_feasible: verdict, singularity_order: order, notes: notes.join("; ") })
}

#[cfg(test)]
mod tests;
