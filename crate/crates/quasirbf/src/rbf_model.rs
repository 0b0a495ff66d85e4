//! The generalized thin-plate-spline and power RBF families evaluated in physical space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    GeneralizedTps,
    PowerFamily,
}

/// Sign quadrant of (lambda, beta) for the power family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum Quadrant {
    MQ_pos_pos,
    IMQ_pos_neg,
    Singular_neg_pos,
    IMQ_neg_neg,
}

/// RBF family and parameters. JSON form:
/// `{"family":"tps","n":2,"c":1,"d":1}` or `{"family":"power","n":1,"c":1,"lambda":2,"beta":0.5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum RbfSpec {
    #[serde(rename = "tps")]
    GeneralizedTps { n: u32, c: f64, d: f64 },
    #[serde(rename = "power")]
    PowerFamily { n: u32, c: f64, lambda: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeMetadata {
    pub quadrant: Option<Quadrant>,
    /// beta is a negative integer (admitted, but a special sub-case of the power family).
    pub negative_integer_beta: bool,
    /// The RBF itself is singular at r = 0.
    pub singular_at_origin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpsSplit {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub phi4: f64,
}

impl TpsSplit {
    pub fn sum(&self) -> f64 {
        self.phi1 + self.phi2 + self.phi3 + self.phi4
    }
}

impl RbfSpec {
    pub fn tps(n: u32, c: f64, d: u32) -> Result<Self> {
        let s = RbfSpec::GeneralizedTps { n, c, d: d as f64 };
        s.validate()?;
        Ok(s)
    }

    pub fn power(n: u32, c: f64, lambda: f64, beta: f64) -> Result<Self> {
        let s = RbfSpec::PowerFamily { n, c, lambda, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: RbfSpec = serde_json::from_str(text).map_err(|e| Error::param("spec", e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let c = self.c();
        if n < 1 {
            return Err(Error::param("n", "dimension must be at least 1"));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::param("c", format!("shape parameter must be positive and finite, got {c}")));
        }
        match *self {
            RbfSpec::GeneralizedTps { d, .. } => {
                if !(d >= 1.0) || d != d.round() || !d.is_finite() {
                    return Err(Error::param("d", format!("must be a positive integer, got {d}")));
                }
            }
            RbfSpec::PowerFamily { lambda, beta, .. } => {
                if lambda == 0.0 || !lambda.is_finite() {
                    return Err(Error::param("lambda", "must be finite and nonzero"));
                }
                if !beta.is_finite() {
                    return Err(Error::param("beta", "must be finite"));
                }
                if beta >= 1.0 && beta == beta.round() {
                    return Err(Error::param("beta", format!("must not be a positive integer, got {beta}")));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        match self {
            RbfSpec::GeneralizedTps { .. } => Family::GeneralizedTps,
            RbfSpec::PowerFamily { .. } => Family::PowerFamily,
        }
    }

    pub fn n(&self) -> u32 {
        match *self {
            RbfSpec::GeneralizedTps { n, .. } | RbfSpec::PowerFamily { n, .. } => n,
        }
    }

    pub fn c(&self) -> f64 {
        match *self {
            RbfSpec::GeneralizedTps { c, .. } | RbfSpec::PowerFamily { c, .. } => c,
        }
    }

    pub fn quadrant(&self) -> Option<Quadrant> {
        match *self {
            RbfSpec::GeneralizedTps { .. } => None,
            RbfSpec::PowerFamily { lambda, beta, .. } => Some(match (lambda > 0.0, beta > 0.0) {
                (true, true) => Quadrant::MQ_pos_pos,
                (true, false) => Quadrant::IMQ_pos_neg,
                (false, true) => Quadrant::Singular_neg_pos,
                (false, false) => Quadrant::IMQ_neg_neg,
            }),
        }
    }

    pub fn metadata(&self) -> RegimeMetadata {
        let (neg_int, singular) = match *self {
            RbfSpec::GeneralizedTps { .. } => (false, false),
            RbfSpec::PowerFamily { lambda, beta, .. } => {
                (beta < 0.0 && beta == beta.round(), lambda < 0.0 && beta > 0.0)
            }
        };
        RegimeMetadata {
            quadrant: self.quadrant(),
            negative_integer_beta: neg_int,
            singular_at_origin: singular,
        }
    }
}

/// phi(r) for r >= 0.
///
/// For the power family with lambda < 0 and beta < 0 the value at r = 0 is the
/// continuous extension 0; with lambda < 0 and beta > 0 the RBF blows up at the
/// origin and r = 0 is a domain error.
pub fn eval_rbf(spec: &RbfSpec, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be finite and nonnegative, got {r}")));
    }
    Ok(match *spec {
        RbfSpec::GeneralizedTps { c, d, .. } => {
            let v = c.powf(2.0 * d) + r.powf(2.0 * d);
            v * v.ln()
        }
        RbfSpec::PowerFamily { c, lambda, beta, .. } => {
            if lambda > 0.0 || r >= c {
                (c.powf(lambda) + r.powf(lambda)).powf(beta)
            } else if r == 0.0 {
                if beta > 0.0 {
                    return Err(Error::Domain(
                        "power family with lambda < 0, beta > 0 is singular at r = 0".into(),
                    ));
                }
                if beta == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                // r^(lambda beta) (1 + (r/c)^(-lambda))^beta, well scaled for small r
                r.powf(lambda * beta) * (1.0 + (r / c).powf(-lambda)).powf(beta)
            }
        }
    })
}

/// The four summands phi_I..phi_IV of the thin-plate-spline family at radius r.
pub fn eval_tps_split(spec: &RbfSpec, r: f64) -> Result<TpsSplit> {
    let (c, d) = match *spec {
        RbfSpec::GeneralizedTps { c, d, .. } => (c, d),
        RbfSpec::PowerFamily { .. } => {
            return Err(Error::WrongFamily("the four-part split exists only for the tps family".into()))
        }
    };
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be finite and nonnegative, got {r}")));
    }
    let c2d = c.powf(2.0 * d);
    let r2d = r.powf(2.0 * d);
    let lc = c.ln();
    let l1p = (r / c).powf(2.0 * d).ln_1p();
    Ok(TpsSplit {
        phi1: 2.0 * d * c2d * lc,
        phi2: 2.0 * d * r2d * lc,
        phi3: r2d * l1p,
        phi4: c2d * l1p,
    })
}
