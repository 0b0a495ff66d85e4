use super::*;
use crate::mellin::{enumerate_poles, eval_ft, HalfPlane};

fn tps(n: u32, c: f64, d: u32) -> RbfSpec {
    RbfSpec::tps(n, c, d).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn leading_examples() {
    let t = tps_leading(&tps(2, 1.0, 1)).unwrap();
    assert_eq!(t.power, -4.0);
    assert!(!t.has_log);
    assert!(rel(t.coeff, 16.0 * PI) < 1e-14);
    let t = tps_leading(&tps(4, 1.0, 1)).unwrap();
    assert_eq!(t.power, -6.0);
    assert!(rel(t.coeff, 128.0 * PI * PI) < 1e-14);
    // c -> 0 limit for n = 2, d = 2
    let t = tps_leading(&tps(2, 1.0, 2)).unwrap();
    assert!(rel(t.coeff, -512.0 * PI) < 1e-14);
}

#[test]
fn leading_non_integer_d() {
    // residue of the III integrand at t = 0 by mpmath circle quadrature, n = 2, d = 3/2
    let t = tps_leading_general(2, 1.5).unwrap();
    assert!(t.has_log);
    assert_eq!(t.power, -5.0);
    assert!(rel(t.coeff, 119.28771377499460727) < 1e-12, "{t:?}");
    assert!(rel(t.coeff_of_log, -169.64600329384883488) < 1e-12, "{t:?}");
}

#[test]
fn m0_and_t0_examples() {
    assert_eq!(m0(2, 1), 0);
    assert_eq!(m0(2, 2), 1);
    assert_eq!(m0(4, 3), 1);
    assert_eq!(m0_standard_mod(2, 1), 1);
    assert_eq!(t0(Which::TpsIII, 2, 2).unwrap(), -2);
    assert_eq!(t0(Which::TpsIV, 2, 2).unwrap(), -1);
    assert!(t0(Which::TpsSum, 2, 2).is_err());
}

/// The closed-form constants agree with residue extraction term by term.
#[test]
fn closed_forms_match_residues() {
    for n in (2..=10).step_by(2) {
        for d in 1..=5 {
            for c in [0.7, 1.0, 1.9] {
                let sp = tps(n, c, d);
                for which in [Which::TpsIII, Which::TpsIV] {
                    let closed = match which {
                        Which::TpsIII => phi3_closed_form(n, c, d).unwrap(),
                        _ => phi4_closed_form(n, c, d).unwrap(),
                    };
                    let last = closed.last().unwrap().power;
                    let ig = MbIntegrand::new(which, sp).unwrap();
                    let res: Vec<ExpansionTerm> =
                        residue_expansion(&ig, last + 0.5).unwrap().into_iter().map(Into::into).collect();
                    let closed: Vec<_> = closed.into_iter().filter(|t| !t.is_zero()).collect();
                    assert_eq!(closed.len(), res.len(), "n={n} d={d} {which:?}: {closed:?} vs {res:?}");
                    for (a, b) in closed.iter().zip(&res) {
                        assert_eq!(a.power, b.power);
                        assert_eq!(a.has_log, b.has_log);
                        assert!(rel(a.coeff, b.coeff) < 1e-9, "n={n} d={d} c={c} {which:?}: {a:?} vs {b:?}");
                        if a.has_log {
                            assert!(rel(a.coeff_of_log, b.coeff_of_log) < 1e-9, "{a:?} vs {b:?}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn first_double_pole_is_t0() {
    for n in (2..=10).step_by(2) {
        for d in 1..=5 {
            for which in [Which::TpsIII, Which::TpsIV] {
                let ig = MbIntegrand::new(which, tps(n, 1.0, d)).unwrap();
                let poles = enumerate_poles(&ig, HalfPlane::Left, 40).unwrap();
                let first = poles.iter().find(|p| p.order == 2 && !p.cancelled).unwrap();
                assert_eq!(first.location, t0(which, n, d).unwrap() as f64);
                let power = residue_term_power(&ig, first.location);
                assert_eq!(power, 2.0 * m0(n, d) as f64);
            }
        }
    }
}

fn residue_term_power(ig: &MbIntegrand, t: f64) -> f64 {
    let q = match ig.which {
        Which::TpsIII => ig.spec.n() as f64 + 2.0 * (ig.spec_d()),
        _ => ig.spec.n() as f64,
    };
    -q - 2.0 * ig.spec_d() * t
}

trait SpecD {
    fn spec_d(&self) -> f64;
}

impl SpecD for MbIntegrand {
    fn spec_d(&self) -> f64 {
        match self.spec {
            RbfSpec::GeneralizedTps { d, .. } => d,
            _ => unreachable!(),
        }
    }
}

#[test]
fn negative_powers_are_even_and_log_free() {
    for n in (2..=8).step_by(2) {
        for d in 1..=4 {
            let e = tps_expansion(&tps(n, 1.0, d), None).unwrap();
            let m0 = e.m0.unwrap() as f64;
            for t in &e.terms {
                if t.power < 2.0 * m0 {
                    assert!(!t.has_log);
                }
                if t.power < 0.0 {
                    assert_eq!(t.power.rem_euclid(2.0), 0.0);
                }
            }
            assert!(e.terms.iter().any(|t| t.has_log && t.power == 2.0 * m0));
        }
    }
}

#[test]
fn phi3_examples() {
    let e = tps_expansion_phi3(&tps(2, 1.0, 1), None).unwrap();
    assert_eq!(e.m0, Some(0));
    let e = tps_expansion_phi3(&tps(2, 1.0, 2), None).unwrap();
    assert_eq!(e.m0, Some(1));
    let c0 = e.terms[0];
    assert_eq!(c0.power, -6.0);
    assert!(rel(c0.coeff, -512.0 * PI) < 1e-14);
    assert!(tps_expansion_phi3(&tps(3, 1.0, 1), None).is_err());
    assert!(tps_expansion_phi4(&tps(3, 1.0, 1), None).is_err());
}

#[test]
fn phi4_examples() {
    let e = tps_expansion_phi4(&tps(2, 1.0, 1), None).unwrap();
    assert_eq!(e.terms[0].power, -2.0);
    assert!(rel(e.terms[0].coeff, -4.0 * PI) < 1e-14);
    let e = tps_expansion_phi4(&tps(2, 1.0, 2), None).unwrap();
    assert_eq!(e.t0, Some(-1));
    assert_eq!(e.terms.iter().filter(|t| t.power < 0.0).count(), 1);
}

#[test]
fn expansion_tracks_the_transform() {
    for (n, d) in [(2, 1), (2, 2), (4, 1), (4, 3)] {
        let sp = tps(n, 1.0, d);
        let e = tps_expansion(&sp, Some(2.0 * m0(n, d) as f64 + 3.0)).unwrap();
        let ig = MbIntegrand::full(sp).unwrap();
        let s = 1e-2;
        let v = eval_ft(&ig, s, 1e-12).unwrap().value;
        assert!(rel(e.eval(s, 1.0), v) < 1e-4, "n={n} d={d}");
    }
}

#[test]
fn power_examples() {
    let e = power_expansion(&RbfSpec::power(1, 1.0, 2.0, 0.5).unwrap(), None).unwrap();
    let l = e.leading().unwrap();
    assert_eq!(l.power, -2.0);
    assert!(rel(l.coeff, -2.0) < 1e-14);

    let e = power_expansion(&RbfSpec::power(5, 1.0, -2.0, -1.5).unwrap(), None).unwrap();
    let l = e.leading().unwrap();
    assert_eq!(l.power, -3.0);
    let want = -8.0 * PI.powf(2.5) * 1.5 * gamma_real(1.5) / gamma_real(1.0);
    assert!(rel(l.coeff, want) < 1e-13, "{l:?} vs {want}");

    let e = power_expansion(&RbfSpec::power(1, 1.0, 2.0, -0.5).unwrap(), None).unwrap();
    assert!(e.leading().unwrap().has_log);
}

/// First sum of the inverse-multiquadric expansion, with the exponent of c read as lambda~(k + beta~).
#[test]
fn imq_first_sum_closed_form() {
    let (n, c, lt, bt) = (5u32, 1.3, 3.0, 0.4);
    let sp = RbfSpec::power(n, c, -lt, -bt).unwrap();
    let e = power_expansion(&sp, Some(-0.1)).unwrap();
    let nf = n as f64;
    for k in 1..=1 {
        let kf = k as f64;
        let power = -(nf - lt * kf);
        let coeff = sign(k) * 2f64.powf(nf - lt * kf) * PI.powf(nf / 2.0) * c.powf(lt * (kf + bt))
            / factorial(k as u32)
            * gamma_real(kf + bt)
            * gamma_real((nf - lt * kf) / 2.0)
            / (gamma_real(bt) * gamma_real(lt * kf / 2.0));
        let t = e.terms.iter().find(|t| t.power == power).unwrap();
        assert!(rel(t.coeff, coeff) < 1e-12, "{t:?} vs {coeff}");
    }
}

#[test]
fn classifier_verdicts() {
    let r = classify_regime(&RbfSpec::power(1, 1.0, 2.0, 0.5).unwrap()).unwrap();
    assert_eq!((r.qi_feasible, r.singularity_order), (QiFeasibility::FiniteStencil, 2.0));
    let r = classify_regime(&RbfSpec::power(1, 1.0, 2.0, -0.5).unwrap()).unwrap();
    assert_eq!(r.qi_feasible, QiFeasibility::InfiniteOnly);
    assert!(r.leading.unwrap().has_log);
    let r = classify_regime(&RbfSpec::power(1, 1.0, 2.0, -1.5).unwrap()).unwrap();
    assert_eq!(r.qi_feasible, QiFeasibility::Infeasible);
    assert_eq!(r.leading.unwrap().power, 0.0);
    let r = classify_regime(&RbfSpec::power(4, 1.0, -2.0, -0.5).unwrap()).unwrap();
    assert_eq!((r.qi_feasible, r.singularity_order), (QiFeasibility::FiniteStencil, 2.0));
    assert_eq!(r.quadrant, Quadrant::IMQ_neg_neg);
    let r = classify_regime(&RbfSpec::power(3, 1.0, -2.0, 0.5).unwrap()).unwrap();
    assert_eq!(r.quadrant, Quadrant::Singular_neg_pos);
    assert_eq!(r.qi_feasible, QiFeasibility::Infeasible);
    assert!(classify_regime(&tps(2, 1.0, 1)).is_err());
}
