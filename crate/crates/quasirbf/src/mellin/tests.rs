use super::*;
use crate::special_fn::gamma_real;

fn tps(n: u32, c: f64, d: u32) -> RbfSpec {
    RbfSpec::tps(n, c, d).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// Straight-line Mellin-Barnes quadratures in mpmath at 30 digits.
#[test]
fn frozen_line_integrals() {
    let cases: [(MbIntegrand, f64, f64); 9] = [
        (MbIntegrand::new(Which::TpsSum, tps(2, 1.0, 2)).unwrap(), 0.5, -103038.0894091716),
        (MbIntegrand::new(Which::TpsSum, tps(2, 1.0, 2)).unwrap(), 3.0, -2.4849952769750811),
        (MbIntegrand::new(Which::TpsIII, tps(2, 1.0, 2)).unwrap(), 0.5, -102946.61629659518),
        (MbIntegrand::new(Which::TpsIV, tps(2, 1.0, 2)).unwrap(), 0.5, -91.473112576421006),
        (MbIntegrand::new(Which::TpsIII, tps(4, 0.7, 1)).unwrap(), 1.3, 259.70069415139456),
        (MbIntegrand::full(RbfSpec::power(1, 1.0, 2.0, 0.5).unwrap()).unwrap(), 1.0, -1.2038144603944691),
        (MbIntegrand::full(RbfSpec::power(1, 1.0, 2.0, -0.5).unwrap()).unwrap(), 1.0, 0.84204887648141667),
        (MbIntegrand::full(RbfSpec::power(3, 1.0, -2.0, -0.5).unwrap()).unwrap(), 0.7, -7.8431044568677654),
        (MbIntegrand::full(RbfSpec::power(2, 1.2, 1.5, 0.3).unwrap()).unwrap(), 0.9, -2.4548014549429394),
    ];
    for (ig, s, want) in cases {
        let got = eval_ft(&ig, s, 1e-12).unwrap();
        assert!(rel(got.value, want) < 1e-10, "{ig:?} s={s}: {got:?} vs {want}");
        let ct = eval_ft_contour(&ig, s, 1e-11).unwrap();
        assert!(rel(ct.value, want) < 1e-9, "{ig:?} s={s}: contour {ct:?} vs {want}");
    }
}

#[test]
fn closed_form_examples() {
    let k32 = (PI / 2.0).sqrt() * (-1f64).exp() * 2.0;
    let v = eval_ft_closed_form_d1(&tps(1, 1.0, 1), 1.0).unwrap();
    assert!(rel(v, 4.0 * (2.0 * PI).sqrt() * k32) < 1e-13);
    let v = eval_ft_closed_form_d1(&tps(2, 1.0, 1), 2.0).unwrap();
    let want = 4.0 * 2.0 * PI * 0.25 * bessel_k(2.0, 2.0).unwrap();
    assert!(rel(v, want) < 1e-14);
    let ig = MbIntegrand::full(tps(2, 1.0, 1)).unwrap();
    assert!(rel(eval_ft(&ig, 2.0, 1e-12).unwrap().value, want) < 1e-10);
    assert!(eval_ft_closed_form_d1(&tps(2, 1.0, 2), 1.0).is_err());
    assert!(matches!(
        eval_ft_closed_form_d1(&RbfSpec::power(1, 1.0, 2.0, 0.5).unwrap(), 1.0),
        Err(Error::WrongFamily(_))
    ));
}

#[test]
fn split_sums_to_full() {
    for (n, d, c) in [(2, 1, 1.0), (2, 2, 0.5), (3, 2, 1.5), (4, 3, 1.0)] {
        let sp = tps(n, c, d);
        for s in [0.05, 0.7, 4.0] {
            let a = eval_ft(&MbIntegrand::new(Which::TpsIII, sp).unwrap(), s, 1e-12).unwrap().value;
            let b = eval_ft(&MbIntegrand::new(Which::TpsIV, sp).unwrap(), s, 1e-12).unwrap().value;
            let t = eval_ft(&MbIntegrand::new(Which::TpsSum, sp).unwrap(), s, 1e-12).unwrap().value;
            let scale = a.abs().max(b.abs());
            assert!(((a + b - t) / scale).abs() < 1e-9, "n={n} d={d} s={s}: {a} + {b} vs {t}");
        }
    }
}

#[test]
fn first_tps_poles() {
    // d = 1: the pole at zero is simple
    let ig = MbIntegrand::new(Which::TpsIII, tps(2, 1.0, 1)).unwrap();
    let p = enumerate_poles(&ig, HalfPlane::Left, 4).unwrap();
    let live: Vec<_> = p.iter().filter(|q| !q.cancelled).collect();
    assert_eq!(live[0].location, 0.0);
    assert_eq!(live[0].order, 1);
    let r = residue_at(&ig, live[0], 1.0).unwrap();
    assert!(rel(r, 16.0 * PI) < 1e-14);

    // d = 2: first double pole at -2
    let ig = MbIntegrand::new(Which::TpsIII, tps(2, 1.0, 2)).unwrap();
    let p = enumerate_poles(&ig, HalfPlane::Left, 12).unwrap();
    let first_double = p.iter().find(|q| q.order == 2 && !q.cancelled).unwrap();
    assert_eq!(first_double.location, -2.0);
    assert_eq!(first_double.source, PoleSource::Merged);
}

#[test]
fn power_poles() {
    // Hardy multiquadric in 1-D: simple pole at t = beta, residue -2 s^-2
    let ig = MbIntegrand::full(RbfSpec::power(1, 1.0, 2.0, 0.5).unwrap()).unwrap();
    let p = enumerate_poles(&ig, HalfPlane::Left, 3).unwrap();
    assert_eq!(p[0].location, 0.5);
    assert_eq!(p[0].order, 1);
    let t = residue_term(&ig, &p[0]).unwrap();
    assert_eq!(t.power, -2.0);
    assert!(rel(t.coeff, -2.0) < 1e-14);

    // inverse multiquadric in 1-D: the first pole is double and carries a log
    let ig = MbIntegrand::full(RbfSpec::power(1, 1.0, 2.0, -0.5).unwrap()).unwrap();
    let p = enumerate_poles(&ig, HalfPlane::Left, 3).unwrap();
    assert_eq!((p[0].location, p[0].order), (-0.5, 2));
    let t = residue_term(&ig, &p[0]).unwrap();
    assert_eq!(t.power, 0.0);
    assert!(t.has_log());
    // 2 K_0(s) ~ -2 log(s/2) - 2 gamma
    assert!(rel(t.coeff_of_log, -2.0) < 1e-14);
    assert!(rel(t.coeff, -2.0 * crate::special_fn::EULER_GAMMA) < 1e-13);
}

#[test]
fn imq_negative_lambda_leading_term() {
    // lambda = -2, beta = -1/2, n = 3: -2^{n-2} pi^{n/2} c^{2(1+1/2)} (1/2) Gamma((n-2)/2)/Gamma(1) s^{-(n-2)}
    let ig = MbIntegrand::full(RbfSpec::power(3, 1.0, -2.0, -0.5).unwrap()).unwrap();
    let terms = residue_expansion(&ig, 0.0).unwrap();
    let lead = terms[0];
    assert_eq!(lead.power, -1.0);
    let want = -2.0 * PI.powf(1.5) * 0.5 * gamma_real(0.5);
    assert!(rel(lead.coeff, want) < 1e-13);
    let s = 1e-3;
    let v = eval_ft(&ig, s, 1e-12).unwrap().value;
    assert!(rel(v, lead.value_at(s, 1.0)) < 1e-2);
}

#[test]
fn beta_zero_is_identically_zero() {
    let ig = MbIntegrand::full(RbfSpec::power(2, 1.0, 2.0, 0.0).unwrap()).unwrap();
    assert_eq!(eval_ft(&ig, 1.0, 1e-10).unwrap().value, 0.0);
}

#[test]
fn shrinking_circles() {
    // residues by trapezoid quadrature on small circles around each pole
    let specs = [
        MbIntegrand::new(Which::TpsIII, tps(2, 1.0, 2)).unwrap(),
        MbIntegrand::new(Which::TpsIV, tps(4, 1.0, 1)).unwrap(),
        MbIntegrand::new(Which::TpsSum, tps(2, 1.0, 3)).unwrap(),
        MbIntegrand::full(RbfSpec::power(1, 1.0, 2.0, -0.5).unwrap()).unwrap(),
        MbIntegrand::full(RbfSpec::power(4, 1.0, -2.0, -0.5).unwrap()).unwrap(),
    ];
    let s = 0.8;
    for ig in specs {
        for side in [HalfPlane::Left, HalfPlane::Right] {
            for p in enumerate_poles(&ig, side, 6).unwrap() {
                let rho = 1e-3;
                let m = 64;
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..m {
                    let th = 2.0 * PI * k as f64 / m as f64;
                    let dt = Complex64::from_polar(rho, th);
                    acc += ig.eval_complex(Complex64::new(p.location, 0.0) + dt, s) * dt;
                }
                let circle = acc.re / m as f64;
                let mine = residue_at(&ig, &p, s).unwrap();
                // closing on the right traverses clockwise
                let circle = if side == HalfPlane::Right { -circle } else { circle };
                let scale = mine.abs().max(1e-300);
                if p.cancelled {
                    let size = ig.eval_complex(Complex64::new(p.location + rho, 0.0), s).norm() * rho;
                    assert!(circle.abs() < 1e-8 * size, "{ig:?} {p:?}: {circle} vs size {size}");
                } else {
                    assert!(((circle - mine) / scale).abs() < 1e-8, "{ig:?} {p:?}: {circle} vs {mine}");
                }
            }
        }
    }
}

#[test]
fn series_and_contour_overlap() {
    let ig = MbIntegrand::full(tps(3, 1.0, 2)).unwrap();
    for s in [0.3, 1.0, 2.5] {
        let a = eval_ft_series(&ig, s, 1e-12).unwrap();
        let b = eval_ft_contour(&ig, s, 1e-11).unwrap();
        assert!(rel(a.value, b.value) < 1e-7, "s={s}: {a:?} {b:?}");
    }
}

#[test]
fn large_argument_falls_back_to_contour() {
    let sp = tps(2, 1.0, 1);
    let ig = MbIntegrand::full(sp).unwrap();
    let v = eval_ft(&ig, 40.0, 1e-10).unwrap();
    let want = eval_ft_closed_form_d1(&sp, 40.0).unwrap();
    assert!(rel(v.value, want) < 1e-8, "{v:?} vs {want}");
}

#[test]
fn rejects_bad_input() {
    let ig = MbIntegrand::full(tps(2, 1.0, 1)).unwrap();
    assert!(eval_ft(&ig, 0.0, 1e-10).is_err());
    assert!(eval_ft(&ig, 1.0, 1e-14).is_err());
    assert!(enumerate_poles(&ig, HalfPlane::Left, 0).is_err());
    assert!(MbIntegrand::new(Which::PowerFamily, tps(2, 1.0, 1)).is_err());
}

#[test]
fn oracle_matches_closed_form() {
    let sp = tps(2, 1.0, 1);
    let o = oracle_hankel(&sp, 2.0, &default_eps_list(2.0)).unwrap();
    assert!(rel(o, eval_ft_closed_form_d1(&sp, 2.0).unwrap()) < 1e-6, "{o}");
    let sp = RbfSpec::power(1, 1.0, 2.0, 0.5).unwrap();
    let o = oracle_hankel(&sp, 1.0, &default_eps_list(1.0)).unwrap();
    assert!(rel(o, -1.2038144603944691) < 1e-6, "{o}");
    // a constant transforms to a point mass at the origin
    let o = oracle_hankel_fn(2, &|_| 1.0, 1.5, 1.0, &default_eps_list(1.5)).unwrap();
    assert!(o.abs() < 1e-8, "{o}");
}

#[test]
fn remainder_line_matches_subtraction() {
    let ig = MbIntegrand::full(tps(2, 1.0, 1)).unwrap();
    let s = 0.1;
    let full = eval_ft(&ig, s, 1e-12).unwrap().value;
    let lead: f64 = residue_expansion(&ig, -1.0).unwrap().iter().map(|t| t.value_at(s, 1.0)).sum();
    let rem = eval_ft_beyond(&ig, s, -0.5, 1e-12).unwrap().value;
    assert!(rel(rem, full - lead) < 1e-9, "{rem} vs {}", full - lead);
    // nothing subtracted when the line sits right of every left pole
    let all = eval_ft_beyond(&ig, 1.0, 1.5, 1e-12).unwrap().value;
    assert!(rel(all, eval_ft(&ig, 1.0, 1e-12).unwrap().value) < 1e-10);
    assert!(eval_ft_beyond(&ig, s, 0.0, 1e-12).is_err());
}
