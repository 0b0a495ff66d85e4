use super::*;
use crate::lagrange::stencil_for;

fn tps21() -> (Stencil, RbfSpec) {
    let sp = RbfSpec::tps(2, 1.0, 1).unwrap();
    (stencil_for(&sp, None).unwrap(), sp)
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn symbol_limit_is_the_inverse_leading_coefficient() {
    let (st, _) = tps21();
    assert!(rel(symbol_limit(&st, 4.0).unwrap(), 1.0 / (16.0 * PI)) < 1e-9);
}

// c_beta = |phi_hat(|beta|)| / (16 pi), phi_hat(s) = 8 pi s^-2 K_2(s), by mpmath
#[test]
fn c_beta_values() {
    let (st, sp) = tps21();
    let c = estimate_c_beta(&st, &sp, &[1, 0], 4.0).unwrap();
    assert!(rel(c, 1.55876937118273601943e-5) < 1e-9, "{c}");
    let c = estimate_c_beta(&st, &sp, &[-1, 1], 4.0).unwrap();
    assert!(rel(c, 4.49750293841546820928e-7) < 1e-9, "{c}");
}

#[test]
fn case_table() {
    let (st, sp) = tps21();
    assert_eq!(estimate_c_beta(&st, &sp, &[1, 0], 3.0).unwrap(), 0.0);
    assert!(matches!(estimate_c_beta(&st, &sp, &[1, 0], 5.0), Err(Error::NoConvergence(_))));
    assert!(estimate_c_beta(&st, &sp, &[0, 0], 4.0).is_err());
    assert!(estimate_c_beta(&st, &sp, &[1], 4.0).is_err());
}

#[test]
fn limits_are_stable_under_probe_halving() {
    for sp in [RbfSpec::tps(2, 1.0, 1).unwrap(), RbfSpec::tps(2, 1.0, 2).unwrap(), RbfSpec::power(4, 1.0, -2.0, -0.5).unwrap()] {
        let st = stencil_for(&sp, None).unwrap();
        let k = st.singularity_order as f64;
        for u in ray_directions(st.n as usize) {
            match (ray_limit(&st, &u, k, FIRST_PROBE), ray_limit(&st, &u, k, FIRST_PROBE / 2.0)) {
                (RayLimit::Finite(a), RayLimit::Finite(b)) => assert!(rel(b, a) < 1e-6, "{a} {b}"),
                other => panic!("{other:?}"),
            }
        }
    }
}

#[test]
fn tps_ladder() {
    let (st, sp) = tps21();
    let l = ladder_check(&st, &sp, 4.0, 0.0, 4).unwrap();
    assert_eq!(l.c_beta_table.len(), 80);
    assert!(l.c_beta_table.iter().all(|e| e.c_beta.is_finite() && e.c_beta > 0.0));
    assert!(l.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(l.decay, IncrementDecay::SuperPolynomial);
    assert!(l.converged);
    let l = ladder_check(&st, &sp, 3.0, 0.0, 3).unwrap();
    assert!(l.c_beta_table.iter().all(|e| e.c_beta == 0.0));
    assert_eq!(l.decay, IncrementDecay::Trivial);
    assert!(l.converged);
    assert!(matches!(ladder_check(&st, &sp, 5.0, 0.0, 3), Err(Error::NoConvergence(_))));
}

// phi_hat(s) ~ s^-5 at infinity, so shell increments ~ r^(3 + 2s - 10)
#[test]
fn imq_ladder_is_algebraic() {
    let sp = RbfSpec::power(4, 1.0, -2.0, -0.5).unwrap();
    let st = stencil_for(&sp, None).unwrap();
    for s in [0.0, 1.0] {
        let l = ladder_check(&st, &sp, 2.0, s, 4).unwrap();
        match l.decay {
            IncrementDecay::Algebraic { exponent } => assert!((exponent - (2.0 * s - 7.0)).abs() < 0.3, "{exponent}"),
            other => panic!("{other:?}"),
        }
        assert!(l.converged);
    }
}

#[test]
fn ladder_preconditions() {
    let (st, sp) = tps21();
    assert!(ladder_check(&st, &sp, 4.0, 4.0, 3).is_err());
    assert!(ladder_check(&st, &sp, 4.0, 0.0, 1).is_err());
}

#[test]
fn ladder_json() {
    let (st, sp) = tps21();
    let l = ladder_check(&st, &sp, 4.0, 0.5, 2).unwrap();
    let v: serde_json::Value = serde_json::to_value(&l).unwrap();
    for key in ["k", "s_smooth", "c_beta_table", "partial_sum", "converged"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}
