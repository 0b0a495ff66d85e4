use super::*;
use crate::lagrange::{stencil_for, StencilEntry, Symmetry};
use proptest::prelude::*;

fn tps21() -> (Stencil, RbfSpec) {
    let sp = RbfSpec::tps(2, 1.0, 1).unwrap();
    (stencil_for(&sp, None).unwrap(), sp)
}

fn gauss_box(h: f64, half: i64) -> GridFunction {
    GridFunction::from_fn(h, vec![-half; 2], vec![half; 2], &|x| (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap()
}

#[test]
fn grid_indexing() {
    let g = GridFunction::from_fn(0.5, vec![-1, 2], vec![1, 4], &|x| x[0] + 10.0 * x[1]).unwrap();
    assert_eq!(g.samples.len(), 9);
    assert_eq!(g.point(0), vec![-1, 2]);
    assert_eq!(g.point(1), vec![-1, 3]);
    assert_eq!(g.get(&[1, 4]), Some(0.5 + 20.0));
    assert_eq!(g.get(&[2, 4]), None);
    assert_eq!(g.shell_sup(), 20.5);
    assert!(GridFunction::new(0.5, vec![0], vec![1], vec![1.0]).is_err());
    assert!(GridFunction::new(-1.0, vec![0], vec![0], vec![1.0]).is_err());
}

#[test]
fn psi_examples() {
    let (st, sp) = tps21();
    let direct: f64 = st
        .entries
        .iter()
        .map(|e| e.mu * eval_rbf(&sp, dist(&[0.0, 0.0], &e.offset)).unwrap())
        .sum();
    assert_eq!(eval_psi(&st, &sp, &[0.0, 0.0]).unwrap(), direct);
    let a = eval_psi(&st, &sp, &[0.3, -1.7]).unwrap();
    let b = eval_psi(&st, &sp, &[-0.3, 1.7]).unwrap();
    assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    // |Psi(R e1)| R^6 stays bounded
    let scaled: Vec<f64> =
        [5.0, 10.0, 20.0].iter().map(|&r| eval_psi(&st, &sp, &[r, 0.0]).unwrap().abs() * r.powi(6)).collect();
    assert!(scaled.iter().all(|v| *v > 1.0 && *v < 100.0), "{scaled:?}");
}

#[test]
fn singular_evaluation() {
    let sp = RbfSpec::power(3, 1.0, -2.0, 0.5).unwrap();
    let st = Stencil {
        n: 3,
        support_radius: 1,
        entries: vec![StencilEntry { offset: vec![0, 0, 0], mu: 1.0 }],
        singularity_order: 2,
        reproduction_degree: 1,
        symmetry: Symmetry::Hypercubic,
        product_order: 2.0,
    };
    assert!(matches!(eval_psi(&st, &sp, &[0.0; 3]), Err(Error::SingularEvaluation(_))));
    assert!(eval_psi(&st, &sp, &[0.5, 0.0, 0.0]).is_ok());
    // finite at the origin for the inverse multiquadric
    let sp = RbfSpec::power(4, 1.0, -2.0, -0.5).unwrap();
    let st = stencil_for(&sp, None).unwrap();
    assert!(eval_psi(&st, &sp, &[0.0; 4]).unwrap().is_finite());
}

#[test]
fn constant_is_reproduced() {
    let (st, sp) = tps21();
    let h = 0.125;
    let data = GridFunction::from_fn(h, vec![-96; 2], vec![96; 2], &|_| 1.0).unwrap();
    let qi = QuasiInterpolant::new(&st, &sp, &data).unwrap();
    for x in halton_points(2, 6, 0.5) {
        let v = qi.eval(&x, 1e-6).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }
}

#[test]
fn insufficient_margin() {
    let (st, sp) = tps21();
    let data = GridFunction::from_fn(0.125, vec![-8; 2], vec![8; 2], &|_| 1.0).unwrap();
    assert!(matches!(
        quasi_interpolate(&st, &sp, &data, &[0.0, 0.0], 1e-6),
        Err(Error::InsufficientMargin(_))
    ));
    assert!(matches!(
        quasi_interpolate(&st, &sp, &data, &[5.0, 0.0], 1.0),
        Err(Error::InsufficientMargin(_))
    ));
}

#[test]
fn shift_invariance() {
    let (st, sp) = tps21();
    let h = 0.25;
    let half = 24;
    let j = [3i64, -2];
    let f = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp();
    let data = gauss_box(h, half);
    let shifted = GridFunction::from_fn(h, vec![-half; 2], vec![half; 2], &|x| {
        f(&[x[0] - j[0] as f64 * h, x[1] - j[1] as f64 * h])
    })
    .unwrap();
    let x = [0.31, 0.12];
    let a = quasi_interpolate(&st, &sp, &shifted, &x, 1e-8).unwrap();
    let b = quasi_interpolate(&st, &sp, &data, &[x[0] - j[0] as f64 * h, x[1] - j[1] as f64 * h], 1e-8).unwrap();
    assert!((a - b).abs() < 1e-8, "{a} {b}");
}

#[test]
fn truncation_budget() {
    let (st, sp) = tps21();
    let h = 0.25;
    let tol = 1e-8;
    let x = [0.2, -0.4];
    let a = quasi_interpolate(&st, &sp, &gauss_box(h, 24), &x, tol).unwrap();
    let b = quasi_interpolate(&st, &sp, &gauss_box(h, 48), &x, tol).unwrap();
    assert!((a - b).abs() < tol, "{}", (a - b).abs());
}

#[test]
fn cubic_reproduction_and_quartic_failure() {
    let (st, sp) = tps21();
    let res = reproduction_test(&st, &sp, 4, 0.125, 48).unwrap();
    assert_eq!(res.len(), 15);
    let worst_cubic = res.iter().filter(|r| r.exponents.iter().sum::<u32>() <= 3).fold(0.0f64, |m, r| m.max(r.max_residual));
    assert!(worst_cubic < 1e-5, "{worst_cubic}");
    let quartic = res.iter().find(|r| r.exponents == vec![4, 0]).unwrap();
    assert!(quartic.max_residual > 100.0 * worst_cubic, "{quartic:?}");
    assert!(reproduction_test(&st, &sp, 1, 0.125, 4).is_err());
}

#[test]
fn halton_and_monomials() {
    let p = halton_points(3, 50, 0.5);
    assert_eq!(p, halton_points(3, 50, 0.5));
    assert!(p.iter().flatten().all(|v| v.abs() < 0.5));
    assert_eq!(p[0], vec![0.0, 0.5 * (2.0 / 3.0 - 1.0), 0.5 * (0.4 - 1.0)]);
    assert_eq!(monomials(2, 3).len(), 10);
    assert_eq!(monomials(4, 1).len(), 5);
    assert_eq!(monomials(2, 1)[0], vec![0, 0]);
}

#[test]
fn window_shape() {
    assert_eq!(window(0.3), 1.0);
    assert_eq!(window(1.2), 0.0);
    assert!((window(0.75) - 0.5).abs() < 1e-15);
    assert!((window(0.6) + window(0.9) - 1.0).abs() < 1e-15);
}

#[test]
fn catalog() {
    for name in CATALOG {
        let f = TestFunction::from_name(name).unwrap();
        assert_eq!(f.name(), name);
    }
    let g = TestFunction::from_name("gaussian-bump:0.5").unwrap();
    assert_eq!(g, TestFunction::GaussianBump { width: 0.5 });
    assert!((g.eval(&[0.5, 0.0]) - (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(TestFunction::Runge.eval(&[0.2]), 0.5);
    assert!(TestFunction::from_name("sinc").is_err());
    assert!(TestFunction::from_name("gaussian-bump:-1").is_err());
}

#[test]
fn study_rejects_bad_h() {
    let (st, sp) = tps21();
    let f = TestFunction::GaussianBump { width: 1.0 };
    let o = StudyOptions::default();
    assert!(convergence_study(&st, &sp, &f, &[0.25, 0.125], &o).is_err());
    assert!(convergence_study(&st, &sp, &f, &[0.125, 0.25, 0.0625], &o).is_err());
}

#[test]
fn tps_study_targets() {
    let (st, _) = tps21();
    assert_eq!(target_order(&st), (4.0, true));
    let st = stencil_for(&RbfSpec::tps(2, 1.0, 2).unwrap(), None).unwrap();
    assert_eq!(target_order(&st), (6.0, false));
    let st = stencil_for(&RbfSpec::power(4, 1.0, -2.0, -0.5).unwrap(), None).unwrap();
    assert_eq!(target_order(&st), (2.0, true));
    let st = stencil_for(&RbfSpec::power(3, 1.0, -1.0, -0.5).unwrap(), None).unwrap();
    assert_eq!(target_order(&st), (0.0, false));
}

#[test]
fn fits_skip_unresolved_errors() {
    let (st, _) = tps21();
    let hs = [0.5, 0.25, 0.125, 0.0625];
    let es = [1e-2, 1e-2 / 64.0, 1e-2 / 4096.0, 1e-7];
    let r = fit_report(&st, &hs, &es, &[1e-12, 1e-12, 1e-12, 1e-7]).unwrap();
    assert_eq!(r.resolved, vec![true, true, true, false]);
    assert_eq!(r.fit_points, 3);
    assert!((r.fitted_slope - 6.0).abs() < 1e-12);
    assert!(fit_report(&st, &hs, &es, &[1.0; 4]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fits_recover_synthetic_rates(p in 1.0f64..8.0, c in 0.01f64..100.0, with_log: bool) {
        let (st, _) = tps21();
        let hs = [0.25, 0.125, 0.0625, 0.03125];
        let es: Vec<f64> = hs.iter().map(|h: &f64| c * h.powf(p) * if with_log { (1.0 / h).ln() } else { 1.0 }).collect();
        let r = fit_report(&st, &hs, &es, &[0.0; 4]).unwrap();
        if with_log {
            prop_assert!((r.log_corrected_slope - p).abs() < 1e-9);
        } else {
            prop_assert!((r.fitted_slope - p).abs() < 1e-9);
            prop_assert_eq!(r.fit_points, 4);
        }
    }

    #[test]
    fn halton_points_stay_inside(n in 1usize..6, count in 1usize..64, a in 0.1f64..3.0) {
        for x in halton_points(n, count, a) {
            prop_assert_eq!(x.len(), n);
            prop_assert!(x.iter().all(|v| v.abs() < a));
        }
    }
}
