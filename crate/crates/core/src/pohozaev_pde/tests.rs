use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::identities::Verdict;

/// First sign change of `u(1; α)` along a geometric scan of `α`.
fn first_bracket(f: &Nonlinearity, lambda: f64) -> (f64, f64) {
    let end = |a: f64| shoot(3, f, lambda, a, OdeOptions::default()).unwrap().last().unwrap().u;
    let mut a = 0.5;
    while end(a * 1.25) > 0.0 {
        a *= 1.25;
    }
    (a, a * 1.25)
}

fn cubic(n: usize) -> RadialSolution {
    radial_solve(n, &Nonlinearity::Power(3.0), 1.0, (1.0, 8.0), OdeOptions::default()).unwrap()
}

#[test]
fn first_linear_eigenpair_is_pi_squared() {
    let sol = radial_eigenpair(3, 1.0, (5.0, 15.0), OdeOptions::default()).unwrap();
    assert_abs_diff_eq!(sol.lambda, PI * PI, epsilon = 1e-8);
    for r in [0.1, 0.37, 0.5, 0.9] {
        let exact = (PI * r).sin() / (PI * r);
        assert_abs_diff_eq!(sol.eval(r).0, exact, epsilon = 1e-9);
    }
    let report = pohozaev_check(&sol, 1e-6);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn cubic_solution_is_positive_and_decreasing() {
    let sol = cubic(3);
    assert!(sol.boundary_residual < BOUNDARY_TOL);
    assert!(sol.is_decreasing());
    assert!(sol.profile.iter().all(|k| k.u > -BOUNDARY_TOL));
    // u(r) = α v(α r) with v the Lane-Emden index-3 profile, whose first zero is ξ₁ ≈ 6.8968.
    assert_abs_diff_eq!(sol.alpha, 6.896_848_619_376_96, epsilon = 1e-6);
    assert_abs_diff_eq!(sol.eval(0.0).1, 0.0);
}

#[test]
fn pohozaev_identity_for_cubic() {
    let report = pohozaev_check(&cubic(3), 1e-4);
    assert!(report.passed(), "{report:?}");
    assert!(report.relative < 1e-8, "{report:?}");
    assert!(report.rhs > 0.0);
}

#[test]
fn residual_shrinks_with_ode_tolerance() {
    let residual = |rtol: f64| {
        let sol = radial_solve(3, &Nonlinearity::Power(3.0), 1.0, (1.0, 8.0), OdeOptions::with_rtol(rtol)).unwrap();
        pohozaev_check(&sol, 1e-4).relative
    };
    let coarse = residual(1e-5);
    let fine = residual(1e-9);
    assert!(fine < coarse || fine < 1e-8, "{coarse} {fine}");
}

#[test]
fn trivial_branch() {
    let sol = radial_solve(3, &Nonlinearity::Power(3.0), 1.0, (0.0, 8.0), OdeOptions::default()).unwrap();
    assert_eq!(sol.alpha, 0.0);
    assert_eq!(sol.boundary_residual, 0.0);
    let report = pohozaev_check(&sol, 1e-4);
    assert_eq!((report.lhs, report.rhs), (0.0, 0.0));
    assert_eq!(report.verdict, Verdict::Pass);
}

#[test]
fn energy_identity() {
    for sol in [cubic(3), cubic(2), radial_eigenpair(3, 1.0, (5.0, 15.0), OdeOptions::default()).unwrap()] {
        let (grad, work) = sol.energy();
        assert!((grad - work).abs() < 1e-6 * grad, "{grad} {work}");
    }
}

#[test]
fn tabulated_nonlinearity_matches_power_on_knots() {
    let u: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.25).collect();
    let f: Vec<f64> = u.iter().map(|x| x * x * x).collect();
    let table = Nonlinearity::table(u, f).unwrap();
    assert_abs_diff_eq!(table.f(2.0), 8.0, epsilon = 1e-14);
    // trapezoid error h²/12 · [f′]
    assert_abs_diff_eq!(table.primitive(-1.0), 0.25 + 0.0625 / 12.0 * 3.0, epsilon = 1e-14);
    assert_abs_diff_eq!(table.primitive(1.0), table.primitive(-1.0), epsilon = 1e-14);
    let sol = radial_solve(3, &table, 1.0, (1.0, 8.0), OdeOptions::default()).unwrap();
    assert!((sol.alpha - cubic(3).alpha).abs() < 0.05, "{}", sol.alpha);
    assert!(pohozaev_check(&sol, 1e-4).passed());
}

#[test]
fn errors() {
    let f = Nonlinearity::Power(3.0);
    assert!(matches!(radial_solve(3, &f, 1.0, (1.0, 2.0), OdeOptions::default()), Err(Error::NoSignChange(..))));
    assert!(radial_solve(3, &f, -1.0, (1.0, 8.0), OdeOptions::default()).is_err());
    assert!(radial_solve(3, &Nonlinearity::Power(0.5), 1.0, (1.0, 8.0), OdeOptions::default()).is_err());
    assert!(Nonlinearity::table(vec![0.5, 1.0], vec![1.0, 3.0]).is_err());
    assert!(Nonlinearity::table(vec![0.0, 0.0], vec![0.0, 2.0]).is_err());
    // u″ = u³ from u(0) = 10 blows up near r ≈ 0.14
    let blow = shoot(1, &Nonlinearity::Power(3.0), -1.0, 10.0, OdeOptions::default());
    assert!(matches!(blow, Err(Error::BlowUp(_))), "{blow:?}");
}

#[test]
fn critical_coefficient_examples() {
    assert_eq!(critical_coefficient(3, 5.0), 0.0);
    assert_eq!(critical_coefficient(4, 3.0), 0.0);
    assert_eq!(critical_coefficient(3, 3.0), 0.25);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficient_vanishes_at_critical_exponent(n in 3usize..12) {
        let p = (n as f64 + 2.0) / (n as f64 - 2.0);
        prop_assert!(critical_coefficient(n, p).abs() < 1e-14);
        prop_assert!(critical_coefficient(n, p - 0.1) > 0.0);
        prop_assert!(critical_coefficient(n, p + 0.1) < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn energy_identity_for_subcritical_powers(p in 2.0f64..4.5, lambda in 0.5f64..2.0) {
        let sol = radial_solve(3, &Nonlinearity::Power(p), lambda, first_bracket(&Nonlinearity::Power(p), lambda), OdeOptions::default()).unwrap();
        let (grad, work) = sol.energy();
        prop_assert!((grad - work).abs() < 1e-6 * grad);
        prop_assert!(pohozaev_check(&sol, 1e-4).passed());
    }
}
