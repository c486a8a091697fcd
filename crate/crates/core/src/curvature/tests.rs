use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::geometry::library::{flat_annulus, flat_box, perturbed_sphere, round_sphere_polar, round_sphere_stereographic};
use crate::geometry::vector_fields::{euler_cartesian, generic_cartesian, polar_boost, rotation_angle, special_conformal};
use crate::geometry::{
    conformal_rescale, sample_points, AnalyticScalar, Chart, ChartKind, MetricProvider, OmegaSpec, ScalarField,
};
use crate::jet::Jet;

fn suite(chart: &Chart, p: &[f64], order: usize) -> CurvatureSuite {
    curvature_suite(&chart.metric_jet(p, order).unwrap()).unwrap()
}

/// A non-conformally-flat metric on a 4-box.
fn lumpy_chart(n: usize) -> Chart {
    let metric: MetricProvider = Arc::new(move |p: &[f64], order| {
        let x = Jet::variables(p, order);
        let mut g = vec![x[0].lift(0.0); n * n];
        for k in 0..n {
            let bump = &x[(k + 1) % n] * &x[(k + 1) % n];
            g[k * n + k] = (&bump * 0.3) + x[k].sin().scale(0.1) + 1.0;
        }
        let off = (&x[0] * &x[n - 1]).scale(0.15);
        g[1] = off.clone();
        g[n] = off;
        Ok(g)
    });
    Chart::new("lumpy", ChartKind::FlatCartesian, vec![(-2.0, 2.0); n], vec![(-0.5, 0.5); n], metric)
}

fn omega_mixed(n: usize) -> OmegaSpec {
    let mut linear = vec![0.0; n + 1];
    linear[0] = 0.3;
    linear[1] = -0.2;
    let mut quadratic = vec![0.0; n + 1];
    quadratic[n] = 0.25;
    OmegaSpec::new(linear, quadratic)
}

#[test]
fn round_sphere_constants() {
    for n in 2..=5 {
        let chart = round_sphere_polar(n);
        for p in sample_points(&chart, 3, 0.1, n as u64) {
            let s = suite(&chart, &p, 2);
            let nn = n as f64;
            assert_abs_diff_eq!(s.sc.value(), nn * (nn - 1.0), epsilon = 1e-11);
            assert_abs_diff_eq!(s.j.value(), nn / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(riemann_norm_sq(&s).value(), 2.0 * nn * (nn - 1.0), epsilon = 1e-10);
            assert_abs_diff_eq!(weyl_norm_sq(&s).value(), 0.0, epsilon = 1e-10);
            for ((pij, rij), gij) in s.schouten().iter().zip(&s.ric).zip(&s.g) {
                assert_abs_diff_eq!(pij.value(), 0.5 * gij.value(), epsilon = 1e-12);
                assert_abs_diff_eq!(rij.value(), (nn - 1.0) * gij.value(), epsilon = 1e-11);
            }
            let binom = nn * (nn - 1.0) / 2.0;
            assert_abs_diff_eq!(sigma_k(&s, 2).unwrap().value(), binom / 4.0, epsilon = 1e-11);
            if n >= 4 {
                let s4 = gauss_bonnet_s2k(&s, 2).unwrap().value();
                assert_abs_diff_eq!(s4, nn * (nn - 1.0) * (nn - 2.0) * (nn - 3.0), epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn stereographic_agrees_with_polar() {
    let chart = round_sphere_stereographic(3, 1.0);
    for p in sample_points(&chart, 4, 0.0, 7) {
        let s = suite(&chart, &p, 2);
        assert_abs_diff_eq!(s.sc.value(), 6.0, epsilon = 1e-11);
    }
}

#[test]
fn flat_charts_have_no_curvature() {
    let charts = [flat_box(3, 0.0, 1.0), flat_annulus(0.5, 2.0).unwrap()];
    for chart in &charts {
        for p in sample_points(chart, 3, 0.1, 3) {
            let s = suite(chart, &p, 3);
            assert!(s.riemann().iter().all(|r| r.max_abs() < 1e-12));
            assert!(s.ric.iter().all(|r| r.max_abs() < 1e-12));
        }
    }
}

#[test]
fn q4_on_round_spheres() {
    let expected = [(3, 15.0 / 8.0), (4, 6.0), (5, 105.0 / 8.0)];
    for (n, q) in expected {
        let chart = round_sphere_polar(n);
        let p: Vec<f64> = (0..n).map(|k| 0.7 + 0.3 * k as f64).collect();
        let s = suite(&chart, &p, 4);
        assert_abs_diff_eq!(q4(&s).unwrap().value(), q, epsilon = 1e-9);
        let field = CurvatureScalar::new(ScalarKind::Q4).value(&chart, &p).unwrap();
        assert_abs_diff_eq!(field, q, epsilon = 1e-9);
    }
}

#[test]
fn q4_needs_fourth_order_metric() {
    let chart = round_sphere_polar(4);
    let s = suite(&chart, &[1.0, 1.0, 1.0, 1.0], 3);
    assert!(q4(&s).is_err());
}

#[test]
fn lanczos_is_pure_trace_on_round_spheres() {
    for n in [4usize, 5] {
        let chart = round_sphere_polar(n);
        let p: Vec<f64> = (0..n).map(|k| 0.9 + 0.2 * k as f64).collect();
        let s = suite(&chart, &p, 2);
        let h = lanczos_tensor(&s);
        let nn = n as f64;
        let c = -(nn - 1.0) * (nn - 2.0) * (nn - 3.0) * (nn - 4.0) / 2.0;
        for (hij, gij) in h.iter().zip(&s.g) {
            assert_abs_diff_eq!(hij.value(), c * gij.value(), epsilon = 1e-9);
        }
    }
}

#[test]
fn riemann_symmetries_and_contractions() {
    let n = 4;
    let chart = lumpy_chart(n);
    let s = suite(&chart, &[0.1, -0.2, 0.3, 0.05], 2);
    let r = CurvatureSuite::values(s.riemann());
    let at = |a: usize, b: usize, c: usize, d: usize| r[((a * n + b) * n + c) * n + d];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    assert_abs_diff_eq!(at(a, b, c, d), -at(b, a, c, d), epsilon = 1e-12);
                    assert_abs_diff_eq!(at(a, b, c, d), at(c, d, a, b), epsilon = 1e-12);
                    let bianchi = at(a, b, c, d) + at(a, c, d, b) + at(a, d, b, c);
                    assert_abs_diff_eq!(bianchi, 0.0, epsilon = 1e-12);
                }
            }
        }
    }
    let ginv = CurvatureSuite::values(&s.ginv);
    let g = CurvatureSuite::values(&s.g);
    let ric = CurvatureSuite::values(&s.ric);
    for b in 0..n {
        for d in 0..n {
            let contracted: f64 =
                (0..n).flat_map(|a| (0..n).map(move |c| (a, c))).map(|(a, c)| ginv[a * n + c] * at(c, b, a, d)).sum();
            assert_abs_diff_eq!(contracted, ric[b * n + d], epsilon = 1e-12);
        }
    }
    let p = CurvatureSuite::values(s.schouten());
    let j = s.j.value();
    for k in 0..n * n {
        assert_abs_diff_eq!(ric[k], (n as f64 - 2.0) * p[k] + j * g[k], epsilon = 1e-12);
    }
    assert_abs_diff_eq!(s.sc.value(), 2.0 * (n as f64 - 1.0) * j, epsilon = 1e-12);
    let w = CurvatureSuite::values(&s.weyl());
    for b in 0..n {
        for d in 0..n {
            let tr: f64 = (0..n)
                .flat_map(|a| (0..n).map(move |c| (a, c)))
                .map(|(a, c)| ginv[a * n + c] * w[((a * n + b) * n + c) * n + d])
                .sum();
            assert_abs_diff_eq!(tr, 0.0, epsilon = 1e-12);
        }
    }
}

/// Round-sphere Laplacian in polar coordinates `(θ, φ)` by central differences.
fn polar_laplacian_s2(f: &dyn Fn(f64, f64) -> f64, th: f64, ph: f64, h: f64) -> f64 {
    let d_th = |t: f64| (f(t + h, ph) - f(t - h, ph)) / (2.0 * h);
    let radial = ((th + h / 2.0).sin() * d_th(th + h / 2.0) - (th - h / 2.0).sin() * d_th(th - h / 2.0)) / h / th.sin();
    let angular = (f(th, ph + h) - 2.0 * f(th, ph) + f(th, ph - h)) / (h * h) / th.sin().powi(2);
    radial + angular
}

#[test]
fn two_dimensional_conformal_law() {
    let omega = omega_mixed(2);
    let chart = perturbed_sphere(2, &omega);
    let w = |th: f64, ph: f64| {
        let y = crate::geometry::library::ambient_coordinates(&Jet::variables(&[th, ph], 0));
        omega.eval(&y).value()
    };
    for p in sample_points(&chart, 5, 0.15, 11) {
        let s = suite(&chart, &p, 2);
        // K = e^{−2ω}(1 − Δω), Sc = 2K
        let lap = polar_laplacian_s2(&w, p[0], p[1], 1e-3);
        let expected = 2.0 * (-2.0 * w(p[0], p[1])).exp() * (1.0 - lap);
        assert_abs_diff_eq!(s.sc.value(), expected, epsilon = 1e-5);
    }
}

#[test]
fn j_transforms_conformally_on_flat_space() {
    // ĝ = e^{2ω}δ: Ĵ = e^{−2ω}(−Δω − (n−2)/2 |dω|²)
    let n = 3;
    let omega = AnalyticScalar::new("w", |x: &[Jet]| (&x[0] * &x[1]).scale(0.3) + x[2].sin().scale(0.2));
    let chart = conformal_rescale(&flat_box(n, -1.0, 1.0), &omega);
    let p = [0.2, -0.4, 0.6];
    let s = suite(&chart, &p, 2);
    let wj = omega.eval(&Jet::variables(&p, 2));
    let lap: f64 = (0..n).map(|k| wj.partial(&[k, k])).sum();
    let grad2: f64 = (0..n).map(|k| wj.partial(&[k]).powi(2)).sum();
    let expected = (-2.0 * wj.value()).exp() * (-lap - 0.5 * (n as f64 - 2.0) * grad2);
    assert_abs_diff_eq!(s.j.value(), expected, epsilon = 1e-12);
}

#[test]
fn weyl_norm_is_conformally_covariant() {
    let n = 4;
    let base = lumpy_chart(n);
    let omega = AnalyticScalar::new("w", |x: &[Jet]| (&x[0] * &x[2]).scale(0.4) + x[1].cos().scale(0.3));
    let rescaled = conformal_rescale(&base, &omega);
    let p = [0.1, 0.25, -0.3, 0.2];
    let w0 = weyl_norm_sq(&suite(&base, &p, 2)).value();
    let w1 = weyl_norm_sq(&suite(&rescaled, &p, 2)).value();
    let e = omega.eval(&Jet::variables(&p, 0)).value();
    assert!(w0.abs() > 1e-4);
    assert_abs_diff_eq!(w1, (-4.0 * e).exp() * w0, epsilon = 1e-10 * w0.abs().max(1.0));
}

#[test]
fn gauss_bonnet_matches_determinant_expansion() {
    for n in [4usize, 5] {
        let chart = lumpy_chart(n);
        let p: Vec<f64> = (0..n).map(|k| 0.1 * k as f64 - 0.15).collect();
        let s = suite(&chart, &p, 2);
        let closed = gauss_bonnet_s2k(&s, 2).unwrap().value();
        let brute = gauss_bonnet_determinant(&s, 2).unwrap();
        assert_abs_diff_eq!(closed, brute, epsilon = 1e-10 * closed.abs().max(1.0));
        let sc = gauss_bonnet_determinant(&s, 1).unwrap();
        assert_abs_diff_eq!(sc, s.sc.value(), epsilon = 1e-11);
    }
}

#[test]
fn gauss_bonnet_vanishes_below_dimension_four() {
    let chart = lumpy_chart(3);
    let s = suite(&chart, &[0.1, 0.2, 0.3], 2);
    let raw = &s.sc * &s.sc - ricci_norm_sq(&s).scale(4.0) + riemann_norm_sq(&s);
    assert!(raw.max_abs() < 1e-10);
    assert!(gauss_bonnet_s2k(&s, 2).is_err());
}

#[test]
fn einstein_and_ricci_are_divergence_free() {
    let chart = perturbed_sphere(3, &omega_mixed(3));
    let einstein = CurvatureTensor::new(TensorKind::Einstein, 1.0);
    for p in sample_points(&chart, 3, 0.2, 5) {
        let d = cov_divergence(&einstein, &chart, &p, DivergenceMethod::Analytic).unwrap();
        assert!(d.iter().all(|x| x.abs() < 1e-10), "{d:?}");
        let fd = cov_divergence(&einstein, &chart, &p, DivergenceMethod::FiniteDifference(1e-3)).unwrap();
        assert!(fd.iter().all(|x| x.abs() < 1e-7), "{fd:?}");
    }
    let ricci = CurvatureTensor::new(TensorKind::Ricci, 1.0);
    let p = [1.0, 1.2, 0.4];
    let d = cov_divergence(&ricci, &chart, &p, DivergenceMethod::Analytic).unwrap();
    let dsc = CurvatureScalar::new(ScalarKind::Scalar).jet(&chart, &p, 1).unwrap();
    for (b, db) in d.iter().enumerate() {
        assert_abs_diff_eq!(*db, 0.5 * dsc.partial(&[b]), epsilon = 1e-10);
    }
}

#[test]
fn killing_and_conformal_fields() {
    let sphere = round_sphere_polar(3);
    let samples = sample_points(&sphere, 6, 0.1, 21);
    assert!(killing_residual(&rotation_angle(3), &sphere, &samples).unwrap() < 1e-12);
    assert!(killing_residual(&polar_boost(), &sphere, &samples).unwrap() > 0.1);
    assert!(conformal_killing_residual(&polar_boost(), &sphere, &samples).unwrap() < 1e-12);
    for p in &samples {
        assert_abs_diff_eq!(divergence(&polar_boost(), &sphere, p).unwrap(), -3.0 * p[0].cos(), epsilon = 1e-12);
    }

    let flat = flat_box(3, -1.0, 1.0);
    let samples = sample_points(&flat, 6, 0.0, 22);
    assert!(conformal_killing_residual(&special_conformal(vec![0.3, -1.0, 0.5]), &flat, &samples).unwrap() < 1e-12);
    assert!(conformal_killing_residual(&euler_cartesian(), &flat, &samples).unwrap() < 1e-12);
    assert!(conformal_killing_residual(&generic_cartesian(), &flat, &samples).unwrap() > 1e-2);
}

#[test]
fn lie_metric_formulas_agree() {
    let chart = perturbed_sphere(3, &omega_mixed(3));
    let x = polar_boost();
    for p in sample_points(&chart, 4, 0.1, 8) {
        let mj = chart.metric_jet(&p, 2).unwrap();
        let a = lie_metric(&x, &mj);
        let b = lie_metric_covariant(&x, &mj);
        for (u, v) in a.iter().zip(&b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
        let g = mj.values();
        let tf = trace_free_part(&a, &g);
        let ginv = mj.inverse_values();
        assert_abs_diff_eq!(crate::linalg::trace(&tf, &ginv, 3), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn lie_scalar_matches_finite_differences() {
    let chart = perturbed_sphere(3, &omega_mixed(3));
    let sc = CurvatureScalar::new(ScalarKind::Scalar);
    let x = polar_boost();
    let p = [1.1, 0.8, 2.0];
    let a = lie_scalar(&x, &sc, &chart, &p).unwrap();
    let b = lie_scalar_fd(&x, &sc, &chart, &p, 1e-3).unwrap();
    assert_abs_diff_eq!(a, b, epsilon = 1e-8);
    let via_field = LieDerivative { field: Arc::new(x.clone()), scalar: Arc::new(sc) }.value(&chart, &p).unwrap();
    assert_abs_diff_eq!(a, via_field, epsilon = 1e-12);
}

#[test]
fn library_metric_jets_match_finite_differences() {
    let charts = [
        round_sphere_polar(3),
        round_sphere_stereographic(3, 1.0),
        perturbed_sphere(4, &omega_mixed(4)),
        crate::geometry::library::mercator_sphere(),
        flat_annulus(0.5, 1.5).unwrap(),
    ];
    for chart in &charts {
        for p in sample_points(chart, 100, 0.05, 99) {
            let err = chart.finite_difference_discrepancy(&p, 1e-3).unwrap();
            assert!(err < 1e-7, "{}: {err}", chart.label);
        }
    }
}

#[test]
fn trace_of_metric_is_dimension() {
    let chart = round_sphere_polar(3);
    let tr = TraceOf(Arc::new(CurvatureTensor::new(TensorKind::Metric, 1.0)));
    assert_abs_diff_eq!(tr.value(&chart, &[1.0, 1.0, 1.0]).unwrap(), 3.0, epsilon = 1e-14);
    let tr_ric = TraceOf(Arc::new(CurvatureTensor::new(TensorKind::TraceFreeRicci, 1.0)));
    let pert = perturbed_sphere(3, &omega_mixed(3));
    assert_abs_diff_eq!(tr_ric.value(&pert, &[1.0, 0.5, 1.0]).unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn weighted_divergence_of_boost() {
    let sphere = round_sphere_polar(2);
    let field = Weighted { field: Arc::new(polar_boost()), scalar: Arc::new(AnalyticScalar::constant(2.0)) };
    let p = [PI / 3.0, 0.2];
    assert_abs_diff_eq!(field.value(&sphere, &p).unwrap(), -2.0 * 2.0 * (PI / 3.0).cos(), epsilon = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riemann_pair_symmetry_under_random_conformal_factor(a in -0.5f64..0.5, b in -0.5f64..0.5, c in -0.5f64..0.5) {
        let omega = OmegaSpec::new(vec![a, b, 0.0, 0.0], vec![0.0, 0.0, 0.0, c]);
        let chart = perturbed_sphere(3, &omega);
        let s = suite(&chart, &[1.0, 1.3, 0.7], 2);
        let r = CurvatureSuite::values(s.riemann());
        let n = 3;
        for a in 0..n { for b in 0..n { for c in 0..n { for d in 0..n {
            let x = r[((a * n + b) * n + c) * n + d];
            let y = r[((c * n + d) * n + a) * n + b];
            prop_assert!((x - y).abs() < 1e-10);
        }}}}
        // Three-dimensional Weyl tensor vanishes identically.
        prop_assert!(weyl_norm_sq(&s).value().abs() < 1e-9);
    }
}
