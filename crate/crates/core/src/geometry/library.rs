use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet;

use super::chart::{Chart, ChartKind, Face, MetricProvider, Reduction};
use super::fields::AnalyticScalar;
use super::params::Params;

/// Mercator charts are truncated at `|t| ≤ MERCATOR_T_MAX`; the area
/// density `sech²t` makes the discarded tail smaller than 1e−16.
pub const MERCATOR_T_MAX: f64 = 20.0;
const MERCATOR_PANEL: f64 = 2.5;
const UNBOUNDED: f64 = 1.0e6;

/// Volume of the unit sphere `S^k`.
pub fn sphere_volume(k: usize) -> f64 {
    // vol(S^k) = 2π^{(k+1)/2} / Γ((k+1)/2)
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_volume(k - 2),
    }
}

/// Conformal factor `ω` on a polar sphere, written in the ambient
/// coordinates `y_k` of the unit sphere in E^{n+1}:
/// `ω = Σ linear[k]·y_k + Σ quadratic[k]·y_k²`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OmegaSpec {
    pub linear: Vec<f64>,
    pub quadratic: Vec<f64>,
}

impl OmegaSpec {
    pub fn new(linear: Vec<f64>, quadratic: Vec<f64>) -> Self {
        Self { linear, quadratic }
    }

    /// True when ω depends on `y_0 = cos θ₁` only.
    pub fn is_cohomogeneity_one(&self) -> bool {
        self.linear.iter().skip(1).chain(self.quadratic.iter().skip(1)).all(|&c| c == 0.0)
    }

    pub fn eval(&self, y: &[Jet]) -> Jet {
        let mut acc = y[0].lift(0.0);
        for (c, yk) in self.linear.iter().zip(y) {
            if *c != 0.0 {
                acc += &yk.scale(*c);
            }
        }
        for (c, yk) in self.quadratic.iter().zip(y) {
            if *c != 0.0 {
                acc += &(yk * yk).scale(*c);
            }
        }
        acc
    }

    pub fn as_scalar(&self) -> AnalyticScalar {
        let spec = self.clone();
        AnalyticScalar::new(format!("omega{:?}{:?}", self.linear, self.quadratic), move |x: &[Jet]| {
            spec.eval(&ambient_coordinates(x))
        })
    }
}

/// Ambient coordinates `y_0..y_n` of the unit sphere in polar coordinates
/// `(θ₁, …, θ_{n−1}, φ)`.
pub fn ambient_coordinates(x: &[Jet]) -> Vec<Jet> {
    let n = x.len();
    let mut y = Vec::with_capacity(n + 1);
    let mut prefix = x[0].lift(1.0);
    for k in 0..n {
        y.push(&prefix * &x[k].cos());
        prefix = &prefix * &x[k].sin();
    }
    // The last angle is φ: y_{n−1} = (Π sin θ) cos φ, y_n = (Π sin θ) sin φ.
    y.push(prefix);
    y
}

fn diagonal(entries: Vec<Jet>) -> Vec<Jet> {
    let n = entries.len();
    let zero = entries[0].lift(0.0);
    let mut g = vec![zero; n * n];
    for (k, e) in entries.into_iter().enumerate() {
        g[k * n + k] = e;
    }
    g
}

fn flat_metric() -> MetricProvider {
    Arc::new(|p: &[f64], order| {
        let n = p.len();
        Ok(diagonal((0..n).map(|_| Jet::constant(1.0, n, order)).collect()))
    })
}

/// Diagonal polar-sphere metric `g_kk = Π_{j<k} sin²θ_j`.
fn polar_sphere_metric(x: &[Jet]) -> Vec<Jet> {
    let n = x.len();
    let mut entries = Vec::with_capacity(n);
    let mut prefix = x[0].lift(1.0);
    for k in 0..n {
        entries.push(prefix.clone());
        if k + 1 < n {
            let s = x[k].sin();
            prefix = &prefix * &(&s * &s);
        }
    }
    diagonal(entries)
}

fn polar_sphere_provider() -> MetricProvider {
    Arc::new(|p: &[f64], order| Ok(polar_sphere_metric(&Jet::variables(p, order))))
}

pub fn flat_box(n: usize, lo: f64, hi: f64) -> Chart {
    let faces = (0..n)
        .flat_map(|k| [Face { axis: k, value: lo, orientation: -1.0 }, Face { axis: k, value: hi, orientation: 1.0 }])
        .collect();
    Chart::new(
        format!("flat_box(n={n}, [{lo}, {hi}])"),
        ChartKind::FlatCartesian,
        vec![(-UNBOUNDED, UNBOUNDED); n],
        vec![(lo, hi); n],
        flat_metric(),
    )
    .with_faces(faces)
}

/// Polar coordinates `(θ₁, …, θ_{n−1}, φ)` on the unit round sphere.
pub fn round_sphere_polar(n: usize) -> Chart {
    let mut domain = vec![(0.0, PI); n];
    domain[n - 1] = (-UNBOUNDED, UNBOUNDED);
    let mut region = vec![(0.0, PI); n];
    region[n - 1] = (0.0, 2.0 * PI);
    let mut slice_point = vec![PI / 2.0; n];
    slice_point[n - 1] = PI;
    Chart::new(format!("round_sphere_polar(n={n})"), ChartKind::SpherePolar, domain, region, polar_sphere_provider())
        .with_reduction(Some(Reduction { slice_point, slice_volume: sphere_volume(n - 1) }))
}

/// Stereographic coordinates with `g = 4(1+|x|²)^{-2} δ`, truncated to the
/// box `[−radius, radius]^n`.
pub fn round_sphere_stereographic(n: usize, radius: f64) -> Chart {
    let metric: MetricProvider = Arc::new(|p: &[f64], order| {
        let x = Jet::variables(p, order);
        let mut r2 = x[0].lift(1.0);
        for xi in &x {
            r2 += &(xi * xi);
        }
        let f = r2.powf(-2.0).scale(4.0);
        Ok(diagonal(vec![f; p.len()]))
    });
    Chart::new(
        format!("round_sphere_stereographic(n={n})"),
        ChartKind::SphereStereographic,
        vec![(-UNBOUNDED, UNBOUNDED); n],
        vec![(-radius, radius); n],
        metric,
    )
}

/// Round `S²` in Mercator coordinates `(t, φ)`: `g = sech²t (dt² + dφ²)`.
pub fn mercator_sphere() -> Chart {
    let metric: MetricProvider = Arc::new(|p: &[f64], order| {
        let x = Jet::variables(p, order);
        let cosh = (x[0].exp() + (-&x[0]).exp()).scale(0.5);
        let sech2 = (&cosh * &cosh).recip();
        Ok(diagonal(vec![sech2.clone(), sech2]))
    });
    let breaks = mercator_breaks();
    Chart::new(
        "mercator_sphere",
        ChartKind::Mercator,
        vec![(-2.0 * MERCATOR_T_MAX, 2.0 * MERCATOR_T_MAX), (-UNBOUNDED, UNBOUNDED)],
        vec![(-MERCATOR_T_MAX, MERCATOR_T_MAX), (0.0, 2.0 * PI)],
        metric,
    )
    .with_breaks(0, breaks)
    .with_reduction(Some(Reduction { slice_point: vec![0.0, PI], slice_volume: 2.0 * PI }))
}

pub(crate) fn mercator_breaks() -> Vec<f64> {
    let count = (2.0 * MERCATOR_T_MAX / MERCATOR_PANEL).round() as usize;
    (1..count).map(|k| -MERCATOR_T_MAX + k as f64 * MERCATOR_PANEL).collect()
}

/// Polar coordinates `(r, φ)` on the flat annulus `r₀ ≤ r ≤ r₁`; `r₀ = 0`
/// gives the disk, whose centre is a coordinate degeneracy rather than a face.
pub fn flat_annulus(r0: f64, r1: f64) -> Result<Chart> {
    if !(r0 >= 0.0 && r1 > r0) {
        return Err(Error::InvalidParams(format!("flat_annulus needs 0 ≤ r0 < r1, got ({r0}, {r1})")));
    }
    let metric: MetricProvider = Arc::new(|p: &[f64], order| {
        let x = Jet::variables(p, order);
        Ok(diagonal(vec![x[0].lift(1.0), &x[0] * &x[0]]))
    });
    let mut faces = Vec::new();
    if r0 > 0.0 {
        faces.push(Face { axis: 0, value: r0, orientation: -1.0 });
    }
    faces.push(Face { axis: 0, value: r1, orientation: 1.0 });
    Ok(Chart::new(
        format!("flat_annulus({r0}, {r1})"),
        ChartKind::FlatPolar,
        vec![(0.0, UNBOUNDED), (-UNBOUNDED, UNBOUNDED)],
        vec![(r0, r1), (0.0, 2.0 * PI)],
        metric,
    )
    .with_faces(faces)
    .with_reduction(Some(Reduction { slice_point: vec![0.0, PI], slice_volume: 2.0 * PI })))
}

/// Metric `e^{2ω} g`. The rescaled jets come from jet multiplication, which
/// is the Leibniz expansion of the product.
pub fn conformal_rescale(chart: &Chart, omega: &AnalyticScalar) -> Chart {
    let base = chart.provider();
    let w = omega.clone();
    let metric: MetricProvider = Arc::new(move |p: &[f64], order| {
        if order > w.max_order {
            return Err(Error::OrderUnsupported { requested: order, max: w.max_order });
        }
        let factor = w.eval(&Jet::variables(p, order)).scale(2.0).exp();
        Ok(base(p, order)?.iter().map(|gij| gij * &factor).collect())
    });
    chart.with_metric(format!("exp(2·{})·{}", omega.label, chart.label), metric)
}

pub fn perturbed_sphere(n: usize, omega: &OmegaSpec) -> Chart {
    let round = round_sphere_polar(n);
    let symmetric = omega.is_cohomogeneity_one();
    let mut chart = conformal_rescale(&round, &omega.as_scalar());
    chart.label = format!("perturbed_sphere(n={n}, linear={:?}, quadratic={:?})", omega.linear, omega.quadratic);
    if !symmetric {
        chart.reduction = None;
    }
    chart
}

/// Polar cap `θ₁ ≤ θ₀` of a (possibly perturbed) round sphere.
pub fn hemisphere_cap(n: usize, theta0: f64, omega: Option<&OmegaSpec>) -> Result<Chart> {
    if !(theta0 > 0.0 && theta0 < PI) {
        return Err(Error::InvalidParams(format!("cap angle must lie in (0, π), got {theta0}")));
    }
    let mut chart = match omega {
        Some(w) => perturbed_sphere(n, w),
        None => round_sphere_polar(n),
    };
    chart.label = format!("hemisphere_cap(n={n}, θ0={theta0}) of {}", chart.label);
    chart.region[0] = (0.0, theta0);
    chart.faces = vec![Face { axis: 0, value: theta0, orientation: 1.0 }];
    Ok(chart)
}

const FAMILIES: &[&str] = &[
    "flat_box",
    "round_sphere_polar",
    "round_sphere_stereographic",
    "perturbed_sphere",
    "mercator_sphere",
    "hemisphere_cap",
    "flat_annulus",
];

fn omega_from(params: &Params, n: usize) -> Result<Option<OmegaSpec>> {
    let linear = params.list("linear")?.unwrap_or_default();
    let quadratic = params.list("quadratic")?.unwrap_or_default();
    if linear.len() > n + 1 || quadratic.len() > n + 1 {
        return Err(Error::InvalidParams(format!("ω coefficient lists may have at most {} entries", n + 1)));
    }
    if linear.is_empty() && quadratic.is_empty() {
        return Ok(None);
    }
    Ok(Some(OmegaSpec::new(linear, quadratic)))
}

/// Builds a library chart by family name.
///
/// Families and parameters:
/// `flat_box {n, lo, hi}`, `round_sphere_polar {n}`,
/// `round_sphere_stereographic {n, radius}`,
/// `perturbed_sphere {n, linear, quadratic}`, `mercator_sphere {}`,
/// `hemisphere_cap {n, theta0, linear, quadratic}`, `flat_annulus {r0, r1}`.
pub fn build_manifold(name: &str, params: &Params) -> Result<Chart> {
    match name {
        "flat_box" => {
            params.check_keys(name, &["n", "lo", "hi"])?;
            let n = params.integer("n", 2, 1, 6)?;
            let lo = params.number_or("lo", 0.0)?;
            let hi = params.number_or("hi", 1.0)?;
            if !(hi > lo) {
                return Err(Error::InvalidParams(format!("flat_box needs lo < hi, got [{lo}, {hi}]")));
            }
            Ok(flat_box(n, lo, hi))
        }
        "round_sphere_polar" => {
            params.check_keys(name, &["n"])?;
            Ok(round_sphere_polar(params.integer("n", 2, 2, 6)?))
        }
        "round_sphere_stereographic" => {
            params.check_keys(name, &["n", "radius"])?;
            let radius = params.number_or("radius", 1.0)?;
            if !(radius > 0.0) {
                return Err(Error::InvalidParams("radius must be positive".into()));
            }
            Ok(round_sphere_stereographic(params.integer("n", 2, 2, 6)?, radius))
        }
        "perturbed_sphere" => {
            params.check_keys(name, &["n", "linear", "quadratic"])?;
            let n = params.integer("n", 2, 2, 6)?;
            let omega = omega_from(params, n)?.unwrap_or_default();
            Ok(perturbed_sphere(n, &omega))
        }
        "mercator_sphere" => {
            params.check_keys(name, &[])?;
            Ok(mercator_sphere())
        }
        "hemisphere_cap" => {
            params.check_keys(name, &["n", "theta0", "linear", "quadratic"])?;
            let n = params.integer("n", 2, 2, 6)?;
            let theta0 = params.number_or("theta0", PI / 2.0)?;
            hemisphere_cap(n, theta0, omega_from(params, n)?.as_ref())
        }
        "flat_annulus" => {
            params.check_keys(name, &["r0", "r1"])?;
            flat_annulus(params.number_or("r0", 1.0)?, params.number_or("r1", 2.0)?)
        }
        _ => Err(Error::UnknownName { kind: "manifold", name: format!("{name} (expected one of {FAMILIES:?})") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sphere_volumes() {
        assert_abs_diff_eq!(sphere_volume(2), 4.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_volume(3), 2.0 * PI * PI, epsilon = 1e-13);
        assert_abs_diff_eq!(sphere_volume(4), 8.0 * PI * PI / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn flat_box_is_identity_with_zero_derivatives() {
        let c = build_manifold("flat_box", &Params::new().with("n", 3.0)).unwrap();
        let j = c.metric_jet(&[0.3, 0.4, 0.5], 5).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(j.value(i, k), if i == k { 1.0 } else { 0.0 });
                assert!(j.g[i * 3 + k].coeffs()[1..].iter().all(|&c| c == 0.0));
            }
        }
    }

    #[test]
    fn polar_sphere_values() {
        let c = round_sphere_polar(2);
        let j = c.metric_jet(&[PI / 2.0, 1.0], 1).unwrap();
        assert_abs_diff_eq!(j.value(0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j.value(1, 1), 1.0, epsilon = 1e-15);
        let th = 0.7;
        let j = c.metric_jet(&[th, 1.0], 1).unwrap();
        assert_abs_diff_eq!(j.derivative(1, 1, &[0]), 2.0 * th.sin() * th.cos(), epsilon = 1e-15);
    }

    #[test]
    fn stereographic_origin() {
        let c = round_sphere_stereographic(2, 1.0);
        let j = c.metric_jet(&[0.0, 0.0], 2).unwrap();
        assert_eq!(j.values(), vec![4.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn ambient_coordinates_lie_on_sphere() {
        let x = Jet::variables(&[0.4, 1.1, 2.0, 5.0], 2);
        let y = ambient_coordinates(&x);
        let s: f64 = y.iter().map(|v| v.value() * v.value()).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn conformal_rescale_by_log_two() {
        let c = flat_box(2, 0.0, 1.0);
        let w = AnalyticScalar::constant(2f64.ln());
        let r = conformal_rescale(&c, &w);
        let v = r.metric_values(&[0.5, 0.5]).unwrap();
        for (a, b) in v.iter().zip([4.0, 0.0, 0.0, 4.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn rescale_roundtrip() {
        let round = round_sphere_polar(3);
        let w = OmegaSpec::new(vec![0.1, 0.05, -0.02], vec![0.03]).as_scalar();
        let neg = {
            let w2 = w.clone();
            AnalyticScalar::new("neg", move |x: &[Jet]| -w2.eval(x))
        };
        let back = conformal_rescale(&conformal_rescale(&round, &w), &neg);
        let p = [0.9, 1.3, 2.2];
        let a = round.metric_jet(&p, 5).unwrap();
        let b = back.metric_jet(&p, 5).unwrap();
        for (x, y) in a.g.iter().zip(&b.g) {
            for (c1, c2) in x.coeffs().iter().zip(y.coeffs()) {
                assert!((c1 - c2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors_for_bad_input() {
        assert!(matches!(build_manifold("flat_bx", &Params::new()), Err(Error::UnknownName { .. })));
        assert!(build_manifold("hemisphere_cap", &Params::new().with("theta0", 4.0)).is_err());
        let c = round_sphere_polar(2);
        assert!(matches!(c.metric_jet(&[0.0, 1.0], 1), Err(Error::OutOfDomain { .. })));
        assert!(matches!(c.metric_jet(&[1.0, 1.0], 9), Err(Error::OrderUnsupported { .. })));
    }
}
