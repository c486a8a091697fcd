//! Quadrature over chart regions and boundary faces.
//!
//! Each axis of the region is cut into panels at the chart's breakpoints
//! (plus any extra breaks, such as the edges of a bump support) and every
//! panel carries a Gauss-Legendre rule with `4·2^level` nodes. Nodes are
//! interior, so polar degeneracies are never sampled.
//!
//! Node evaluations run on the rayon pool; sums are formed afterwards in
//! node order so that results do not depend on the thread count.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::curvature::Divergence;
use crate::error::{Error, Result};
use crate::geometry::fields::Support;
use crate::geometry::{Chart, Face, ScalarField, SymTensorField, VectorField};
use crate::linalg;

pub const MAX_LEVEL: usize = 7;

pub fn nodes_per_panel(level: usize) -> usize {
    4 << level
}

type Rule = Arc<Vec<(f64, f64)>>;

pub(crate) fn rule(count: usize) -> Rule {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().expect("rule cache poisoned");
    guard
        .entry(count)
        .or_insert_with(|| {
            let n = NonZeroUsize::new(count).expect("positive node count");
            Arc::new(GaussLegendre::new(n).as_node_weight_pairs().to_vec())
        })
        .clone()
}

/// Tuning of a grid beyond its level.
#[derive(Clone, Debug, Default)]
pub struct QuadratureOptions {
    /// Integrate along axis 0 only, using the chart's reduction data.
    pub reduce: bool,
    /// Additional panel breakpoints `(axis, value)`.
    pub extra_breaks: Vec<(usize, f64)>,
    /// Restrict nodes to this box; the integrand must vanish outside it.
    pub support: Option<Support>,
    /// Gauss-Legendre nodes per panel in place of `nodes_per_panel(level)`.
    pub nodes: Option<usize>,
}

impl QuadratureOptions {
    pub fn reduced() -> Self {
        Self { reduce: true, ..Self::default() }
    }

    pub fn with_support(mut self, support: Option<Support>) -> Self {
        self.support = support;
        self
    }
}

#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    /// Coordinate weights; the volume density is applied at integration time.
    pub weights: Vec<f64>,
    pub level: usize,
    /// Slice volume when the grid is one-dimensional.
    pub reduction: Option<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn check_level(level: usize) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::InvalidParams(format!("grid level {level} exceeds the maximum {MAX_LEVEL}")));
    }
    Ok(())
}

/// One-dimensional composite rule on `axis` of the chart region, clipped to
/// the support if present. Empty when the clipped interval is empty.
fn axis_rule(chart: &Chart, axis: usize, level: usize, opts: &QuadratureOptions) -> Vec<(f64, f64)> {
    let (mut lo, mut hi) = chart.region[axis];
    if let Some(Some((a, b))) = opts.support.as_ref().map(|s| s[axis]) {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(hi > lo) {
        return Vec::new();
    }
    let mut cuts: Vec<f64> = chart.breaks[axis]
        .iter()
        .copied()
        .chain(opts.extra_breaks.iter().filter(|(a, _)| *a == axis).map(|(_, v)| *v))
        .filter(|&v| v > lo && v < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    let r = rule(opts.nodes.unwrap_or_else(|| nodes_per_panel(level)));
    let mut out = Vec::with_capacity((cuts.len() - 1) * r.len());
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        out.extend(r.iter().map(|&(x, w)| (c + h * x, h * w)));
    }
    out
}

fn tensor_product(axes: &[Vec<(f64, f64)>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut nodes = vec![Vec::with_capacity(axes.len())];
    let mut weights = vec![1.0];
    for axis in axes {
        let mut next_nodes = Vec::with_capacity(nodes.len() * axis.len());
        let mut next_weights = Vec::with_capacity(nodes.len() * axis.len());
        for (node, w) in nodes.iter().zip(&weights) {
            for &(x, wx) in axis {
                let mut p = node.clone();
                p.push(x);
                next_nodes.push(p);
                next_weights.push(w * wx);
            }
        }
        nodes = next_nodes;
        weights = next_weights;
    }
    (nodes, weights)
}

fn check_reducible(chart: &Chart, opts: &QuadratureOptions) -> Result<f64> {
    let Some(red) = &chart.reduction else {
        return Err(Error::Precondition(format!("chart `{}` has no cohomogeneity-one reduction", chart.label)));
    };
    if let Some(support) = &opts.support {
        if support.iter().skip(1).any(Option::is_some) {
            return Err(Error::Precondition("a reduced grid only supports axis-0 support restrictions".into()));
        }
    }
    Ok(red.slice_volume)
}

/// Gauss-Legendre tensor-product grid over the chart region.
pub fn build_quadrature(chart: &Chart, level: usize, opts: &QuadratureOptions) -> Result<QuadratureGrid> {
    check_level(level)?;
    if opts.reduce {
        let slice_volume = check_reducible(chart, opts)?;
        let red = chart.reduction.as_ref().expect("checked");
        let axis = axis_rule(chart, 0, level, opts);
        let nodes = axis
            .iter()
            .map(|&(x, _)| {
                let mut p = red.slice_point.clone();
                p[0] = x;
                p
            })
            .collect();
        let weights = axis.iter().map(|&(_, w)| w * slice_volume).collect();
        return Ok(QuadratureGrid { dim: chart.dim, nodes, weights, level, reduction: Some(slice_volume) });
    }
    let axes: Vec<Vec<(f64, f64)>> = (0..chart.dim).map(|k| axis_rule(chart, k, level, opts)).collect();
    let (nodes, weights) = tensor_product(&axes);
    Ok(QuadratureGrid { dim: chart.dim, nodes, weights, level, reduction: None })
}

/// Nodes on one face with induced-measure weights and outward unit normals.
#[derive(Clone, Debug)]
pub struct BoundaryGrid {
    pub face: Face,
    pub nodes: Vec<Vec<f64>>,
    /// Coordinate weight times `dσ/dx = √det g · √g^{kk}`.
    pub weights: Vec<f64>,
    /// Contravariant `ν^a = s·g^{ak}/√g^{kk}`.
    pub normals: Vec<Vec<f64>>,
    pub level: usize,
}

pub fn build_boundary(chart: &Chart, face: &Face, level: usize, opts: &QuadratureOptions) -> Result<BoundaryGrid> {
    check_level(level)?;
    let k = face.axis;
    let (raw_nodes, raw_weights): (Vec<Vec<f64>>, Vec<f64>) = if opts.reduce {
        let slice_volume = check_reducible(chart, opts)?;
        if k != 0 {
            return Err(Error::Precondition("a reduced boundary must be a face of axis 0".into()));
        }
        let mut p = chart.reduction.as_ref().expect("checked").slice_point.clone();
        p[0] = face.value;
        (vec![p], vec![slice_volume])
    } else {
        let axes: Vec<Vec<(f64, f64)>> =
            (0..chart.dim).map(|a| if a == k { vec![(face.value, 1.0)] } else { axis_rule(chart, a, level, opts) }).collect();
        tensor_product(&axes)
    };
    let n = chart.dim;
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    let mut weights = Vec::with_capacity(raw_nodes.len());
    let mut normals = Vec::with_capacity(raw_nodes.len());
    for (p, w) in raw_nodes.into_iter().zip(raw_weights) {
        let g = chart.metric_values(&p)?;
        let ginv = linalg::inverse(&g, n).ok_or_else(|| Error::NotPositiveDefinite(p.clone()))?;
        let gkk = ginv[k * n + k];
        let det = linalg::determinant(&g, n);
        if !(gkk > 0.0 && det > 0.0) {
            return Err(Error::NotPositiveDefinite(p));
        }
        let nu: Vec<f64> = (0..n).map(|a| face.orientation * ginv[a * n + k] / gkk.sqrt()).collect();
        weights.push(w * det.sqrt() * gkk.sqrt());
        normals.push(nu);
        nodes.push(p);
    }
    Ok(BoundaryGrid { face: *face, nodes, weights, normals, level })
}

fn eval_all<T: Send>(nodes: &[Vec<f64>], f: impl Fn(&[f64]) -> Result<T> + Sync) -> Result<Vec<T>> {
    nodes.par_iter().map(|p| f(p)).collect()
}

fn finite(v: f64, what: &str, p: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} at {p:?}")))
    }
}

/// `(∫ f dv, ∫ |f| dv)` on a grid.
pub fn integrate_on(grid: &QuadratureGrid, chart: &Chart, f: &dyn ScalarField) -> Result<(f64, f64)> {
    let vals = eval_all(&grid.nodes, |p| {
        let v = finite(f.value(chart, p)?, &f.label(), p)?;
        let vol = chart.metric_jet(p, 0)?.volume_density();
        Ok(v * vol)
    })?;
    let mut sum = 0.0;
    let mut abs = 0.0;
    for (v, w) in vals.iter().zip(&grid.weights) {
        sum += w * v;
        abs += w * v.abs();
    }
    Ok((sum, abs))
}

/// Componentwise `Σ w·f(p)` over the grid nodes for a vector-valued `f`
/// that already includes any volume density.
pub fn integrate_pointwise(
    grid: &QuadratureGrid,
    len: usize,
    f: &(dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync),
) -> Result<Vec<f64>> {
    let vals = eval_all(&grid.nodes, f)?;
    let mut out = vec![0.0; len];
    for ((v, w), p) in vals.iter().zip(&grid.weights).zip(&grid.nodes) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * finite(*x, "integrand", p)?;
        }
    }
    Ok(out)
}

/// An integral with its two-level error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// `|I_level − I_{level−1}|` (or against `level + 1` at level 0).
    pub error: f64,
    /// `∫ |f| dv`.
    pub abs: f64,
    pub level: usize,
}

pub fn integrate_scalar(chart: &Chart, f: &dyn ScalarField, level: usize, opts: &QuadratureOptions) -> Result<Integral> {
    let grid = build_quadrature(chart, level, opts)?;
    let (value, abs) = integrate_on(&grid, chart, f)?;
    let other = if level == 0 { 1 } else { level - 1 };
    let (reference, _) = integrate_on(&build_quadrature(chart, other, opts)?, chart, f)?;
    Ok(Integral { value, error: (value - reference).abs(), abs, level })
}

/// `(∫ B(X, ν) dσ, ∫ |B(X, ν)| dσ)` over a face.
pub fn boundary_flux(grid: &BoundaryGrid, chart: &Chart, b: &dyn SymTensorField, x: &dyn VectorField) -> Result<(f64, f64)> {
    let n = chart.dim;
    let vals = eval_all(&grid.nodes, |p| Ok((b.values(chart, p)?, x.values(chart, p)?)))?;
    let mut sum = 0.0;
    let mut abs = 0.0;
    for ((((bv, xv), nu), w), p) in vals.iter().zip(&grid.normals).zip(&grid.weights).zip(&grid.nodes) {
        let v = finite(linalg::bilinear(bv, xv, nu, n), "boundary flux", p)?;
        sum += w * v;
        abs += w * v.abs();
    }
    Ok((sum, abs))
}

/// `(∫ g(Y, ν) dσ, ∫ |g(Y, ν)| dσ)` over a face.
pub fn boundary_flux_vector(grid: &BoundaryGrid, chart: &Chart, y: &dyn VectorField) -> Result<(f64, f64)> {
    let n = chart.dim;
    let vals = eval_all(&grid.nodes, |p| {
        let g = chart.metric_values(p)?;
        Ok((g, y.values(chart, p)?))
    })?;
    let mut sum = 0.0;
    let mut abs = 0.0;
    for ((((g, yv), nu), w), p) in vals.iter().zip(&grid.normals).zip(&grid.weights).zip(&grid.nodes) {
        let v = finite(linalg::bilinear(g, yv, nu, n), "boundary flux", p)?;
        sum += w * v;
        abs += w * v.abs();
    }
    Ok((sum, abs))
}

/// `(∫ J_a ν^a dσ, ∫ |J_a ν^a| dσ)` for a covector field given pointwise.
pub fn boundary_flux_covector(grid: &BoundaryGrid, j: &(dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync)) -> Result<(f64, f64)> {
    let vals = eval_all(&grid.nodes, j)?;
    let mut sum = 0.0;
    let mut abs = 0.0;
    for (((jv, nu), w), p) in vals.iter().zip(&grid.normals).zip(&grid.weights).zip(&grid.nodes) {
        let v: f64 = jv.iter().zip(nu).map(|(a, b)| a * b).sum();
        let v = finite(v, "covector flux", p)?;
        sum += w * v;
        abs += w * v.abs();
    }
    Ok((sum, abs))
}

/// Sum of `flux` over every face of the chart.
pub fn total_flux(
    chart: &Chart,
    level: usize,
    opts: &QuadratureOptions,
    flux: impl Fn(&BoundaryGrid) -> Result<(f64, f64)>,
) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let mut abs = 0.0;
    for face in &chart.faces {
        if opts.reduce && face.axis != 0 {
            continue;
        }
        let grid = build_boundary(chart, face, level, opts)?;
        let (s, a) = flux(&grid)?;
        sum += s;
        abs += a;
    }
    Ok((sum, abs))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceCheck {
    pub interior: f64,
    pub boundary: f64,
    pub residual: f64,
    /// `max(|interior|, |boundary|, ∫|div Y| dv, ∫|g(Y,ν)| dσ)`.
    pub scale: f64,
}

/// `|∫ div Y dv − ∫_∂ g(Y, ν) dσ|` on the grid of the given level.
pub fn divergence_theorem_check(
    chart: &Chart,
    y: Arc<dyn VectorField>,
    level: usize,
    opts: &QuadratureOptions,
) -> Result<DivergenceCheck> {
    let grid = build_quadrature(chart, level, opts)?;
    let (interior, interior_abs) = integrate_on(&grid, chart, &Divergence(y.clone()))?;
    let (boundary, boundary_abs) = total_flux(chart, level, opts, |b| boundary_flux_vector(b, chart, y.as_ref()))?;
    Ok(DivergenceCheck {
        interior,
        boundary,
        residual: (interior - boundary).abs(),
        scale: interior.abs().max(boundary.abs()).max(interior_abs).max(boundary_abs),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::curvature::{CurvatureScalar, CurvatureTensor, ScalarKind, TensorKind};
    use crate::geometry::library::{flat_annulus, flat_box, hemisphere_cap, mercator_sphere, round_sphere_polar};
    use crate::geometry::vector_fields::{polar_boost, rotation_angle};
    use crate::geometry::{AnalyticScalar, FieldKind, VectorFieldSpec};
    use crate::jet::Jet;

    #[test]
    fn unit_square_area() {
        let chart = flat_box(2, 0.0, 1.0);
        let i = integrate_scalar(&chart, &AnalyticScalar::constant(1.0), 2, &QuadratureOptions::default()).unwrap();
        assert_abs_diff_eq!(i.value, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sphere_area_full_and_reduced() {
        let chart = round_sphere_polar(2);
        let one = AnalyticScalar::constant(1.0);
        let full = integrate_scalar(&chart, &one, 4, &QuadratureOptions::default()).unwrap();
        assert_abs_diff_eq!(full.value, 4.0 * PI, epsilon = 1e-10);
        let reduced = integrate_scalar(&chart, &one, 3, &QuadratureOptions::reduced()).unwrap();
        assert_abs_diff_eq!(reduced.value, 4.0 * PI, epsilon = 1e-12);
        let merc = integrate_scalar(&mercator_sphere(), &one, 2, &QuadratureOptions::reduced()).unwrap();
        assert_abs_diff_eq!(merc.value, 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn gauss_bonnet_on_the_sphere() {
        let chart = round_sphere_polar(2);
        let sc = CurvatureScalar::new(ScalarKind::Scalar);
        let i = integrate_scalar(&chart, &sc, 3, &QuadratureOptions::default()).unwrap();
        assert_abs_diff_eq!(i.value, 8.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn zero_integrand_is_exactly_zero() {
        let chart = round_sphere_polar(3);
        let i = integrate_scalar(&chart, &AnalyticScalar::constant(0.0), 1, &QuadratureOptions::default()).unwrap();
        assert_eq!(i.value, 0.0);
    }

    #[test]
    fn killing_divergence_integrates_to_zero() {
        let chart = round_sphere_polar(2);
        let div = Divergence(Arc::new(rotation_angle(2)));
        let i = integrate_scalar(&chart, &div, 2, &QuadratureOptions::default()).unwrap();
        assert!(i.value.abs() < 1e-10);
    }

    #[test]
    fn equator_length() {
        let chart = hemisphere_cap(2, PI / 2.0, None).unwrap();
        let face = chart.faces[0];
        let b = build_boundary(&chart, &face, 2, &QuadratureOptions::default()).unwrap();
        let len: f64 = b.weights.iter().sum();
        assert_abs_diff_eq!(len, 2.0 * PI, epsilon = 1e-10);
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let charts = [flat_box(2, 0.0, 1.0), flat_annulus(1.0, 2.0).unwrap(), hemisphere_cap(3, 1.0, None).unwrap()];
        for chart in &charts {
            for face in &chart.faces {
                let b = build_boundary(chart, face, 0, &QuadratureOptions::default()).unwrap();
                for (p, nu) in b.nodes.iter().zip(&b.normals) {
                    let g = chart.metric_values(p).unwrap();
                    assert_abs_diff_eq!(linalg::bilinear(&g, nu, nu, chart.dim), 1.0, epsilon = 1e-12);
                    assert!(nu[face.axis] * face.orientation > 0.0);
                }
            }
        }
    }

    #[test]
    fn metric_flux_of_normal_field_is_face_area() {
        let chart = flat_box(2, 0.0, 1.0);
        let face = Face { axis: 0, value: 1.0, orientation: 1.0 };
        let b = build_boundary(&chart, &face, 1, &QuadratureOptions::default()).unwrap();
        let x = VectorFieldSpec::new("e0", FieldKind::Killing, |x: &[Jet]| vec![x[0].lift(1.0), x[0].lift(0.0)]);
        let (flux, _) = boundary_flux(&b, &chart, &CurvatureTensor::new(TensorKind::Metric, 1.0), &x).unwrap();
        assert_abs_diff_eq!(flux, 1.0, epsilon = 1e-14);
        let zero = CurvatureTensor::new(TensorKind::Metric, 0.0);
        assert_eq!(boundary_flux(&b, &chart, &zero, &x).unwrap().0, 0.0);
    }

    #[test]
    fn annulus_radial_field_fluxes_cancel() {
        let chart = flat_annulus(1.0, 2.0).unwrap();
        let y: Arc<dyn VectorField> =
            Arc::new(VectorFieldSpec::new("x/|x|²", FieldKind::Generic, |x: &[Jet]| vec![x[0].recip(), x[0].lift(0.0)]));
        let check = divergence_theorem_check(&chart, y, 3, &QuadratureOptions::default()).unwrap();
        assert!(check.residual < 1e-10);
        assert!(check.interior.abs() < 1e-12);
        let outer = build_boundary(&chart, &chart.faces[1], 3, &QuadratureOptions::default()).unwrap();
        let y2 = VectorFieldSpec::new("x/|x|²", FieldKind::Generic, |x: &[Jet]| vec![x[0].recip(), x[0].lift(0.0)]);
        assert_abs_diff_eq!(boundary_flux_vector(&outer, &chart, &y2).unwrap().0, 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn cap_boost_divergence_theorem() {
        let chart = hemisphere_cap(3, PI / 2.0, None).unwrap();
        for opts in [QuadratureOptions::default(), QuadratureOptions::reduced()] {
            let check = divergence_theorem_check(&chart, Arc::new(polar_boost()), 3, &opts).unwrap();
            assert!(check.residual < 1e-9, "{check:?}");
            // ∫ over the S³ hemisphere of −3cosθ = −vol(S²) = flux of −sinθ∂θ at the equator.
            assert_abs_diff_eq!(check.boundary, -4.0 * PI, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let chart = flat_annulus(1.0, 2.0).unwrap();
        let y: Arc<dyn VectorField> =
            Arc::new(VectorFieldSpec::new("0", FieldKind::Killing, |x: &[Jet]| vec![x[0].lift(0.0), x[0].lift(0.0)]));
        let check = divergence_theorem_check(&chart, y, 1, &QuadratureOptions::default()).unwrap();
        assert_eq!(check.residual, 0.0);
    }

    #[test]
    fn error_estimates_shrink_under_refinement() {
        let chart = hemisphere_cap(2, 1.2, None).unwrap();
        let f = AnalyticScalar::new("cos²θ e^θ", |x: &[Jet]| &(&x[0].cos() * &x[0].cos()) * &x[0].exp());
        let mut prev = f64::INFINITY;
        for level in 1..=3 {
            let i = integrate_scalar(&chart, &f, level, &QuadratureOptions::default()).unwrap();
            assert!(i.error <= prev / 4.0 || i.error < 1e-13, "level {level}: {} vs {prev}", i.error);
            prev = i.error;
        }
    }

    #[test]
    fn support_restriction_matches_full_grid() {
        let chart = flat_box(2, 0.0, 1.0);
        let bump = crate::geometry::Bump::around(&[0.4, 0.6], 0.2).as_scalar(2);
        let edges = vec![(0, 0.2), (0, 0.6), (1, 0.4), (1, 0.8)];
        let broken = QuadratureOptions { extra_breaks: edges, ..QuadratureOptions::default() };
        let full = integrate_scalar(&chart, &bump, 1, &broken).unwrap();
        let opts = QuadratureOptions::default().with_support(bump.support.clone());
        let clipped = integrate_scalar(&chart, &bump, 1, &opts).unwrap();
        // ∫(1 − s²)⁴ ds over [−1, 1] is 256/315.
        let exact = (0.2f64 * 256.0 / 315.0).powi(2);
        assert_abs_diff_eq!(clipped.value, exact, epsilon = 1e-15);
        assert_abs_diff_eq!(full.value, exact, epsilon = 1e-15);
    }

    #[test]
    fn level_limit_and_reduction_errors() {
        let chart = flat_box(2, 0.0, 1.0);
        assert!(build_quadrature(&chart, MAX_LEVEL + 1, &QuadratureOptions::default()).is_err());
        assert!(build_quadrature(&chart, 1, &QuadratureOptions::reduced()).is_err());
    }
}
