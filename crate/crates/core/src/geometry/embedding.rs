use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{self, Jet};

use super::chart::{Chart, ChartKind, MetricJet, MetricProvider, MAX_METRIC_ORDER};
use super::fields::{JetVectorMap, ScalarField, SymTensorField};
use super::library::{flat_box, round_sphere_polar};
use super::params::Params;

/// A hypersurface immersion `F: chart → E^{n+1}` given in closed form.
///
/// The unit normal is `orientation` times the normalized generalized cross
/// product of `∂_1F, …, ∂_nF`; library embeddings choose the orientation
/// that makes it point outward.
#[derive(Clone)]
pub struct EmbeddingSpec {
    pub label: String,
    pub map: JetVectorMap,
    pub orientation: f64,
    /// Coordinates, region and quadrature layout; its metric is replaced by
    /// the pullback in [`EmbeddingSpec::chart`].
    pub template: Chart,
}

/// First fundamental form jet, second fundamental form and mean curvature at a point.
#[derive(Clone, Debug)]
pub struct InducedGeometry {
    pub metric: MetricJet,
    pub second_fundamental_form: Vec<f64>,
    pub mean_curvature: f64,
}

impl EmbeddingSpec {
    pub fn new(
        label: impl Into<String>,
        template: Chart,
        orientation: f64,
        map: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), map: Arc::new(map), orientation, template }
    }

    pub fn dim(&self) -> usize {
        self.template.dim
    }

    /// The parameter chart carrying the pullback metric.
    pub fn chart(&self) -> Chart {
        let map = self.map.clone();
        let metric: MetricProvider = Arc::new(move |p: &[f64], order| {
            let f = map(&Jet::variables(p, order + 1));
            Ok(pullback(&f, p.len()))
        });
        let mut c = self.template.with_metric(format!("pullback by {}", self.label), metric);
        if c.kind == ChartKind::FlatCartesian {
            c.kind = ChartKind::Induced;
        }
        c
    }

    /// `(g, II, H)` as jets truncated at `order`.
    pub fn extrinsic(&self, p: &[f64], order: usize) -> Result<(Vec<Jet>, Vec<Jet>, Jet)> {
        if order + 2 > jet::MAX_ORDER {
            return Err(Error::OrderUnsupported { requested: order, max: jet::MAX_ORDER - 2 });
        }
        let n = self.dim();
        let f = (self.map)(&Jet::variables(p, order + 2));
        let df: Vec<Vec<Jet>> = (0..n).map(|i| f.iter().map(|c| c.derivative(i)).collect()).collect();
        let g = gram(&df, n, order);
        let normal = self.unit_normal(&df, p, order)?;
        let mut ii = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Jet::zero(n, order);
                for (alpha, nu) in normal.iter().enumerate() {
                    s.add_product(&df[i][alpha].derivative(j), nu);
                }
                ii.push(-s);
            }
        }
        let ginv = jet::inverse(&g, n);
        let mut trace = Jet::zero(n, order);
        for k in 0..n * n {
            trace.add_product(&ginv[k], &ii[k]);
        }
        Ok((g, ii, trace.scale(1.0 / n as f64)))
    }

    fn unit_normal(&self, df: &[Vec<Jet>], p: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = self.dim();
        let rows: Vec<Vec<Jet>> = df.iter().map(|r| r.iter().map(|c| c.truncate(order + 1)).collect()).collect();
        let mut cross = Vec::with_capacity(n + 1);
        for alpha in 0..=n {
            let mut minor = Vec::with_capacity(n * n);
            for row in &rows {
                for (beta, c) in row.iter().enumerate() {
                    if beta != alpha {
                        minor.push(c.clone());
                    }
                }
            }
            let sign = if alpha % 2 == 0 { 1.0 } else { -1.0 };
            cross.push(jet::determinant(&minor, n).scale(sign));
        }
        let mut norm2 = Jet::zero(n, order + 1);
        for c in &cross {
            norm2.add_product(c, c);
        }
        let scale: f64 = rows.iter().flatten().map(|c| c.value() * c.value()).sum::<f64>().max(1e-300);
        if norm2.value() <= 1e-20 * scale.powi(n as i32) {
            return Err(Error::RankDeficient(p.to_vec()));
        }
        let inv = norm2.powf(-0.5).scale(self.orientation);
        Ok(cross.iter().map(|c| (c * &inv).truncate(order)).collect())
    }

    /// Rank check of the differential at `p`.
    pub fn check_immersion(&self, p: &[f64]) -> Result<()> {
        let n = self.dim();
        let f = (self.map)(&Jet::variables(p, 1));
        let df: Vec<Vec<Jet>> = (0..n).map(|i| f.iter().map(|c| c.derivative(i)).collect()).collect();
        self.unit_normal(&df, p, 0).map(|_| ())
    }
}

fn gram(df: &[Vec<Jet>], n: usize, order: usize) -> Vec<Jet> {
    let mut g = vec![Jet::zero(n, order); n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = Jet::zero(n, order);
            for (a, b) in df[i].iter().zip(&df[j]) {
                s.add_product(a, b);
            }
            g[j * n + i] = s.clone();
            g[i * n + j] = s;
        }
    }
    g
}

fn pullback(f: &[Jet], n: usize) -> Vec<Jet> {
    let order = f[0].order() - 1;
    let df: Vec<Vec<Jet>> = (0..n).map(|i| f.iter().map(|c| c.derivative(i)).collect()).collect();
    gram(&df, n, order)
}

/// First fundamental form jets to order 3, second fundamental form and mean
/// curvature at `p`.
pub fn embed_induced(e: &EmbeddingSpec, p: &[f64]) -> Result<InducedGeometry> {
    e.check_immersion(p)?;
    let (_, ii, h) = e.extrinsic(p, 0)?;
    let metric = e.chart().metric_jet(p, 3.min(MAX_METRIC_ORDER))?;
    Ok(InducedGeometry { metric, second_fundamental_form: ii.iter().map(Jet::value).collect(), mean_curvature: h.value() })
}

/// The second fundamental form of an embedding as a tensor field on its chart.
#[derive(Clone)]
pub struct SecondFundamentalForm(pub EmbeddingSpec);

impl SymTensorField for SecondFundamentalForm {
    fn jet(&self, _chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        Ok(self.0.extrinsic(p, order)?.1)
    }
    fn label(&self) -> String {
        format!("II({})", self.0.label)
    }
}

/// `II − n H g`, the locally conserved tensor of the contracted Codazzi equation.
#[derive(Clone)]
pub struct CodazziTensor(pub EmbeddingSpec);

impl SymTensorField for CodazziTensor {
    fn jet(&self, _chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        let (g, ii, h) = self.0.extrinsic(p, order)?;
        let nh = h.scale(self.0.dim() as f64);
        Ok(ii.iter().zip(&g).map(|(a, b)| a - &(b * &nh)).collect())
    }
    fn label(&self) -> String {
        format!("II − nHg ({})", self.0.label)
    }
}

#[derive(Clone)]
pub struct MeanCurvature(pub EmbeddingSpec);

impl ScalarField for MeanCurvature {
    fn jet(&self, _chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        Ok(self.0.extrinsic(p, order)?.2)
    }
    fn label(&self) -> String {
        format!("H({})", self.0.label)
    }
}

/// Ellipsoid `(a sinθ cosφ, b sinθ sinφ, c cosθ)` over polar coordinates.
pub fn ellipsoid(a: f64, b: f64, c: f64) -> EmbeddingSpec {
    let mut template = round_sphere_polar(2);
    template.reduction = None;
    EmbeddingSpec::new(format!("ellipsoid({a}, {b}, {c})"), template, 1.0, move |x: &[Jet]| {
        let (st, ct) = (x[0].sin(), x[0].cos());
        vec![(&st * &x[1].cos()).scale(a), (&st * &x[1].sin()).scale(b), ct.scale(c)]
    })
}

/// Torus of revolution with tube radius `r` around a circle of radius `big_r`.
pub fn torus(big_r: f64, r: f64) -> EmbeddingSpec {
    let mut template = flat_box(2, 0.0, 2.0 * PI);
    template.faces.clear();
    template.kind = ChartKind::Induced;
    EmbeddingSpec::new(format!("torus({big_r}, {r})"), template, 1.0, move |x: &[Jet]| {
        let (u, v) = (&x[0], &x[1]);
        let ring = v.cos().scale(r) + big_r;
        vec![&ring * &u.cos(), &ring * &u.sin(), v.sin().scale(r)]
    })
}

/// The plane `z = 0` over a unit square.
pub fn plane() -> EmbeddingSpec {
    let mut template = flat_box(2, 0.0, 1.0);
    template.kind = ChartKind::Induced;
    EmbeddingSpec::new("plane", template, 1.0, |x: &[Jet]| vec![x[0].clone(), x[1].clone(), x[0].lift(0.0)])
}

/// Library embeddings: `unit_sphere`, `ellipsoid {a, b, c}`, `torus {R, r}`, `plane`.
pub fn library_embedding(name: &str, params: &Params) -> Result<EmbeddingSpec> {
    match name {
        "unit_sphere" => {
            params.check_keys(name, &[])?;
            let mut e = ellipsoid(1.0, 1.0, 1.0);
            e.label = "unit_sphere".into();
            Ok(e)
        }
        "ellipsoid" => {
            params.check_keys(name, &["a", "b", "c"])?;
            let (a, b, c) = (params.number_or("a", 1.0)?, params.number_or("b", 1.0)?, params.number_or("c", 2.0)?);
            if !(a > 0.0 && b > 0.0 && c > 0.0) {
                return Err(Error::InvalidParams("ellipsoid semi-axes must be positive".into()));
            }
            Ok(ellipsoid(a, b, c))
        }
        "torus" => {
            params.check_keys(name, &["R", "r"])?;
            let (big, small) = (params.number_or("R", 2.0)?, params.number_or("r", 0.5)?);
            if !(small > 0.0 && big > small) {
                return Err(Error::InvalidParams("torus needs 0 < r < R".into()));
            }
            Ok(torus(big, small))
        }
        "plane" => {
            params.check_keys(name, &[])?;
            Ok(plane())
        }
        _ => Err(Error::UnknownName { kind: "embedding", name: name.into() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_sphere_is_umbilic_with_unit_mean_curvature() {
        let e = library_embedding("unit_sphere", &Params::new()).unwrap();
        for p in [[0.4, 1.0], [1.3, 4.0], [2.9, 0.2]] {
            let geo = embed_induced(&e, &p).unwrap();
            assert_abs_diff_eq!(geo.mean_curvature, 1.0, epsilon = 1e-13);
            for (a, b) in geo.second_fundamental_form.iter().zip(geo.metric.values()) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn plane_has_no_extrinsic_curvature() {
        let geo = embed_induced(&plane(), &[0.3, 0.6]).unwrap();
        assert!(geo.second_fundamental_form.iter().all(|&x| x.abs() < 1e-15));
        assert_eq!(geo.mean_curvature, 0.0);
    }

    /// `d/dε log √det g(F + εN) = nH` by central differences in ε.
    fn area_variation(e: &EmbeddingSpec, p: &[f64], eps: f64) -> f64 {
        let n = e.dim();
        let f = (e.map)(&Jet::variables(p, 2));
        let df: Vec<Vec<Jet>> = (0..n).map(|i| f.iter().map(|c| c.derivative(i)).collect()).collect();
        let normal = e.unit_normal(&df, p, 1).unwrap();
        let log_area = |s: f64| {
            let rows: Vec<Vec<f64>> =
                (0..n).map(|i| (0..=n).map(|a| df[i][a].value() + s * normal[a].partial(&[i])).collect()).collect();
            let g: Vec<f64> = (0..n * n).map(|k| rows[k / n].iter().zip(&rows[k % n]).map(|(x, y)| x * y).sum()).collect();
            0.5 * crate::linalg::determinant(&g, n).ln()
        };
        (log_area(eps) - log_area(-eps)) / (2.0 * eps)
    }

    #[test]
    fn ellipsoid_mean_curvature_matches_area_variation() {
        let e = ellipsoid(1.0, 1.0, 2.0);
        for p in [[0.5, 0.3], [1.2, 2.0], [2.2, 5.1], [1.45, 1.0]] {
            let h = embed_induced(&e, &p).unwrap().mean_curvature;
            let oracle = area_variation(&e, &p, 1e-4) / 2.0;
            assert!((h - oracle).abs() < 1e-6, "H = {h}, oracle = {oracle}");
        }
    }

    #[test]
    fn torus_outer_equator_curvature() {
        // Principal curvatures 1/r and cos v/(R + r cos v) at the outer equator v = 0.
        let e = torus(2.0, 0.5);
        let h = embed_induced(&e, &[1.0, 0.0 + 1e-9]).unwrap().mean_curvature;
        assert_abs_diff_eq!(h, 0.5 * (2.0 + 1.0 / 2.5), epsilon = 1e-8);
    }

    #[test]
    fn degenerate_map_is_rejected() {
        let template = flat_box(2, 0.0, 1.0);
        let e = EmbeddingSpec::new("line", template, 1.0, |x: &[Jet]| vec![x[0].clone(), x[0].clone(), x[0].lift(0.0)]);
        assert!(matches!(embed_induced(&e, &[0.5, 0.5]), Err(Error::RankDeficient(_))));
    }
}
