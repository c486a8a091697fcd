use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{self, Jet, MAX_ORDER};
use crate::linalg;

use super::fields::SymTensorField;

/// Highest metric jet order a chart serves. One order is held back so that
/// pullback metrics can differentiate their embedding once more.
pub const MAX_METRIC_ORDER: usize = MAX_ORDER - 1;

/// Maps `(point, order)` to the row-major `n×n` matrix of metric jets.
pub type MetricProvider = Arc<dyn Fn(&[f64], usize) -> Result<Vec<Jet>> + Send + Sync>;

/// A boundary face `x[axis] = value`; `orientation` is +1 when the outward
/// direction is increasing `x[axis]`, −1 otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Face {
    pub axis: usize,
    pub value: f64,
    pub orientation: f64,
}

/// Cohomogeneity-one reduction data: integrands that depend on `x[0]` only
/// are integrated along axis 0 at `slice_point` (whose first entry is
/// ignored), times `slice_volume`. Valid when the volume density factors as
/// a function of `x[0]` times a density whose integral over the remaining
/// axes at `slice_point` normalization equals `slice_volume`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub slice_point: Vec<f64>,
    pub slice_volume: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartKind {
    FlatCartesian,
    FlatPolar,
    SpherePolar,
    SphereStereographic,
    Mercator,
    Induced,
}

/// A coordinate chart with an analytic metric.
///
/// `domain` is the open box on which the metric can be evaluated; `region`
/// is the closed box being integrated over, with `faces` listing which of
/// its sides are genuine boundary (the others are coordinate degeneracies
/// or periodic seams of a closed manifold).
#[derive(Clone)]
pub struct Chart {
    pub label: String,
    pub dim: usize,
    pub kind: ChartKind,
    pub domain: Vec<(f64, f64)>,
    pub region: Vec<(f64, f64)>,
    pub faces: Vec<Face>,
    /// Interior quadrature panel breakpoints per axis.
    pub breaks: Vec<Vec<f64>>,
    pub reduction: Option<Reduction>,
    metric: MetricProvider,
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chart")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("region", &self.region)
            .field("faces", &self.faces)
            .finish()
    }
}

impl Chart {
    pub fn new(
        label: impl Into<String>,
        kind: ChartKind,
        domain: Vec<(f64, f64)>,
        region: Vec<(f64, f64)>,
        metric: MetricProvider,
    ) -> Self {
        let dim = domain.len();
        assert_eq!(region.len(), dim);
        Self {
            label: label.into(),
            dim,
            kind,
            domain,
            region,
            faces: Vec::new(),
            breaks: vec![Vec::new(); dim],
            reduction: None,
            metric,
        }
    }

    pub fn with_faces(mut self, faces: Vec<Face>) -> Self {
        self.faces = faces;
        self
    }

    pub fn with_breaks(mut self, axis: usize, breaks: Vec<f64>) -> Self {
        self.breaks[axis] = breaks;
        self
    }

    pub fn with_reduction(mut self, reduction: Option<Reduction>) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn is_closed(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn provider(&self) -> MetricProvider {
        self.metric.clone()
    }

    /// Same coordinates and region with a different metric.
    pub fn with_metric(&self, label: impl Into<String>, metric: MetricProvider) -> Chart {
        Chart { label: label.into(), metric, ..self.clone() }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim && p.iter().zip(&self.domain).all(|(&x, &(lo, hi))| x > lo && x < hi)
    }

    /// Metric jet at `p` truncated at `order`.
    pub fn metric_jet(&self, p: &[f64], order: usize) -> Result<MetricJet> {
        if order > MAX_METRIC_ORDER {
            return Err(Error::OrderUnsupported { requested: order, max: MAX_METRIC_ORDER });
        }
        if !self.contains(p) {
            return Err(Error::OutOfDomain { chart: self.label.clone(), point: p.to_vec() });
        }
        let g = (self.metric)(p, order)?;
        let n = self.dim;
        let values: Vec<f64> = g.iter().map(Jet::value).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("metric of `{}` at {p:?}", self.label)));
        }
        if !linalg::is_positive_definite(&values, n) {
            return Err(Error::NotPositiveDefinite(p.to_vec()));
        }
        Ok(MetricJet { point: p.to_vec(), order, g })
    }

    pub fn metric_values(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.metric_jet(p, 0)?.values())
    }

    /// Metric `g + t·h`.
    pub fn perturbed(&self, h: Arc<dyn SymTensorField>, t: f64) -> Chart {
        let base = Arc::new(self.clone());
        let inner = base.clone();
        let metric: MetricProvider = Arc::new(move |p, order| {
            let g = (inner.metric)(p, order)?;
            let hj = h.jet(&inner, p, order)?;
            Ok(g.iter().zip(&hj).map(|(a, b)| a + &b.scale(t)).collect())
        });
        base.with_metric(format!("{} + {t}·h", self.label), metric)
    }

    /// Restriction of the region to `lo ≤ x[axis] ≤ hi` with boundary faces
    /// on both new sides.
    pub fn subregion(&self, axis: usize, lo: f64, hi: f64) -> Result<Chart> {
        let (dlo, dhi) = self.domain[axis];
        if !(lo > dlo && hi < dhi && lo < hi) {
            return Err(Error::InvalidParams(format!("subregion [{lo}, {hi}] not inside the chart domain")));
        }
        let mut out = self.clone();
        out.region[axis] = (lo, hi);
        out.faces.retain(|f| f.axis != axis);
        out.faces.push(Face { axis, value: lo, orientation: -1.0 });
        out.faces.push(Face { axis, value: hi, orientation: 1.0 });
        out.breaks[axis].retain(|&b| b > lo && b < hi);
        Ok(out)
    }

    /// Largest discrepancy between analytic first derivatives of the metric
    /// and fourth-order central differences of order-0 values with step `h`.
    pub fn finite_difference_discrepancy(&self, p: &[f64], h: f64) -> Result<f64> {
        let n = self.dim;
        let jet = self.metric_jet(p, 1)?;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let at = |s: f64| {
                let mut q = p.to_vec();
                q[k] += s * h;
                self.metric_values(&q)
            };
            let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
            for ij in 0..n * n {
                let fd = (-p2[ij] + 8.0 * p1[ij] - 8.0 * m1[ij] + m2[ij]) / (12.0 * h);
                worst = worst.max((fd - jet.g[ij].partial(&[k])).abs());
            }
        }
        Ok(worst)
    }
}

/// Metric components and all their partial derivatives to `order` at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub point: Vec<f64>,
    pub order: usize,
    /// Row-major `n×n` jets.
    pub g: Vec<Jet>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.dim() + j].value()
    }

    /// The same jet cut down to `order` (no-op when already lower).
    pub fn truncated(&self, order: usize) -> MetricJet {
        let order = order.min(self.order);
        MetricJet { point: self.point.clone(), order, g: self.g.iter().map(|x| x.truncate(order)).collect() }
    }

    pub fn values(&self) -> Vec<f64> {
        self.g.iter().map(Jet::value).collect()
    }

    /// `∂_{along} g_ij` at the point.
    pub fn derivative(&self, i: usize, j: usize, along: &[usize]) -> f64 {
        self.g[i * self.dim() + j].partial(along)
    }

    pub fn inverse_values(&self) -> Vec<f64> {
        linalg::inverse(&self.values(), self.dim()).expect("metric is positive definite")
    }

    /// Jet of `det g`.
    pub fn det(&self) -> Jet {
        jet::determinant(&self.g, self.dim())
    }

    pub fn volume_density(&self) -> f64 {
        linalg::determinant(&self.values(), self.dim()).sqrt()
    }
}
