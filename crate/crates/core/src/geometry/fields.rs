use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{self, Jet};

use super::chart::Chart;

/// Per-axis closed support intervals; `None` on an axis means unrestricted.
pub type Support = Vec<Option<(f64, f64)>>;

/// A scalar field evaluated as a jet in chart coordinates.
pub trait ScalarField: Send + Sync {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Jet>;

    fn label(&self) -> String;

    fn value(&self, chart: &Chart, p: &[f64]) -> Result<f64> {
        Ok(self.jet(chart, p, 0)?.value())
    }

    /// Box outside of which the field vanishes identically, if any.
    fn support(&self) -> Option<Support> {
        None
    }
}

/// A symmetric 2-tensor field with covariant components, row-major `n×n`.
pub trait SymTensorField: Send + Sync {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>>;

    fn label(&self) -> String;

    fn values(&self, chart: &Chart, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jet(chart, p, 0)?.iter().map(Jet::value).collect())
    }

    fn support(&self) -> Option<Support> {
        None
    }
}

/// A vector field with contravariant components.
pub trait VectorField: Send + Sync {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>>;

    fn label(&self) -> String;

    fn values(&self, chart: &Chart, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jet(chart, p, 0)?.iter().map(Jet::value).collect())
    }
}

impl<T: ScalarField + ?Sized> ScalarField for Arc<T> {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        (**self).jet(chart, p, order)
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn support(&self) -> Option<Support> {
        (**self).support()
    }
}

impl<T: SymTensorField + ?Sized> SymTensorField for Arc<T> {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        (**self).jet(chart, p, order)
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn support(&self) -> Option<Support> {
        (**self).support()
    }
}

impl<T: VectorField + ?Sized> VectorField for Arc<T> {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        (**self).jet(chart, p, order)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

pub type JetMap = Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>;
pub type JetVectorMap = Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>;

/// A scalar given in closed form on coordinate jets.
#[derive(Clone)]
pub struct AnalyticScalar {
    pub label: String,
    pub f: JetMap,
    /// Highest jet order the expression may be asked for.
    pub max_order: usize,
    pub support: Option<Support>,
}

impl AnalyticScalar {
    pub fn new(label: impl Into<String>, f: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f), max_order: jet::MAX_ORDER, support: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |x: &[Jet]| x[0].lift(c))
    }

    pub fn with_max_order(mut self, order: usize) -> Self {
        self.max_order = order;
        self
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        (self.f)(x)
    }
}

impl ScalarField for AnalyticScalar {
    fn jet(&self, _chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        if order > self.max_order {
            return Err(Error::OrderUnsupported { requested: order, max: self.max_order });
        }
        Ok((self.f)(&Jet::variables(p, order)))
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn support(&self) -> Option<Support> {
        self.support.clone()
    }
}

/// Product bump `Π_k (1 − s_k²)^4` with `s_k = (x_k − c_k)/w_k` over the
/// listed axes, zero outside the box. It is C³ across the box edges, which
/// is why quadrature places panel breaks there.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    /// (axis, center, half-width)
    pub factors: Vec<(usize, f64, f64)>,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(factors: Vec<(usize, f64, f64)>) -> Self {
        Self { factors, amplitude: 1.0 }
    }

    /// A bump depending on `x[axis]` only.
    pub fn along(axis: usize, center: f64, half_width: f64) -> Self {
        Self::new(vec![(axis, center, half_width)])
    }

    /// A bump in every coordinate around `center`.
    pub fn around(center: &[f64], half_width: f64) -> Self {
        Self::new(center.iter().enumerate().map(|(k, &c)| (k, c, half_width)).collect())
    }

    pub fn scaled(mut self, amplitude: f64) -> Self {
        self.amplitude *= amplitude;
        self
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        let mut acc = x[0].lift(self.amplitude);
        for &(axis, c, w) in &self.factors {
            let s = (&x[axis] - c) * (1.0 / w);
            if s.value().abs() >= 1.0 {
                return x[0].lift(0.0);
            }
            let one_minus = 1.0 - &s * &s;
            acc = &acc * &one_minus.powi(4);
        }
        acc
    }

    pub fn support_box(&self, dim: usize) -> Support {
        let mut out = vec![None; dim];
        for &(axis, c, w) in &self.factors {
            out[axis] = Some((c - w, c + w));
        }
        out
    }

    pub fn as_scalar(&self, dim: usize) -> AnalyticScalar {
        let b = self.clone();
        let mut s = AnalyticScalar::new(format!("bump{:?}", self.factors), move |x: &[Jet]| b.eval(x));
        s.support = Some(self.support_box(dim));
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Killing,
    Conformal,
    Generic,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Killing => "killing",
            FieldKind::Conformal => "conformal",
            FieldKind::Generic => "generic",
        }
    }
}

/// A closed-form vector field on a chart.
#[derive(Clone)]
pub struct VectorFieldSpec {
    pub label: String,
    pub claimed_kind: FieldKind,
    pub components: JetVectorMap,
}

impl std::fmt::Debug for VectorFieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "VectorFieldSpec({}, {:?})", self.label, self.claimed_kind)
    }
}

impl VectorFieldSpec {
    pub fn new(
        label: impl Into<String>,
        claimed_kind: FieldKind,
        components: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), claimed_kind, components: Arc::new(components) }
    }

    pub fn jets(&self, p: &[f64], order: usize) -> Vec<Jet> {
        (self.components)(&Jet::variables(p, order))
    }

    pub fn at(&self, p: &[f64]) -> Vec<f64> {
        self.jets(p, 0).iter().map(Jet::value).collect()
    }

    /// Row-major `∂_j X^i`.
    pub fn jacobian(&self, p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let x = self.jets(p, 1);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = x[i].partial(&[j]);
            }
        }
        out
    }

    /// The field multiplied by a bump, which makes it compactly supported.
    pub fn localized(&self, bump: &Bump) -> VectorFieldSpec {
        let inner = self.components.clone();
        let b = bump.clone();
        VectorFieldSpec::new(format!("{}·bump", self.label), FieldKind::Generic, move |x: &[Jet]| {
            let psi = b.eval(x);
            inner(x).iter().map(|c| c * &psi).collect()
        })
    }
}

impl VectorField for VectorFieldSpec {
    fn jet(&self, _chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        Ok(self.jets(p, order))
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// The field `V·X`.
#[derive(Clone)]
pub struct ScaledVectorField {
    pub scalar: Arc<dyn ScalarField>,
    pub field: Arc<dyn VectorField>,
}

impl VectorField for ScaledVectorField {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        let v = self.scalar.jet(chart, p, order)?;
        Ok(self.field.jet(chart, p, order)?.iter().map(|x| x * &v).collect())
    }

    fn label(&self) -> String {
        format!("{}·{}", self.scalar.label(), self.field.label())
    }
}

/// The current `J^a = g^{ab} B_bc X^c`.
#[derive(Clone)]
pub struct CurrentField {
    pub tensor: Arc<dyn SymTensorField>,
    pub field: Arc<dyn VectorField>,
}

impl VectorField for CurrentField {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = chart.dim;
        let g = chart.metric_jet(p, order)?;
        let ginv = jet::inverse(&g.g, n);
        let b = self.tensor.jet(chart, p, order)?;
        let x = self.field.jet(chart, p, order)?;
        let mut lowered = Vec::with_capacity(n);
        for bi in 0..n {
            let mut s = Jet::zero(n, order);
            for c in 0..n {
                s.add_product(&b[bi * n + c], &x[c]);
            }
            lowered.push(s);
        }
        Ok((0..n)
            .map(|a| {
                let mut s = Jet::zero(n, order);
                for bi in 0..n {
                    s.add_product(&ginv[a * n + bi], &lowered[bi]);
                }
                s
            })
            .collect())
    }

    fn label(&self) -> String {
        format!("{}({},·)", self.tensor.label(), self.field.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_vanishes_outside_and_peaks_at_center() {
        let b = Bump::along(0, 1.0, 0.5);
        let at = |x: f64| b.eval(&Jet::variables(&[x, 0.0], 2)).value();
        assert_eq!(at(1.0), 1.0);
        assert_eq!(at(1.6), 0.0);
        assert_eq!(at(0.4), 0.0);
        assert!((at(1.25) - (0.75f64).powi(4)).abs() < 1e-15);
    }

    #[test]
    fn bump_is_c3_at_edges() {
        let b = Bump::along(0, 0.0, 1.0);
        let d: f64 = 1e-5;
        let j = b.eval(&Jet::variables(&[1.0 - d], 4));
        for k in 1..=3 {
            assert!(j.partial(&vec![0; k]).abs() < 1e3 * (2.0 * d).powi(4 - k as i32));
        }
    }
}
