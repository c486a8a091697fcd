use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::fields::Support;
use crate::geometry::{Chart, ScalarField, SymTensorField, VectorField};
use crate::jet::{self, Jet};

use super::{curvature_suite, einstein_tensor, gauss_bonnet_s2k, lanczos_tensor, operators, q4, sigma_k, weyl_norm_sq};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarKind {
    Scalar,
    J,
    Sigma1,
    Sigma2,
    Q4,
    /// `(n/2) J² − 2|P|²`, which differs from `Q4` by the divergence `ΔJ`.
    Q4Reduced,
    WeylNormSq,
    GaussBonnet4,
}

impl ScalarKind {
    pub fn name(self) -> &'static str {
        match self {
            ScalarKind::Scalar => "scalar_curvature",
            ScalarKind::J => "J",
            ScalarKind::Sigma1 => "sigma1",
            ScalarKind::Sigma2 => "sigma2",
            ScalarKind::Q4 => "Q4",
            ScalarKind::Q4Reduced => "Q4_reduced",
            ScalarKind::WeylNormSq => "weyl_norm_sq",
            ScalarKind::GaussBonnet4 => "S4",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "scalar_curvature" | "Sc" => ScalarKind::Scalar,
            "J" => ScalarKind::J,
            "sigma1" => ScalarKind::Sigma1,
            "sigma2" => ScalarKind::Sigma2,
            "Q4" => ScalarKind::Q4,
            "Q4_reduced" => ScalarKind::Q4Reduced,
            "weyl_norm_sq" => ScalarKind::WeylNormSq,
            "S4" | "gauss_bonnet_4" => ScalarKind::GaussBonnet4,
            _ => return Err(Error::UnknownName { kind: "quantity", name: name.into() }),
        })
    }

    /// Metric derivatives needed beyond the requested jet order.
    pub fn metric_order_excess(self) -> usize {
        match self {
            ScalarKind::Q4 => 4,
            _ => 2,
        }
    }
}

/// A scalar curvature invariant of the chart metric.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureScalar {
    pub kind: ScalarKind,
}

impl CurvatureScalar {
    pub fn new(kind: ScalarKind) -> Self {
        Self { kind }
    }
}

impl ScalarField for CurvatureScalar {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        let mj = chart.metric_jet(p, order + self.kind.metric_order_excess())?;
        let s = curvature_suite(&mj)?;
        let out = match self.kind {
            ScalarKind::Scalar => s.sc.clone(),
            ScalarKind::J | ScalarKind::Sigma1 => s.j.clone(),
            ScalarKind::Sigma2 => sigma_k(&s, 2)?,
            ScalarKind::Q4 => q4(&s)?,
            ScalarKind::Q4Reduced => {
                let p = s.schouten();
                (&s.j * &s.j).scale(s.n as f64 / 2.0) - super::quantities::sym_norm_sq(p, &s.ginv, s.n).scale(2.0)
            }
            ScalarKind::WeylNormSq => weyl_norm_sq(&s),
            ScalarKind::GaussBonnet4 => gauss_bonnet_s2k(&s, 2)?,
        };
        Ok(out.truncate(order))
    }

    fn label(&self) -> String {
        self.kind.name().into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorKind {
    Metric,
    Ricci,
    Schouten,
    /// `P − J g`.
    Einstein,
    /// The Lanczos tensor, minus the gradient of `∫ S^(4)`.
    Lovelock,
    TraceFreeRicci,
}

impl TensorKind {
    pub fn name(self) -> &'static str {
        match self {
            TensorKind::Metric => "metric",
            TensorKind::Ricci => "ricci",
            TensorKind::Schouten => "schouten",
            TensorKind::Einstein => "einstein",
            TensorKind::Lovelock => "lovelock",
            TensorKind::TraceFreeRicci => "trace_free_ricci",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "metric" => TensorKind::Metric,
            "ricci" => TensorKind::Ricci,
            "schouten" => TensorKind::Schouten,
            "einstein" => TensorKind::Einstein,
            "lovelock" => TensorKind::Lovelock,
            "trace_free_ricci" => TensorKind::TraceFreeRicci,
            _ => return Err(Error::UnknownName { kind: "tensor", name: name.into() }),
        })
    }
}

/// `factor` times a curvature tensor of the chart metric, covariant.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureTensor {
    pub kind: TensorKind,
    pub factor: f64,
}

impl CurvatureTensor {
    pub fn new(kind: TensorKind, factor: f64) -> Self {
        Self { kind, factor }
    }
}

impl SymTensorField for CurvatureTensor {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        if self.kind == TensorKind::Metric {
            let mj = chart.metric_jet(p, order)?;
            return Ok(mj.g.iter().map(|x| x.scale(self.factor)).collect());
        }
        let mj = chart.metric_jet(p, order + 2)?;
        let s = curvature_suite(&mj)?;
        let n = s.n;
        let t: Vec<Jet> = match self.kind {
            TensorKind::Metric => unreachable!(),
            TensorKind::Ricci => s.ric.clone(),
            TensorKind::Schouten => s.schouten().to_vec(),
            TensorKind::Einstein => einstein_tensor(&s),
            TensorKind::Lovelock => lanczos_tensor(&s),
            TensorKind::TraceFreeRicci => {
                let tr = s.sc.scale(1.0 / n as f64);
                s.ric.iter().zip(&s.g).map(|(r, g)| r - &(g * &tr)).collect()
            }
        };
        Ok(t.iter().map(|x| x.scale(self.factor)).collect())
    }

    fn label(&self) -> String {
        if self.factor == 1.0 {
            self.kind.name().into()
        } else {
            format!("{}·{}", self.factor, self.kind.name())
        }
    }
}

/// `g^ab B_ab`.
#[derive(Clone)]
pub struct TraceOf(pub Arc<dyn SymTensorField>);

impl ScalarField for TraceOf {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        let n = chart.dim;
        let mj = chart.metric_jet(p, order)?;
        let ginv = jet::inverse(&mj.g, n);
        let b = self.0.jet(chart, p, order)?;
        let mut s = Jet::zero(n, order);
        for k in 0..n * n {
            s.add_product(&ginv[k], &b[k]);
        }
        Ok(s)
    }

    fn label(&self) -> String {
        format!("tr {}", self.0.label())
    }

    fn support(&self) -> Option<Support> {
        self.0.support()
    }
}

/// `X^a ∂_a V`.
#[derive(Clone)]
pub struct LieDerivative {
    pub field: Arc<dyn VectorField>,
    pub scalar: Arc<dyn ScalarField>,
}

impl ScalarField for LieDerivative {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        let v = self.scalar.jet(chart, p, order + 1)?;
        let x = self.field.jet(chart, p, order)?;
        let mut s = Jet::zero(chart.dim, order);
        for (a, xa) in x.iter().enumerate() {
            s.add_product(xa, &v.derivative(a));
        }
        Ok(s)
    }

    fn label(&self) -> String {
        format!("{}({})", self.field.label(), self.scalar.label())
    }
}

/// `div_g X`.
#[derive(Clone)]
pub struct Divergence(pub Arc<dyn VectorField>);

impl ScalarField for Divergence {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        let mj = chart.metric_jet(p, order + 1)?;
        let x = self.0.jet(chart, p, order + 1)?;
        Ok(operators::divergence_jet(&x, &mj.g, chart.dim))
    }

    fn label(&self) -> String {
        format!("div {}", self.0.label())
    }
}

/// `(div_g X) · V`.
#[derive(Clone)]
pub struct Weighted {
    pub field: Arc<dyn VectorField>,
    pub scalar: Arc<dyn ScalarField>,
}

impl ScalarField for Weighted {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        let d = Divergence(self.field.clone()).jet(chart, p, order)?;
        Ok(&d * &self.scalar.jet(chart, p, order)?)
    }

    fn label(&self) -> String {
        format!("div {} · {}", self.field.label(), self.scalar.label())
    }

    fn support(&self) -> Option<Support> {
        self.scalar.support()
    }
}
