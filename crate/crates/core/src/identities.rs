//! Integral identities as executable checks with refinement history,
//! divergence-theorem calibration and hypothesis gates.
//!
//! A check whose hypotheses fail (a field that is not conformal, a tensor
//! that is not divergence-free) reports [`Verdict::PreconditionFailed`]
//! and never an identity verdict.

use std::sync::Arc;

use crate::curvature::{
    conformal_killing_residual, cov_divergence, divergence, killing_residual, CurvatureScalar, CurvatureTensor, DivergenceMethod,
    LieDerivative, ScalarKind, TensorKind, TraceOf, Weighted,
};
use crate::error::{Error, Result};
use crate::geometry::embedding::{CodazziTensor, MeanCurvature, SecondFundamentalForm};
use crate::geometry::fields::{CurrentField, ScaledVectorField};
use crate::geometry::library::mercator_sphere;
use crate::geometry::{
    sample_points, Chart, ConformalImmersion, EmbeddingSpec, Face, ScalarField, SymTensorField, VectorField, VectorFieldSpec,
};
use crate::integrate::{
    boundary_flux, boundary_flux_vector, build_boundary, build_quadrature, divergence_theorem_check, integrate_on, total_flux,
    QuadratureOptions,
};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The calibration residual is too large for the grid to decide.
    GridLimited,
    PreconditionFailed,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::GridLimited => "grid_limited",
            Verdict::PreconditionFailed => "precondition_failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecord {
    pub level: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `∫ |integrand|` type magnitude used in the relative residual.
    pub scale: f64,
}

impl LevelRecord {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    /// `|lhs − rhs| / max(|lhs|, |rhs|, scale, 1e−12)`.
    pub fn relative(&self) -> f64 {
        self.residual() / self.lhs.abs().max(self.rhs.abs()).max(self.scale).max(SCALE_FLOOR)
    }
}

pub const SCALE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub relative: f64,
    pub tolerance: f64,
    pub levels: Vec<usize>,
    pub history: Vec<LevelRecord>,
    /// Relative divergence-theorem residual of the calibration field.
    pub calibration: Option<f64>,
    /// Hypothesis gates as `(name, value, threshold)`.
    pub gates: Vec<(String, f64, f64)>,
    pub verdict: Verdict,
    pub message: Option<String>,
    pub secondary: Vec<IdentityReport>,
}

impl IdentityReport {
    pub fn from_history(name: &str, history: Vec<LevelRecord>, tolerance: f64, calibration: Option<f64>) -> Self {
        let last = history.last().cloned().expect("at least one level");
        let relative = last.relative();
        let cal_ok = calibration.is_none_or(|c| c <= tolerance / 10.0);
        let verdict = if !cal_ok {
            Verdict::GridLimited
        } else if relative <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            lhs: last.lhs,
            rhs: last.rhs,
            residual: last.residual(),
            relative,
            tolerance,
            levels: history.iter().map(|r| r.level).collect(),
            history,
            calibration,
            gates: Vec::new(),
            verdict,
            message: None,
            secondary: Vec::new(),
        }
    }

    fn precondition(name: &str, tolerance: f64, gates: Vec<(String, f64, f64)>, message: String) -> Self {
        Self {
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            residual: f64::NAN,
            relative: f64::NAN,
            tolerance,
            levels: Vec::new(),
            history: Vec::new(),
            calibration: None,
            gates,
            verdict: Verdict::PreconditionFailed,
            message: Some(message),
            secondary: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// True when each refinement at least halves the relative residual or
    /// lands below `floor`.
    pub fn refinement_halves(&self, floor: f64) -> bool {
        self.history.windows(2).all(|w| {
            let (a, b) = (w[0].relative(), w[1].relative());
            b <= 0.5 * a || b <= floor
        })
    }

    /// This report and its secondaries, depth first.
    pub fn flatten(&self) -> Vec<&IdentityReport> {
        let mut out = vec![self];
        for s in &self.secondary {
            out.extend(s.flatten());
        }
        out
    }
}

/// A chart with a vector field and the sampling used by the gates.
#[derive(Clone)]
pub struct ScenarioBinding {
    pub chart: Chart,
    pub field: VectorFieldSpec,
    pub samples: Vec<Vec<f64>>,
}

impl ScenarioBinding {
    /// Gate samples: `count` points drawn from the region with a 5% margin.
    pub fn new(chart: Chart, field: VectorFieldSpec, count: usize, seed: u64) -> Self {
        let samples = sample_points(&chart, count, 0.05, seed);
        Self { chart, field, samples }
    }

    pub fn conformal_gate(&self) -> Result<f64> {
        conformal_killing_residual(&self.field, &self.chart, &self.samples)
    }

    pub fn killing_gate(&self) -> Result<f64> {
        killing_residual(&self.field, &self.chart, &self.samples)
    }
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub levels: Vec<usize>,
    pub tol: f64,
    pub gate_tol: f64,
    pub reduce: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { levels: vec![2, 3, 4], tol: 1e-6, gate_tol: 1e-6, reduce: false }
    }
}

impl CheckOptions {
    pub fn new(levels: Vec<usize>, tol: f64) -> Self {
        Self { levels, tol, ..Self::default() }
    }

    pub fn reduced(mut self) -> Self {
        self.reduce = true;
        self
    }

    fn quadrature(&self) -> QuadratureOptions {
        QuadratureOptions { reduce: self.reduce, ..QuadratureOptions::default() }
    }

    fn check(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidParams("no grid levels given".into()));
        }
        Ok(())
    }
}

/// `sup |∇^a B_ab|_g` over the samples.
pub fn conservation_gate(b: &dyn SymTensorField, chart: &Chart, samples: &[Vec<f64>]) -> Result<f64> {
    let n = chart.dim;
    samples.iter().try_fold(0.0f64, |m, p| {
        let d = cov_divergence(b, chart, p, DivergenceMethod::Analytic)?;
        let ginv = chart.metric_jet(p, 0)?.inverse_values();
        Ok(m.max(linalg::bilinear(&ginv, &d, &d, n).max(0.0).sqrt()))
    })
}

/// `sup |tr_g B|` over the samples.
pub fn trace_gate(b: &dyn SymTensorField, chart: &Chart, samples: &[Vec<f64>]) -> Result<f64> {
    let n = chart.dim;
    samples.iter().try_fold(0.0f64, |m, p| {
        let ginv = chart.metric_jet(p, 0)?.inverse_values();
        Ok(m.max(linalg::trace(&b.values(chart, p)?, &ginv, n).abs()))
    })
}

fn calibrate(chart: &Chart, y: Arc<dyn VectorField>, level: usize, opts: &CheckOptions) -> Result<f64> {
    let c = divergence_theorem_check(chart, y, level, &opts.quadrature())?;
    Ok(c.residual / c.scale.max(SCALE_FLOOR))
}

fn gate_list(entries: &[(&str, f64, f64)]) -> Vec<(String, f64, f64)> {
    entries.iter().map(|(n, v, t)| (n.to_string(), *v, *t)).collect()
}

fn failed_gate(gates: &[(String, f64, f64)]) -> Option<String> {
    gates.iter().find(|(_, v, t)| !(v <= t)).map(|(n, v, t)| format!("gate `{n}` failed: {v:.3e} exceeds {t:.3e}"))
}

/// Both forms of the Kazdan-Warner identity on a closed chart:
/// `∫ ℒ_X V dv = 0` as the primary report, `∫ (div X) V dv = 0` and the
/// integration-by-parts pairing of the two as secondaries.
pub fn kazdan_warner(binding: &ScenarioBinding, v: Arc<dyn ScalarField>, opts: &CheckOptions) -> Result<IdentityReport> {
    opts.check()?;
    let chart = &binding.chart;
    if !chart.is_closed() {
        return Err(Error::Precondition(format!("kazdan_warner needs a closed chart; `{}` has boundary faces", chart.label)));
    }
    let name = format!("kazdan_warner[{}]", v.label());
    let gates = gate_list(&[("conformal_killing", binding.conformal_gate()?, opts.gate_tol)]);
    if let Some(msg) = failed_gate(&gates) {
        return Ok(IdentityReport::precondition(&name, opts.tol, gates, msg));
    }
    let x: Arc<dyn VectorField> = Arc::new(binding.field.clone());
    let lie = LieDerivative { field: x.clone(), scalar: v.clone() };
    let weighted = Weighted { field: x.clone(), scalar: v.clone() };
    let q = opts.quadrature().with_support(v.support());
    let mut lie_hist = Vec::new();
    let mut div_hist = Vec::new();
    let mut ibp_hist = Vec::new();
    for &level in &opts.levels {
        let grid = build_quadrature(chart, level, &q)?;
        let (l, la) = integrate_on(&grid, chart, &lie)?;
        let (w, wa) = integrate_on(&grid, chart, &weighted)?;
        lie_hist.push(LevelRecord { level, lhs: l, rhs: 0.0, scale: la });
        div_hist.push(LevelRecord { level, lhs: w, rhs: 0.0, scale: wa });
        ibp_hist.push(LevelRecord { level, lhs: w, rhs: -l, scale: la.max(wa) });
    }
    let last = *opts.levels.last().expect("checked");
    let y: Arc<dyn VectorField> = Arc::new(ScaledVectorField { scalar: v.clone(), field: x });
    let calibration = calibrate(chart, y, last, opts)?;
    let mut report = IdentityReport::from_history(&name, lie_hist, opts.tol, Some(calibration));
    report.gates = gates;
    report.secondary.push(IdentityReport::from_history(
        &format!("{name}.divergence_form"),
        div_hist,
        opts.tol,
        Some(calibration),
    ));
    report.secondary.push(IdentityReport::from_history(&format!("{name}.integration_by_parts"), ibp_hist, opts.tol / 10.0, None));
    Ok(report)
}

/// `∫_M ℒ_X V dv = −n ∫_∂M B°(X, ν) dσ` with `V = tr_g B`, for a
/// divergence-free `B` and conformal `X`. The pairing
/// `n ∫_∂M B(X, ν) dσ = ∫_M V div X dv` is reported as a secondary.
///
/// The region's faces play the role of the support boundary: `B` need not
/// vanish on them.
pub fn pohozaev_schoen(binding: &ScenarioBinding, b: Arc<dyn SymTensorField>, opts: &CheckOptions) -> Result<IdentityReport> {
    opts.check()?;
    let chart = &binding.chart;
    let name = format!("pohozaev_schoen[{}]", b.label());
    let gates = gate_list(&[
        ("conformal_killing", binding.conformal_gate()?, opts.gate_tol),
        ("conservation", conservation_gate(b.as_ref(), chart, &binding.samples)?, opts.gate_tol),
    ]);
    if let Some(msg) = failed_gate(&gates) {
        return Ok(IdentityReport::precondition(&name, opts.tol, gates, msg));
    }
    let n = chart.dim as f64;
    let x: Arc<dyn VectorField> = Arc::new(binding.field.clone());
    let v: Arc<dyn ScalarField> = Arc::new(TraceOf(b.clone()));
    let lie = LieDerivative { field: x.clone(), scalar: v.clone() };
    let weighted = Weighted { field: x.clone(), scalar: v.clone() };
    let trace_free = TraceFreePart(b.clone());
    let q = opts.quadrature().with_support(b.support());
    let mut main = Vec::new();
    let mut prelim = Vec::new();
    for &level in &opts.levels {
        let grid = build_quadrature(chart, level, &q)?;
        let (l, la) = integrate_on(&grid, chart, &lie)?;
        let (w, wa) = integrate_on(&grid, chart, &weighted)?;
        let (f0, f0a) = total_flux(chart, level, &q, |g| boundary_flux(g, chart, &trace_free, x.as_ref()))?;
        let (f, fa) = total_flux(chart, level, &q, |g| boundary_flux(g, chart, b.as_ref(), x.as_ref()))?;
        main.push(LevelRecord { level, lhs: l, rhs: -n * f0, scale: la.max(n * f0a) });
        prelim.push(LevelRecord { level, lhs: n * f, rhs: w, scale: wa.max(n * fa) });
    }
    let last = *opts.levels.last().expect("checked");
    let current: Arc<dyn VectorField> = Arc::new(CurrentField { tensor: b.clone(), field: x });
    let calibration = calibrate(chart, current, last, opts)?;
    let mut report = IdentityReport::from_history(&name, main, opts.tol, Some(calibration));
    report.gates = gates;
    report.secondary.push(IdentityReport::from_history(&format!("{name}.trace_pairing"), prelim, opts.tol, Some(calibration)));
    Ok(report)
}

/// `B° = B − (1/n) g tr_g B`.
#[derive(Clone)]
pub struct TraceFreePart(pub Arc<dyn SymTensorField>);

impl SymTensorField for TraceFreePart {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<crate::jet::Jet>> {
        let n = chart.dim;
        let g = chart.metric_jet(p, order)?.g;
        let tr = TraceOf(self.0.clone()).jet(chart, p, order)?.scale(1.0 / n as f64);
        Ok(self.0.jet(chart, p, order)?.iter().zip(&g).map(|(b, gij)| b - &(gij * &tr)).collect())
    }

    fn label(&self) -> String {
        format!("{}°", self.0.label())
    }

    fn support(&self) -> Option<crate::geometry::fields::Support> {
        self.0.support()
    }
}

/// `∫ ℒ_X Sc dv = (2n/(n−2)) ∫_∂M (Ric − (1/n) Sc g)(X, ν) dσ`.
///
/// A secondary report compares both sides with the Pohozaev-Schoen form for
/// `B = −2(P − J g)`, whose trace is `Sc`, on the same grids.
pub fn schoen_scalar(binding: &ScenarioBinding, opts: &CheckOptions) -> Result<IdentityReport> {
    opts.check()?;
    let chart = &binding.chart;
    let n = chart.dim;
    if n < 3 {
        return Err(Error::Precondition("schoen_scalar needs n ≥ 3".into()));
    }
    let name = "schoen_scalar".to_string();
    let gates = gate_list(&[("conformal_killing", binding.conformal_gate()?, opts.gate_tol)]);
    if let Some(msg) = failed_gate(&gates) {
        return Ok(IdentityReport::precondition(&name, opts.tol, gates, msg));
    }
    let nf = n as f64;
    let x: Arc<dyn VectorField> = Arc::new(binding.field.clone());
    let sc: Arc<dyn ScalarField> = Arc::new(CurvatureScalar::new(ScalarKind::Scalar));
    let lie = LieDerivative { field: x.clone(), scalar: sc };
    let ric0 = CurvatureTensor::new(TensorKind::TraceFreeRicci, 1.0);
    let q = opts.quadrature();
    let mut hist = Vec::new();
    for &level in &opts.levels {
        let grid = build_quadrature(chart, level, &q)?;
        let (l, la) = integrate_on(&grid, chart, &lie)?;
        let (f, fa) = total_flux(chart, level, &q, |g| boundary_flux(g, chart, &ric0, x.as_ref()))?;
        let c = 2.0 * nf / (nf - 2.0);
        hist.push(LevelRecord { level, lhs: l, rhs: c * f, scale: la.max(c * fa) });
    }
    let last = *opts.levels.last().expect("checked");
    let b: Arc<dyn SymTensorField> = Arc::new(CurvatureTensor::new(TensorKind::Einstein, -2.0));
    let current: Arc<dyn VectorField> = Arc::new(CurrentField { tensor: b.clone(), field: x });
    let calibration = calibrate(chart, current, last, opts)?;
    let ps = pohozaev_schoen(binding, b, &CheckOptions { levels: vec![last], ..opts.clone() })?;
    let mine = hist.last().cloned().expect("checked");
    let mut report = IdentityReport::from_history(&name, hist, opts.tol, Some(calibration));
    report.gates = gates;
    if ps.verdict != Verdict::PreconditionFailed {
        let agree = [
            LevelRecord { level: last, lhs: mine.lhs, rhs: ps.lhs, scale: mine.scale },
            LevelRecord { level: last, lhs: mine.rhs, rhs: ps.rhs, scale: mine.scale },
        ];
        let worst = agree.iter().max_by(|a, b| a.relative().total_cmp(&b.relative())).cloned().expect("two");
        report.secondary.push(IdentityReport::from_history(
            &format!("{name}.agrees_with_pohozaev_schoen"),
            vec![worst],
            1e-8,
            None,
        ));
    }
    report.secondary.push(ps);
    Ok(report)
}

/// Which coordinate hypersurfaces carry the homologous fluxes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hypersurfaces {
    pub axis: usize,
    pub first: f64,
    pub second: f64,
}

/// Flux of `J^a = B^a_b X^b` through two coordinate hypersurfaces
/// `x[axis] = first` and `x[axis] = second`, oriented towards increasing
/// `x[axis]`. Requires `X` Killing, or `X` conformal with `B` trace-free.
/// A secondary reports `sup |div J|` over the gate samples against 0.
pub fn conserved_current_flux(
    binding: &ScenarioBinding,
    b: Arc<dyn SymTensorField>,
    surfaces: Hypersurfaces,
    opts: &CheckOptions,
) -> Result<IdentityReport> {
    opts.check()?;
    let chart = &binding.chart;
    let name = format!("conserved_current_flux[{}]", b.label());
    let killing = binding.killing_gate()?;
    let conservation = conservation_gate(b.as_ref(), chart, &binding.samples)?;
    let mut gates = gate_list(&[("conservation", conservation, opts.gate_tol)]);
    if killing <= opts.gate_tol {
        gates.push(("killing".into(), killing, opts.gate_tol));
    } else {
        gates.push(("conformal_killing".into(), binding.conformal_gate()?, opts.gate_tol));
        gates.push(("trace".into(), trace_gate(b.as_ref(), chart, &binding.samples)?, opts.gate_tol));
    }
    if let Some(msg) = failed_gate(&gates) {
        return Ok(IdentityReport::precondition(&name, opts.tol, gates, msg));
    }
    let Hypersurfaces { axis, first, second } = surfaces;
    let x: Arc<dyn VectorField> = Arc::new(binding.field.clone());
    let current: Arc<dyn VectorField> = Arc::new(CurrentField { tensor: b.clone(), field: x.clone() });
    let q = opts.quadrature();
    let mut hist = Vec::new();
    for &level in &opts.levels {
        let flux = |value: f64| -> Result<(f64, f64)> {
            let grid = build_boundary(chart, &Face { axis, value, orientation: 1.0 }, level, &q)?;
            boundary_flux_vector(&grid, chart, current.as_ref())
        };
        let (i1, a1) = flux(first)?;
        let (i2, a2) = flux(second)?;
        hist.push(LevelRecord { level, lhs: i1, rhs: i2, scale: a1.max(a2) });
    }
    let last = *opts.levels.last().expect("checked");
    let between = chart.subregion(axis, first.min(second), first.max(second))?;
    let calibration = calibrate(&between, current.clone(), last, opts)?;
    let mut report = IdentityReport::from_history(&name, hist, opts.tol, Some(calibration));
    report.gates = gates;
    let mut sup = 0.0f64;
    for p in &binding.samples {
        sup = sup.max(divergence(current.as_ref(), chart, p)?.abs());
    }
    let mut pointwise = IdentityReport::from_history(
        &format!("{name}.pointwise_divergence"),
        vec![LevelRecord { level: last, lhs: sup, rhs: 0.0, scale: 0.0 }],
        opts.tol,
        None,
    );
    pointwise.relative = sup;
    pointwise.verdict = if sup <= opts.tol { Verdict::Pass } else { Verdict::Fail };
    report.secondary.push(pointwise);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodazziReport {
    pub embedding: String,
    /// `sup |∇^a II_ab − n ∇_b H|_g`.
    pub codazzi: f64,
    /// `sup |∇^a (II − n H g)_ab|_g`.
    pub conservation: f64,
    pub samples: usize,
}

/// Contracted Codazzi equation and conservation of `II − n H g` at the
/// sample points, with derivatives by the given method.
pub fn codazzi_check(e: &EmbeddingSpec, samples: &[Vec<f64>], method: DivergenceMethod) -> Result<CodazziReport> {
    let chart = e.chart();
    let n = chart.dim;
    let ii = SecondFundamentalForm(e.clone());
    let b = CodazziTensor(e.clone());
    let h = MeanCurvature(e.clone());
    let mut codazzi = 0.0f64;
    let mut conservation = 0.0f64;
    for p in samples {
        e.check_immersion(p)?;
        let ginv = chart.metric_jet(p, 0)?.inverse_values();
        let norm = |v: &[f64]| linalg::bilinear(&ginv, v, v, n).max(0.0).sqrt();
        let dii = cov_divergence(&ii, &chart, p, method)?;
        let dh = h.jet(&chart, p, 1)?.gradient();
        let r: Vec<f64> = dii.iter().zip(&dh).map(|(a, b)| a - n as f64 * b).collect();
        codazzi = codazzi.max(norm(&r));
        conservation = conservation.max(norm(&cov_divergence(&b, &chart, p, method)?));
    }
    Ok(CodazziReport { embedding: e.label.clone(), codazzi, conservation, samples: samples.len() })
}

/// `∫_{S²} ℒ_X H dv_g = 0` for a conformal immersion, with `dv_g` the
/// pullback measure and `X` conformal on the round sphere in Mercator
/// coordinates. The relative residual is taken against `∫ |ℒ_X H| dv_g`.
pub fn mean_curvature_kw(immersion: &ConformalImmersion, x: VectorFieldSpec, opts: &CheckOptions) -> Result<IdentityReport> {
    opts.check()?;
    let name = format!("mean_curvature_kw[{}]", x.label);
    let round = ScenarioBinding::new(mercator_sphere(), x.clone(), 64, 7);
    let gates = gate_list(&[
        ("conformality", immersion.conformality_residual, opts.gate_tol),
        ("conformal_killing", round.conformal_gate()?, opts.gate_tol),
    ]);
    if let Some(msg) = failed_gate(&gates) {
        return Ok(IdentityReport::precondition(&name, opts.tol, gates, msg));
    }
    let chart = immersion.embedding.chart();
    let h: Arc<dyn ScalarField> = Arc::new(MeanCurvature(immersion.embedding.clone()));
    let xf: Arc<dyn VectorField> = Arc::new(x);
    let lie = LieDerivative { field: xf.clone(), scalar: h.clone() };
    let q = opts.quadrature();
    let mut hist = Vec::new();
    for &level in &opts.levels {
        let grid = build_quadrature(&chart, level, &q)?;
        let (l, la) = integrate_on(&grid, &chart, &lie)?;
        hist.push(LevelRecord { level, lhs: l, rhs: 0.0, scale: la });
    }
    let last = *opts.levels.last().expect("checked");
    let y: Arc<dyn VectorField> = Arc::new(ScaledVectorField { scalar: h, field: xf });
    let calibration = calibrate(&chart, y, last, opts)?;
    let mut report = IdentityReport::from_history(&name, hist, opts.tol, Some(calibration));
    report.gates = gates;
    Ok(report)
}
