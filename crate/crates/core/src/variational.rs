//! Action functionals, their total and conformal Gateaux derivatives, and
//! checks that a candidate tensor is the gradient of an action.
//!
//! A gradient `B` of `S` satisfies `S′(g)(h) = ∫ (h, B) dv` for compactly
//! supported `h`, where `(h, B) = h_ab B^ab`. Overall constants of closed
//! forms are fitted rather than assumed.

use std::sync::Arc;

use crate::curvature::{christoffel, curvature_suite, lanczos_tensor, lie_metric_jets, CurvatureScalar, ScalarKind};
use crate::error::{Error, Result};
use crate::geometry::fields::Support;
use crate::geometry::{conformal_rescale, AnalyticScalar, Bump, Chart, MetricJet, ScalarField, SymTensorField, VectorFieldSpec};
use crate::integrate::{build_quadrature, integrate_on, integrate_pointwise, Integral, QuadratureGrid, QuadratureOptions};
use crate::jet::{self, Jet};
use crate::linalg;

/// `prefactor · ∫ L dv`.
#[derive(Clone)]
pub struct ActionFunctional {
    pub label: String,
    pub lagrangian: Arc<dyn ScalarField>,
    pub prefactor: f64,
    /// `ℓ` with `L[A²g] = A^ℓ L[g]`, when `L` has a weight.
    pub weight: Option<i32>,
}

impl std::fmt::Debug for ActionFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ActionFunctional({}, prefactor {})", self.label, self.prefactor)
    }
}

pub const ACTION_NAMES: &[&str] = &["volume", "einstein_hilbert", "gauss_bonnet_4", "q4_action", "scalar_field_energy"];

fn kind_weight(kind: ScalarKind) -> i32 {
    match kind {
        ScalarKind::Scalar | ScalarKind::J | ScalarKind::Sigma1 => -2,
        _ => -4,
    }
}

impl ActionFunctional {
    pub fn new(label: impl Into<String>, lagrangian: Arc<dyn ScalarField>, prefactor: f64, weight: Option<i32>) -> Self {
        Self { label: label.into(), lagrangian, prefactor, weight }
    }

    pub fn volume() -> Self {
        Self::new("volume", Arc::new(AnalyticScalar::constant(1.0)), 1.0, Some(0))
    }

    /// `∫ Sc dv`.
    pub fn einstein_hilbert() -> Self {
        Self::new("einstein_hilbert", Arc::new(CurvatureScalar::new(ScalarKind::Scalar)), 1.0, Some(-2))
    }

    /// `2 ∫ S^(4) dv`. Topological when `n = 4`, so its derivatives vanish there.
    pub fn gauss_bonnet_4() -> Self {
        Self::new("gauss_bonnet_4", Arc::new(CurvatureScalar::new(ScalarKind::GaussBonnet4)), 2.0, Some(-4))
    }

    /// `(n − 4)^{-1} ∫ Q₄ dv`. The Lagrangian omits the divergence `−ΔJ`,
    /// which changes neither the action on closed manifolds nor any
    /// derivative along compactly supported perturbations.
    pub fn q4_action(n: usize) -> Result<Self> {
        if n == 4 {
            return Err(Error::InvalidParams("q4_action is undefined at the critical dimension n = 4".into()));
        }
        Ok(Self::new("q4_action", Arc::new(CurvatureScalar::new(ScalarKind::Q4Reduced)), 1.0 / (n as f64 - 4.0), Some(-4)))
    }

    /// `(n + ℓ)^{-1} ∫ V dv` for an invariant of weight `ℓ ≠ −n`.
    pub fn self_action(kind: ScalarKind, n: usize) -> Result<Self> {
        let l = kind_weight(kind);
        let d = n as i32 + l;
        if d == 0 {
            return Err(Error::InvalidParams(format!("{} has the critical weight {l} in dimension {n}", kind.name())));
        }
        Ok(Self::new(format!("self_action({})", kind.name()), Arc::new(CurvatureScalar::new(kind)), 1.0 / d as f64, Some(l)))
    }

    /// `∫ ½|dφ|² dv` with `φ` held fixed.
    pub fn scalar_field_energy(phi: Arc<dyn ScalarField>) -> Self {
        Self::new("scalar_field_energy", Arc::new(DirichletDensity(phi)), 1.0, None)
    }

    /// Scenario vocabulary; `scalar_field_energy` needs `phi`.
    pub fn by_name(name: &str, n: usize, phi: Option<Arc<dyn ScalarField>>) -> Result<Self> {
        match name {
            "volume" => Ok(Self::volume()),
            "einstein_hilbert" => Ok(Self::einstein_hilbert()),
            "gauss_bonnet_4" => Ok(Self::gauss_bonnet_4()),
            "q4_action" => Self::q4_action(n),
            "scalar_field_energy" => phi
                .map(Self::scalar_field_energy)
                .ok_or_else(|| Error::InvalidParams("scalar_field_energy needs a field φ".into())),
            _ => Err(Error::UnknownName { kind: "action", name: format!("{name} (expected one of {ACTION_NAMES:?})") }),
        }
    }

    /// `L · √det g` at `p`, without the prefactor.
    pub fn density(&self, chart: &Chart, p: &[f64]) -> Result<f64> {
        let l = self.lagrangian.value(chart, p)?;
        Ok(l * chart.metric_jet(p, 0)?.volume_density())
    }

    pub fn value(&self, chart: &Chart, level: usize, opts: &QuadratureOptions) -> Result<Integral> {
        let mut i = crate::integrate::integrate_scalar(chart, self.lagrangian.as_ref(), level, opts)?;
        i.value *= self.prefactor;
        i.error *= self.prefactor.abs();
        i.abs *= self.prefactor.abs();
        Ok(i)
    }
}

/// `½ g^ab ∂_aφ ∂_bφ`.
#[derive(Clone)]
pub struct DirichletDensity(pub Arc<dyn ScalarField>);

impl ScalarField for DirichletDensity {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        let n = chart.dim;
        let ginv = jet::inverse(&chart.metric_jet(p, order)?.g, n);
        let phi = self.0.jet(chart, p, order + 1)?;
        let d: Vec<Jet> = (0..n).map(|a| phi.derivative(a)).collect();
        let mut s = Jet::zero(n, order);
        for a in 0..n {
            for b in 0..n {
                s.add_product(&ginv[a * n + b], &(&d[a] * &d[b]));
            }
        }
        Ok(s.scale(0.5))
    }

    fn label(&self) -> String {
        format!("½|d{}|²", self.0.label())
    }
}

#[derive(Clone)]
enum Pattern {
    Zero,
    /// `ψ (e_i ⊗ e_j + e_j ⊗ e_i)`, or `ψ e_i ⊗ e_i` on the diagonal.
    Component(usize, usize),
    Metric,
    Axis0,
    /// `ψ g` with row and column 0 removed.
    Slice,
    /// `2ψ g`.
    Conformal,
    Lie(VectorFieldSpec),
}

/// A symmetric perturbation `h`, compactly supported when `support` is set.
#[derive(Clone)]
pub struct PerturbationField {
    pub label: String,
    pattern: Pattern,
    profile: AnalyticScalar,
    pub support: Option<Support>,
}

impl PerturbationField {
    fn from_bump(label: String, pattern: Pattern, bump: &Bump, dim: usize) -> Self {
        Self { label, pattern, profile: bump.as_scalar(dim), support: Some(bump.support_box(dim)) }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            label: "zero".into(),
            pattern: Pattern::Zero,
            profile: AnalyticScalar::constant(0.0),
            support: Some(vec![None; dim]),
        }
    }

    pub fn component(bump: &Bump, i: usize, j: usize, dim: usize) -> Self {
        Self::from_bump(format!("e({i},{j})·{}", bump_label(bump)), Pattern::Component(i.min(j), i.max(j)), bump, dim)
    }

    pub fn metric(bump: &Bump, dim: usize) -> Self {
        Self::from_bump(format!("g·{}", bump_label(bump)), Pattern::Metric, bump, dim)
    }

    pub fn axis0(bump: &Bump, dim: usize) -> Self {
        Self::from_bump(format!("dx0²·{}", bump_label(bump)), Pattern::Axis0, bump, dim)
    }

    pub fn slice(bump: &Bump, dim: usize) -> Self {
        Self::from_bump(format!("g_slice·{}", bump_label(bump)), Pattern::Slice, bump, dim)
    }

    /// `h = 2ω g`, the tangent of `e^{2tω} g`.
    pub fn conformal(omega: &AnalyticScalar) -> Self {
        Self {
            label: format!("2·{}·g", omega.label),
            pattern: Pattern::Conformal,
            profile: omega.clone(),
            support: omega.support.clone(),
        }
    }

    /// `h = ℒ_X g`; `support` must contain the support of `X`.
    pub fn lie_derivative(x: VectorFieldSpec, support: Option<Support>) -> Self {
        Self { label: format!("ℒ_({}) g", x.label), pattern: Pattern::Lie(x), profile: AnalyticScalar::constant(1.0), support }
    }

    /// The probe patterns that keep cohomogeneity-one data symmetric, by name:
    /// `axis0`, `slice`, `metric`.
    pub fn symmetric(name: &str, bump: &Bump, dim: usize) -> Result<Self> {
        match name {
            "axis0" => Ok(Self::axis0(bump, dim)),
            "slice" => Ok(Self::slice(bump, dim)),
            "metric" => Ok(Self::metric(bump, dim)),
            _ => Err(Error::UnknownName { kind: "probe", name: format!("{name} (expected axis0, slice or metric)") }),
        }
    }
}

fn bump_label(b: &Bump) -> String {
    let parts: Vec<String> = b.factors.iter().map(|(a, c, w)| format!("x{a}:{c}±{w}")).collect();
    format!("bump[{}]", parts.join(","))
}

impl SymTensorField for PerturbationField {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = chart.dim;
        let zero = Jet::zero(n, order);
        let mut out = vec![zero; n * n];
        let psi = || self.profile.jet(chart, p, order);
        match &self.pattern {
            Pattern::Zero => {}
            Pattern::Component(i, j) => {
                let v = psi()?;
                out[i * n + j] = v.clone();
                out[j * n + i] = v;
            }
            Pattern::Axis0 => out[0] = psi()?,
            Pattern::Metric | Pattern::Slice | Pattern::Conformal => {
                let v = psi()?;
                let v = if matches!(self.pattern, Pattern::Conformal) { v.scale(2.0) } else { v };
                let g = chart.metric_jet(p, order)?.g;
                for a in 0..n {
                    for b in 0..n {
                        if matches!(self.pattern, Pattern::Slice) && (a == 0 || b == 0) {
                            continue;
                        }
                        out[a * n + b] = &g[a * n + b] * &v;
                    }
                }
            }
            Pattern::Lie(x) => {
                let g = chart.metric_jet(p, order + 1)?.g;
                out = lie_metric_jets(&x.jets(p, order + 1), &g, n);
            }
        }
        Ok(out)
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn support(&self) -> Option<Support> {
        self.support.clone()
    }
}

/// Step schedule and grid for Gateaux derivatives.
#[derive(Clone, Debug)]
pub struct GateauxOptions {
    /// Decreasing central-difference steps.
    pub steps: Vec<f64>,
    pub level: usize,
    /// Integrate along axis 0 only; valid for cohomogeneity-one data.
    pub reduce: bool,
    /// Gauss-Legendre nodes per panel overriding the level.
    pub nodes: Option<usize>,
}

impl Default for GateauxOptions {
    fn default() -> Self {
        Self { steps: vec![1e-3, 5e-4, 2.5e-4], level: 2, reduce: false, nodes: None }
    }
}

impl GateauxOptions {
    pub fn at_level(level: usize) -> Self {
        Self { level, ..Self::default() }
    }

    pub fn reduced(mut self) -> Self {
        self.reduce = true;
        self
    }

    fn quadrature(&self, support: Option<Support>) -> QuadratureOptions {
        let extra_breaks = support
            .iter()
            .flatten()
            .enumerate()
            .filter_map(|(axis, s)| s.map(|(a, b)| [(axis, a), (axis, b)]))
            .flatten()
            .collect();
        QuadratureOptions { reduce: self.reduce, extra_breaks, support, nodes: self.nodes }
    }

    fn check(&self) -> Result<()> {
        let ok = self.steps.len() >= 2
            && self.steps.iter().all(|&t| t > 0.0 && t.is_finite())
            && self.steps.windows(2).all(|w| w[1] < w[0]);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("step schedule must hold ≥ 2 decreasing positive steps, got {:?}", self.steps)))
        }
    }
}

/// A Richardson-extrapolated derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative {
    pub value: f64,
    /// Difference of the last two extrapolants.
    pub step_error: f64,
    /// Central differences, one per step.
    pub differences: Vec<f64>,
    pub extrapolants: Vec<f64>,
}

fn richardson(steps: &[f64], d: &[f64]) -> Derivative {
    let extrapolants: Vec<f64> = (1..d.len())
        .map(|k| {
            let r = steps[k - 1] / steps[k];
            d[k] + (d[k] - d[k - 1]) / (r * r - 1.0)
        })
        .collect();
    let last = *extrapolants.last().expect("at least two steps");
    let step_error =
        if extrapolants.len() >= 2 { (last - extrapolants[extrapolants.len() - 2]).abs() } else { (last - d[d.len() - 1]).abs() };
    Derivative { value: last, step_error, differences: d.to_vec(), extrapolants }
}

fn check_support_inside(chart: &Chart, support: &Option<Support>) -> Result<()> {
    let Some(s) = support else { return Ok(()) };
    for (axis, iv) in s.iter().enumerate() {
        if let Some((a, b)) = iv {
            let (lo, hi) = chart.region[axis];
            if *a < lo || *b > hi {
                return Err(Error::Precondition(format!(
                    "perturbation support [{a}, {b}] on axis {axis} leaves the region [{lo}, {hi}]"
                )));
            }
        }
    }
    Ok(())
}

/// Central differences of `S` along one-parameter families of charts,
/// integrated together on a shared grid.
fn differentiate(
    s: &ActionFunctional,
    grid: &QuadratureGrid,
    steps: &[f64],
    family: impl Fn(f64) -> Chart,
) -> Result<Derivative> {
    let charts: Vec<(Chart, Chart)> = steps.iter().map(|&t| (family(t), family(-t))).collect();
    let sums = integrate_pointwise(grid, steps.len(), &|p| {
        charts.iter().map(|(plus, minus)| Ok(s.density(plus, p)? - s.density(minus, p)?)).collect()
    })?;
    let d: Vec<f64> = sums.iter().zip(steps).map(|(v, t)| s.prefactor * v / (2.0 * t)).collect();
    Ok(richardson(steps, &d))
}

fn positivity_check(chart: &Chart, grid: &QuadratureGrid, h: &Arc<dyn SymTensorField>, t: f64) -> Result<()> {
    let (plus, minus) = (chart.perturbed(h.clone(), t), chart.perturbed(h.clone(), -t));
    for p in &grid.nodes {
        for c in [&plus, &minus] {
            match c.metric_jet(p, 0) {
                Err(Error::NotPositiveDefinite(q)) => {
                    return Err(Error::Precondition(format!("g + t·h is not positive definite at {q:?} for |t| = {t}")))
                }
                Err(e) => return Err(e),
                Ok(_) => {}
            }
        }
    }
    Ok(())
}

/// `S′(g)(h) = d/dt S(g + t h)|₀` by central differences and Richardson
/// extrapolation, integrated over the support of `h`.
pub fn gateaux_total(s: &ActionFunctional, chart: &Chart, h: &PerturbationField, opts: &GateauxOptions) -> Result<Derivative> {
    opts.check()?;
    check_support_inside(chart, &h.support)?;
    let grid = build_quadrature(chart, opts.level, &opts.quadrature(h.support.clone()))?;
    let hf: Arc<dyn SymTensorField> = Arc::new(h.clone());
    positivity_check(chart, &grid, &hf, opts.steps[0])?;
    differentiate(s, &grid, &opts.steps, |t| chart.perturbed(hf.clone(), t))
}

/// `S•(g)(ω) = d/dt S(e^{2tω} g)|₀`, integrated over the support of `ω`.
pub fn conformal_gateaux(
    s: &ActionFunctional,
    chart: &Chart,
    omega: &AnalyticScalar,
    opts: &GateauxOptions,
) -> Result<Derivative> {
    opts.check()?;
    check_support_inside(chart, &omega.support)?;
    let grid = build_quadrature(chart, opts.level, &opts.quadrature(omega.support.clone()))?;
    differentiate(s, &grid, &opts.steps, |t| {
        let w = omega.clone();
        let mut scaled = AnalyticScalar::new(format!("{t}·{}", omega.label), move |x: &[Jet]| w.eval(x).scale(t));
        scaled.max_order = omega.max_order;
        conformal_rescale(chart, &scaled)
    })
}

/// `∫ (h, B) dv` over the support of `h`.
pub fn pairing(chart: &Chart, h: &PerturbationField, b: &dyn SymTensorField, opts: &GateauxOptions) -> Result<f64> {
    let grid = build_quadrature(chart, opts.level, &opts.quadrature(h.support.clone()))?;
    let n = chart.dim;
    let v = integrate_pointwise(&grid, 1, &|p| {
        let mj = chart.metric_jet(p, 0)?;
        let ginv = mj.inverse_values();
        let hv = h.values(chart, p)?;
        let bv = b.values(chart, p)?;
        Ok(vec![linalg::inner(&hv, &bv, &ginv, n) * mj.volume_density()])
    })?;
    Ok(v[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    pub label: String,
    pub derivative: Derivative,
    /// `∫ (h, B) dv` for the unscaled candidate.
    pub pairing: f64,
}

/// `S•(ω)` against `2 ∫ ω tr_g(c B) dv`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceCheck {
    pub conformal: Derivative,
    pub predicted: f64,
    /// Relative discrepancy.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Consistency {
    /// Least-squares `c` in `S′(g)(h) ≈ c ∫ (h, B) dv`.
    pub constant: f64,
    /// `max_k |D_k − c P_k| / max_k max(|D_k|, |c P_k|)`.
    pub residual: f64,
    pub probes: Vec<ProbeResult>,
    pub trace: Option<TraceCheck>,
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Certifies `c·B` as the gradient of `S` over the probes, fitting `c`.
/// With `omega`, also compares the conformal derivative with the trace of
/// the fitted gradient.
pub fn gradient_consistency(
    s: &ActionFunctional,
    b: Arc<dyn SymTensorField>,
    chart: &Chart,
    probes: &[PerturbationField],
    omega: Option<&AnalyticScalar>,
    opts: &GateauxOptions,
) -> Result<Consistency> {
    if probes.len() < 3 {
        return Err(Error::Precondition(format!("gradient consistency needs at least 3 probes, got {}", probes.len())));
    }
    for (k, a) in probes.iter().enumerate() {
        if probes[..k].iter().any(|q| q.label == a.label) {
            return Err(Error::Precondition(format!("degenerate probe set: `{}` appears twice", a.label)));
        }
    }
    let mut results = Vec::with_capacity(probes.len());
    for h in probes {
        let derivative = gateaux_total(s, chart, h, opts)?;
        let pairing = pairing(chart, h, b.as_ref(), opts)?;
        results.push(ProbeResult { label: h.label.clone(), derivative, pairing });
    }
    let pp: f64 = results.iter().map(|r| r.pairing * r.pairing).sum();
    let dp: f64 = results.iter().map(|r| r.derivative.value * r.pairing).sum();
    let constant = if pp > 0.0 { dp / pp } else { 0.0 };
    let scale = results.iter().map(|r| r.derivative.value.abs().max((constant * r.pairing).abs())).fold(0.0, f64::max);
    let worst = results.iter().map(|r| (r.derivative.value - constant * r.pairing).abs()).fold(0.0, f64::max);
    let residual = if scale > 0.0 { worst / scale } else { 0.0 };
    let trace = match omega {
        None => None,
        Some(w) => {
            let conformal = conformal_gateaux(s, chart, w, opts)?;
            let h = PerturbationField::conformal(w);
            let predicted = constant * pairing(chart, &h, b.as_ref(), opts)?;
            Some(TraceCheck { residual: relative(conformal.value, predicted), conformal, predicted })
        }
    };
    Ok(Consistency { constant, residual, probes: results, trace })
}

/// `T_ab = ∂_aφ ∂_bφ − ½ |dφ|² g_ab`, optionally made trace-free.
#[derive(Clone)]
pub struct StressEnergy {
    pub phi: Arc<dyn ScalarField>,
    pub trace_free: bool,
}

impl SymTensorField for StressEnergy {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = chart.dim;
        let g = chart.metric_jet(p, order)?.g;
        let ginv = jet::inverse(&g, n);
        let phi = self.phi.jet(chart, p, order + 1)?;
        let d: Vec<Jet> = (0..n).map(|a| phi.derivative(a)).collect();
        let mut norm = Jet::zero(n, order);
        for a in 0..n {
            for b in 0..n {
                norm.add_product(&ginv[a * n + b], &(&d[a] * &d[b]));
            }
        }
        // tr T = (1 − n/2)|dφ|²
        let coeff = if self.trace_free { 1.0 / n as f64 } else { 0.5 };
        let mut t = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                t.push(&(&d[a] * &d[b]) - &(&g[a * n + b] * &norm).scale(coeff));
            }
        }
        Ok(t)
    }

    fn label(&self) -> String {
        let base = format!("T[{}]", self.phi.label());
        if self.trace_free {
            format!("{base}°")
        } else {
            base
        }
    }
}

/// `Δφ = g^ab (∂_a∂_bφ − Γ^c_ab ∂_cφ)`.
#[derive(Clone)]
pub struct Laplacian(pub Arc<dyn ScalarField>);

impl ScalarField for Laplacian {
    fn jet(&self, chart: &Chart, p: &[f64], order: usize) -> Result<Jet> {
        let n = chart.dim;
        let g = chart.metric_jet(p, order + 1)?.g;
        let ginv = jet::inverse(&g, n);
        let gamma = christoffel(&g, &ginv, n);
        let phi = self.0.jet(chart, p, order + 2)?;
        let d: Vec<Jet> = (0..n).map(|a| phi.derivative(a)).collect();
        let mut s = Jet::zero(n, order);
        for a in 0..n {
            for b in 0..n {
                let mut hess = d[a].derivative(b);
                for c in 0..n {
                    hess -= &(&gamma[(c * n + a) * n + b] * &d[c].truncate(order));
                }
                s.add_product(&ginv[a * n + b].truncate(order), &hess);
            }
        }
        Ok(s)
    }

    fn label(&self) -> String {
        format!("Δ{}", self.0.label())
    }
}

/// The stress-energy tensor of `φ` and its Euler-Lagrange residual `Δφ`.
/// `T` is divergence-free wherever `Δφ = 0`.
pub fn stress_energy(phi: Arc<dyn ScalarField>) -> (StressEnergy, Laplacian) {
    (StressEnergy { phi: phi.clone(), trace_free: false }, Laplacian(phi))
}

/// Values of the Lanczos tensor from a metric jet of order ≥ 2. It is
/// minus the gradient of `∫ S^(4) dv` and vanishes identically for `n ≤ 4`.
pub fn lovelock_g4(mj: &MetricJet) -> Result<Vec<f64>> {
    if mj.order < 2 {
        return Err(Error::Precondition(format!("the Lovelock tensor needs a metric jet of order ≥ 2, got {}", mj.order)));
    }
    let s = curvature_suite(&mj.truncated(2))?;
    Ok(lanczos_tensor(&s).iter().map(Jet::value).collect())
}

/// Gradient estimates from narrow bump probes at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    /// Covariant `B_ab(p)` from the narrowest bump.
    pub tensor: Vec<f64>,
    pub widths: Vec<f64>,
    pub per_width: Vec<Vec<f64>>,
    /// Largest entry change between the last two widths; NaN for one width.
    pub accuracy: f64,
    /// Largest Richardson step error among the probes.
    pub step_error: f64,
}

/// Estimates `B_ab(p)` from `S′(g)(ψ e_(ij)) ≈ m B^ij(p) ∫ ψ dv` with
/// `m = 2` off the diagonal, for product bumps of each half-width.
///
/// For second-order Lagrangians the derivative contains `∂²ψ` terms that
/// integrate to zero only when the rule is exact enough on the bump;
/// five nodes per axis (`nodes: Some(5)`) suffice.
pub fn recover_gradient_pointwise(
    s: &ActionFunctional,
    chart: &Chart,
    p: &[f64],
    widths: &[f64],
    opts: &GateauxOptions,
) -> Result<Recovery> {
    let n = chart.dim;
    if widths.is_empty() {
        return Err(Error::InvalidParams("no bump widths given".into()));
    }
    for &w in widths {
        for (k, &(lo, hi)) in chart.region.iter().enumerate() {
            if !(w > 0.0) || p[k] - 3.0 * w <= lo || p[k] + 3.0 * w >= hi {
                return Err(Error::Precondition(format!(
                    "bump of half-width {w} at {p:?} overlaps the boundary margin on axis {k}"
                )));
            }
        }
    }
    let opts = GateauxOptions { reduce: false, ..opts.clone() };
    let g = chart.metric_values(p)?;
    let mut per_width = Vec::with_capacity(widths.len());
    let mut step_error = 0.0f64;
    for &w in widths {
        let bump = Bump::around(p, w);
        let psi = bump.as_scalar(n);
        let grid = build_quadrature(chart, opts.level, &opts.quadrature(psi.support.clone()))?;
        let (mass, _) = integrate_on(&grid, chart, &psi)?;
        let mut upper = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let h = PerturbationField::component(&bump, i, j, n);
                let d = gateaux_total(s, chart, &h, &opts)?;
                step_error = step_error.max(d.step_error);
                let m = if i == j { 1.0 } else { 2.0 };
                let v = d.value / (m * mass);
                upper[i * n + j] = v;
                upper[j * n + i] = v;
            }
        }
        // B_ab = g_ai B^ij g_jb
        let mut lowered = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += g[a * n + i] * upper[i * n + j] * g[j * n + b];
                    }
                }
                lowered[a * n + b] = acc;
            }
        }
        per_width.push(lowered);
    }
    let tensor = per_width.last().expect("non-empty").clone();
    let accuracy = if per_width.len() >= 2 {
        let prev = &per_width[per_width.len() - 2];
        tensor.iter().zip(prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    Ok(Recovery { tensor, widths: widths.to_vec(), per_width, accuracy, step_error })
}

/// `(|B°|_g, |tr_g B| / √n)` for a covariant tensor at a point with metric `g`.
pub fn trace_split(b: &[f64], g: &[f64]) -> (f64, f64) {
    let n = (g.len() as f64).sqrt().round() as usize;
    let ginv = linalg::inverse(g, n).expect("metric is invertible");
    let tf = linalg::trace_free(b, g, &ginv, n);
    let tr = linalg::trace(b, &ginv, n);
    (linalg::inner(&tf, &tf, &ginv, n).max(0.0).sqrt(), tr.abs() / (n as f64).sqrt())
}
